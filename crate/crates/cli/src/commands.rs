//! The four subcommands. Each writes its result files plus a manifest into
//! an output directory; worker counts never reach the files.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Result};
use avglr_core::density::{make_symmetric_pair, sample, Base1D, Density, Shape1D};
use avglr_core::discrete::{
    best_invariant_region, discretize, max_lr_region, np_region_discrete, DiscreteRegion, ProblemRef, SearchMethod,
};
use avglr_core::invariance::{induced_permutations, is_transitive, probe_points, GroupAction};
use avglr_core::power::{
    analytic_region_n1, calibrate_many, duel, duel_streams, exact_power_n1, region_from_statistic_n1,
    AnalyticRegions, DuelReport, DuelSettings, Parallelism, Region, TestDescriptor, Verdict,
};
use avglr_core::rng::Substream;
use avglr_core::statistics::{log_integrated_location, log_integrated_scale, TestStatistic};
use serde::Serialize;

use crate::config::{resolve, ConfigError, ConfigSource, ExperimentConfig, Overrides, Resolved};
use crate::output::{config_hash, duel_csv, sig9, write_json, write_text, RunManifest, SubstreamSeed};
use crate::scenario::{scenario, Scenario, DISCRETE_ALPHAS, DISCRETE_CELLS, DISCRETE_SHAPES, SCENARIO_IDS};

/// Probes used by the finite-group invariance checks.
pub const INVARIANCE_PROBES: usize = 10_000;
const FINITE_INVARIANCE_TOL: f64 = 1e-12;
const FAMILY_INVARIANCE_TOL: f64 = 1e-8;
const QUADRATURE_CHECK_INPUTS: usize = 100;
const QUADRATURE_CHECK_TOL: f64 = 1e-8;

/// Config as stored in result files: the output directory is not part of
/// the experiment.
fn stored(cfg: &ExperimentConfig) -> ExperimentConfig {
    ExperimentConfig { out: None, ..cfg.clone() }
}

#[derive(Debug, Clone, Serialize)]
struct CalibrationEntry {
    #[serde(flatten)]
    test: TestDescriptor,
    region: Option<Region>,
}

#[derive(Debug, Clone, Serialize)]
struct CalibrationOutput {
    config: ExperimentConfig,
    tests: Vec<CalibrationEntry>,
}

pub fn cmd_calibrate(cfg: &ExperimentConfig, src: &ConfigSource, out: &Path, par: &Parallelism) -> Result<()> {
    let start = Instant::now();
    let r = resolve(cfg, src)?;
    let stream = &duel_streams(cfg.seed, &[])[0];
    let stats: Vec<&TestStatistic> = r.statistics.iter().collect();
    let tests = calibrate_many(&stats, r.null.as_ref(), cfg.alpha, cfg.n_calib, stream, par)?;
    let entries = tests
        .iter()
        .map(|t| {
            let region = match r.shape_n1 {
                Some(_) => Some(region_from_statistic_n1(&t.statistic, t.critical_value)?),
                None => None,
            };
            Ok(CalibrationEntry { test: t.descriptor(), region })
        })
        .collect::<Result<Vec<_>>>()?;
    let file = PathBuf::from("calibration.json");
    write_json(&out.join(&file), &CalibrationOutput { config: stored(cfg), tests: entries })?;
    let manifest = RunManifest::new(
        config_hash(&stored(cfg))?,
        vec![stream.into()],
        start.elapsed().as_secs_f64(),
        vec![file],
    );
    write_json(&out.join("manifest.json"), &manifest)
}

#[derive(Debug, Clone, Serialize)]
pub struct ExactPowers {
    pub max_lr: f64,
    pub avg_lr: f64,
}

/// Rejection regions of a one-observation duel: recovered from the
/// calibrated critical values and in closed form.
#[derive(Debug, Clone, Serialize)]
pub struct RegionsN1 {
    pub test_a: Region,
    pub test_b: Region,
    pub analytic: AnalyticRegions,
    /// Against `p1`; equal against `p2` by symmetry of the regions.
    pub exact_power: ExactPowers,
}

#[derive(Debug, Clone, Serialize)]
pub struct DuelOutput {
    pub config: ExperimentConfig,
    pub report: DuelReport,
    pub regions: Option<RegionsN1>,
}

pub struct DuelRun {
    pub output: DuelOutput,
    pub streams: Vec<Substream>,
}

fn two_statistics(r: &Resolved, src: &ConfigSource) -> Result<(), ConfigError> {
    if r.statistics.len() != 2 {
        return Err(ConfigError {
            source: src.name.clone(),
            line: src.text.as_deref().and_then(|t| t.lines().position(|l| l.contains("\"statistics\"")).map(|i| i + 1)),
            message: format!("a duel needs exactly two statistics, got {}", r.statistics.len()),
        });
    }
    Ok(())
}

pub fn run_duel(cfg: &ExperimentConfig, src: &ConfigSource, par: &Parallelism) -> Result<DuelRun> {
    let r = resolve(cfg, src)?;
    two_statistics(&r, src)?;
    let settings = DuelSettings { alpha: cfg.alpha, n_calib: cfg.n_calib, n_power: cfg.n_power, master_seed: cfg.seed };
    let report = duel(&r.statistics[0], &r.statistics[1], r.null.as_ref(), &r.alternatives, &settings, par)?;
    let regions = match &r.shape_n1 {
        Some(shape) => {
            let analytic = analytic_region_n1(shape, cfg.alpha)?;
            Some(RegionsN1 {
                test_a: region_from_statistic_n1(&r.statistics[0], report.test_a.critical_value)?,
                test_b: region_from_statistic_n1(&r.statistics[1], report.test_b.critical_value)?,
                exact_power: ExactPowers {
                    max_lr: exact_power_n1(shape, &analytic.max_lr)?,
                    avg_lr: exact_power_n1(shape, &analytic.avg_lr)?,
                },
                analytic,
            })
        }
        None => None,
    };
    let labels: Vec<String> = r.alternatives.iter().map(|(l, _)| l.clone()).collect();
    Ok(DuelRun {
        output: DuelOutput { config: stored(cfg), report, regions },
        streams: duel_streams(cfg.seed, &labels),
    })
}

fn write_duel(run: &DuelRun, out: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    let json = PathBuf::from(format!("{stem}.json"));
    let csv = PathBuf::from(format!("{stem}.csv"));
    write_json(&out.join(&json), &run.output)?;
    write_text(&out.join(&csv), &duel_csv(&run.output.report))?;
    Ok(vec![json, csv])
}

pub fn cmd_duel(cfg: &ExperimentConfig, src: &ConfigSource, out: &Path, par: &Parallelism) -> Result<()> {
    let start = Instant::now();
    let run = run_duel(cfg, src, par)?;
    let files = write_duel(&run, out, "duel")?;
    let streams = run.streams.iter().map(SubstreamSeed::from).collect();
    let manifest = RunManifest::new(config_hash(&stored(cfg))?, streams, start.elapsed().as_secs_f64(), files);
    write_json(&out.join("manifest.json"), &manifest)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Criterion {
    pub id: String,
    pub passed: bool,
    pub detail: String,
}

impl Criterion {
    fn new(id: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { id: id.into(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioSummary {
    pub scenario: String,
    pub passed: bool,
    pub criteria: Vec<Criterion>,
}

#[derive(Debug, Clone, Serialize)]
struct ReproduceSummary {
    passed: bool,
    scenarios: Vec<ScenarioSummary>,
}

/// Runs one scenario, or all of them when `id` is `None`. Returns whether
/// every criterion passed.
pub fn cmd_reproduce(id: Option<&str>, overrides: &Overrides, out: &Path, par: &Parallelism) -> Result<bool> {
    let ids: Vec<&str> = match id {
        Some(id) => vec![id],
        None => SCENARIO_IDS.to_vec(),
    };
    let scenarios = ids.iter().map(|id| scenario(id)).collect::<Result<Vec<_>, _>>()?;
    let mut summaries = Vec::new();
    for mut s in scenarios {
        s.runs.iter_mut().for_each(|(_, c)| overrides.apply(c));
        let dir = out.join(s.id);
        let summary = reproduce_one(&s, &dir, par)?;
        for c in &summary.criteria {
            eprintln!("{} {}/{}: {}", if c.passed { "PASS" } else { "FAIL" }, s.id, c.id, c.detail);
        }
        summaries.push(summary);
    }
    let passed = summaries.iter().all(|s| s.passed);
    if id.is_none() {
        write_json(&out.join("summary.json"), &ReproduceSummary { passed, scenarios: summaries })?;
    }
    Ok(passed)
}

fn reproduce_one(s: &Scenario, dir: &Path, par: &Parallelism) -> Result<ScenarioSummary> {
    let start = Instant::now();
    let mut files = Vec::new();
    let mut seeds = Vec::new();
    let mut runs = Vec::new();
    for (label, cfg) in &s.runs {
        let run = run_duel(cfg, &ConfigSource::inline(s.id), par)?;
        files.extend(write_duel(&run, dir, &format!("{label}.duel"))?);
        seeds.extend(run.streams.iter().map(|st| SubstreamSeed { name: format!("{label}:{}", st.name()), seed: st.seed_id() }));
        runs.push((label.as_str(), cfg, run.output));
    }

    let mut criteria = Vec::new();
    match s.id {
        "convex-n1" => {
            let (_, cfg, o) = &runs[0];
            criteria.push(regions_coincide(cfg, o));
            criteria.push(verdicts(o, "tie", Verdict::TieWithinNoise));
        }
        "concave-n1" => {
            let (_, _, o) = &runs[0];
            criteria.push(matches_exact_powers(o));
            criteria.push(max_lr_below_alpha(o));
            criteria.push(verdicts(o, "avg-dominates", Verdict::ADominates));
        }
        "symmetric-n5" | "quad-bivariate" | "location-normal-vs-cauchy" | "scale-exp-vs-halfnormal" => {
            for (label, _, o) in &runs {
                criteria.push(not_worse(label, o));
            }
            let (checks, crit) = match s.id {
                "location-normal-vs-cauchy" | "scale-exp-vs-halfnormal" => as_value(family_checks(runs[0].1, s.id)?)?,
                _ => as_value(finite_checks(&runs)?)?,
            };
            let name = PathBuf::from(checks.0);
            write_json(&dir.join(&name), &checks.1)?;
            files.push(name);
            criteria.extend(crit);
        }
        "discrete-oracle" => {
            let (entries, crit) = discrete_checks()?;
            let name = PathBuf::from("discrete.json");
            write_json(&dir.join(&name), &entries)?;
            files.push(name);
            criteria.extend(crit);
        }
        other => bail!("scenario {other} has no criteria"),
    }
    if !runs.is_empty() {
        criteria.push(size_calibration(runs.iter().map(|(_, _, o)| &o.report)));
    }

    let summary = ScenarioSummary { scenario: s.id.to_owned(), passed: criteria.iter().all(|c| c.passed), criteria };
    write_json(&dir.join("summary.json"), &summary)?;
    files.push("summary.json".into());
    let configs: Vec<(&str, ExperimentConfig)> = runs.iter().map(|(l, c, _)| (*l, stored(c))).collect();
    let hash = config_hash(&(s.id, configs))?;
    let manifest = RunManifest::new(hash, seeds, start.elapsed().as_secs_f64(), files);
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(summary)
}

fn endpoints(r: &Region) -> Vec<f64> {
    r.intervals.iter().flat_map(|&(a, b)| [a, b]).collect()
}

fn regions_coincide(cfg: &ExperimentConfig, o: &DuelOutput) -> Criterion {
    let Some(regions) = &o.regions else {
        return Criterion::new("regions-coincide", false, "no one-observation regions");
    };
    // an endpoint moves by at most the quantile error of the region measure
    let tol = 3.0 * (cfg.alpha * (1.0 - cfg.alpha) / cfg.n_calib as f64).sqrt();
    let (a, b) = (endpoints(&regions.test_a), endpoints(&regions.test_b));
    let exact = endpoints(&regions.analytic.avg_lr);
    let close = |x: &[f64], y: &[f64]| x.len() == y.len() && x.iter().zip(y).all(|(p, q)| (p - q).abs() <= tol);
    let passed = close(&a, &b) && close(&a, &exact) && close(&b, &exact);
    let show = |v: &[f64]| v.iter().map(|x| sig9(*x)).collect::<Vec<_>>().join(" ");
    Criterion::new(
        "regions-coincide",
        passed,
        format!("{}: [{}], {}: [{}], closed form [{}], tolerance {}", o.report.test_a.statistic, show(&a), o.report.test_b.statistic, show(&b), show(&exact), sig9(tol)),
    )
}

fn verdicts(o: &DuelOutput, id: &str, want: Verdict) -> Criterion {
    let got: Vec<String> = o.report.alternatives.iter().map(|a| format!("{}={:?}", a.alternative, a.verdict)).collect();
    let passed = o.report.alternatives.iter().all(|a| a.verdict == want);
    Criterion::new(id, passed, format!("want {want:?}; got {}", got.join(", ")))
}

fn exact_for(regions: &RegionsN1, statistic: &str) -> Option<f64> {
    match statistic {
        "max-lr" => Some(regions.exact_power.max_lr),
        "avg-lr" => Some(regions.exact_power.avg_lr),
        _ => None,
    }
}

fn matches_exact_powers(o: &DuelOutput) -> Criterion {
    let Some(regions) = &o.regions else {
        return Criterion::new("exact-power", false, "no one-observation regions");
    };
    let mut passed = true;
    let mut detail = Vec::new();
    for a in &o.report.alternatives {
        for (t, p) in [(&o.report.test_a, &a.power_a), (&o.report.test_b, &a.power_b)] {
            let Some(exact) = exact_for(regions, &t.statistic) else {
                passed = false;
                continue;
            };
            passed &= (p.p_hat - exact).abs() <= 3.0 * p.std_error;
            detail.push(format!("{}/{}: {} vs {} (se {})", t.statistic, a.alternative, sig9(p.p_hat), sig9(exact), sig9(p.std_error)));
        }
    }
    Criterion::new("exact-power", passed, detail.join("; "))
}

fn max_lr_below_alpha(o: &DuelOutput) -> Criterion {
    let alpha = o.config.alpha;
    let exact = o.regions.as_ref().map_or(f64::NAN, |r| r.exact_power.max_lr);
    let mut passed = exact < alpha;
    let mut detail = vec![format!("closed form {}", sig9(exact))];
    for a in &o.report.alternatives {
        for (t, p) in [(&o.report.test_a, &a.power_a), (&o.report.test_b, &a.power_b)] {
            if t.statistic == "max-lr" {
                passed &= p.p_hat < alpha;
                detail.push(format!("{}: {}", a.alternative, sig9(p.p_hat)));
            }
        }
    }
    Criterion::new("max-lr-below-alpha", passed, format!("alpha {}; {}", sig9(alpha), detail.join(", ")))
}

fn not_worse(label: &str, o: &DuelOutput) -> Criterion {
    let passed = o.report.alternatives.iter().all(|a| a.difference >= -3.0 * a.difference_se);
    let detail = o
        .report
        .alternatives
        .iter()
        .map(|a| format!("{}: {} (se {})", a.alternative, sig9(a.difference), sig9(a.difference_se)))
        .collect::<Vec<_>>();
    Criterion::new(
        format!("{label}:{}-not-worse", o.report.test_a.statistic),
        passed,
        format!("{} minus {}: {}", o.report.test_a.statistic, o.report.test_b.statistic, detail.join(", ")),
    )
}

fn size_calibration<'a>(reports: impl Iterator<Item = &'a DuelReport>) -> Criterion {
    let mut passed = true;
    let mut detail = Vec::new();
    for r in reports {
        for s in &r.size_checks {
            passed &= s.within_3se && (s.fresh.p_hat - s.attained_size).abs() <= 3.0 * s.std_error;
            detail.push(format!("{}: {} vs {}", s.statistic, sig9(s.fresh.p_hat), sig9(s.attained_size)));
        }
    }
    Criterion::new("size-calibration", passed, detail.join(", "))
}

#[derive(Debug, Clone, Serialize)]
struct InvarianceEntry {
    run: String,
    statistic: String,
    group: String,
    probes: usize,
    max_deviation: f64,
    tolerance: f64,
}

#[derive(Debug, Clone, Serialize)]
struct TransitivityEntry {
    run: String,
    group: String,
    permutations: Vec<Vec<usize>>,
    transitive: bool,
}

#[derive(Debug, Clone, Serialize)]
struct FiniteChecks {
    invariance: Vec<InvarianceEntry>,
    transitivity: Vec<TransitivityEntry>,
}

fn deviation(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs()
    }
}

type Checks<T> = ((&'static str, T), Vec<Criterion>);

fn as_value<T: Serialize>(((name, checks), criteria): Checks<T>) -> Result<Checks<serde_json::Value>> {
    Ok(((name, serde_json::to_value(checks)?), criteria))
}

fn finite_checks(runs: &[(&str, &ExperimentConfig, DuelOutput)]) -> Result<Checks<FiniteChecks>> {
    let mut invariance = Vec::new();
    let mut transitivity = Vec::new();
    for (label, cfg, _) in runs {
        let r = resolve(cfg, &ConfigSource::inline(label))?;
        let dim = r.null.space().dim();
        let group = match r.alternatives.len() {
            4 => GroupAction::reflect_2d_quad(),
            _ => GroupAction::reflect_1d(dim)?,
        };
        let probes = probe_points(dim, INVARIANCE_PROBES, cfg.seed);
        for stat in &r.statistics {
            let mut worst: f64 = 0.0;
            for x in &probes {
                let v = stat.evaluate(x)?.value;
                for g in 0..group.order() {
                    worst = worst.max(deviation(stat.evaluate(&group.apply(g, x)?)?.value, v));
                }
            }
            invariance.push(InvarianceEntry {
                run: label.to_string(),
                statistic: stat.id().to_owned(),
                group: group.name().to_owned(),
                probes: probes.len(),
                max_deviation: worst,
                tolerance: FINITE_INVARIANCE_TOL,
            });
        }
        let alts: Vec<Arc<dyn Density>> = r.alternatives.iter().map(|(_, a)| a.clone()).collect();
        let perms = induced_permutations(&group, &alts)?;
        transitivity.push(TransitivityEntry {
            run: label.to_string(),
            group: group.name().to_owned(),
            transitive: is_transitive(&perms, alts.len()),
            permutations: perms.into_iter().map(|p| p.permutation).collect(),
        });
    }
    let inv_ok = invariance.iter().all(|e| e.max_deviation <= e.tolerance);
    let worst = invariance.iter().map(|e| e.max_deviation).fold(0.0, f64::max);
    let criteria = vec![
        Criterion::new(
            "group-invariance",
            inv_ok,
            format!("max deviation {} over {} probes per statistic", sig9(worst), INVARIANCE_PROBES),
        ),
        Criterion::new(
            "transitive",
            transitivity.iter().all(|t| t.transitive),
            transitivity.iter().map(|t| format!("{}: {}", t.run, t.transitive)).collect::<Vec<_>>().join(", "),
        ),
    ];
    Ok((("invariance.json", FiniteChecks { invariance, transitivity }), criteria))
}

#[derive(Debug, Clone, Serialize)]
struct FamilyChecks {
    quadrature_inputs: usize,
    quadrature_max_rel_error: f64,
    quadrature_tolerance: f64,
    invariance: Vec<InvarianceEntry>,
}

/// `log ∫ ∏ φ(x_i - θ) dθ` in closed form.
fn gaussian_location_integral(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let ss: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    -0.5 * n * (2.0 * std::f64::consts::PI).ln() - 0.5 * ss + 0.5 * (2.0 * std::f64::consts::PI / n).ln()
}

/// `log ∫ ν^{n-1} ∏ e^{-ν x_i} dν = log Γ(n) - n log Σx`.
fn exponential_scale_integral(x: &[f64]) -> f64 {
    let n = x.len();
    let ln_gamma: f64 = (1..n).map(|k| (k as f64).ln()).sum();
    ln_gamma - n as f64 * x.iter().sum::<f64>().ln()
}

fn family_checks(cfg: &ExperimentConfig, id: &str) -> Result<Checks<FamilyChecks>> {
    let r = resolve(cfg, &ConfigSource::inline(id))?;
    let location = id.starts_with("location");
    let stream = Substream::derive(cfg.seed, "checks");
    let mut rng = stream.rng();
    let xs = sample(r.null.as_ref(), &mut rng, QUADRATURE_CHECK_INPUTS)?;

    let mut max_rel: f64 = 0.0;
    for (i, x) in xs.iter().enumerate() {
        // spread the inputs over several orders of location / scale
        let c = (i as f64 - 50.0) * 0.37;
        let (est, exact) = if location {
            let y: Vec<f64> = x.iter().map(|v| v + c).collect();
            (log_integrated_location(&y, Base1D::Normal, &cfg.quadrature)?.log_value, gaussian_location_integral(&y))
        } else {
            let y: Vec<f64> = x.iter().map(|v| v * (0.1 * c).exp()).collect();
            (log_integrated_scale(&y, Base1D::Exponential, &cfg.quadrature)?.log_value, exponential_scale_integral(&y))
        };
        max_rel = max_rel.max((est - exact).exp_m1().abs());
    }

    let mut invariance = Vec::new();
    for stat in &r.statistics {
        let mut worst: f64 = 0.0;
        for (i, x) in xs.iter().enumerate() {
            let c = (i as f64 - 50.0) * 0.37;
            let y: Vec<f64> = if location {
                x.iter().map(|v| v + c).collect()
            } else {
                x.iter().map(|v| v * (0.1 * c).exp()).collect()
            };
            worst = worst.max(deviation(stat.evaluate(&y)?.value, stat.evaluate(x)?.value));
        }
        invariance.push(InvarianceEntry {
            run: id.to_owned(),
            statistic: stat.id().to_owned(),
            group: if location { "translation" } else { "scaling" }.to_owned(),
            probes: xs.len(),
            max_deviation: worst,
            tolerance: FAMILY_INVARIANCE_TOL,
        });
    }
    let oracle = if location { "gaussian closed form" } else { "gamma closed form" };
    let criteria = vec![
        Criterion::new(
            "quadrature-closed-form",
            max_rel <= QUADRATURE_CHECK_TOL,
            format!("{oracle}: max relative error {} on {} inputs", sig9(max_rel), xs.len()),
        ),
        Criterion::new(
            "family-invariance",
            invariance.iter().all(|e| e.max_deviation <= e.tolerance),
            invariance.iter().map(|e| format!("{}: {}", e.statistic, sig9(e.max_deviation))).collect::<Vec<_>>().join(", "),
        ),
    ];
    let checks = FamilyChecks {
        quadrature_inputs: xs.len(),
        quadrature_max_rel_error: max_rel,
        quadrature_tolerance: QUADRATURE_CHECK_TOL,
        invariance,
    };
    Ok((("checks.json", checks), criteria))
}

#[derive(Debug, Clone, Serialize)]
struct DiscreteEntry {
    shape: String,
    cells: usize,
    alpha: f64,
    method: SearchMethod,
    regions_enumerated: usize,
    best_invariant: DiscreteRegion,
    best_invariant_powers: Vec<f64>,
    np_mixture: DiscreteRegion,
    avg_lr: DiscreteRegion,
    max_lr: DiscreteRegion,
    least_powerful_full_size: Option<DiscreteRegion>,
}

fn discrete_checks() -> Result<(Vec<DiscreteEntry>, Vec<Criterion>)> {
    let mut entries = Vec::new();
    for shape_id in DISCRETE_SHAPES {
        let shape = Shape1D::by_id(shape_id)?;
        let pair = make_symmetric_pair(&shape, 1)?;
        let dp = discretize(ProblemRef::Pair(&pair), DISCRETE_CELLS)?;
        for alpha in DISCRETE_ALPHAS {
            let s = best_invariant_region(&dp, alpha, false)?;
            entries.push(DiscreteEntry {
                shape: shape_id.to_owned(),
                cells: DISCRETE_CELLS,
                alpha,
                method: s.method,
                regions_enumerated: s.regions_enumerated,
                np_mixture: np_region_discrete(&dp.null, &dp.uniform_mixture(), alpha)?,
                max_lr: max_lr_region(&dp, alpha),
                best_invariant: s.region,
                best_invariant_powers: s.powers,
                avg_lr: s.avg_lr_region,
                least_powerful_full_size: s.least_powerful_full_size,
            });
        }
    }
    let describe = |e: &DiscreteEntry, r: &DiscreteRegion| format!("{} alpha {}: {:?}", e.shape, sig9(e.alpha), r.cells);
    let np_ok = entries.iter().all(|e| e.best_invariant.cells == e.np_mixture.cells);
    let avg_ok = entries.iter().all(|e| e.avg_lr.cells == e.best_invariant.cells);
    let concave: Vec<&DiscreteEntry> = entries.iter().filter(|e| e.shape == "concave-sqrt").collect();
    let least_ok = concave
        .iter()
        .all(|e| e.least_powerful_full_size.as_ref().is_some_and(|l| l.cells == e.max_lr.cells) && e.max_lr.power < e.alpha);
    let criteria = vec![
        Criterion::new(
            "np-mixture-match",
            np_ok,
            entries.iter().map(|e| describe(e, &e.best_invariant)).collect::<Vec<_>>().join("; "),
        ),
        Criterion::new("avg-lr-optimal", avg_ok, entries.iter().map(|e| describe(e, &e.avg_lr)).collect::<Vec<_>>().join("; ")),
        Criterion::new(
            "concave-max-lr-least-powerful",
            least_ok,
            concave.iter().map(|e| format!("{} power {}", describe(e, &e.max_lr), sig9(e.max_lr.power))).collect::<Vec<_>>().join("; "),
        ),
    ];
    Ok((entries, criteria))
}

#[derive(Debug, Clone, Serialize)]
struct FigureManifestInput<'a> {
    shape: &'a str,
    alpha: f64,
}

/// Points of the default figure grid: `k/1000` for `k = 1..=999`.
pub fn figure_grid() -> Vec<f64> {
    (1..1000).map(|k| k as f64 / 1000.0).collect()
}

pub const FIGURE_HEADER: [&str; 5] = ["x", "f", "g", "max_lr", "avg_lr"];
pub const REGION_HEADER: [&str; 3] = ["statistic", "lower", "upper"];

/// Curves of `f`, its reflection `g` and both likelihood ratios against the
/// uniform null, plus the closed-form rejection regions at `alpha`.
pub fn cmd_figure1(shape: &Shape1D, alpha: f64, out: &Path) -> Result<()> {
    let start = Instant::now();
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ConfigError { source: "--alpha".into(), line: None, message: format!("alpha must lie in (0, 1), got {alpha}") }.into());
    }
    let mut curves = FIGURE_HEADER.join(",");
    curves.push('\n');
    for x in figure_grid() {
        let (f, g) = (shape.pdf(x), shape.pdf(1.0 - x));
        let row = [sig9(x), sig9(f), sig9(g), sig9(f.max(g)), sig9(0.5 * (f + g))];
        curves.push_str(&row.join(","));
        curves.push('\n');
    }
    let regions = analytic_region_n1(shape, alpha)?;
    let mut table = REGION_HEADER.join(",");
    table.push('\n');
    for (id, r) in [("max-lr", &regions.max_lr), ("avg-lr", &regions.avg_lr)] {
        for &(a, b) in &r.intervals {
            table.push_str(&format!("{id},{},{}\n", sig9(a), sig9(b)));
        }
    }
    let files = vec![PathBuf::from("figure1.csv"), PathBuf::from("figure1_regions.csv")];
    write_text(&out.join(&files[0]), &curves)?;
    write_text(&out.join(&files[1]), &table)?;
    let hash = config_hash(&FigureManifestInput { shape: shape.name(), alpha })?;
    write_json(&out.join("manifest.json"), &RunManifest::new(hash, vec![], start.elapsed().as_secs_f64(), files))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms_match_direct_quadrature() {
        let x = [0.3, -1.2, 2.0];
        let q = avglr_core::quadrature::QuadratureSpec::default();
        let got = log_integrated_location(&x, Base1D::Normal, &q).unwrap().log_value;
        assert!((got - gaussian_location_integral(&x)).abs() < 1e-9);
        let y = [0.5, 1.5, 3.0];
        let got = log_integrated_scale(&y, Base1D::Exponential, &q).unwrap().log_value;
        assert!((got - (2f64.ln() - 3.0 * 5f64.ln())).abs() < 1e-9);
        assert!((exponential_scale_integral(&y) - (2f64.ln() - 3.0 * 5f64.ln())).abs() < 1e-14);
    }

    #[test]
    fn figure_grid_is_open_and_contains_the_midpoint() {
        let g = figure_grid();
        assert_eq!(g.len(), 999);
        assert!(g[0] > 0.0 && g[998] < 1.0);
        assert_eq!(g[499], 0.5);
    }

    #[test]
    fn discrete_oracle_criteria_pass() {
        let (entries, criteria) = discrete_checks().unwrap();
        assert_eq!(entries.len(), 4);
        assert!(criteria.iter().all(|c| c.passed), "{criteria:?}");
    }
}
