//! Monte Carlo calibration and power estimation, paired duels under common
//! random numbers, and exact one-observation powers for the unit-interval
//! shapes.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::density::{Curvature, Density, Shape1D};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadratureSpec};
use crate::rng::{Substream, BLOCK_SIZE};
use crate::statistics::TestStatistic;

/// Fraction of failed statistic evaluations tolerated in one Monte Carlo run.
pub const MAX_FAILURE_RATE: f64 = 1e-3;

/// Worker pool for Monte Carlo loops. Results never depend on the number of
/// workers: every block of replicates owns its own random stream.
pub struct Parallelism {
    pool: rayon::ThreadPool,
}

impl Parallelism {
    pub fn new(workers: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
        Ok(Self { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Default for Parallelism {
    fn default() -> Self {
        Self::new(std::thread::available_parallelism().map_or(1, |n| n.get())).expect("thread pool")
    }
}

/// Statistic values for `count` draws from `density`; one column per
/// statistic. Failed evaluations are recorded as NaN.
#[derive(Debug, Clone)]
pub struct Evaluations {
    pub values: Vec<Vec<f64>>,
    pub failures: Vec<usize>,
    pub draws: usize,
}

/// Draws `count` points from `density` on `stream` and evaluates every
/// statistic on each draw.
pub fn evaluate_draws(
    stats: &[&TestStatistic],
    density: &dyn Density,
    stream: &Substream,
    count: usize,
    par: &Parallelism,
) -> Evaluations {
    let dim = density.space().dim();
    let blocks = count.div_ceil(BLOCK_SIZE);
    let per_block: Vec<Vec<Vec<f64>>> = par.pool.install(|| {
        (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = stream.block_rng(b as u64);
                let len = BLOCK_SIZE.min(count - b * BLOCK_SIZE);
                let mut cols = vec![Vec::with_capacity(len); stats.len()];
                let mut x = vec![0.0; dim];
                for _ in 0..len {
                    density.sample_into(&mut rng, &mut x);
                    for (col, s) in cols.iter_mut().zip(stats) {
                        col.push(s.evaluate(&x).map_or(f64::NAN, |v| v.value));
                    }
                }
                cols
            })
            .collect()
    });
    let mut values = vec![Vec::with_capacity(count); stats.len()];
    for block in per_block {
        for (dst, src) in values.iter_mut().zip(block) {
            dst.extend(src);
        }
    }
    let failures = values.iter().map(|c| c.iter().filter(|v| v.is_nan()).count()).collect();
    Evaluations { values, failures, draws: count }
}

fn check_failures(failures: usize, total: usize) -> Result<()> {
    if failures as f64 > MAX_FAILURE_RATE * total as f64 {
        return Err(Error::TooManyFailures { failures, total });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    pub replicates: usize,
    pub stream: String,
    pub seed: u64,
    pub attained_size: f64,
    pub failures: usize,
}

/// A statistic with a Monte Carlo critical value; rejects iff
/// `statistic(x) > critical_value`.
#[derive(Debug, Clone)]
pub struct CalibratedTest {
    pub statistic: TestStatistic,
    pub alpha: f64,
    pub critical_value: f64,
    pub calibration: Calibration,
}

impl CalibratedTest {
    pub fn rejects(&self, x: &[f64]) -> Result<bool> {
        Ok(self.statistic.evaluate(x)?.value > self.critical_value)
    }

    pub fn rejects_value(&self, value: f64) -> bool {
        value > self.critical_value
    }

    pub fn descriptor(&self) -> TestDescriptor {
        TestDescriptor {
            statistic: self.statistic.id().to_owned(),
            alpha: self.alpha,
            critical_value: self.critical_value,
            calibration: self.calibration.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestDescriptor {
    pub statistic: String,
    pub alpha: f64,
    pub critical_value: f64,
    pub calibration: Calibration,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// Index (1-based) of the conservative order statistic, `ceil((1-α)N)`.
pub fn critical_rank(alpha: f64, n: usize) -> usize {
    let k = ((1.0 - alpha) * n as f64 - 1e-9).ceil() as usize;
    k.clamp(1, n)
}

fn critical_from_values(values: &[f64], alpha: f64) -> (f64, f64) {
    let mut sorted: Vec<f64> = values.iter().map(|v| if v.is_nan() { f64::NEG_INFINITY } else { *v }).collect();
    sorted.sort_by(f64::total_cmp);
    let c = sorted[critical_rank(alpha, sorted.len()) - 1];
    let rejected = values.iter().filter(|&&v| v > c).count();
    (c, rejected as f64 / values.len() as f64)
}

/// Calibrates several statistics on the same `n` null draws.
pub fn calibrate_many(
    stats: &[&TestStatistic],
    null: &dyn Density,
    alpha: f64,
    n: usize,
    stream: &Substream,
    par: &Parallelism,
) -> Result<Vec<CalibratedTest>> {
    check_alpha(alpha)?;
    if n < 1000 {
        return Err(Error::InvalidArgument(format!("calibration needs at least 1000 replicates, got {n}")));
    }
    if let Some(s) = stats.iter().find(|s| s.space() != null.space()) {
        return Err(Error::InvalidArgument(format!("{} is defined on a different space than the null", s.id())));
    }
    let ev = evaluate_draws(stats, null, stream, n, par);
    stats
        .iter()
        .zip(ev.values.iter().zip(&ev.failures))
        .map(|(s, (vals, &failures))| {
            check_failures(failures, n)?;
            let (critical_value, attained_size) = critical_from_values(vals, alpha);
            Ok(CalibratedTest {
                statistic: (*s).clone(),
                alpha,
                critical_value,
                calibration: Calibration {
                    replicates: n,
                    stream: stream.name().to_owned(),
                    seed: stream.seed_id(),
                    attained_size,
                    failures,
                },
            })
        })
        .collect()
}

/// Critical value from the `ceil((1-α)N)`-th order statistic of `N` null
/// draws.
pub fn calibrate(
    stat: &TestStatistic,
    null: &dyn Density,
    alpha: f64,
    n: usize,
    stream: &Substream,
    par: &Parallelism,
) -> Result<CalibratedTest> {
    Ok(calibrate_many(&[stat], null, alpha, n, stream, par)?.remove(0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerEstimate {
    pub p_hat: f64,
    pub std_error: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
}

impl PowerEstimate {
    pub fn from_count(rejections: usize, n: usize, seed: u64) -> Self {
        let p_hat = rejections as f64 / n as f64;
        Self { p_hat, std_error: (p_hat * (1.0 - p_hat) / n as f64).sqrt(), n, seed }
    }
}

/// Rejection rate of `test` on `n` draws from `alt`.
pub fn estimate_power(
    test: &CalibratedTest,
    alt: &dyn Density,
    n: usize,
    stream: &Substream,
    par: &Parallelism,
) -> Result<PowerEstimate> {
    if n < 1000 {
        return Err(Error::InvalidArgument(format!("power estimation needs at least 1000 replicates, got {n}")));
    }
    if alt.space() != test.statistic.space() {
        return Err(Error::InvalidArgument(format!("alternative {} is on a different space", alt.label())));
    }
    let ev = evaluate_draws(&[&test.statistic], alt, stream, n, par);
    check_failures(ev.failures[0], n)?;
    let count = ev.values[0].iter().filter(|&&v| test.rejects_value(v)).count();
    Ok(PowerEstimate::from_count(count, n, stream.seed_id()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ADominates,
    BDominates,
    TieWithinNoise,
}

/// Paired comparison of two tests against one alternative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlternativeDuel {
    pub alternative: String,
    pub power_a: PowerEstimate,
    pub power_b: PowerEstimate,
    /// Mean of per-draw decision differences (a − b).
    pub difference: f64,
    /// Standard error of the paired difference.
    pub difference_se: f64,
    pub verdict: Verdict,
}

/// Rejection rate under fresh null draws against the calibrated size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeCheck {
    pub statistic: String,
    pub attained_size: f64,
    pub fresh: PowerEstimate,
    /// Standard error of `fresh - attained`, combining both Monte Carlo runs.
    pub std_error: f64,
    pub within_3se: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DuelReport {
    pub test_a: TestDescriptor,
    pub test_b: TestDescriptor,
    pub alternatives: Vec<AlternativeDuel>,
    pub size_checks: Vec<SizeCheck>,
}

impl DuelReport {
    pub fn alternative(&self, label: &str) -> Option<&AlternativeDuel> {
        self.alternatives.iter().find(|a| a.alternative == label)
    }
}

/// Verdict rule: a difference beyond three paired standard errors decides.
pub fn verdict(difference: f64, se: f64) -> Verdict {
    if difference > 3.0 * se {
        Verdict::ADominates
    } else if difference < -3.0 * se {
        Verdict::BDominates
    } else {
        Verdict::TieWithinNoise
    }
}

/// Settings for a duel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuelSettings {
    pub alpha: f64,
    pub n_calib: usize,
    pub n_power: usize,
    pub master_seed: u64,
}

/// Substream names used by [`duel`], relative to the master seed.
pub fn duel_streams(master_seed: u64, alt_labels: &[String]) -> Vec<Substream> {
    let mut out = vec![Substream::derive(master_seed, "calibration"), Substream::derive(master_seed, "size-check")];
    let power = Substream::derive(master_seed, "power");
    out.extend(alt_labels.iter().map(|l| power.child(l)));
    out
}

/// Calibrates both statistics on shared null draws, then estimates both
/// powers on shared draws from every alternative.
pub fn duel(
    stat_a: &TestStatistic,
    stat_b: &TestStatistic,
    null: &dyn Density,
    alts: &[(String, Arc<dyn Density>)],
    settings: &DuelSettings,
    par: &Parallelism,
) -> Result<DuelReport> {
    if stat_a.space() != stat_b.space() {
        return Err(Error::InvalidArgument("dueling statistics must share a sample space".into()));
    }
    let labels: Vec<String> = alts.iter().map(|(l, _)| l.clone()).collect();
    let streams = duel_streams(settings.master_seed, &labels);
    let tests = calibrate_many(&[stat_a, stat_b], null, settings.alpha, settings.n_calib, &streams[0], par)?;
    let (ta, tb) = (&tests[0], &tests[1]);
    if settings.n_power < 1000 {
        return Err(Error::InvalidArgument("power estimation needs at least 1000 replicates".into()));
    }

    let mut alternatives = Vec::with_capacity(alts.len());
    for ((label, alt), stream) in alts.iter().zip(&streams[2..]) {
        if alt.space() != null.space() {
            return Err(Error::InvalidArgument(format!("alternative {label} is on a different space")));
        }
        let ev = evaluate_draws(&[stat_a, stat_b], alt.as_ref(), stream, settings.n_power, par);
        check_failures(ev.failures[0], settings.n_power)?;
        check_failures(ev.failures[1], settings.n_power)?;
        alternatives.push(paired(label, ta, tb, &ev, stream.seed_id()));
    }

    let fresh = evaluate_draws(&[stat_a, stat_b], null, &streams[1], settings.n_power, par);
    let size_checks = [ta, tb]
        .iter()
        .zip(&fresh.values)
        .map(|(t, vals)| {
            let count = vals.iter().filter(|&&v| t.rejects_value(v)).count();
            let est = PowerEstimate::from_count(count, settings.n_power, streams[1].seed_id());
            let p = t.calibration.attained_size;
            let se = (p * (1.0 - p) * (1.0 / settings.n_power as f64 + 1.0 / settings.n_calib as f64)).sqrt();
            SizeCheck {
                statistic: t.statistic.id().to_owned(),
                attained_size: p,
                within_3se: (est.p_hat - p).abs() <= 3.0 * se,
                fresh: est,
                std_error: se,
            }
        })
        .collect();

    Ok(DuelReport { test_a: ta.descriptor(), test_b: tb.descriptor(), alternatives, size_checks })
}

fn paired(label: &str, ta: &CalibratedTest, tb: &CalibratedTest, ev: &Evaluations, seed: u64) -> AlternativeDuel {
    let n = ev.draws;
    let (mut ca, mut cb) = (0usize, 0usize);
    let (mut sum_d, mut sum_d2) = (0i64, 0i64);
    for (&va, &vb) in ev.values[0].iter().zip(&ev.values[1]) {
        let ra = ta.rejects_value(va) as i64;
        let rb = tb.rejects_value(vb) as i64;
        ca += ra as usize;
        cb += rb as usize;
        let d = ra - rb;
        sum_d += d;
        sum_d2 += d * d;
    }
    let nf = n as f64;
    let mean = sum_d as f64 / nf;
    let var = ((sum_d2 as f64 - nf * mean * mean) / (nf - 1.0)).max(0.0);
    let se = (var / nf).sqrt();
    AlternativeDuel {
        alternative: label.to_owned(),
        power_a: PowerEstimate::from_count(ca, n, seed),
        power_b: PowerEstimate::from_count(cb, n, seed),
        difference: mean,
        difference_se: se,
        verdict: verdict(mean, se),
    }
}

/// Finite union of disjoint open intervals in `(0, 1)`, in increasing order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Region {
    pub intervals: Vec<(f64, f64)>,
}

impl Region {
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Result<Self> {
        intervals.retain(|(a, b)| b > a);
        intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
        if intervals.iter().any(|&(a, b)| !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b)) {
            return Err(Error::InvalidArgument(format!("region leaves [0, 1]: {intervals:?}")));
        }
        if intervals.windows(2).any(|w| w[0].1 > w[1].0) {
            return Err(Error::InvalidArgument(format!("overlapping intervals: {intervals:?}")));
        }
        Ok(Self { intervals })
    }

    /// Lebesgue measure (the size under the uniform null).
    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| x > a && x < b)
    }
}

/// Closed-form one-observation rejection regions of the two tests.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticRegions {
    pub max_lr: Region,
    pub avg_lr: Region,
}

/// For `n = 1` and an increasing shape, the max-LR test rejects for large
/// `|x - 1/2|`; the average test does the same for a convex shape and
/// rejects for small `|x - 1/2|` for a concave one. The uniform null fixes
/// the interval lengths to total `α`.
pub fn analytic_region_n1(shape: &Shape1D, alpha: f64) -> Result<AnalyticRegions> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if !shape.monotone_increasing() {
        return Err(Error::Precondition(format!("shape {} must be increasing", shape.name())));
    }
    let half = alpha / 2.0;
    let tails = Region::new(vec![(0.0, half), (1.0 - half, 1.0)])?;
    let avg_lr = match shape.curvature() {
        Curvature::Convex => tails.clone(),
        Curvature::Concave => Region::new(vec![(0.5 - half, 0.5 + half)])?,
        Curvature::Neither => {
            return Err(Error::Precondition(format!("shape {} has no declared curvature", shape.name())))
        }
    };
    Ok(AnalyticRegions { max_lr: tails, avg_lr })
}

/// `∫_region f`, from the closed-form CDF when the shape has one and by
/// quadrature (1e-12) otherwise.
pub fn exact_power_n1(shape: &Shape1D, region: &Region) -> Result<f64> {
    if shape.has_closed_cdf() {
        return Ok(region.intervals.iter().map(|&(a, b)| shape.cdf(b) - shape.cdf(a)).sum());
    }
    let spec = QuadratureSpec { abs_tol: 1e-12, rel_tol: 1e-12, max_subdivisions: 2000 };
    region
        .intervals
        .iter()
        .map(|&(a, b)| integrate(|x| shape.pdf(x), a, b, &spec).map(|r| r.value))
        .sum()
}

/// Recovers the rejection region `{x : statistic(x) > critical}` of a
/// one-dimensional unit-interval statistic by a grid scan plus bisection on
/// each boundary.
pub fn region_from_statistic_n1(stat: &TestStatistic, critical: f64) -> Result<Region> {
    if stat.space().dim() != 1 {
        return Err(Error::Precondition("region recovery needs a one-dimensional statistic".into()));
    }
    let reject = |x: f64| stat.evaluate(&[x]).map(|s| s.value > critical);
    const GRID: usize = 20_000;
    let xs: Vec<f64> = (0..=GRID).map(|i| i as f64 / GRID as f64).collect();
    let flags: Vec<bool> = xs.iter().map(|&x| reject(x)).collect::<Result<_>>()?;
    let mut edges = Vec::new();
    for i in 0..GRID {
        if flags[i] != flags[i + 1] {
            let (mut lo, mut hi) = (xs[i], xs[i + 1]);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if reject(mid)? == flags[i] {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            edges.push(0.5 * (lo + hi));
        }
    }
    let mut intervals = Vec::new();
    let mut start = if flags[0] { Some(0.0) } else { None };
    for e in edges {
        match start.take() {
            Some(s) => intervals.push((s, e)),
            None => start = Some(e),
        }
    }
    if let Some(s) = start {
        intervals.push((s, 1.0));
    }
    Region::new(intervals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn critical_rank_is_conservative() {
        assert_eq!(critical_rank(0.1, 1_000_000), 900_000);
        assert_eq!(critical_rank(0.1, 1001), 901);
        assert_eq!(critical_rank(0.5, 1000), 500);
    }

    #[test]
    fn critical_value_and_attained_size() {
        let values: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        let (c, size) = critical_from_values(&values, 0.1);
        assert_eq!(c, 900.0);
        assert_relative_eq!(size, 0.1);
    }

    #[test]
    fn verdict_rule() {
        assert_eq!(verdict(0.0, 0.0), Verdict::TieWithinNoise);
        assert_eq!(verdict(0.02, 0.001), Verdict::ADominates);
        assert_eq!(verdict(-0.02, 0.001), Verdict::BDominates);
        assert_eq!(verdict(0.002, 0.001), Verdict::TieWithinNoise);
    }

    #[test]
    fn analytic_regions() {
        let r = analytic_region_n1(&Shape1D::concave_sqrt(), 0.1).unwrap();
        assert_relative_eq!(r.avg_lr.intervals[0].0, 0.45, epsilon = 1e-15);
        assert_relative_eq!(r.avg_lr.intervals[0].1, 0.55, epsilon = 1e-15);
        let r = analytic_region_n1(&Shape1D::convex_3x2(), 0.1).unwrap();
        assert_eq!(r.avg_lr, r.max_lr);
        assert_relative_eq!(r.max_lr.measure(), 0.1, epsilon = 1e-15);
        let r = analytic_region_n1(&Shape1D::convex_3x2(), 1.0).unwrap();
        assert_relative_eq!(r.max_lr.measure(), 1.0);
        let neither = Shape1D::new("n", crate::density::ShapeForm::Power { exponent: 1.0 }, true, Curvature::Neither);
        assert!(analytic_region_n1(&neither, 0.1).is_err());
    }

    #[test]
    fn exact_powers() {
        let concave = Shape1D::concave_sqrt();
        let r = analytic_region_n1(&concave, 0.1).unwrap();
        assert_relative_eq!(exact_power_n1(&concave, &r.max_lr).unwrap(), 0.085_234_877_130_647_48, epsilon = 1e-12);
        assert_relative_eq!(exact_power_n1(&concave, &r.avg_lr).unwrap(), 0.106_021_739_827_789_9, epsilon = 1e-12);
        let convex = Shape1D::convex_3x2();
        let r = analytic_region_n1(&convex, 0.1).unwrap();
        assert_relative_eq!(exact_power_n1(&convex, &r.max_lr).unwrap(), 0.14275, epsilon = 1e-12);
    }

    #[test]
    fn quadrature_fallback_power() {
        let shape = Shape1D::new(
            "sqrt-no-cdf",
            crate::density::ShapeForm::Custom { pdf: |x| 1.5 * x.sqrt(), cdf: None, inv_cdf: |u| u.powf(2.0 / 3.0) },
            true,
            Curvature::Concave,
        );
        let region = Region::new(vec![(0.45, 0.55)]).unwrap();
        assert_relative_eq!(exact_power_n1(&shape, &region).unwrap(), 0.106_021_739_827_789_9, epsilon = 1e-12);
    }

    #[test]
    fn region_validation() {
        assert!(Region::new(vec![(0.0, 0.6), (0.5, 1.0)]).is_err());
        assert!(Region::new(vec![(-0.1, 0.2)]).is_err());
        let r = Region::new(vec![(0.9, 1.0), (0.0, 0.1)]).unwrap();
        assert_eq!(r.intervals[0], (0.0, 0.1));
        assert!(r.contains(0.05) && !r.contains(0.5));
    }
}
