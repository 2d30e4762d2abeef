//! Experiment configuration: parsing, validation and resolution into the
//! densities and statistics of the core library.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use avglr_core::density::{make_quad_alternatives, make_symmetric_pair, Base1D, Density, Shape1D, Uniform};
use avglr_core::quadrature::QuadratureSpec;
use avglr_core::statistics::{StatisticKind, TestStatistic};
use serde::{Deserialize, Serialize};

/// A configuration problem, reported with the line of the offending key when
/// it came from a file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub source: String,
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{line}: {}", self.source, self.message),
            None => write!(f, "{}: {}", self.source, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Problem {
    /// `p1 = ∏ f(x_i)` and its reflection, uniform null on the cube.
    SymmetricPair { shape: String, n: usize },
    /// Four reflections of a product density on the unit square.
    Quad { density: String },
    Location { null: String, alternative: String, n: usize },
    Scale { null: String, alternative: String, n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: Problem,
    /// Statistic ids; a duel pits the first against the second.
    pub statistics: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    pub alpha: f64,
    pub n_calib: usize,
    pub n_power: usize,
    pub seed: u64,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

/// Command-line values that take precedence over the file or scenario.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub n_calib: Option<usize>,
    pub n_power: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
        if let Some(n) = self.n_calib {
            cfg.n_calib = n;
        }
        if let Some(n) = self.n_power {
            cfg.n_power = n;
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
    }
}

/// Raw text kept alongside a parsed config so validation can point at lines.
#[derive(Debug, Clone)]
pub struct ConfigSource {
    pub name: String,
    pub text: Option<String>,
}

impl ConfigSource {
    pub fn inline(name: &str) -> Self {
        Self { name: name.to_owned(), text: None }
    }

    fn error(&self, key: &str, message: String) -> ConfigError {
        let line = self.text.as_deref().and_then(|t| line_of_key(t, key));
        ConfigError { source: self.name.clone(), line, message }
    }
}

fn line_of_key(text: &str, key: &str) -> Option<usize> {
    let quoted = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&quoted)).map(|i| i + 1)
}

pub fn load(path: &Path) -> Result<(ExperimentConfig, ConfigSource), ConfigError> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError { source: name.clone(), line: None, message: e.to_string() })?;
    let cfg = parse(&text, &name)?;
    Ok((cfg, ConfigSource { name, text: Some(text) }))
}

pub fn parse(text: &str, name: &str) -> Result<ExperimentConfig, ConfigError> {
    serde_json::from_str(text).map_err(|e| ConfigError {
        source: name.to_owned(),
        line: Some(e.line()),
        message: e.to_string(),
    })
}

/// Densities and statistics a config resolves to.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub null: Arc<dyn Density>,
    pub alternatives: Vec<(String, Arc<dyn Density>)>,
    pub statistics: Vec<TestStatistic>,
    /// Present for one-observation symmetric pairs, whose regions are intervals.
    pub shape_n1: Option<Shape1D>,
}

fn positive_dim(n: usize, src: &ConfigSource) -> Result<usize, ConfigError> {
    if n == 0 {
        return Err(src.error("n", "n must be at least 1".into()));
    }
    Ok(n)
}

fn base(id: &str, key: &str, src: &ConfigSource) -> Result<Base1D, ConfigError> {
    Base1D::by_id(id).map_err(|_| {
        src.error(key, format!("unknown base density {id:?}; valid: normal, cauchy, logistic, exponential, half-normal"))
    })
}

/// Checks every invariant of the config and builds the objects it names.
pub fn resolve(cfg: &ExperimentConfig, src: &ConfigSource) -> Result<Resolved, ConfigError> {
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(src.error("alpha", format!("alpha must lie in (0, 1), got {}", cfg.alpha)));
    }
    if cfg.n_calib < 1000 {
        return Err(src.error("n_calib", format!("n_calib must be at least 1000, got {}", cfg.n_calib)));
    }
    if cfg.n_power < 1000 {
        return Err(src.error("n_power", format!("n_power must be at least 1000, got {}", cfg.n_power)));
    }
    let q = &cfg.quadrature;
    if !(q.abs_tol >= 0.0 && q.rel_tol >= 0.0 && q.abs_tol + q.rel_tol > 0.0 && q.max_subdivisions > 0) {
        return Err(src.error("quadrature", "quadrature tolerances must be nonnegative, not both zero".into()));
    }
    if cfg.statistics.is_empty() {
        return Err(src.error("statistics", "at least one statistic is required".into()));
    }
    let kinds = cfg
        .statistics
        .iter()
        .map(|id| {
            StatisticKind::by_id(id).map_err(|_| {
                src.error("statistics", format!("unknown statistic {id:?}; valid: max-lr, avg-lr, int-loc-lr, int-scale-lr"))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    if cfg.weights.is_some() && !kinds.contains(&StatisticKind::AvgLr) {
        return Err(src.error("weights", "weights apply only to avg-lr".into()));
    }
    let bad_stat = |k: StatisticKind, what: &str| src.error("statistics", format!("{} does not apply to {what}", k.id()));

    match &cfg.problem {
        Problem::SymmetricPair { shape, n } => {
            let n = positive_dim(*n, src)?;
            let s = Shape1D::by_id(shape)
                .map_err(|_| src.error("shape", format!("unknown shape {shape:?}; valid: convex-3x2, concave-sqrt")))?;
            let pair = make_symmetric_pair(&s, n).map_err(|e| src.error("shape", e.to_string()))?;
            let null: Arc<dyn Density> = Arc::new(Uniform::unit_cube(n).map_err(|e| src.error("n", e.to_string()))?);
            let alts = vec![("p1".to_owned(), pair.p1.clone() as Arc<dyn Density>), ("p2".to_owned(), pair.p2.clone() as _)];
            let statistics = finite_statistics(&kinds, &null, &alts, cfg, src, |k| bad_stat(k, "finite alternatives"))?;
            Ok(Resolved { null, alternatives: alts, statistics, shape_n1: (n == 1).then_some(s) })
        }
        Problem::Quad { density } => {
            let shape = match density.as_str() {
                "quad-9x2y2" => Shape1D::convex_3x2(),
                other => return Err(src.error("density", format!("unknown bivariate density {other:?}; valid: quad-9x2y2"))),
            };
            let quad = make_quad_alternatives(&shape).map_err(|e| src.error("density", e.to_string()))?;
            let null: Arc<dyn Density> = Arc::new(Uniform::unit_square());
            let alts = quad
                .alternatives()
                .into_iter()
                .enumerate()
                .map(|(i, a)| (format!("p{}", i + 1), a))
                .collect::<Vec<_>>();
            let statistics = finite_statistics(&kinds, &null, &alts, cfg, src, |k| bad_stat(k, "finite alternatives"))?;
            Ok(Resolved { null, alternatives: alts, statistics, shape_n1: None })
        }
        Problem::Location { null, alternative, n } => {
            let n = positive_dim(*n, src)?;
            let (f, g) = (base(null, "null", src)?, base(alternative, "alternative", src)?);
            for (b, key) in [(f, "null"), (g, "alternative")] {
                if b.positive_support() {
                    return Err(src.error(key, format!("{} is not a location base", b.id())));
                }
            }
            let statistics = kinds
                .iter()
                .map(|&k| TestStatistic::location(k, f, g, n, cfg.quadrature).map_err(|_| bad_stat(k, "location families")))
                .collect::<Result<Vec<_>, _>>()?;
            let null = statistics[0].null_density();
            let alt: Arc<dyn Density> = Arc::new(
                avglr_core::density::LocationFamily::new(g, n, 0.0).map_err(|e| src.error("alternative", e.to_string()))?,
            );
            Ok(Resolved { null, alternatives: vec![(g.id().to_owned(), alt)], statistics, shape_n1: None })
        }
        Problem::Scale { null, alternative, n } => {
            let n = positive_dim(*n, src)?;
            let (f, g) = (base(null, "null", src)?, base(alternative, "alternative", src)?);
            for (b, key) in [(f, "null"), (g, "alternative")] {
                if !b.positive_support() {
                    return Err(src.error(key, format!("{} is not a scale base", b.id())));
                }
            }
            let statistics = kinds
                .iter()
                .map(|&k| TestStatistic::scale(k, f, g, n, cfg.quadrature).map_err(|_| bad_stat(k, "scale families")))
                .collect::<Result<Vec<_>, _>>()?;
            let null = statistics[0].null_density();
            let alt: Arc<dyn Density> = Arc::new(
                avglr_core::density::ScaleFamily::new(g, n, 1.0).map_err(|e| src.error("alternative", e.to_string()))?,
            );
            Ok(Resolved { null, alternatives: vec![(g.id().to_owned(), alt)], statistics, shape_n1: None })
        }
    }
}

fn finite_statistics(
    kinds: &[StatisticKind],
    null: &Arc<dyn Density>,
    alts: &[(String, Arc<dyn Density>)],
    cfg: &ExperimentConfig,
    src: &ConfigSource,
    bad: impl Fn(StatisticKind) -> ConfigError,
) -> Result<Vec<TestStatistic>, ConfigError> {
    let densities: Vec<Arc<dyn Density>> = alts.iter().map(|(_, a)| a.clone()).collect();
    kinds
        .iter()
        .map(|&k| match k {
            StatisticKind::MaxLr => {
                TestStatistic::max_lr(null.clone(), densities.clone()).map_err(|e| src.error("problem", e.to_string()))
            }
            StatisticKind::AvgLr => TestStatistic::avg_lr(null.clone(), densities.clone(), cfg.weights.clone())
                .map_err(|e| src.error("weights", e.to_string())),
            other => Err(bad(other)),
        })
        .collect()
}
