//! Maximum, average and integrated likelihood-ratio statistics, all on the
//! log scale.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::density::{Base1D, Density, LocationFamily, SampleSpace, ScaleFamily, SpaceKind};
use crate::error::{Error, Result};
use crate::mle::{location_loglik, mle_location, mle_scale, quantile_sorted, scale_loglik, sorted};
use crate::quadrature::{log_integral_real_line, LogIntegral, QuadratureSpec};

/// `log Σ exp(v_i)`, `-inf` for an empty or all-`-inf` input.
pub fn log_sum_exp(values: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let m = values.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    m + values.into_iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Log-ratio value; `degenerate` marks points where every density vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub value: f64,
    pub degenerate: bool,
}

impl Score {
    fn ratio(log_num: f64, log_den: f64) -> Self {
        match (log_num == f64::NEG_INFINITY, log_den == f64::NEG_INFINITY) {
            (true, true) => Score { value: f64::NEG_INFINITY, degenerate: true },
            (false, true) => Score { value: f64::INFINITY, degenerate: false },
            _ => Score { value: log_num - log_den, degenerate: false },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StatisticKind {
    #[serde(rename = "max-lr")]
    MaxLr,
    #[serde(rename = "avg-lr")]
    AvgLr,
    #[serde(rename = "int-loc-lr")]
    IntLocationLr,
    #[serde(rename = "int-scale-lr")]
    IntScaleLr,
}

impl StatisticKind {
    pub fn id(&self) -> &'static str {
        match self {
            Self::MaxLr => "max-lr",
            Self::AvgLr => "avg-lr",
            Self::IntLocationLr => "int-loc-lr",
            Self::IntScaleLr => "int-scale-lr",
        }
    }

    pub fn by_id(id: &str) -> Result<Self> {
        match id {
            "max-lr" => Ok(Self::MaxLr),
            "avg-lr" => Ok(Self::AvgLr),
            "int-loc-lr" => Ok(Self::IntLocationLr),
            "int-scale-lr" => Ok(Self::IntScaleLr),
            other => Err(Error::UnknownId(other.to_owned())),
        }
    }
}

/// Simple null against a finite list of simple alternatives.
#[derive(Clone)]
pub struct FiniteAlternatives {
    null: Arc<dyn Density>,
    alternatives: Vec<Arc<dyn Density>>,
    weights: Vec<f64>,
    log_weights: Vec<f64>,
}

impl fmt::Debug for FiniteAlternatives {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteAlternatives")
            .field("null", &self.null.label())
            .field("alternatives", &self.alternatives.iter().map(|a| a.label()).collect::<Vec<_>>())
            .field("weights", &self.weights)
            .finish()
    }
}

impl FiniteAlternatives {
    /// `weights = None` means uniform `1/s`.
    pub fn new(null: Arc<dyn Density>, alternatives: Vec<Arc<dyn Density>>, weights: Option<Vec<f64>>) -> Result<Self> {
        if alternatives.is_empty() {
            return Err(Error::InvalidArgument("at least one alternative is required".into()));
        }
        let space = null.space();
        if let Some(a) = alternatives.iter().find(|a| a.space() != space) {
            return Err(Error::InvalidArgument(format!("alternative {} lives on a different space", a.label())));
        }
        let s = alternatives.len();
        let weights = weights.unwrap_or_else(|| vec![1.0 / s as f64; s]);
        if weights.len() != s {
            return Err(Error::InvalidArgument(format!("{} weights for {} alternatives", weights.len(), s)));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("weights must be nonnegative and sum to 1: {weights:?}")));
        }
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        Ok(Self { null, alternatives, weights, log_weights })
    }

    pub fn null(&self) -> &Arc<dyn Density> {
        &self.null
    }

    pub fn alternatives(&self) -> &[Arc<dyn Density>] {
        &self.alternatives
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn space(&self) -> SampleSpace {
        self.null.space()
    }
}

/// Null and alternative bases of a location or scale family problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyPair {
    pub null_base: Base1D,
    pub alt_base: Base1D,
    pub n: usize,
    pub quad: QuadratureSpec,
}

#[derive(Debug, Clone)]
pub enum TestStatistic {
    /// `max_i log p_i(x) - log p0(x)`.
    MaxLr(FiniteAlternatives),
    /// `log Σ w_i p_i(x) - log p0(x)`.
    AvgLr(FiniteAlternatives),
    /// Location profile likelihood ratio at the two MLEs.
    MaxLocationLr(FamilyPair),
    /// Location likelihoods integrated against `dθ`.
    IntLocationLr(FamilyPair),
    /// Scale profile likelihood ratio at the two MLEs.
    MaxScaleLr(FamilyPair),
    /// Scale likelihoods integrated against `ν^{n-1} dν`.
    IntScaleLr(FamilyPair),
}

impl TestStatistic {
    pub fn max_lr(null: Arc<dyn Density>, alternatives: Vec<Arc<dyn Density>>) -> Result<Self> {
        Ok(Self::MaxLr(FiniteAlternatives::new(null, alternatives, None)?))
    }

    pub fn avg_lr(null: Arc<dyn Density>, alternatives: Vec<Arc<dyn Density>>, weights: Option<Vec<f64>>) -> Result<Self> {
        Ok(Self::AvgLr(FiniteAlternatives::new(null, alternatives, weights)?))
    }

    fn family(null_base: Base1D, alt_base: Base1D, n: usize, quad: QuadratureSpec, location: bool) -> Result<FamilyPair> {
        if n == 0 {
            return Err(Error::InvalidArgument("dimension must be >= 1".into()));
        }
        for b in [null_base, alt_base] {
            if b.positive_support() == location {
                let what = if location { "location" } else { "scale" };
                return Err(Error::InvalidArgument(format!("{} is not a {what} base", b.id())));
            }
        }
        Ok(FamilyPair { null_base, alt_base, n, quad })
    }

    pub fn location(kind: StatisticKind, null_base: Base1D, alt_base: Base1D, n: usize, quad: QuadratureSpec) -> Result<Self> {
        let fam = Self::family(null_base, alt_base, n, quad, true)?;
        match kind {
            StatisticKind::MaxLr => Ok(Self::MaxLocationLr(fam)),
            StatisticKind::IntLocationLr => Ok(Self::IntLocationLr(fam)),
            other => Err(Error::InvalidArgument(format!("{} does not apply to location families", other.id()))),
        }
    }

    pub fn scale(kind: StatisticKind, null_base: Base1D, alt_base: Base1D, n: usize, quad: QuadratureSpec) -> Result<Self> {
        let fam = Self::family(null_base, alt_base, n, quad, false)?;
        match kind {
            StatisticKind::MaxLr => Ok(Self::MaxScaleLr(fam)),
            StatisticKind::IntScaleLr => Ok(Self::IntScaleLr(fam)),
            other => Err(Error::InvalidArgument(format!("{} does not apply to scale families", other.id()))),
        }
    }

    pub fn kind(&self) -> StatisticKind {
        match self {
            Self::MaxLr(_) | Self::MaxLocationLr(_) | Self::MaxScaleLr(_) => StatisticKind::MaxLr,
            Self::AvgLr(_) => StatisticKind::AvgLr,
            Self::IntLocationLr(_) => StatisticKind::IntLocationLr,
            Self::IntScaleLr(_) => StatisticKind::IntScaleLr,
        }
    }

    pub fn id(&self) -> &'static str {
        self.kind().id()
    }

    pub fn space(&self) -> SampleSpace {
        match self {
            Self::MaxLr(a) | Self::AvgLr(a) => a.space(),
            Self::MaxLocationLr(f) | Self::IntLocationLr(f) => {
                SampleSpace::new(SpaceKind::RealVector, f.n).expect("n >= 1 checked on construction")
            }
            Self::MaxScaleLr(f) | Self::IntScaleLr(f) => {
                SampleSpace::new(SpaceKind::PositiveVector, f.n).expect("n >= 1 checked on construction")
            }
        }
    }

    /// Null density used for calibration draws (`θ = 0` / `τ = 1` for families).
    pub fn null_density(&self) -> Arc<dyn Density> {
        match self {
            Self::MaxLr(a) | Self::AvgLr(a) => a.null.clone(),
            Self::MaxLocationLr(f) | Self::IntLocationLr(f) => {
                Arc::new(LocationFamily::new(f.null_base, f.n, 0.0).expect("validated"))
            }
            Self::MaxScaleLr(f) | Self::IntScaleLr(f) => Arc::new(ScaleFamily::new(f.null_base, f.n, 1.0).expect("validated")),
        }
    }

    /// Evaluates the statistic at `x` after checking dimension and NaNs.
    pub fn evaluate(&self, x: &[f64]) -> Result<Score> {
        match self {
            Self::MaxLr(a) => max_lr(x, a),
            Self::AvgLr(a) => avg_lr(x, a),
            Self::MaxLocationLr(f) => check_len(x, f.n).and_then(|_| max_lr_location(x, f.null_base, f.alt_base)).map(plain),
            Self::IntLocationLr(f) => {
                check_len(x, f.n).and_then(|_| integrated_lr_location(x, f.null_base, f.alt_base, &f.quad)).map(plain)
            }
            Self::MaxScaleLr(f) => check_len(x, f.n).and_then(|_| max_lr_scale(x, f.null_base, f.alt_base)).map(plain),
            Self::IntScaleLr(f) => {
                check_len(x, f.n).and_then(|_| integrated_lr_scale(x, f.null_base, f.alt_base, &f.quad)).map(plain)
            }
        }
    }
}

fn plain(value: f64) -> Score {
    Score { value, degenerate: false }
}

fn check_len(x: &[f64], n: usize) -> Result<()> {
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x.len() });
    }
    Ok(())
}

fn finite_logs(x: &[f64], alts: &FiniteAlternatives) -> Result<(Vec<f64>, f64)> {
    let space = alts.space();
    space.check_point(x)?;
    if !space.contains(x) {
        return Ok((vec![f64::NEG_INFINITY; alts.alternatives.len()], f64::NEG_INFINITY));
    }
    let logs = alts.alternatives.iter().map(|a| a.log_pdf(x)).collect();
    Ok((logs, alts.null.log_pdf(x)))
}

/// `max_i log p_i(x) - log p0(x)`.
pub fn max_lr(x: &[f64], alts: &FiniteAlternatives) -> Result<Score> {
    let (logs, log_null) = finite_logs(x, alts)?;
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(Score::ratio(top, log_null))
}

/// `log Σ w_i p_i(x) - log p0(x)`, by log-sum-exp.
pub fn avg_lr(x: &[f64], alts: &FiniteAlternatives) -> Result<Score> {
    let (logs, log_null) = finite_logs(x, alts)?;
    let num = log_sum_exp(logs.iter().zip(&alts.log_weights).map(|(l, w)| l + w));
    Ok(Score::ratio(num, log_null))
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn check_real(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::InvalidArgument("empty sample".into()));
    }
    if let Some(i) = x.iter().position(|v| v.is_nan()) {
        return Err(Error::NanInput(i));
    }
    if x.iter().any(|v| v.is_infinite()) {
        return Err(Error::InvalidArgument("infinite observation".into()));
    }
    Ok(())
}

/// `ln ∫ ∏ base(x_i - θ) dθ`.
pub fn log_integrated_location(x: &[f64], base: Base1D, quad: &QuadratureSpec) -> Result<LogIntegral> {
    check_real(x)?;
    let s = sorted(x);
    let center = quantile_sorted(&s, 0.5);
    let mut features = s.clone();
    features.push(mean(x));
    log_integral_real_line(|t| location_loglik(x, base, t), center, 1.0, &features, quad)
}

/// `ln ∫_0^∞ ν^{n-1} ∏ base(ν x_i) dν`, integrated over `u = ln ν`.
pub fn log_integrated_scale(x: &[f64], base: Base1D, quad: &QuadratureSpec) -> Result<LogIntegral> {
    check_real(x)?;
    if x.iter().any(|&v| v <= 0.0) {
        return Err(Error::Precondition("scale statistics need strictly positive observations".into()));
    }
    let n = x.len() as f64;
    let logs: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let center = -mean(&logs);
    let mut features: Vec<f64> = logs.iter().map(|l| -l).collect();
    features.sort_by(f64::total_cmp);
    let log_h = |u: f64| {
        let nu = u.exp();
        n * u + x.iter().map(|&v| base.log_pdf(nu * v)).sum::<f64>()
    };
    log_integral_real_line(log_h, center, 1.0, &features, quad)
}

/// Integrated location statistic: `log ∫∏g(x_i-θ)dθ - log ∫∏f(x_i-θ)dθ`.
pub fn integrated_lr_location(x: &[f64], f_base: Base1D, g_base: Base1D, quad: &QuadratureSpec) -> Result<f64> {
    let num = log_integrated_location(x, g_base, quad)?;
    let den = log_integrated_location(x, f_base, quad)?;
    Ok(num.log_value - den.log_value)
}

/// Integrated scale statistic with the `ν^{n-1} dν` measure.
pub fn integrated_lr_scale(x: &[f64], f_base: Base1D, g_base: Base1D, quad: &QuadratureSpec) -> Result<f64> {
    let num = log_integrated_scale(x, g_base, quad)?;
    let den = log_integrated_scale(x, f_base, quad)?;
    Ok(num.log_value - den.log_value)
}

/// Profile location statistic `Σ log g(x_i - θ̂1) - Σ log f(x_i - θ̂0)`.
pub fn max_lr_location(x: &[f64], f_base: Base1D, g_base: Base1D) -> Result<f64> {
    let t1 = mle_location(x, g_base)?;
    let t0 = mle_location(x, f_base)?;
    Ok(location_loglik(x, g_base, t1) - location_loglik(x, f_base, t0))
}

/// Profile scale statistic at the two scale MLEs.
pub fn max_lr_scale(x: &[f64], f_base: Base1D, g_base: Base1D) -> Result<f64> {
    let t1 = mle_scale(x, g_base)?;
    let t0 = mle_scale(x, f_base)?;
    Ok(scale_loglik(x, g_base, t1) - scale_loglik(x, f_base, t0))
}
