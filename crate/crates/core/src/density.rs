//! Sample spaces, densities and samplers, and the alternative families used
//! by the tests: symmetric pairs on the unit cube, the four reflected
//! bivariate alternatives, and location and scale families.
//!
//! Everything is evaluated in log domain; off-support points evaluate to
//! `-inf`.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erf, erf_inv, erfc};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadratureSpec};
use crate::rng::Substream;

/// Generator type every sampler draws from.
pub type StreamRng = rand_chacha::ChaCha8Rng;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpaceKind {
    UnitCube,
    UnitSquare,
    RealVector,
    PositiveVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSpace {
    kind: SpaceKind,
    n: usize,
}

impl SampleSpace {
    pub fn new(kind: SpaceKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("sample space dimension must be >= 1".into()));
        }
        if kind == SpaceKind::UnitSquare && n != 2 {
            return Err(Error::InvalidArgument(format!("unit square has dimension 2, got {n}")));
        }
        Ok(Self { kind, n })
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Componentwise support bounds (closed).
    pub fn bounds(&self) -> (f64, f64) {
        match self.kind {
            SpaceKind::UnitCube | SpaceKind::UnitSquare => (0.0, 1.0),
            SpaceKind::RealVector => (f64::NEG_INFINITY, f64::INFINITY),
            SpaceKind::PositiveVector => (0.0, f64::INFINITY),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let (lo, hi) = self.bounds();
        x.len() == self.n && x.iter().all(|&v| v >= lo && v <= hi)
    }

    /// Checks dimension and NaN-freeness of a point.
    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.len() });
        }
        if let Some(i) = x.iter().position(|v| v.is_nan()) {
            return Err(Error::NanInput(i));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Curvature {
    Convex,
    Concave,
    Neither,
}

#[derive(Clone, Copy)]
pub enum ShapeForm {
    /// `f(x) = (k+1) x^k` on `[0, 1]`.
    Power { exponent: f64 },
    /// User-supplied pdf and inverse CDF. Without a closed-form CDF, CDF
    /// values come from quadrature.
    Custom { pdf: fn(f64) -> f64, cdf: Option<fn(f64) -> f64>, inv_cdf: fn(f64) -> f64 },
}

impl fmt::Debug for ShapeForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapeForm::Power { exponent } => write!(f, "Power({exponent})"),
            ShapeForm::Custom { cdf, .. } => write!(f, "Custom(closed_cdf={})", cdf.is_some()),
        }
    }
}

/// A density `f` on `(0, 1)` with declared monotonicity and curvature.
#[derive(Debug, Clone)]
pub struct Shape1D {
    name: String,
    form: ShapeForm,
    monotone_increasing: bool,
    curvature: Curvature,
}

impl Shape1D {
    pub fn new(name: &str, form: ShapeForm, monotone_increasing: bool, curvature: Curvature) -> Self {
        Self { name: name.to_owned(), form, monotone_increasing, curvature }
    }

    /// `3x²`: increasing and convex.
    pub fn convex_3x2() -> Self {
        Self::new("convex-3x2", ShapeForm::Power { exponent: 2.0 }, true, Curvature::Convex)
    }

    /// `1.5√x`: increasing and concave.
    pub fn concave_sqrt() -> Self {
        Self::new("concave-sqrt", ShapeForm::Power { exponent: 0.5 }, true, Curvature::Concave)
    }

    pub fn by_id(id: &str) -> Result<Self> {
        match id {
            "convex-3x2" => Ok(Self::convex_3x2()),
            "concave-sqrt" => Ok(Self::concave_sqrt()),
            other => Err(Error::UnknownId(other.to_owned())),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn form(&self) -> ShapeForm {
        self.form
    }

    pub fn monotone_increasing(&self) -> bool {
        self.monotone_increasing
    }

    pub fn curvature(&self) -> Curvature {
        self.curvature
    }

    pub fn has_closed_cdf(&self) -> bool {
        match self.form {
            ShapeForm::Power { .. } => true,
            ShapeForm::Custom { cdf, .. } => cdf.is_some(),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        match self.form {
            ShapeForm::Power { exponent } => (exponent + 1.0) * x.powf(exponent),
            ShapeForm::Custom { pdf, .. } => pdf(x),
        }
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return f64::NEG_INFINITY;
        }
        match self.form {
            ShapeForm::Power { exponent } => (exponent + 1.0).ln() + exponent * x.ln(),
            ShapeForm::Custom { pdf, .. } => pdf(x).ln(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return self.cdf_closed_or_quad(1.0);
        }
        self.cdf_closed_or_quad(x)
    }

    fn cdf_closed_or_quad(&self, x: f64) -> f64 {
        match self.form {
            ShapeForm::Power { exponent } => x.powf(exponent + 1.0),
            ShapeForm::Custom { cdf: Some(cdf), .. } => cdf(x),
            ShapeForm::Custom { pdf, cdf: None, .. } => {
                let spec = QuadratureSpec { abs_tol: 1e-13, rel_tol: 1e-12, max_subdivisions: 2000 };
                match integrate(pdf, 0.0, x, &spec) {
                    Ok(r) => r.value,
                    Err(Error::Quadrature { estimate, .. }) => estimate,
                    Err(_) => f64::NAN,
                }
            }
        }
    }

    pub fn inv_cdf(&self, u: f64) -> f64 {
        match self.form {
            ShapeForm::Power { exponent } => u.powf(1.0 / (exponent + 1.0)),
            ShapeForm::Custom { inv_cdf, .. } => inv_cdf(u),
        }
    }

    /// Checks normalization (1e-10), monotonicity and the declared curvature
    /// on a 1000-point grid.
    pub fn validate(&self) -> Result<()> {
        let spec = QuadratureSpec { abs_tol: 1e-12, rel_tol: 1e-12, max_subdivisions: 2000 };
        let total = integrate(|x| self.pdf(x), 0.0, 1.0, &spec)?;
        if (total.value - 1.0).abs() > 1e-10 {
            return Err(Error::Verification(format!(
                "shape {} integrates to {} (needs 1 within 1e-10)",
                self.name, total.value
            )));
        }
        let grid: Vec<f64> = (1..=1000).map(|i| i as f64 / 1001.0).collect();
        let vals: Vec<f64> = grid.iter().map(|&x| self.pdf(x)).collect();
        if self.monotone_increasing && vals.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Verification(format!("shape {} is not increasing on the grid", self.name)));
        }
        let second = vals.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]);
        let ok = match self.curvature {
            Curvature::Convex => second.clone().all(|d| d >= -1e-12),
            Curvature::Concave => second.clone().all(|d| d <= 1e-12),
            Curvature::Neither => true,
        };
        if !ok {
            return Err(Error::Verification(format!(
                "shape {} second differences contradict {:?}",
                self.name, self.curvature
            )));
        }
        Ok(())
    }
}

/// One-dimensional base densities for location and scale families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Base1D {
    Normal,
    Cauchy,
    Logistic,
    Exponential,
    HalfNormal,
}

impl Base1D {
    pub fn by_id(id: &str) -> Result<Self> {
        match id {
            "normal" => Ok(Self::Normal),
            "cauchy" => Ok(Self::Cauchy),
            "logistic" => Ok(Self::Logistic),
            "exponential" => Ok(Self::Exponential),
            "half-normal" => Ok(Self::HalfNormal),
            other => Err(Error::UnknownId(other.to_owned())),
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            Self::Normal => "normal",
            Self::Cauchy => "cauchy",
            Self::Logistic => "logistic",
            Self::Exponential => "exponential",
            Self::HalfNormal => "half-normal",
        }
    }

    pub fn positive_support(&self) -> bool {
        matches!(self, Self::Exponential | Self::HalfNormal)
    }

    /// Log-concave bases have a unimodal likelihood in location and log-scale.
    pub fn log_concave(&self) -> bool {
        !matches!(self, Self::Cauchy)
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        match self {
            Self::Normal => -0.5 * x * x - LN_SQRT_2PI,
            Self::Cauchy => -(PI * (1.0 + x * x)).ln(),
            Self::Logistic => {
                let a = -x.abs();
                a - 2.0 * a.exp().ln_1p()
            }
            Self::Exponential => {
                if x < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    -x
                }
            }
            Self::HalfNormal => {
                if x < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    LN_2 - 0.5 * x * x - LN_SQRT_2PI
                }
            }
        }
    }

    /// Derivative of `log_pdf` in `x` (on the support interior).
    pub fn d_log_pdf(&self, x: f64) -> f64 {
        match self {
            Self::Normal | Self::HalfNormal => -x,
            Self::Cauchy => -2.0 * x / (1.0 + x * x),
            Self::Logistic => -(0.5 * x).tanh(),
            Self::Exponential => -1.0,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::Normal => 0.5 * erfc(-x / std::f64::consts::SQRT_2),
            Self::Cauchy => 0.5 + x.atan() / PI,
            Self::Logistic => 1.0 / (1.0 + (-x).exp()),
            Self::Exponential => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x).exp_m1()
                }
            }
            Self::HalfNormal => {
                if x <= 0.0 {
                    0.0
                } else {
                    erf(x / std::f64::consts::SQRT_2)
                }
            }
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        match self {
            Self::Normal => std::f64::consts::SQRT_2 * erf_inv(2.0 * p - 1.0),
            Self::Cauchy => (PI * (p - 0.5)).tan(),
            Self::Logistic => (p / (1.0 - p)).ln(),
            Self::Exponential => -(-p).ln_1p(),
            Self::HalfNormal => std::f64::consts::SQRT_2 * erf_inv(p),
        }
    }

    pub fn sample(&self, rng: &mut StreamRng) -> f64 {
        match self {
            Self::Normal => rng.sample(StandardNormal),
            Self::HalfNormal => {
                let z: f64 = rng.sample(StandardNormal);
                z.abs()
            }
            Self::Cauchy => {
                let u: f64 = rng.random();
                (PI * (u - 0.5)).tan()
            }
            Self::Logistic => {
                let u: f64 = open_unit(rng);
                (u / (1.0 - u)).ln()
            }
            Self::Exponential => {
                let u: f64 = rng.random();
                -(-u).ln_1p()
            }
        }
    }
}

/// Uniform draw from the open interval (0, 1).
pub fn open_unit(rng: &mut StreamRng) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// A density on a sample space: log-density plus sampler.
pub trait Density: Send + Sync + fmt::Debug {
    fn space(&self) -> SampleSpace;

    /// Unchecked log-density; `-inf` off the support.
    fn log_pdf(&self, x: &[f64]) -> f64;

    /// Writes one draw into `out` (length = dimension).
    fn sample_into(&self, rng: &mut StreamRng, out: &mut [f64]);

    /// Analytic CDF for one-dimensional densities.
    fn cdf_1d(&self, _x: f64) -> Option<f64> {
        None
    }

    fn label(&self) -> String;
}

/// Checked log-density: dimension and NaN validation, `-inf` off support.
pub fn log_density_at(d: &dyn Density, x: &[f64]) -> Result<f64> {
    let space = d.space();
    space.check_point(x)?;
    if !space.contains(x) {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(d.log_pdf(x))
}

/// `count` i.i.d. draws, deterministic given the generator state.
pub fn sample(d: &dyn Density, rng: &mut StreamRng, count: usize) -> Result<Vec<Vec<f64>>> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be >= 1".into()));
    }
    let n = d.space().dim();
    Ok((0..count)
        .map(|_| {
            let mut x = vec![0.0; n];
            d.sample_into(rng, &mut x);
            x
        })
        .collect())
}

/// Uniform density on the unit cube or unit square.
#[derive(Debug, Clone)]
pub struct Uniform {
    space: SampleSpace,
}

impl Uniform {
    pub fn unit_cube(n: usize) -> Result<Self> {
        Ok(Self { space: SampleSpace::new(SpaceKind::UnitCube, n)? })
    }

    pub fn unit_square() -> Self {
        Self { space: SampleSpace { kind: SpaceKind::UnitSquare, n: 2 } }
    }
}

impl Density for Uniform {
    fn space(&self) -> SampleSpace {
        self.space
    }

    fn log_pdf(&self, x: &[f64]) -> f64 {
        if x.iter().all(|&v| (0.0..=1.0).contains(&v)) {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }

    fn sample_into(&self, rng: &mut StreamRng, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = rng.random();
        }
    }

    fn cdf_1d(&self, x: f64) -> Option<f64> {
        (self.space.n == 1).then(|| x.clamp(0.0, 1.0))
    }

    fn label(&self) -> String {
        "uniform".into()
    }
}

/// `∏ f(y_i)` on the unit cube where `y_i = 1 - x_i` for reflected
/// coordinates and `y_i = x_i` otherwise.
#[derive(Debug, Clone)]
pub struct ReflectedProduct {
    space: SampleSpace,
    shape: Arc<Shape1D>,
    reflect: Vec<bool>,
    label: String,
}

impl ReflectedProduct {
    pub fn new(shape: Arc<Shape1D>, kind: SpaceKind, reflect: Vec<bool>, label: String) -> Result<Self> {
        let space = SampleSpace::new(kind, reflect.len())?;
        if !matches!(kind, SpaceKind::UnitCube | SpaceKind::UnitSquare) {
            return Err(Error::InvalidArgument("reflected products live on the unit cube".into()));
        }
        Ok(Self { space, shape, reflect, label })
    }

    pub fn reflect_mask(&self) -> &[bool] {
        &self.reflect
    }

    pub fn shape(&self) -> &Shape1D {
        &self.shape
    }
}

impl Density for ReflectedProduct {
    fn space(&self) -> SampleSpace {
        self.space
    }

    fn log_pdf(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.reflect)
            .map(|(&v, &r)| self.shape.log_pdf(if r { 1.0 - v } else { v }))
            .sum()
    }

    fn sample_into(&self, rng: &mut StreamRng, out: &mut [f64]) {
        for (v, &r) in out.iter_mut().zip(&self.reflect) {
            let u: f64 = rng.random();
            let y = self.shape.inv_cdf(u);
            *v = if r { 1.0 - y } else { y };
        }
    }

    fn cdf_1d(&self, x: f64) -> Option<f64> {
        if self.space.n != 1 {
            return None;
        }
        Some(if self.reflect[0] { 1.0 - self.shape.cdf(1.0 - x) } else { self.shape.cdf(x) })
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

/// `∏ base(x_i - θ)` on the real line.
#[derive(Debug, Clone)]
pub struct LocationFamily {
    pub base: Base1D,
    pub n: usize,
    pub theta: f64,
}

impl LocationFamily {
    pub fn new(base: Base1D, n: usize, theta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("dimension must be >= 1".into()));
        }
        if base.positive_support() {
            return Err(Error::InvalidArgument(format!("{} is not a real-line base", base.id())));
        }
        if !theta.is_finite() {
            return Err(Error::InvalidArgument("location must be finite".into()));
        }
        Ok(Self { base, n, theta })
    }
}

impl Density for LocationFamily {
    fn space(&self) -> SampleSpace {
        SampleSpace { kind: SpaceKind::RealVector, n: self.n }
    }

    fn log_pdf(&self, x: &[f64]) -> f64 {
        x.iter().map(|&v| self.base.log_pdf(v - self.theta)).sum()
    }

    fn sample_into(&self, rng: &mut StreamRng, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self.theta + self.base.sample(rng);
        }
    }

    fn cdf_1d(&self, x: f64) -> Option<f64> {
        (self.n == 1).then(|| self.base.cdf(x - self.theta))
    }

    fn label(&self) -> String {
        format!("{}(loc={})", self.base.id(), self.theta)
    }
}

/// `τ^{-n} ∏ base(x_i / τ)` on the positive orthant.
#[derive(Debug, Clone)]
pub struct ScaleFamily {
    pub base: Base1D,
    pub n: usize,
    pub tau: f64,
}

impl ScaleFamily {
    pub fn new(base: Base1D, n: usize, tau: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("dimension must be >= 1".into()));
        }
        if !base.positive_support() {
            return Err(Error::InvalidArgument(format!(
                "{} has no positive-support scale instance",
                base.id()
            )));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidArgument("scale must be positive".into()));
        }
        Ok(Self { base, n, tau })
    }
}

impl Density for ScaleFamily {
    fn space(&self) -> SampleSpace {
        SampleSpace { kind: SpaceKind::PositiveVector, n: self.n }
    }

    fn log_pdf(&self, x: &[f64]) -> f64 {
        let ln_tau = self.tau.ln();
        x.iter().map(|&v| self.base.log_pdf(v / self.tau) - ln_tau).sum()
    }

    fn sample_into(&self, rng: &mut StreamRng, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self.tau * self.base.sample(rng);
        }
    }

    fn cdf_1d(&self, x: f64) -> Option<f64> {
        (self.n == 1).then(|| self.base.cdf(x / self.tau))
    }

    fn label(&self) -> String {
        format!("{}(scale={})", self.base.id(), self.tau)
    }
}

/// `p1(x) = ∏ f(x_i)` and its reflection `p2(x) = ∏ f(1 - x_i)`.
#[derive(Debug, Clone)]
pub struct SymmetricPair {
    pub shape: Arc<Shape1D>,
    pub n: usize,
    pub p1: Arc<ReflectedProduct>,
    pub p2: Arc<ReflectedProduct>,
}

impl SymmetricPair {
    pub fn alternatives(&self) -> Vec<Arc<dyn Density>> {
        vec![self.p1.clone(), self.p2.clone()]
    }
}

pub fn make_symmetric_pair(shape: &Shape1D, n: usize) -> Result<SymmetricPair> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    let shape = Arc::new(shape.clone());
    let single = ReflectedProduct::new(shape.clone(), SpaceKind::UnitCube, vec![false], shape.name().into())?;
    let report = verify_density(&single, None);
    if !report.normalized() {
        return Err(Error::Verification(format!(
            "shape {} integrates to {:.12} (tolerance {:e})",
            shape.name(),
            report.integral,
            report.tolerance
        )));
    }
    shape.validate()?;
    let p1 = ReflectedProduct::new(shape.clone(), SpaceKind::UnitCube, vec![false; n], "p1".into())?;
    let p2 = ReflectedProduct::new(shape.clone(), SpaceKind::UnitCube, vec![true; n], "p2".into())?;
    Ok(SymmetricPair { shape, n, p1: Arc::new(p1), p2: Arc::new(p2) })
}

/// The four reflections of `f2(x, y) = f(x) f(y)` on the unit square:
/// `p1 = f2(x,y)`, `p2 = f2(1-x,y)`, `p3 = f2(x,1-y)`, `p4 = f2(1-x,1-y)`.
#[derive(Debug, Clone)]
pub struct QuadAlternatives {
    pub shape: Arc<Shape1D>,
    pub p: [Arc<ReflectedProduct>; 4],
}

impl QuadAlternatives {
    pub fn alternatives(&self) -> Vec<Arc<dyn Density>> {
        self.p.iter().map(|d| d.clone() as Arc<dyn Density>).collect()
    }

    /// `f2(x, y)` itself.
    pub fn f2(&self) -> Arc<ReflectedProduct> {
        self.p[0].clone()
    }
}

/// Bundled instance: `f2(x, y) = 9x²y²`.
pub fn quad_9x2y2() -> QuadAlternatives {
    make_quad_alternatives(&Shape1D::convex_3x2()).expect("bundled shape is valid")
}

pub fn make_quad_alternatives(shape: &Shape1D) -> Result<QuadAlternatives> {
    if !shape.monotone_increasing() {
        return Err(Error::Precondition("bivariate base must be increasing in both variables".into()));
    }
    shape.validate()?;
    let shape = Arc::new(shape.clone());
    let mk = |mask: [bool; 2], label: &str| {
        ReflectedProduct::new(shape.clone(), SpaceKind::UnitSquare, mask.to_vec(), label.into()).map(Arc::new)
    };
    Ok(QuadAlternatives {
        p: [
            mk([false, false], "p1")?,
            mk([true, false], "p2")?,
            mk([false, true], "p3")?,
            mk([true, true], "p4")?,
        ],
        shape,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum VerificationStatus {
    Pass,
    Fail,
    QuadratureFailed { estimate: f64, error_bound: f64 },
    Unsupported(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub integral: f64,
    pub error_estimate: f64,
    pub tolerance: f64,
    pub ks_statistic: Option<f64>,
    pub status: VerificationStatus,
}

impl VerificationReport {
    pub fn normalized(&self) -> bool {
        !matches!(self.status, VerificationStatus::QuadratureFailed { .. } | VerificationStatus::Unsupported(_))
            && (self.integral - 1.0).abs() <= self.tolerance
    }

    pub fn passed(&self) -> bool {
        self.status == VerificationStatus::Pass
    }
}

pub const KS_DRAWS: usize = 100_000;
pub const KS_THRESHOLD: f64 = 0.01;

/// Kolmogorov-Smirnov distance between `KS_DRAWS` sampler draws and the
/// analytic CDF; `None` for densities without a one-dimensional CDF.
pub fn sampler_ks_distance(d: &dyn Density, seed: u64) -> Option<f64> {
    d.cdf_1d(0.0)?;
    let mut rng = Substream::derive(seed, "ks-check").rng();
    let mut draws: Vec<f64> = (0..KS_DRAWS)
        .map(|_| {
            let mut x = [0.0];
            d.sample_into(&mut rng, &mut x);
            x[0]
        })
        .collect();
    draws.sort_by(f64::total_cmp);
    let m = draws.len() as f64;
    let mut dmax: f64 = 0.0;
    for (i, &x) in draws.iter().enumerate() {
        let c = d.cdf_1d(x).unwrap();
        dmax = dmax.max((c - i as f64 / m).abs()).max(((i + 1) as f64 / m - c).abs());
    }
    Some(dmax)
}

/// Integrates `exp(log_pdf)` over the support (or the given truncation box
/// for unbounded supports) and runs the sampler KS check for 1-D densities.
///
/// Tolerance is 1e-8 on bounded supports and 1e-6 under truncation.
pub fn verify_density(d: &dyn Density, truncation: Option<(f64, f64)>) -> VerificationReport {
    let space = d.space();
    let (lo, hi) = space.bounds();
    let bounded = lo.is_finite() && hi.is_finite();
    let tolerance = if bounded { 1e-8 } else { 1e-6 };
    let fail = |status| VerificationReport {
        integral: f64::NAN,
        error_estimate: f64::NAN,
        tolerance,
        ks_statistic: None,
        status,
    };
    let (a, b) = if bounded {
        (lo, hi)
    } else {
        match truncation {
            Some((a, b)) if a < b && a.is_finite() && b.is_finite() => (a.max(lo), b.min(hi)),
            _ => return fail(VerificationStatus::Unsupported("unbounded support needs truncation bounds".into())),
        }
    };
    let spec = QuadratureSpec { abs_tol: 1e-12, rel_tol: 1e-12, max_subdivisions: 2000 };
    let result = match space.dim() {
        1 => integrate(|t| d.log_pdf(&[t]).exp(), a, b, &spec),
        2 => {
            let inner_spec = QuadratureSpec { abs_tol: 1e-13, ..spec };
            let inner_err = std::cell::Cell::new(0.0f64);
            let outer = integrate(
                |s| match integrate(|t| d.log_pdf(&[s, t]).exp(), a, b, &inner_spec) {
                    Ok(r) => {
                        inner_err.set(inner_err.get().max(r.error));
                        r.value
                    }
                    Err(_) => f64::NAN,
                },
                a,
                b,
                &spec,
            );
            outer.map(|mut r| {
                r.error += inner_err.get() * (b - a);
                r
            })
        }
        n => return fail(VerificationStatus::Unsupported(format!("dimension {n} not supported"))),
    };
    let r = match result {
        Ok(r) => r,
        Err(Error::Quadrature { estimate, error_bound }) => {
            return fail(VerificationStatus::QuadratureFailed { estimate, error_bound })
        }
        Err(e) => return fail(VerificationStatus::Unsupported(e.to_string())),
    };
    let ks = sampler_ks_distance(d, 0x5eed);
    let normalized = (r.value - 1.0).abs() <= tolerance;
    let ks_ok = ks.is_none_or(|k| k < KS_THRESHOLD);
    VerificationReport {
        integral: r.value,
        error_estimate: r.error,
        tolerance,
        ks_statistic: ks,
        status: if normalized && ks_ok { VerificationStatus::Pass } else { VerificationStatus::Fail },
    }
}
