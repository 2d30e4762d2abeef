//! Adaptive Gauss-Kronrod (10/21 point) quadrature with global error control,
//! plus log-domain wrappers for likelihood integrals over the real line.

use std::collections::BinaryHeap;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_36,
    0.295_524_224_714_752_87,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_352,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_5,
    0.149_445_554_002_916_9,
];

/// Tolerances for [`integrate`]. Success means the reported error estimate
/// is at most `max(abs_tol, rel_tol * |value|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { abs_tol: 0.0, rel_tol: 1e-11, max_subdivisions: 500 }
    }
}

impl QuadratureSpec {
    pub fn tolerance(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub subdivisions: usize,
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut gauss = 0.0;
    let mut kronrod = fc * WGK[10];
    let mut resabs = kronrod.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = kronrod * 0.5;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (value, err)
}

/// Adaptive integration of `f` over the finite interval `[a, b]`.
///
/// The interval with the largest error estimate is bisected until the total
/// error meets the tolerance. Non-convergence returns
/// [`Error::Quadrature`] carrying the partial estimate and its error bound.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Integral> {
    integrate_with_breaks(f, &[a, b], spec)
}

/// As [`integrate`], but starts from the pieces delimited by the sorted
/// `points` (first and last are the integration bounds).
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(f: F, points: &[f64], spec: &QuadratureSpec) -> Result<Integral> {
    if points.len() < 2 || points.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidArgument(format!("integration bounds must be finite: {points:?}")));
    }
    if points.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("break points must be sorted".into()));
    }
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    for w in points.windows(2) {
        if w[0] == w[1] {
            continue;
        }
        let (value, error) = gk21(&f, w[0], w[1]);
        if !value.is_finite() {
            return Err(Error::Quadrature { estimate: value, error_bound: f64::INFINITY });
        }
        total += value;
        heap.push(Piece { a: w[0], b: w[1], value, error });
    }
    if heap.is_empty() {
        return Ok(Integral { value: 0.0, error: 0.0, subdivisions: 0 });
    }
    let mut total_err: f64 = heap.iter().map(|p| p.error).sum();
    let mut subdivisions = heap.len();
    while total_err > spec.tolerance(total) {
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::Quadrature { estimate: total, error_bound: total_err });
        }
        let worst = heap.pop().expect("heap holds at least one piece");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval exhausted at machine precision
            return Err(Error::Quadrature { estimate: total, error_bound: total_err });
        }
        let (v1, e1) = gk21(&f, worst.a, mid);
        let (v2, e2) = gk21(&f, mid, worst.b);
        if !(v1.is_finite() && v2.is_finite()) {
            return Err(Error::Quadrature { estimate: total, error_bound: f64::INFINITY });
        }
        total += v1 + v2 - worst.value;
        heap.push(Piece { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Piece { a: mid, b: worst.b, value: v2, error: e2 });
        subdivisions += 1;
        // re-sum to avoid drift from repeated incremental updates
        total_err = heap.iter().map(|p| p.error).sum();
    }
    let total: f64 = heap.iter().map(|p| p.value).sum();
    Ok(Integral { value: total, error: total_err, subdivisions })
}

/// Natural log of an integral of `exp(log_h)`, carried with its error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogIntegral {
    pub log_value: f64,
    /// Absolute error bound on the integral, relative to `exp(log_value)`.
    pub rel_error: f64,
}

fn log_integral_on_angle<G: Fn(f64) -> f64>(
    integrand: G,
    angles: &[f64],
    offset: f64,
    spec: &QuadratureSpec,
) -> Result<LogIntegral> {
    let r = integrate_with_breaks(integrand, angles, spec).map_err(|e| match e {
        Error::Quadrature { estimate, error_bound } => Error::Quadrature {
            estimate: estimate.ln() + offset,
            error_bound: error_bound / estimate.abs(),
        },
        other => other,
    })?;
    if r.value <= 0.0 {
        return Ok(LogIntegral { log_value: f64::NEG_INFINITY, rel_error: 0.0 });
    }
    Ok(LogIntegral { log_value: r.value.ln() + offset, rel_error: r.error / r.value })
}

/// `ln ∫ exp(log_h(θ)) dθ` over the whole real line.
///
/// Uses `θ = center + scale·tan(t)`, so the bulk of the integrand should sit
/// within a few `scale` of `center`. `features` are locations where the
/// integrand may peak; the angle range is pre-split at each feature and at
/// one `scale` on either side, so narrow peaks far from the center are not
/// missed by the first pass. On failure the error carries the log of the
/// partial estimate and its relative error bound.
pub fn log_integral_real_line<H: Fn(f64) -> f64>(
    log_h: H,
    center: f64,
    scale: f64,
    features: &[f64],
    spec: &QuadratureSpec,
) -> Result<LogIntegral> {
    if !(scale > 0.0 && scale.is_finite() && center.is_finite()) {
        return Err(Error::InvalidArgument(format!("bad transform center {center} / scale {scale}")));
    }
    let offset = features
        .iter()
        .copied()
        .chain((-4..=4).map(|k| center + scale * k as f64 * 0.5))
        .map(&log_h)
        .fold(f64::NEG_INFINITY, f64::max);
    if offset == f64::NEG_INFINITY {
        return Ok(LogIntegral { log_value: f64::NEG_INFINITY, rel_error: 0.0 });
    }
    if offset == f64::INFINITY {
        return Err(Error::InvalidArgument("integrand is infinite".into()));
    }
    let mut angles: Vec<f64> = Vec::with_capacity(3 * features.len() + 3);
    angles.push(-FRAC_PI_2);
    angles.push(FRAC_PI_2);
    angles.push(0.0);
    for &p in features {
        for d in [-1.0, 0.0, 1.0] {
            let t = ((p - center) / scale + d).atan();
            if t.is_finite() {
                angles.push(t);
            }
        }
    }
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let integrand = |t: f64| {
        let c = t.cos();
        let lh = log_h(center + scale * t.tan());
        if lh == f64::NEG_INFINITY {
            0.0
        } else {
            (lh - offset).exp() * scale / (c * c)
        }
    };
    log_integral_on_angle(integrand, &angles, offset, spec)
}
