//! Maximum likelihood for the nuisance location and scale parameters.
//!
//! A derivative-free Brent search locates the optimum from data-driven
//! starting points; the result is then polished by bisection on the analytic
//! score so that the estimate is accurate to machine precision (the
//! log-likelihood is too flat near its optimum for function values alone to
//! resolve 1e-10 in the parameter).

use crate::density::Base1D;
use crate::error::{Error, Result};
use crate::optimize::{bracket_minimum, brent_minimize, polish_root};

const BRENT_TOL: f64 = 1e-10;
const MAX_ITER: usize = 500;
const SEEDS: usize = 16;

fn check_finite(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::InvalidArgument("empty sample".into()));
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(if x[i].is_nan() { Error::NanInput(i) } else { Error::InvalidArgument("infinite observation".into()) });
    }
    Ok(())
}

/// Type-7 sample quantile of sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub(crate) fn sorted(x: &[f64]) -> Vec<f64> {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Location log-likelihood `Σ log base(x_i - θ)`.
pub fn location_loglik(x: &[f64], base: Base1D, theta: f64) -> f64 {
    x.iter().map(|&v| base.log_pdf(v - theta)).sum()
}

/// Scale log-likelihood `-n log τ + Σ log base(x_i / τ)`.
pub fn scale_loglik(x: &[f64], base: Base1D, tau: f64) -> f64 {
    let ln_tau = tau.ln();
    x.iter().map(|&v| base.log_pdf(v / tau) - ln_tau).sum()
}

fn maximize_multistart<L, S>(loglik: L, score: S, seeds: &[f64], step: f64) -> Result<f64>
where
    L: Fn(f64) -> f64,
    S: Fn(f64) -> f64,
{
    let neg = |t: f64| {
        let v = -loglik(t);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut best: Option<(f64, f64)> = None;
    let mut last_err = None;
    for &seed in seeds {
        let Some(br) = bracket_minimum(&neg, seed, step, 200) else {
            last_err = Some(Error::Optimizer { iterations: 200, best: seed });
            continue;
        };
        match brent_minimize(&neg, br, BRENT_TOL, MAX_ITER) {
            Ok((t, v)) => {
                if best.is_none_or(|(_, bv)| v < bv) {
                    best = Some((t, v));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let Some((t, v)) = best else {
        return Err(last_err.unwrap_or(Error::Optimizer { iterations: 0, best: f64::NAN }));
    };
    let polished = polish_root(&score, t, 1e-6 * (1.0 + t.abs()));
    // near the optimum the objective is flat to rounding, so accept the
    // polished root unless it is measurably worse or has left the basin
    let close = (polished - t).abs() <= 1e-4 * (1.0 + t.abs());
    Ok(if close && neg(polished) <= v + 1e-12 * (1.0 + v.abs()) { polished } else { t })
}

fn dedup_seeds(mut seeds: Vec<f64>) -> Vec<f64> {
    seeds.sort_by(f64::total_cmp);
    seeds.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * (1.0 + b.abs()));
    seeds
}

/// MLE of `θ` in `∏ base(x_i - θ)`.
///
/// Log-concave bases start from the median; the Cauchy likelihood can be
/// multimodal and is searched from 16 data-quantile seeds, keeping the best.
pub fn mle_location(x: &[f64], base: Base1D) -> Result<f64> {
    check_finite(x)?;
    if base.positive_support() {
        return Err(Error::Precondition(format!("{} is not a location base", base.id())));
    }
    let s = sorted(x);
    let seeds = if base.log_concave() {
        vec![quantile_sorted(&s, 0.5)]
    } else {
        dedup_seeds((0..SEEDS).map(|k| quantile_sorted(&s, k as f64 / (SEEDS - 1) as f64)).collect())
    };
    let loglik = |t: f64| location_loglik(x, base, t);
    let score = |t: f64| -x.iter().map(|&v| base.d_log_pdf(v - t)).sum::<f64>();
    maximize_multistart(loglik, score, &seeds, 0.25)
}

/// MLE of `τ` in `τ^{-n} ∏ base(x_i / τ)`, searched over `log τ`.
///
/// The start is the geometric mean of quantile-matched scales
/// `x_(p) / base_quantile(p)` over 16 probability levels.
pub fn mle_scale(x: &[f64], base: Base1D) -> Result<f64> {
    check_finite(x)?;
    if x.iter().any(|&v| v <= 0.0) {
        return Err(Error::Precondition("scale MLE needs strictly positive observations".into()));
    }
    if !base.positive_support() {
        return Err(Error::Precondition(format!("{} is not a positive-support base", base.id())));
    }
    let s = sorted(x);
    let log_seed = (0..SEEDS)
        .map(|k| {
            let p = (k as f64 + 0.5) / SEEDS as f64;
            (quantile_sorted(&s, p) / base.quantile(p)).ln()
        })
        .sum::<f64>()
        / SEEDS as f64;
    let n = x.len() as f64;
    let loglik = |ls: f64| {
        let inv = (-ls).exp();
        x.iter().map(|&v| base.log_pdf(v * inv)).sum::<f64>() - n * ls
    };
    let score = |ls: f64| {
        let inv = (-ls).exp();
        -n - x.iter().map(|&v| base.d_log_pdf(v * inv) * v * inv).sum::<f64>()
    };
    let seeds = if base.log_concave() {
        vec![log_seed]
    } else {
        dedup_seeds((0..SEEDS).map(|k| log_seed + (k as f64 - 7.5) * 0.25).collect())
    };
    Ok(maximize_multistart(loglik, score, &seeds, 0.25)?.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn normal_location_is_mean() {
        let x = [0.3, -1.2, 2.5, 0.7];
        let mean = x.iter().sum::<f64>() / 4.0;
        assert_relative_eq!(mle_location(&x, Base1D::Normal).unwrap(), mean, epsilon = 1e-12);
    }

    #[test]
    fn single_cauchy_observation() {
        assert_relative_eq!(mle_location(&[2.5], Base1D::Cauchy).unwrap(), 2.5, epsilon = 1e-12);
    }

    #[test]
    fn bimodal_cauchy_picks_a_global_mode() {
        // modes at ±√8 with equal likelihood
        let t = mle_location(&[-3.0, 3.0], Base1D::Cauchy).unwrap();
        assert_relative_eq!(t.abs(), 8f64.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn exponential_and_half_normal_scales() {
        let x = [0.5, 1.5, 2.0, 0.25];
        assert_relative_eq!(mle_scale(&x, Base1D::Exponential).unwrap(), 1.0625, epsilon = 1e-12);
        let rms = (x.iter().map(|v| v * v).sum::<f64>() / 4.0).sqrt();
        assert_relative_eq!(mle_scale(&x, Base1D::HalfNormal).unwrap(), rms, epsilon = 1e-12);
    }

    #[test]
    fn preconditions() {
        assert!(matches!(mle_scale(&[1.0, -1.0], Base1D::Exponential), Err(Error::Precondition(_))));
        assert!(matches!(mle_location(&[1.0], Base1D::Exponential), Err(Error::Precondition(_))));
        assert!(matches!(mle_location(&[f64::NAN], Base1D::Normal), Err(Error::NanInput(0))));
    }
}
