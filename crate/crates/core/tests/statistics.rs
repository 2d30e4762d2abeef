use std::f64::consts::PI;
use std::sync::Arc;

use avglr_core::density::*;
use avglr_core::mle::{location_loglik, mle_location, mle_scale, scale_loglik};
use avglr_core::quadrature::QuadratureSpec;
use avglr_core::rng::Substream;
use avglr_core::statistics::*;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::ln_gamma;

// Closed-form oracles, independent of the quadrature path.

/// ∫ ∏ φ(x_i - θ) dθ = (2π)^{-n/2} e^{-S/2} √(2π/n), S = Σ (x_i - x̄)².
fn log_gaussian_location_integral(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let s: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    -0.5 * n * (2.0 * PI).ln() - 0.5 * s + 0.5 * (2.0 * PI / n).ln()
}

/// ∫ ν^{n-1} e^{-νT} dν = Γ(n) / T^n.
fn log_exponential_scale_integral(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    ln_gamma(n) - n * x.iter().sum::<f64>().ln()
}

/// (2/π)^{n/2} ∫ ν^{n-1} e^{-ν² S/2} dν = (2/π)^{n/2} Γ(n/2) / (2 (S/2)^{n/2}).
fn log_half_normal_scale_integral(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let s: f64 = x.iter().map(|v| v * v).sum();
    0.5 * n * (2.0 / PI).ln() + ln_gamma(0.5 * n) - 2f64.ln() - 0.5 * n * (0.5 * s).ln()
}

fn grid_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, points: usize) -> f64 {
    (0..points).map(|i| f(lo + (hi - lo) * i as f64 / (points - 1) as f64)).fold(f64::NEG_INFINITY, f64::max)
}

fn central_diff<F: Fn(f64) -> f64>(f: F, t: f64) -> f64 {
    let h = 1e-6;
    (f(t + h) - f(t - h)) / (2.0 * h)
}

#[test]
fn quadrature_matches_closed_forms_on_random_inputs() {
    let q = QuadratureSpec::default();
    let mut rng = Substream::derive(21, "closed-forms").rng();
    for i in 0..100 {
        let n = 1 + i % 6;
        let x: Vec<f64> = (0..n).map(|_| 3.0 * rng.sample::<f64, _>(StandardNormal)).collect();
        let got = log_integrated_location(&x, Base1D::Normal, &q).unwrap().log_value;
        let want = log_gaussian_location_integral(&x);
        assert!(((got - want).exp() - 1.0).abs() < 1e-8, "location {x:?}: {got} vs {want}");

        let y: Vec<f64> = (0..n).map(|_| (2.0 * rng.sample::<f64, _>(StandardNormal)).exp()).collect();
        let got = log_integrated_scale(&y, Base1D::Exponential, &q).unwrap().log_value;
        assert!(((got - log_exponential_scale_integral(&y)).exp() - 1.0).abs() < 1e-8, "exp scale {y:?}");
        let got = log_integrated_scale(&y, Base1D::HalfNormal, &q).unwrap().log_value;
        assert!(((got - log_half_normal_scale_integral(&y)).exp() - 1.0).abs() < 1e-8, "hn scale {y:?}");
    }
}

#[test]
fn location_example_value() {
    let q = QuadratureSpec::default();
    let v = log_integrated_location(&[0.0, 1.0], Base1D::Normal, &q).unwrap().log_value.exp();
    assert!((v - 0.219_695_644_733_861_2).abs() < 1e-10);
    assert!((log_gaussian_location_integral(&[0.0, 1.0]).exp() - 0.219_695_644_733_861_2).abs() < 1e-15);
}

#[test]
fn integrated_statistics_are_invariant() {
    let q = QuadratureSpec::default();
    let mut rng = Substream::derive(22, "invariance").rng();
    for _ in 0..100 {
        let x: Vec<f64> = (0..3).map(|_| Base1D::Cauchy.sample(&mut rng)).collect();
        let c = 20.0 * (rng.random::<f64>() - 0.5);
        let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
        let a = integrated_lr_location(&x, Base1D::Normal, Base1D::Cauchy, &q).unwrap();
        let b = integrated_lr_location(&shifted, Base1D::Normal, Base1D::Cauchy, &q).unwrap();
        assert!((a - b).abs() < 1e-8, "{x:?} + {c}: {a} vs {b}");

        let y: Vec<f64> = (0..3).map(|_| Base1D::Exponential.sample(&mut rng)).collect();
        let k = (4.0 * (rng.random::<f64>() - 0.5)).exp();
        let scaled: Vec<f64> = y.iter().map(|v| v * k).collect();
        let a = integrated_lr_scale(&y, Base1D::Exponential, Base1D::HalfNormal, &q).unwrap();
        let b = integrated_lr_scale(&scaled, Base1D::Exponential, Base1D::HalfNormal, &q).unwrap();
        assert!((a - b).abs() < 1e-8, "{y:?} * {k}: {a} vs {b}");
    }
}

#[test]
fn profile_statistics_are_invariant() {
    let mut rng = Substream::derive(23, "profile-invariance").rng();
    for _ in 0..100 {
        let x: Vec<f64> = (0..3).map(|_| Base1D::Cauchy.sample(&mut rng)).collect();
        let c = 20.0 * (rng.random::<f64>() - 0.5);
        let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
        let a = max_lr_location(&x, Base1D::Normal, Base1D::Cauchy).unwrap();
        let b = max_lr_location(&shifted, Base1D::Normal, Base1D::Cauchy).unwrap();
        assert!((a - b).abs() < 1e-8, "{x:?} + {c}: {a} vs {b}");

        let y: Vec<f64> = (0..3).map(|_| Base1D::HalfNormal.sample(&mut rng)).collect();
        let k = (4.0 * (rng.random::<f64>() - 0.5)).exp();
        let scaled: Vec<f64> = y.iter().map(|v| v * k).collect();
        let a = max_lr_scale(&y, Base1D::Exponential, Base1D::HalfNormal).unwrap();
        let b = max_lr_scale(&scaled, Base1D::Exponential, Base1D::HalfNormal).unwrap();
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn mle_stationarity_and_grid_oracle() {
    let mut rng = Substream::derive(24, "mle").rng();
    for _ in 0..50 {
        let n = 2 + rng.random_range(0..5);
        let x: Vec<f64> = (0..n).map(|_| 2.0 * Base1D::Cauchy.sample(&mut rng)).collect();
        for base in [Base1D::Normal, Base1D::Cauchy, Base1D::Logistic] {
            let t = mle_location(&x, base).unwrap();
            let ll = |th: f64| location_loglik(&x, base, th);
            assert!(central_diff(ll, t).abs() < 1e-6 * (1.0 + t.abs()), "{base:?} {x:?}");
            let lo = x.iter().copied().fold(f64::INFINITY, f64::min) - 1.0;
            let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 1.0;
            assert!(ll(t) >= grid_max(ll, lo, hi, 10_000) - 1e-9, "{base:?} {x:?}");
        }
        let y: Vec<f64> = x.iter().map(|v| v.abs() + 1e-3).collect();
        for base in [Base1D::Exponential, Base1D::HalfNormal] {
            let tau = mle_scale(&y, base).unwrap();
            let ll = |s: f64| scale_loglik(&y, base, s.exp());
            assert!(central_diff(ll, tau.ln()).abs() < 1e-6 * (1.0 + tau.ln().abs()));
            assert!(ll(tau.ln()) >= grid_max(ll, tau.ln() - 5.0, tau.ln() + 5.0, 10_000) - 1e-9);
        }
    }
}

#[test]
fn normal_cauchy_profile_example() {
    let x = [-3.0, 3.0];
    let got = max_lr_location(&x, Base1D::Normal, Base1D::Cauchy).unwrap();
    let cauchy = grid_max(|t| location_loglik(&x, Base1D::Cauchy, t), -10.0, 10.0, 10_000);
    let normal = location_loglik(&x, Base1D::Normal, 0.0);
    assert!(got >= cauchy - normal - 1e-9);
    assert!(got - (cauchy - normal) < 1e-5);
}

#[test]
fn exponential_half_normal_profile_example() {
    let x = [1.0, 1.0];
    assert!((mle_scale(&x, Base1D::Exponential).unwrap() - 1.0).abs() < 1e-12);
    assert!((mle_scale(&x, Base1D::HalfNormal).unwrap() - 1.0).abs() < 1e-12);
    // half-normal at τ=1: 2 log √(2/π) - 1; exponential at τ=1: -2
    let want = (2.0 / PI).ln() - 1.0 + 2.0;
    assert!((max_lr_scale(&x, Base1D::Exponential, Base1D::HalfNormal).unwrap() - want).abs() < 1e-12);
    let grid = grid_max(|s| scale_loglik(&x, Base1D::HalfNormal, s.exp()), -3.0, 3.0, 10_000)
        - grid_max(|s| scale_loglik(&x, Base1D::Exponential, s.exp()), -3.0, 3.0, 10_000);
    assert!((want - grid).abs() < 1e-5);
}

#[test]
fn mle_equivariance() {
    let x = [0.3, 2.2, -1.7, 5.0];
    for base in [Base1D::Normal, Base1D::Cauchy, Base1D::Logistic] {
        let t = mle_location(&x, base).unwrap();
        for c in [-100.0, 7.5, 1000.0] {
            let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
            assert!((mle_location(&shifted, base).unwrap() - (t + c)).abs() < 1e-8, "{base:?} {c}");
        }
    }
    let y = [0.3, 2.2, 1.7, 5.0];
    for base in [Base1D::Exponential, Base1D::HalfNormal] {
        let tau = mle_scale(&y, base).unwrap();
        for c in [1e-3, 0.7, 250.0] {
            let scaled: Vec<f64> = y.iter().map(|v| v * c).collect();
            assert!((mle_scale(&scaled, base).unwrap() / (tau * c) - 1.0).abs() < 1e-8);
        }
    }
}

fn pair_alts(shape: &Shape1D, n: usize) -> FiniteAlternatives {
    let pair = make_symmetric_pair(shape, n).unwrap();
    FiniteAlternatives::new(Arc::new(Uniform::unit_cube(n).unwrap()), pair.alternatives(), None).unwrap()
}

proptest! {
    #[test]
    fn avg_max_ordering(x in proptest::collection::vec(0.0005f64..0.9995, 5), convex in any::<bool>()) {
        let shape = if convex { Shape1D::convex_3x2() } else { Shape1D::concave_sqrt() };
        let a = pair_alts(&shape, 5);
        let avg = avg_lr(&x, &a).unwrap().value;
        let max = max_lr(&x, &a).unwrap().value;
        prop_assert!(avg <= max + 1e-12);
        prop_assert!(max <= avg + 2f64.ln() + 1e-12);
    }

    #[test]
    fn quad_ordering(x in 0.0005f64..0.9995, y in 0.0005f64..0.9995) {
        let quad = quad_9x2y2();
        let a = FiniteAlternatives::new(Arc::new(Uniform::unit_square()), quad.alternatives(), None).unwrap();
        let avg = avg_lr(&[x, y], &a).unwrap().value;
        let max = max_lr(&[x, y], &a).unwrap().value;
        prop_assert!(avg <= max + 1e-12 && max <= avg + 4f64.ln() + 1e-12);
    }

    #[test]
    fn avg_lr_symmetric_under_reflection(x in proptest::collection::vec(0.0f64..1.0, 3)) {
        let a = pair_alts(&Shape1D::concave_sqrt(), 3);
        let r: Vec<f64> = x.iter().map(|v| 1.0 - v).collect();
        prop_assert!((avg_lr(&x, &a).unwrap().value - avg_lr(&r, &a).unwrap().value).abs() <= 1e-12);
    }

    #[test]
    fn constant_shift_keeps_decisions(vals in proptest::collection::vec(-5.0f64..5.0, 50), shift in -10.0f64..10.0) {
        // threshold on the shifted scale is the shifted threshold
        let mut sorted = vals.clone();
        sorted.sort_by(f64::total_cmp);
        let c = sorted[44];
        let decisions: Vec<bool> = vals.iter().map(|v| *v > c).collect();
        let shifted: Vec<bool> = vals.iter().map(|v| v + shift > c + shift).collect();
        prop_assert_eq!(decisions, shifted);
    }
}
