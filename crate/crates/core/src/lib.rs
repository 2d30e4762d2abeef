//! Maximum, average and integrated likelihood-ratio tests for problems with
//! a transitive invariance group, with Monte Carlo and exact power analysis.
//!
//! * [`density`]: sample spaces, densities, samplers and the bundled families.
//! * [`statistics`]: the log-scale test statistics, backed by [`mle`],
//!   [`quadrature`] and [`optimize`].
//! * [`invariance`]: finite reflection groups and their induced permutations.
//! * [`power`]: calibration, power estimation, paired duels and closed-form
//!   one-observation powers.
//! * [`discrete`]: exhaustive invariant-region search and the discrete
//!   Neyman-Pearson construction.

pub mod density;
pub mod discrete;
pub mod error;
pub mod invariance;
pub mod mle;
pub mod optimize;
pub mod power;
pub mod quadrature;
pub mod rng;
pub mod statistics;

pub use error::{Error, Result};
