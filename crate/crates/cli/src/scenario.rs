//! Bundled scenarios: hard-coded problems, sample sizes and seeds so that
//! `reproduce` needs no flags.

use avglr_core::quadrature::QuadratureSpec;

use crate::config::{ConfigError, ExperimentConfig, Problem};

pub const SCENARIO_IDS: [&str; 7] = [
    "convex-n1",
    "concave-n1",
    "symmetric-n5",
    "quad-bivariate",
    "location-normal-vs-cauchy",
    "scale-exp-vs-halfnormal",
    "discrete-oracle",
];

/// Discretization settings of the `discrete-oracle` scenario.
pub const DISCRETE_CELLS: usize = 10;
pub const DISCRETE_ALPHAS: [f64; 2] = [0.2, 0.4];
pub const DISCRETE_SHAPES: [&str; 2] = ["concave-sqrt", "convex-3x2"];

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: &'static str,
    /// Labelled Monte Carlo runs; empty for the exact discrete scenario.
    pub runs: Vec<(String, ExperimentConfig)>,
}

fn stats(ids: &[&str]) -> Vec<String> {
    ids.iter().map(|s| (*s).to_owned()).collect()
}

fn cfg(problem: Problem, statistics: &[&str], alpha: f64, n_calib: usize, n_power: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        problem,
        statistics: stats(statistics),
        weights: None,
        alpha,
        n_calib,
        n_power,
        seed,
        quadrature: QuadratureSpec::default(),
        out: None,
    }
}

fn pair(shape: &str, n: usize) -> Problem {
    Problem::SymmetricPair { shape: shape.to_owned(), n }
}

pub fn unknown_scenario(id: &str) -> ConfigError {
    ConfigError {
        source: "--scenario".into(),
        line: None,
        message: format!("unknown scenario {id:?}; valid ids: {}", SCENARIO_IDS.join(", ")),
    }
}

pub fn scenario(id: &str) -> Result<Scenario, ConfigError> {
    const FINITE: [&str; 2] = ["avg-lr", "max-lr"];
    let runs = match id {
        "convex-n1" => vec![("convex".into(), cfg(pair("convex-3x2", 1), &FINITE, 0.1, 1_000_000, 1_000_000, 7101))],
        "concave-n1" => vec![("concave".into(), cfg(pair("concave-sqrt", 1), &FINITE, 0.1, 1_000_000, 1_000_000, 7102))],
        "symmetric-n5" => vec![
            ("convex".into(), cfg(pair("convex-3x2", 5), &FINITE, 0.1, 200_000, 1_000_000, 7103)),
            ("concave".into(), cfg(pair("concave-sqrt", 5), &FINITE, 0.1, 200_000, 1_000_000, 7104)),
        ],
        "quad-bivariate" => vec![(
            "quad".into(),
            cfg(Problem::Quad { density: "quad-9x2y2".into() }, &FINITE, 0.1, 200_000, 1_000_000, 7105),
        )],
        "location-normal-vs-cauchy" => vec![(
            "location".into(),
            cfg(
                Problem::Location { null: "normal".into(), alternative: "cauchy".into(), n: 3 },
                &["int-loc-lr", "max-lr"],
                0.05,
                200_000,
                200_000,
                7106,
            ),
        )],
        "scale-exp-vs-halfnormal" => vec![(
            "scale".into(),
            cfg(
                Problem::Scale { null: "exponential".into(), alternative: "half-normal".into(), n: 3 },
                &["int-scale-lr", "max-lr"],
                0.05,
                200_000,
                200_000,
                7107,
            ),
        )],
        "discrete-oracle" => vec![],
        other => return Err(unknown_scenario(other)),
    };
    let id = SCENARIO_IDS.iter().find(|s| **s == id).expect("matched above");
    Ok(Scenario { id, runs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{resolve, ConfigSource};

    #[test]
    fn every_scenario_resolves() {
        for id in SCENARIO_IDS {
            let s = scenario(id).unwrap();
            for (_, c) in &s.runs {
                resolve(c, &ConfigSource::inline(id)).unwrap();
            }
        }
    }

    #[test]
    fn unknown_ids_list_the_valid_ones() {
        let err = scenario("nope").unwrap_err();
        for id in SCENARIO_IDS {
            assert!(err.message.contains(id));
        }
    }
}
