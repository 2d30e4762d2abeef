//! Command-line front end for calibrating and dueling likelihood-ratio tests:
//! experiment configs, bundled scenarios, result files and manifests.

pub mod commands;
pub mod config;
pub mod output;
pub mod scenario;
