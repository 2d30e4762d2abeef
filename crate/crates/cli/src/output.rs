//! Result files: fixed-schema CSV and JSON plus the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use avglr_core::power::{DuelReport, PowerEstimate, TestDescriptor};
use avglr_core::rng::Substream;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Nine significant digits, `.` as decimal separator regardless of locale.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..9).contains(&exp) {
        return format!("{mantissa}e{exp}");
    }
    let decimals = (8 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

pub const CSV_HEADER: [&str; 8] = ["test", "alternative", "alpha", "critical_value", "p_hat", "std_error", "N", "seed"];

/// One row per (test, alternative) plus a `null` row per test holding the
/// fresh-sample size check.
pub fn duel_csv(report: &DuelReport) -> String {
    let mut out = CSV_HEADER.join(",");
    out.push('\n');
    let mut row = |t: &TestDescriptor, alt: &str, p: &PowerEstimate| {
        let cells = [
            t.statistic.clone(),
            alt.to_owned(),
            sig9(t.alpha),
            sig9(t.critical_value),
            sig9(p.p_hat),
            sig9(p.std_error),
            p.n.to_string(),
            p.seed.to_string(),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    };
    for a in &report.alternatives {
        row(&report.test_a, &a.alternative, &a.power_a);
        row(&report.test_b, &a.alternative, &a.power_b);
    }
    for (t, s) in [&report.test_a, &report.test_b].into_iter().zip(&report.size_checks) {
        row(t, "null", &s.fresh);
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut f = fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

/// SHA-256 of the compact JSON encoding, hex encoded.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    let bytes = serde_json::to_vec(value)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubstreamSeed {
    pub name: String,
    pub seed: u64,
}

impl From<&Substream> for SubstreamSeed {
    fn from(s: &Substream) -> Self {
        Self { name: s.name().to_owned(), seed: s.seed_id() }
    }
}

/// Only `timestamp` and `duration_seconds` vary between identical runs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub version: String,
    pub timestamp: String,
    pub substreams: Vec<SubstreamSeed>,
    pub duration_seconds: f64,
    pub files: Vec<String>,
}

pub const VOLATILE_MANIFEST_KEYS: [&str; 2] = ["timestamp", "duration_seconds"];

impl RunManifest {
    pub fn new(config_hash: String, substreams: Vec<SubstreamSeed>, duration_seconds: f64, files: Vec<PathBuf>) -> Self {
        Self {
            config_hash,
            version: VERSION.to_owned(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            substreams,
            duration_seconds,
            files: files.iter().map(|p| p.display().to_string()).collect(),
        }
    }
}
