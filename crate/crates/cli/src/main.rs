use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use avglr_cli::commands::{cmd_calibrate, cmd_duel, cmd_figure1, cmd_reproduce};
use avglr_cli::config::{load, resolve, ConfigError, ConfigSource, ExperimentConfig, Overrides};
use avglr_cli::scenario::scenario;
use avglr_core::density::Shape1D;
use avglr_core::power::Parallelism;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "avglr", version, about = "Calibrate, duel and compare likelihood-ratio tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo critical values of every configured statistic.
    Calibrate(RunArgs),
    /// Paired power comparison of two statistics.
    Duel(RunArgs),
    /// Runs bundled scenarios and checks them against their thresholds.
    Reproduce(RunArgs),
    /// Curve and region data for the one-observation picture.
    Figure1(RunArgs),
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Bundled scenario id.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long = "n-calib")]
    n_calib: Option<usize>,
    #[arg(long = "n-power")]
    n_power: Option<usize>,
    /// Output directory [default: results].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides { seed: self.seed, alpha: self.alpha, n_calib: self.n_calib, n_power: self.n_power, out: self.out.clone() }
    }
}

fn usage(message: &str) -> ConfigError {
    ConfigError { source: "arguments".into(), line: None, message: message.into() }
}

/// Labelled configs named by `--config` or `--scenario`, with overrides
/// applied.
fn configs(args: &RunArgs) -> Result<Vec<(Option<String>, ExperimentConfig, ConfigSource)>> {
    let overrides = args.overrides();
    let mut out = match (&args.config, &args.scenario) {
        (Some(path), None) => {
            let (cfg, src) = load(path)?;
            vec![(None, cfg, src)]
        }
        (None, Some(id)) => {
            let s = scenario(id)?;
            if s.runs.is_empty() {
                return Err(usage(&format!("scenario {id} has no Monte Carlo runs; use reproduce")).into());
            }
            let single = s.runs.len() == 1;
            s.runs
                .into_iter()
                .map(|(label, cfg)| ((!single).then_some(label), cfg, ConfigSource::inline(&format!("scenario {id}"))))
                .collect()
        }
        (Some(_), Some(_)) => return Err(usage("give either --config or --scenario, not both").into()),
        (None, None) => return Err(usage("one of --config or --scenario is required").into()),
    };
    for (_, cfg, _) in &mut out {
        overrides.apply(cfg);
    }
    Ok(out)
}

fn out_dir(cfg: Option<&ExperimentConfig>, label: Option<&str>) -> PathBuf {
    let base = cfg.and_then(|c| c.out.clone()).unwrap_or_else(|| PathBuf::from("results"));
    match label {
        Some(l) => base.join(l),
        None => base,
    }
}

fn figure_shape(args: &RunArgs) -> Result<(Shape1D, f64, PathBuf)> {
    let cfgs = match (&args.config, &args.scenario) {
        (None, None) => vec![],
        _ => configs(args)?,
    };
    let Some((_, cfg, src)) = cfgs.first() else {
        let out = args.out.clone().unwrap_or_else(|| PathBuf::from("results"));
        return Ok((Shape1D::convex_3x2(), args.alpha.unwrap_or(0.1), out));
    };
    let r = resolve(cfg, src)?;
    let shape = r.shape_n1.ok_or_else(|| usage("figure1 needs a one-observation symmetric-pair problem"))?;
    Ok((shape, cfg.alpha, out_dir(Some(cfg), None)))
}

fn run(cli: Cli) -> Result<bool> {
    let workers = match &cli.command {
        Command::Calibrate(a) | Command::Duel(a) | Command::Reproduce(a) | Command::Figure1(a) => a.workers,
    };
    if workers == 0 {
        return Err(usage("--workers must be at least 1").into());
    }
    let par = Parallelism::new(workers).map_err(|e| usage(&e.to_string()))?;
    match cli.command {
        Command::Calibrate(args) => {
            for (label, cfg, src) in configs(&args)? {
                cmd_calibrate(&cfg, &src, &out_dir(Some(&cfg), label.as_deref()), &par)?;
            }
            Ok(true)
        }
        Command::Duel(args) => {
            for (label, cfg, src) in configs(&args)? {
                cmd_duel(&cfg, &src, &out_dir(Some(&cfg), label.as_deref()), &par)?;
            }
            Ok(true)
        }
        Command::Reproduce(args) => {
            if args.config.is_some() {
                return Err(usage("reproduce takes --scenario, not --config").into());
            }
            let out = args.out.clone().unwrap_or_else(|| PathBuf::from("results"));
            cmd_reproduce(args.scenario.as_deref(), &args.overrides(), &out, &par)
        }
        Command::Figure1(args) => {
            let (shape, alpha, out) = figure_shape(&args)?;
            cmd_figure1(&shape, alpha, Path::new(&out))?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
