//! `wwr`: wrong-way-risk EPE profiles, CVA sweeps, path exports and self-checks.

mod commands;
mod config;
mod models;
mod output;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{ConfigError, RawConfig, RunConfig};

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_VALIDATION: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "wwr", version, about = "Wrong-way-risk EPE and CVA")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// Run configuration (flat key=value file).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Model: gc, hw, cm, ssrd or gaussian.
    #[arg(long, global = true)]
    model: Option<String>,

    /// Correlation, or a comma-separated list of them.
    #[arg(long, global = true, allow_hyphen_values = true)]
    rho: Option<String>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for the CSV files; without it results go to stdout.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Hull-White correlation normalisation.
    #[arg(long, global = true, value_enum)]
    corr_mode: Option<CorrModeArg>,

    /// Conic-martingale ρ convention.
    #[arg(long, global = true, value_enum)]
    cm_sign_convention: Option<SignArg>,

    /// Any configuration key, as KEY=VALUE. May be repeated.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CorrModeArg {
    Paper,
    Exact,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SignArg {
    Paper,
    Raw,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Conditional EPE profile f(t) on the time grid, one curve per ρ.
    Epe,
    /// CVA per ρ, next to the independent CVA.
    Cva,
    /// CVA across a list of correlations or volatilities.
    Sweep {
        #[arg(long, value_parser = ["rho", "sigma"])]
        param: Option<String>,
        /// Comma-separated values to sweep.
        #[arg(long, allow_hyphen_values = true)]
        values: Option<String>,
    },
    /// Simulated survival and wrong-way paths.
    Paths,
    /// Runs the self-checks; exits with 3 if any fails.
    Validate,
}

fn load_config(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let c = &cli.common;
    let mut raw = match &c.config {
        Some(path) => RawConfig::load(path)?,
        None => RawConfig::default(),
    };
    for o in &c.overrides {
        let (key, value) = o
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("--set expects KEY=VALUE, got `{o}`")))?;
        raw.set_flag(key.trim(), value.trim(), "--set")?;
    }
    if let Some(m) = &c.model {
        raw.set_flag("model", m, "--model")?;
    }
    if let Some(r) = &c.rho {
        raw.set_flag("model.rho", r, "--rho")?;
    }
    if let Some(s) = c.seed {
        raw.set_flag("mc.seed", &s.to_string(), "--seed")?;
    }
    if let Some(dir) = &c.out {
        let dir = dir.to_str().ok_or_else(|| ConfigError("--out must be valid UTF-8".into()))?;
        raw.set_flag("output.dir", dir, "--out")?;
    }
    if let Some(m) = c.corr_mode {
        let v = match m {
            CorrModeArg::Paper => "paper",
            CorrModeArg::Exact => "exact",
        };
        raw.set_flag("model.hw.corr_mode", v, "--corr-mode")?;
    }
    if let Some(s) = c.cm_sign_convention {
        let v = match s {
            SignArg::Paper => "paper",
            SignArg::Raw => "raw",
        };
        raw.set_flag("model.cm.sign_convention", v, "--cm-sign-convention")?;
    }
    if let Command::Sweep { param, values } = &cli.command {
        if let Some(p) = param {
            raw.set_flag("sweep.param", p, "--param")?;
        }
        if let Some(v) = values {
            raw.set_flag("sweep.values", v, "--values")?;
        }
    }
    RunConfig::from_raw(&raw)
}

fn run(cli: &Cli) -> anyhow::Result<u8> {
    let cfg = load_config(cli)?;
    match cli.command {
        Command::Epe => commands::epe(&cfg)?,
        Command::Cva => commands::cva(&cfg)?,
        Command::Sweep { .. } => commands::sweep(&cfg)?,
        Command::Paths => commands::paths(&cfg)?,
        Command::Validate => {
            if !validate::validate(&cfg)? {
                return Ok(EXIT_VALIDATION);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let numerical = e.chain().any(|c| c.downcast_ref::<wwr_core::Error>().is_some());
            ExitCode::from(if numerical { EXIT_NUMERICAL } else { EXIT_USAGE })
        }
    }
}
