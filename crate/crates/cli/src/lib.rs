//! Command-line front end: `estimate`, `simulate`, `penalty-table` and
//! `oracle`, driven by a JSON [`RunConfig`].
//!
//! Every file written carries a `#` provenance block (version, seed,
//! quadrature, κ). Exit codes: 0 success, 2 usage or input error, 3 numeric
//! failure.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::RunConfig;
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "mellin-qfe",
    version,
    about = "Quadratic functionals under multiplicative measurement error"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand. Scalar flags are shorthands for `--set`.
#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Override a config field, e.g. `--set quadrature.nodes_per_unit=32`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Mellin development point.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub replications: Option<usize>,
    /// Progress messages on stderr.
    #[arg(short, long, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

impl Common {
    pub fn load(&self) -> CliResult<RunConfig> {
        let mut overrides = self.set.clone();
        if let Some(v) = self.seed {
            overrides.push(format!("seed={v}"));
        }
        if let Some(v) = self.kappa {
            overrides.push(format!("kappa={v:e}"));
        }
        if let Some(v) = self.c {
            overrides.push(format!("c={v:e}"));
        }
        if let Some(v) = self.replications {
            overrides.push(format!("replications={v}"));
        }
        if self.verbose > 0 {
            overrides.push(format!("verbosity={}", self.verbose));
        }
        RunConfig::load(&self.config, &overrides)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the functional on a sample file and select the cut-off.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// One positive decimal per line; `#` starts a comment.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the Monte Carlo study described by the config.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Tabulate the penalty quantities over the grid.
    PenaltyTable {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sample whose size and σ̂² feed the penalty.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// True θ, θ_k, Λ(k), the MSE bound and the oracle cut-off.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k: Option<f64>,
        /// `s=VAL` (ordinary smooth) or `r=VAL` (super smooth).
        #[arg(long)]
        smooth: Option<String>,
        /// Exponent of the risk weight.
        #[arg(long)]
        a: Option<f64>,
        /// Sample size for the bound and k_*.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn smoothness_override(text: &str) -> CliResult<String> {
    let (family, value) = text
        .split_once('=')
        .ok_or_else(|| CliError::usage(format!("--smooth `{text}`: expected s=VAL or r=VAL")))?;
    let v: f64 = value
        .parse()
        .map_err(|_| CliError::usage(format!("--smooth `{text}`: `{value}` is not a number")))?;
    let json = match family.trim() {
        "s" => format!(r#"{{"family":"ordinary","s":{v:e}}}"#),
        "r" => format!(r#"{{"family":"super","r":{v:e}}}"#),
        other => return Err(CliError::usage(format!("--smooth: unknown family `{other}`"))),
    };
    Ok(format!("oracle.smoothness={json}"))
}

/// Runs a parsed command; `stdout` receives the oracle report.
pub fn execute(cli: Cli, stdout: &mut dyn Write) -> CliResult<Vec<PathBuf>> {
    match cli.command {
        Command::Estimate { common, input, out } => commands::estimate(&common.load()?, &input, out.as_deref()),
        Command::Simulate { common, out, jobs } => commands::simulate(&common.load()?, out.as_deref(), jobs),
        Command::PenaltyTable { common, out, input } => {
            commands::penalty_table(&common.load()?, out.as_deref(), input.as_deref())
        }
        Command::Oracle {
            mut common,
            k,
            smooth,
            a,
            n,
            out,
        } => {
            if let Some(k) = k {
                common.set.push(format!("oracle.k={k:e}"));
            }
            if let Some(s) = smooth {
                common.set.push(smoothness_override(&s)?);
            }
            if let Some(a) = a {
                common.set.push(format!("oracle.a={a:e}"));
            }
            if let Some(n) = n {
                common.set.push(format!("n_list=[{n}]"));
            }
            commands::oracle(&common.load()?, out.as_deref(), stdout)
        }
    }
}
