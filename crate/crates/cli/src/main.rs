//! `marchenko`: phase shifts, kernel, reconstruction and isospectral
//! families for the Morse model, written as CSV and JSON tables.

mod cache;
mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::config::{PipelineConfig, S0Value};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "marchenko", version, about = "Inverse scattering for the Morse potential")]
struct Cli {
    /// JSON config; every field is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `output_dir` from the config.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    /// Overrides `workers` from the config.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Phase table, bound levels and scattering length.
    Direct,
    /// Kernel samples, tail fit, inverse check and fixture comparison.
    Kernel,
    /// Reconstruct the potential for one s0^2.
    Solve {
        /// s0^2 value or `theoretical`; overrides the config.
        #[arg(long)]
        s0_sq: Option<String>,
    },
    /// One reconstruction per s0^2 of a sweep.
    Family {
        /// s0^2 values, numbers or `theoretical`; default 0 theoretical 100.
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        s0_sq: Option<Vec<String>>,
    },
    /// Print theta(beta) with its regime.
    Theta {
        #[arg(required = true, allow_negative_numbers = true)]
        beta: Vec<f64>,
    },
}

fn parse_s0(text: &str) -> Result<S0Value, CliError> {
    serde_json::from_str(text)
        .or_else(|_| serde_json::from_str(&format!("\"{text}\"")))
        .map_err(|_| CliError::Config(format!("s0^2 must be a number or `theoretical` (got `{text}`)")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Command::Theta { beta } = &cli.command {
        for line in commands::theta_lines(beta)? {
            println!("{line}");
        }
        return Ok(());
    }
    let mut cfg = PipelineConfig::load(cli.config.as_deref())?;
    if let Some(out) = cli.out {
        cfg.output_dir = out;
    }
    if cli.workers.is_some() {
        cfg.workers = cli.workers;
    }
    match &cli.command {
        Command::Solve { s0_sq: Some(s) } => cfg.s0 = config::S0Policy::Single(parse_s0(s)?),
        Command::Family { s0_sq: Some(list) } => cfg.s0 = config::S0Policy::Sweep(list.iter().map(|s| parse_s0(s)).collect::<Result<Vec<_>, _>>()?),
        _ => {}
    }
    cfg.validate()?;
    if let Some(n) = cfg.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    }

    let start = Instant::now();
    let (name, outputs) = match cli.command {
        Command::Direct => ("direct", commands::direct(&cfg)?),
        Command::Kernel => ("kernel", commands::kernel(&cfg)?),
        Command::Solve { .. } => ("solve", commands::solve(&cfg)?),
        Command::Family { .. } => ("family", commands::family(&cfg)?),
        Command::Theta { .. } => unreachable!("handled above"),
    };
    let files = outputs.names().join(", ");
    outputs.write_all(&cfg.output_dir)?;
    eprintln!(
        "{name}: wrote {files} to {} in {:.1} s",
        cfg.output_dir.display(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
