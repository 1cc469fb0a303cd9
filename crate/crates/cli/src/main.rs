mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use config::{ConfigError, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

/// Pitchfork hologram synthesis and electron vortex simulation.
///
/// Every config key can be overridden as `--section.key=value`, for example
/// `--hologram.ell=1000` or `--gouy.ells=[10,20]`.
#[derive(Debug, Parser)]
#[command(name = "vortexholo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, short)]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rasterize a hologram to PBM/PGM with a metadata sidecar and a
    /// fabricability report.
    Synth {
        #[command(flatten)]
        common: Common,
        /// Tile side for rasterization (overrides synth.tile_size).
        #[arg(long)]
        tile_size: Option<usize>,
    },
    /// Far field of an illuminated hologram: intensity image, order
    /// efficiencies and per-order OAM spectra.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Knife-edge rotation measurement over a list of charges.
    Gouy {
        #[command(flatten)]
        common: Common,
    },
    /// Invert a rotation curve to estimate the mean OAM.
    Fit {
        #[command(flatten)]
        common: Common,
    },
}

/// Split `--section.key=value` overrides from the arguments clap parses.
fn split_overrides(args: Vec<String>) -> (Vec<String>, Vec<String>) {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    for a in args {
        match a.strip_prefix("--") {
            Some(body) if body.split('=').next().is_some_and(|k| k.contains('.')) => {
                overrides.push(body.to_string())
            }
            _ => rest.push(a),
        }
    }
    (rest, overrides)
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("VORTEXHOLO_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| ConfigError(format!("VORTEXHOLO_THREADS={v:?} is not a thread count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn run(cli: Cli, overrides: &[String]) -> anyhow::Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Synth { common, tile_size } => {
            let mut cfg = RunConfig::load(common.config.as_deref(), overrides)?;
            if let Some(t) = tile_size {
                cfg.synth.tile_size = t;
            }
            commands::synth(&cfg)
        }
        Command::Simulate { common } => {
            commands::simulate(&RunConfig::load(common.config.as_deref(), overrides)?)
        }
        Command::Gouy { common } => {
            commands::gouy(&RunConfig::load(common.config.as_deref(), overrides)?)
        }
        Command::Fit { common } => {
            commands::fit(&RunConfig::load(common.config.as_deref(), overrides)?)
        }
    }
}

fn main() -> ExitCode {
    let (args, overrides) = split_overrides(std::env::args().collect());
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli, &overrides) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
