use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hybridsim::commands::{self, VerifyOptions, DEFAULT_LEVELS};
use hybridsim::CliError;

/// Hybrid quantum-classical dynamics on the coherent-state manifold.
#[derive(Parser)]
#[command(name = "hybridsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and write a CSV.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-check the reduced model against the full composite space.
    Verify {
        config: PathBuf,
        #[arg(long, default_value_t = DEFAULT_LEVELS)]
        levels: usize,
        /// Negate the first coupling in the full-space layer only.
        #[arg(long, hide = true)]
        debug_flip_coupling: bool,
    },
    /// Demonstrate that brackets of expectation observables are not quadratic.
    BracketDemo {
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Evolve a sampled density along characteristics.
    Ensemble {
        config: PathBuf,
        density: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("HYBRIDSIM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Validation(format!(
            "HYBRIDSIM_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Validation(e.to_string()))
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match cli.command {
        Command::Run { config, out } => commands::run(&config, out.as_deref()),
        Command::Verify {
            config,
            levels,
            debug_flip_coupling,
        } => {
            let report = commands::verify(
                &config,
                VerifyOptions {
                    levels,
                    flip_coupling: debug_flip_coupling,
                },
            )?;
            print!("{report}");
            Ok(())
        }
        Command::BracketDemo { seed } => {
            print!("{}", commands::bracket_demo(seed)?);
            Ok(())
        }
        Command::Ensemble {
            config,
            density,
            n,
            seed,
            out,
        } => commands::ensemble(&config, &density, n, seed, out.as_deref()),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hybridsim: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
