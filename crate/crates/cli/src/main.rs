use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mlnd_cli::commands::{self, CoverageArgs, Emitted, SweepArgs};
use mlnd_cli::config::RunConfig;
use mlnd_cli::error::CliError;
use mlnd_core::harness::SweepVariable;

/// Simulate multilayer detector counts and estimate absorption, intensity and wavelength.
///
/// Exit codes: 0 success, 2 input error, 3 I/O error, 4 estimation error.
#[derive(Parser)]
#[command(name = "mlnd", version)]
struct Cli {
    /// Seed for simulation; overrides the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the result to this file instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Emit JSON instead of CSV from simulate, coverage and sweep.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate per-layer counts; writes a CSV with one row per run.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Number of runs; defaults to the config's `n`.
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Maximum likelihood estimate of absorption and intensity from a counts CSV.
    Estimate {
        counts: PathBuf,
        /// Exposure time per run, seconds.
        #[arg(long, default_value_t = 1.0)]
        t: f64,
    },
    /// Wavelength estimate and confidence interval from a counts CSV.
    Wavelength {
        counts: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Monte Carlo coverage of the wavelength interval.
    Coverage {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Treat chi as exact: drop the systematic term from the interval.
        #[arg(long)]
        chi_fixed: bool,
    },
    /// Mean error terms over a grid of layers, intensities or run counts.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        variable: Variable,
        /// Comma-separated values, or an inclusive integer range `a..b`.
        #[arg(long)]
        grid: String,
        #[arg(long)]
        replicates: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Variable {
    Layers,
    Intensity,
    Runs,
}

impl From<Variable> for SweepVariable {
    fn from(v: Variable) -> Self {
        match v {
            Variable::Layers => SweepVariable::Layers,
            Variable::Intensity => SweepVariable::Intensity,
            Variable::Runs => SweepVariable::Runs,
        }
    }
}

fn run(cli: &Cli) -> Result<Emitted, CliError> {
    let seed = |config: &RunConfig| cli.seed.unwrap_or(config.seed);
    match &cli.command {
        Command::Simulate { config, runs } => {
            let config = RunConfig::load(config)?;
            commands::simulate(&config, seed(&config), *runs, cli.json)
        }
        Command::Estimate { counts, t } => commands::estimate(counts, *t),
        Command::Wavelength {
            counts,
            config,
            alpha,
        } => commands::wavelength(counts, &RunConfig::load(config)?, *alpha),
        Command::Coverage {
            config,
            replicates,
            alpha,
            chi_fixed,
        } => {
            let config = RunConfig::load(config)?;
            let args = CoverageArgs {
                seed: seed(&config),
                replicates: *replicates,
                alpha: *alpha,
                chi_fixed: *chi_fixed,
                as_json: cli.json,
            };
            commands::coverage(&config, &args)
        }
        Command::Sweep {
            config,
            variable,
            grid,
            replicates,
        } => {
            let config = RunConfig::load(config)?;
            let args = SweepArgs {
                seed: seed(&config),
                variable: (*variable).into(),
                grid,
                replicates: *replicates,
                as_json: cli.json,
            };
            commands::sweep(&config, &args)
        }
    }
}

fn emit(out: Option<&Path>, body: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, body).map_err(|e| CliError::io(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(body)
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Io(format!("stdout: {e}")))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|emitted| {
        emit(cli.out.as_deref(), &emitted.body)?;
        emitted.error.map_or(Ok(()), Err)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("mlnd: {err}");
            err.exit_code()
        }
    }
}
