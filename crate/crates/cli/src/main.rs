//! `awva` command line: runs the configured experiments and writes CSV.
//!
//! Exit codes: 0 success, 2 invalid configuration or arguments, 3 file
//! input/output problems, 4 estimation or calibration failures (including
//! too many failed Monte Carlo trials).

use std::path::PathBuf;
use std::process::ExitCode;

use awva_core::experiments::{
    cmd_calibrate_phase, cmd_ingest, cmd_simulate, cmd_sweep_frequency, cmd_sweep_noise,
    ColumnSelection, CommandReport, ConfigFile,
};
use awva_core::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "awva",
    version,
    about = "Auto-correlative weak-value amplification simulator"
)]
struct Cli {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Override the base noise seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the number of Monte Carlo trials.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render the pulse pair, Θ(t) and the chain output for each noise level.
    Simulate,
    /// Θ amplitudes and sensitivity K over repetition frequencies and delays.
    SweepFrequency,
    /// Monte Carlo comparison of SWVA and AWVA over noise amplitudes.
    SweepNoise,
    /// Recover the chain's phase lag from simulated or recorded output.
    CalibratePhase {
        /// Recorded chain output (time column plus one value column).
        #[arg(long)]
        input: Option<PathBuf>,
        /// Value column of the recording.
        #[arg(long)]
        column: Option<String>,
        #[command(flatten)]
        time: TimeColumn,
    },
    /// Compute Θ and the chain output from a two-channel scope export.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        /// Column holding the displaced channel I1.
        #[arg(long, requires = "ch2")]
        ch1: Option<String>,
        /// Column holding the reference channel I2.
        #[arg(long, requires = "ch1")]
        ch2: Option<String>,
        #[command(flatten)]
        time: TimeColumn,
    },
    /// Print the effective configuration as TOML.
    PrintConfig,
}

#[derive(Args)]
struct TimeColumn {
    /// Time column name (default: time_s, time or t, else the first column).
    #[arg(long)]
    time_column: Option<String>,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Domain(_) | Error::Config(_) | Error::Alignment(_) => 2,
        Error::Io { .. } | Error::Parse { .. } | Error::Format { .. } => 3,
        Error::Estimation(_) | Error::Calibration(_) => 4,
    }
}

fn run(cli: Cli) -> Result<CommandReport, Error> {
    let mut file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    if let Some(workers) = cli.workers {
        file.workers = workers;
    }
    if let Command::PrintConfig = cli.command {
        let mut file = file;
        if let Some(seed) = cli.seed {
            file.base_seed = seed;
        }
        if let Some(trials) = cli.trials {
            file.trials = trials;
            file.calibrate.trials = trials;
        }
        file.resolve()?;
        print!("{}", file.to_toml());
        return Ok(CommandReport::default());
    }
    let cfg = file.resolve()?.with_overrides(cli.seed, cli.trials)?;
    let out = cli.out.as_path();
    match cli.command {
        Command::Simulate => cmd_simulate(&cfg, out),
        Command::SweepFrequency => cmd_sweep_frequency(&cfg, out),
        Command::SweepNoise => cmd_sweep_noise(&cfg, out),
        Command::CalibratePhase {
            input,
            column,
            time,
        } => {
            let selection = ColumnSelection {
                time: time.time_column,
                channels: column.into_iter().collect(),
            };
            cmd_calibrate_phase(&cfg, input.as_deref().map(|p| (p, &selection)), out)
        }
        Command::Ingest {
            input,
            ch1,
            ch2,
            time,
        } => {
            let selection = ColumnSelection {
                time: time.time_column,
                channels: ch1.into_iter().chain(ch2).collect(),
            };
            cmd_ingest(&cfg, &input, &selection, out)
        }
        Command::PrintConfig => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(report) => {
            for line in &report.summary {
                println!("{line}");
            }
            for file in &report.files {
                println!("wrote {}", file.display());
            }
            if report.failure_limit_exceeded {
                eprintln!("error: failed trials exceed the configured limit");
                ExitCode::from(4)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
