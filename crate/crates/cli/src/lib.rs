//! Command-line driver: reads an experiment config, runs the requested
//! computation and writes deterministic JSON/CSV artifacts.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};

use config::{paper_config, ExperimentConfig};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "darkpump",
    version,
    about = "State engineering by dark-state relaxation pulses"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment config (JSON). `reproduce-paper` falls back to the bundled one.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Overrides `optimizer.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Exit with code 3 if the optimizer misses its tolerance.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search for a pulse sequence that prepares the target state.
    Optimize,
    /// Integrate the master equation through a sequence.
    Simulate {
        /// `result.json` from `optimize`, or a bare sequence document.
        #[arg(long)]
        sequence: PathBuf,
    },
    /// Compare single-pulse dynamics with the relaxation maps.
    Verify,
    /// Bloch coordinates of the state grid after every pulse.
    BlochExport {
        #[arg(long)]
        sequence: PathBuf,
    },
    /// Eigenvalues of the generator and recommended pulse durations.
    Spectrum,
    /// Best objective against target purity and pulse count.
    SweepPurity,
    /// optimize, simulate and bloch-export on the reference target.
    ReproducePaper,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Optimize => "optimize",
            Command::Simulate { .. } => "simulate",
            Command::Verify => "verify",
            Command::BlochExport { .. } => "bloch-export",
            Command::Spectrum => "spectrum",
            Command::SweepPurity => "sweep-purity",
            Command::ReproducePaper => "reproduce-paper",
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let cfg = match (&cli.config, &cli.command) {
        (Some(p), _) => ExperimentConfig::from_path(p)?,
        (None, Command::ReproducePaper) => paper_config(),
        (None, _) => {
            return Err(CliError::Config(
                "--config is required for this command".into(),
            ))
        }
    };
    Ok(cfg.with_seed(cli.seed))
}

/// Run one command; returns the paths written, metadata file last.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let cfg = load_config(cli)?;
    let start = Instant::now();
    let out = &cli.out;
    let mut written = match &cli.command {
        Command::Optimize => commands::cmd_optimize(&cfg, out, cli.strict)?,
        Command::Simulate { sequence } => {
            commands::cmd_simulate(&cfg, &commands::load_sequence(sequence)?, out)?
        }
        Command::Verify => commands::cmd_verify(&cfg, out)?,
        Command::BlochExport { sequence } => {
            commands::cmd_bloch_export(&cfg, &commands::load_sequence(sequence)?, out)?
        }
        Command::Spectrum => commands::cmd_spectrum(&cfg, out)?,
        Command::SweepPurity => commands::cmd_sweep_purity(&cfg, out)?,
        Command::ReproducePaper => commands::cmd_reproduce(&cfg, out, cli.strict)?,
    };
    written.push(commands::write_metadata(
        out,
        cli.command.name(),
        start.elapsed().as_secs_f64(),
    )?);
    Ok(written)
}

/// Parse arguments, size the thread pool and run; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Some(k) = cli.threads {
        if k == 0 {
            eprintln!("configuration error: --threads must be at least 1");
            return 2;
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
        {
            eprintln!("warning: could not size the thread pool: {e}");
        }
    }
    match run(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
