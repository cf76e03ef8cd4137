//! Experiment harness behind the `billiard` binary.

pub mod config;
pub mod output;
pub mod run;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{parse_config, ConfigError, ConfigIssue, ExperimentConfig, Format, IssueKind};
pub use run::{run, Command, RunError, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "billiard", version, about = "Induced maps, cell statistics and correlation decay for planar billiards")]
pub struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true, env = "BILLIARD_CONFIG")]
    pub config: Option<PathBuf>,
    /// Overrides `sampling.seed`.
    #[arg(long, global = true, env = "BILLIARD_SEED")]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, env = "BILLIARD_WORKERS")]
    pub workers: Option<usize>,
    /// Overrides `output.dir`.
    #[arg(long, global = true, env = "BILLIARD_OUT")]
    pub out: Option<PathBuf>,
    /// Overrides `output.format`.
    #[arg(long, global = true, value_enum, env = "BILLIARD_FORMAT")]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Table checks.
    Table {
        #[command(subcommand)]
        action: TableAction,
    },
    /// Collision sequence of one orbit.
    Orbit,
    /// Cell measures, tails and diameters.
    Cells,
    /// Correlation function of two induced observables.
    Corr,
    /// Expansion, radius and cell-exponent proxies.
    Diag,
    /// Refit a `corr` or `levels` CSV.
    Fit,
}

#[derive(Debug, Subcommand)]
pub enum TableAction {
    /// Build the configured table and print its components and junctions.
    Validate,
}

impl Sub {
    pub fn command(&self) -> Command {
        match self {
            Sub::Table { .. } => Command::TableValidate,
            Sub::Orbit => Command::Orbit,
            Sub::Cells => Command::Cells,
            Sub::Corr => Command::Corr,
            Sub::Diag => Command::Diag,
            Sub::Fit => Command::Fit,
        }
    }
}

/// Config from `--config` (or defaults) with the command-line overrides.
pub fn load_config(cli: &Cli) -> Result<ExperimentConfig, ConfigError> {
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| {
            ConfigError::single(IssueKind::Parse, "", format!("cannot read {}: {e}", path.display()))
        })?,
        None => String::new(),
    };
    let mut config = parse_config(&text)?;
    if let Some(seed) = cli.seed {
        config.sampling.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output.dir = out.clone();
    }
    if let Some(format) = cli.format {
        config.output.format = format;
    }
    Ok(config)
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let config = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return 2;
        }
    };
    match run(cli.command.command(), &config, cli.workers.unwrap_or(0)) {
        Ok(m) => {
            for f in &m.files {
                eprintln!("wrote {} ({} bytes, sha256 {})", config.output.dir.join(&f.name).display(), f.bytes, f.sha256);
            }
            0
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
