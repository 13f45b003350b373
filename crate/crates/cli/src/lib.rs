//! Survey-to-equity pipeline: simulate surveys, fit the purchase models,
//! check the fit, and turn posterior draws into CLV and CE reports.

pub mod commands;
pub mod config;
mod error;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{ArgAction, Parser, Subcommand};
use survey_clv::survey::Variant;

pub use config::{ModelKind, Overrides, RunConfig};
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "survey-clv",
    version,
    about = "Customer lifetime value and customer equity from survey data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub model: Option<ModelKind>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Mobile model variant: historical or intended.
    #[arg(long, global = true)]
    pub variant: Option<Variant>,

    #[arg(long, global = true)]
    pub chains: Option<usize>,

    /// Kept draws per chain.
    #[arg(long, global = true)]
    pub keep: Option<usize>,

    #[arg(long, global = true)]
    pub burnin: Option<usize>,

    /// Fail `fit` with exit code 4 when a diagnostic exceeds 1.1 (default).
    #[arg(long, global = true, action = ArgAction::SetTrue, overrides_with = "no_strict")]
    pub strict: bool,

    #[arg(long, global = true, action = ArgAction::SetTrue, overrides_with = "strict")]
    pub no_strict: bool,

    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Generate a population or synthetic survey and its true values.
    Simulate,
    /// Fit the configured model to the survey.
    Fit,
    /// Simulate future purchases under the draws and value them.
    Estimate,
    /// Posterior predictive checks of a mobile fit.
    Diagnose,
    /// Collect the tables in the output directory into one text report.
    Report,
}

impl Cli {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            model: self.model,
            seed: self.seed,
            variant: self.variant,
            chains: self.chains,
            keep: self.keep,
            burnin: self.burnin,
            strict: if self.strict {
                Some(true)
            } else if self.no_strict {
                Some(false)
            } else {
                None
            },
            out_dir: self.out_dir.clone(),
        }
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        config.apply(&self.overrides());
        Ok(config)
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    let config = cli.run_config()?;
    let written = match cli.command {
        Command::Simulate => commands::simulate(&config)?,
        Command::Fit => commands::fit(&config)?,
        Command::Estimate => commands::estimate(&config)?,
        Command::Diagnose => commands::diagnose(&config)?,
        Command::Report => commands::report(&config)?,
    };
    for path in written {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
