//! Library side of the `qmm` binary: argument lowering, config resolution
//! and the subcommand bodies.

// `!(x > 0.0)` is the NaN-rejecting form used throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;

use clap::Parser;

pub use config::RunConfig;
pub use error::CliError;

/// Outcome of argument parsing that is not a run.
pub enum Parsed {
    Run(Box<args::Cli>),
    /// Help or version text, printed verbatim with exit code 0.
    Display(String),
}

pub fn parse_args(argv: impl IntoIterator<Item = OsString>) -> Result<Parsed, CliError> {
    match args::Cli::try_parse_from(argv) {
        Ok(cli) => Ok(Parsed::Run(Box::new(cli))),
        Err(e) => match e.kind() {
            clap::error::ErrorKind::DisplayHelp
            | clap::error::ErrorKind::DisplayVersion
            | clap::error::ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                Ok(Parsed::Display(e.to_string()))
            }
            _ => {
                let text = e.to_string();
                let first = text
                    .lines()
                    .find(|l| !l.trim().is_empty())
                    .unwrap_or("invalid arguments")
                    .trim_start_matches("error: ")
                    .to_string();
                Err(CliError::usage(first))
            }
        },
    }
}

/// Resolve the config and run; returns the stdout text.
pub fn execute(cli: &args::Cli, env_seed: Option<&str>) -> Result<String, CliError> {
    let file = match &cli.config {
        Some(p) => Some(
            std::fs::read_to_string(p)
                .map_err(|e| CliError::config(format!("cannot read {}: {e}", p.display())))?,
        ),
        None => None,
    };
    let mut cfg = RunConfig::resolve(
        cli.command.name(),
        file.as_deref(),
        cli.flag_table()?,
        env_seed,
    )?;
    if let Some(w) = cfg.workers {
        // A pool already installed in this process keeps its size.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global();
    }
    commands::run(&mut cfg)
}
