//! `uc-screen`: dataset generation, training, screening and evaluation for
//! unit-commitment line-constraint screening.

mod commands;
mod config;
mod manifest;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};

use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "uc-screen", version, about = "Line-constraint screening for unit commitment")]
pub struct Cli {
    /// JSON config file; command-line flags override its values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Network case utilities
    Case {
        #[command(subcommand)]
        action: CaseAction,
    },
    /// Sample loads from a region and record optimal costs and binding lines
    Datagen(RunConfig),
    /// Fit the cost model to a dataset
    Train(RunConfig),
    /// Upper-bound the learned cost over a load region
    PgaBound(RunConfig),
    /// Screen line constraints for one load or a load region
    Screen(RunConfig),
    /// Solve the unit-commitment problem, optionally reduced by a screening report
    Solve(RunConfig),
    /// Run every screening method over the ranges of an experiment spec
    Eval(RunConfig),
    /// Print a metrics CSV as a table
    Report(RunConfig),
}

#[derive(Debug, Subcommand)]
pub enum CaseAction {
    /// Check a case file and print its size
    Validate { path: PathBuf },
}

/// Errors caused by the invocation rather than by a computation.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use uc_screen_core::Error as E;
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Parse(_)
                | E::Validation(_)
                | E::Disconnected
                | E::Dimension { .. }
                | E::Index { .. }
                | E::ContextMismatch(_)
                | E::EmptyRegion(_)
                | E::EmptyDataset
                | E::InsufficientData { .. }
                | E::Config(_) => 1,
                _ => 2,
            };
        }
    }
    2
}

fn configure_threads() {
    let Ok(value) = std::env::var("UC_SCREEN_THREADS") else {
        return;
    };
    match value.parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("could not size thread pool: {e}");
            }
        }
        _ => log::warn!("ignoring UC_SCREEN_THREADS={value:?}: expected a positive integer"),
    }
}

/// Print the help of the subcommand named in `args`, falling back to the top level.
fn print_subcommand_help(args: &[OsString]) {
    let mut target = Cli::command();
    target.build();
    let names: Vec<String> = args.iter().skip(1).filter_map(|a| a.to_str().map(str::to_owned)).collect();
    for name in &names {
        match target.find_subcommand(name) {
            Some(sub) => target = sub.clone(),
            None if name.starts_with('-') => continue,
            None => break,
        }
    }
    let _ = writeln!(std::io::stderr(), "{}", target.render_help());
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args: Vec<OsString> = std::env::args_os().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = writeln!(std::io::stderr(), "{}", e.render());
            print_subcommand_help(&args);
            return ExitCode::from(1);
        }
    };
    configure_threads();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
