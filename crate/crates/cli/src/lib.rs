//! Configuration parsing and the run driver behind the `mpskit` binary.

pub mod config;
pub mod custom;
pub mod run;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use config::parse_config;
use run::ErrorClass;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

/// Ground-state DMRG for one-dimensional lattice models.
#[derive(Parser, Debug)]
#[command(name = "mpskit", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the DMRG calculation described by a configuration file.
    Run(RunArgs),
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Run configuration (`key = value` lines).
    pub config: PathBuf,
    /// Directory for summary.txt and results.csv; overrides `output`.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Random seed; overrides `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Print one line per sweep to stderr.
    #[arg(long, short)]
    pub verbose: bool,
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with<I, A>(args: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(Cli { command: Command::Run(cli) }) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => EXIT_CONFIG,
                _ => EXIT_CONFIG,
            };
        }
    };
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", cli.config.display());
            return EXIT_CONFIG;
        }
    };
    let base = cli.config.parent().map(PathBuf::from).unwrap_or_default();
    let mut cfg = match parse_config(&text, &base) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", cli.config.display());
            return EXIT_CONFIG;
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        cfg.dmrg.lanczos.seed = seed;
    }
    let output = cli.output.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| base.join("out"));
    match run::run(&cfg, &output, cli.verbose) {
        Ok(outcome) => {
            println!("E = {}", run::fixed(outcome.energy, 9));
            println!("results: {}", outcome.results_path.display());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e.class {
                ErrorClass::Config => EXIT_CONFIG,
                ErrorClass::Runtime => EXIT_RUNTIME,
            }
        }
    }
}
