//! `navmap`: ingest maps, generate datasets, train and evaluate predictors.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};
use navmap_core::geo::FrameRegistry;

use crate::config::FileConfig;
use crate::error::{CliError, Code, Result};

#[derive(Debug, Parser)]
#[command(name = "navmap", version, about = "Trajectory prediction with navigation maps")]
struct Cli {
    /// Seed for every random choice of the command.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (1 is the reproducibility reference).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// TOML config file; flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// TOML file with extra `[[frame]]` definitions.
    #[arg(long, global = true)]
    frames: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a road graph from OpenStreetMap XML.
    Ingest(commands::ingest::Args),
    /// Generate a synthetic world and scenes.
    Gen(commands::gen::Args),
    /// Train a predictor, optionally distilled from a teacher.
    Train(commands::train::Args),
    /// Evaluate a checkpoint on a dataset split.
    Eval(commands::eval::Args),
    /// List road segments near a point.
    Query(commands::query::Args),
    /// Tabulate metric files side by side.
    Report(commands::report::Args),
}

/// Settings shared by every command.
pub struct Context {
    /// `--seed`, else the config file seed.
    pub seed: Option<u64>,
    pub file: FileConfig,
    pub frames: FrameRegistry,
}

fn init_threads(n: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::new(Code::Config, format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<()> {
    let file = FileConfig::load(cli.config.as_deref())?;
    if let Some(n) = cli.threads.or(file.threads) {
        if n == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        init_threads(n)?;
    }
    let frames = match cli.frames.as_ref().or(file.frames.as_ref()) {
        Some(p) => FrameRegistry::load(p)?,
        None => FrameRegistry::default(),
    };
    let ctx = Context {
        seed: cli.seed.or(file.seed),
        file,
        frames,
    };
    match cli.command {
        Command::Ingest(a) => commands::ingest::run(&ctx, a),
        Command::Gen(a) => commands::gen::run(&ctx, a),
        Command::Train(a) => commands::train::run(&ctx, a),
        Command::Eval(a) => commands::eval::run(&ctx, a),
        Command::Query(a) => commands::query::run(&ctx, a),
        Command::Report(a) => commands::report::run(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("{}", CliError::usage(first));
            return ExitCode::from(Code::Usage.exit_code() as u8);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code.exit_code() as u8)
        }
    }
}
