//! Command-line driver: ingest, train, eval, baseline and analyze.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{RunConfig, SplitSide, TaskArg};
use error::Outcome;

#[derive(Parser)]
#[command(name = "sleepstack", version, about = "Single-channel EEG sleep staging toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse EDF recordings into an epoch store with a class-count summary.
    Ingest(Flags),
    /// Train the residual network on the training side of a split.
    Train(Flags),
    /// Evaluate a checkpoint on one side of a split.
    Eval(Flags),
    /// Train and evaluate the filter-bank feature and bagged tree baseline.
    Baseline(Flags),
    /// Compare band features between the SC and ST subsets.
    Analyze(Flags),
}

impl Command {
    fn split(self) -> (&'static str, Flags) {
        match self {
            Command::Ingest(f) => ("ingest", f),
            Command::Train(f) => ("train", f),
            Command::Eval(f) => ("eval", f),
            Command::Baseline(f) => ("baseline", f),
            Command::Analyze(f) => ("analyze", f),
        }
    }
}

#[derive(clap::Args)]
struct Flags {
    /// Directory holding the PSG and hypnogram files.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Split manifest (JSON with task, train_recordings, test_recordings).
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Epoch store written by `ingest`.
    #[arg(long)]
    store: Option<PathBuf>,
    /// Network checkpoint written by `train`.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Number of sleep stages, 5 (S3 and S4 merged) or 6.
    #[arg(long)]
    scheme: Option<usize>,
    /// Expected task of the manifest.
    #[arg(long, value_enum)]
    task: Option<TaskArg>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all processors).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON run config; flags override it and it overrides SLEEPSTACK_* variables.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Build the model and print its parameter report without training.
    #[arg(long)]
    dry_run: bool,
    /// EEG channel label.
    #[arg(long)]
    channel: Option<String>,
    /// Side of the split to evaluate (default: test).
    #[arg(long, value_enum)]
    split: Option<SplitSide>,
    /// Override the number of training epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Override the mini-batch size.
    #[arg(long)]
    batch_size: Option<usize>,
}

fn resolve(command: &str, flags: Flags) -> Outcome<RunConfig> {
    let from_flags = RunConfig {
        command: Some(command.to_string()),
        data_dir: flags.data_dir,
        manifest: flags.manifest,
        store: flags.store,
        checkpoint: flags.checkpoint,
        scheme: flags.scheme,
        task: flags.task,
        seed: flags.seed,
        threads: flags.threads,
        out: flags.out,
        channel: flags.channel,
        split: flags.split,
        dry_run: flags.dry_run.then_some(true),
        train: None,
    };
    let from_file = match &flags.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(other) = from_file.command.as_deref().filter(|c| *c != command) {
        return Err(error::usage_error(format!("config was written by `{other}`, not `{command}`")));
    }
    let mut cfg = from_flags.or(from_file).or(RunConfig::from_env(std::env::vars())?);
    if let Some(train) = cfg.train.as_mut().filter(|_| flags.epochs.is_some() || flags.batch_size.is_some()) {
        train.num_epochs = flags.epochs.unwrap_or(train.num_epochs);
        train.batch_size = flags.batch_size.unwrap_or(train.batch_size);
    } else if flags.epochs.is_some() || flags.batch_size.is_some() {
        let mut train = sleepstack::train::TrainConfig::default();
        train.num_epochs = flags.epochs.unwrap_or(train.num_epochs);
        train.batch_size = flags.batch_size.unwrap_or(train.batch_size);
        cfg.train = Some(train);
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let (command, flags) = Cli::parse().command.split();
    let outcome = resolve(command, flags).and_then(|cfg| {
        if let Some(n) = cfg.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| error::usage_error(format!("--threads {n}: {e}")))?;
        }
        commands::run(command, cfg)
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.kind as u8)
        }
    }
}
