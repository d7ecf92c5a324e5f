//! `langbeam`: synthetic data generation, LiD training, decoding, sweeps,
//! analysis and beam traces.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on invalid input or
//! configuration.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use langbeam_core::analysis::SweepAxis;
use langbeam_core::Engine;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] langbeam_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_user_error() => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "langbeam", version, about = "Language-informed beam search experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for sentence and LiD parallelism (default: all cores).
    #[arg(long, env = "LIBS_WORKERS", global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Data directory (family, corpora, test set, models).
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    /// Output directory for reports.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct DecodeFlags {
    #[arg(long)]
    beam: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    length_penalty: Option<f64>,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    target_lang: Option<String>,
    #[arg(long)]
    source_lang: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a language family, LiD corpora, a test set and a surrogate spec.
    GenData {
        #[command(flatten)]
        common: Common,
    },
    /// Train the language identifier and report held-out accuracy.
    TrainLid {
        #[command(flatten)]
        common: Common,
        /// Training corpus (`lang<TAB>text`).
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Held-out corpus (`lang<TAB>text`).
        #[arg(long)]
        heldout: Option<PathBuf>,
    },
    /// Decode the test set and summarize BLEU and off-target rates.
    Decode {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: DecodeFlags,
        #[arg(long, default_value = "libs")]
        engine: Engine,
    },
    /// Sweep beam size or alpha over the test set.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: DecodeFlags,
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated beam sizes or alpha values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Engine for beam sweeps; alpha sweeps always use libs.
        #[arg(long, default_value = "baseline")]
        engine: Engine,
    },
    /// Score a decode JSONL file against the test set.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        decoded: PathBuf,
    },
    /// Record beam traces for one test sentence at several beam sizes.
    Trace {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: DecodeFlags,
        #[arg(long)]
        index: usize,
        #[arg(long, default_value = "baseline")]
        engine: Engine,
        #[arg(long, value_delimiter = ',', default_values_t = vec![5usize, 20])]
        sizes: Vec<usize>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GenData { common } => commands::gen_data(&common),
        Command::TrainLid { common, corpus, heldout } => commands::train_lid(&common, corpus, heldout),
        Command::Decode { common, flags, engine } => commands::decode(&common, &flags, engine),
        Command::Sweep {
            common,
            flags,
            axis,
            values,
            engine,
        } => commands::sweep(&common, &flags, axis, &values, engine),
        Command::Analyze { common, decoded } => commands::analyze(&common, &decoded),
        Command::Trace {
            common,
            flags,
            index,
            engine,
            sizes,
        } => commands::trace(&common, &flags, index, engine, &sizes),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code())
        }
    }
}
