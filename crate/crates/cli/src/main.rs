//! `lyricsense`: curate, explore, embed, train, benchmark, evaluate, predict and serve.

mod commands;
mod config;
mod failure;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lyricsense_core::corpus::Task;

use crate::config::{Overrides, PipelineConfig};
use crate::failure::Failure;

#[derive(Debug, Parser)]
#[command(name = "lyricsense", version, about = "Lyric genre, success and release-year pipeline")]
struct Cli {
    /// Pipeline configuration file (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Root seed for every stochastic step; overrides the config file.
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,
    /// Output directory for this command; each command has its own default.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Raw corpus CSV; the bundled 500-row synthetic corpus is used when absent.
    #[arg(long, global = true, value_name = "PATH")]
    corpus: Option<PathBuf>,
    /// More log output (-v debug, -vv trace); RUST_LOG takes precedence.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TaskArg {
    Genre,
    Success,
    Year,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Genre => Task::Genre,
            TaskArg::Success => Task::Success,
            TaskArg::Year => Task::Year,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a randomly initialised DistilBERT-layout checkpoint to MODEL_DIR/encoder.
    InitCheckpoint,
    /// Write a synthetic corpus CSV with planted genre, era and popularity signals.
    SynthCorpus {
        /// Number of songs.
        #[arg(long, default_value_t = 500)]
        rows: usize,
    },
    /// Filter, balance and split the corpus for one task.
    Curate {
        /// Target task.
        #[arg(long, value_enum)]
        task: TaskArg,
    },
    /// Genre counts, top words, lengths and sentiment tables.
    Eda {
        /// Words listed per genre.
        #[arg(long, default_value_t = 20)]
        top_k: usize,
    },
    /// Mean-pooled embeddings for a curated dataset, cached under DATA_DIR/cache.
    Embed {
        /// Dataset to embed.
        #[arg(long, value_enum)]
        task: TaskArg,
    },
    /// Fine-tune the genre classifier.
    TrainGenre {
        /// Override the configured epoch count.
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Fine-tune the success classifier.
    TrainSuccess {
        /// Override the configured epoch count.
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Fit the release-year regressor on cached embeddings.
    TrainYear {
        /// Regressor kind, e.g. svr_linear or random_forest.
        #[arg(long)]
        regressor: Option<String>,
    },
    /// Compare every configured regressor on the year dataset.
    BenchmarkYear,
    /// Score a trained model on the test split.
    Evaluate {
        /// Model to evaluate.
        #[arg(long, value_enum)]
        task: TaskArg,
    },
    /// Predict genre, success, year and sentiment for one lyric.
    Predict {
        /// File holding the lyrics.
        #[arg(long, value_name = "PATH", conflicts_with = "lyrics")]
        lyrics_file: Option<PathBuf>,
        /// Lyrics given inline.
        #[arg(long, required_unless_present = "lyrics_file")]
        lyrics: Option<String>,
        /// Base URL of a running server; predictions run in-process when absent.
        #[arg(long, value_name = "URL")]
        server: Option<String>,
    },
    /// Run the HTTP inference service.
    Serve {
        /// Listen port; PORT overrides the config file, this flag overrides both.
        #[arg(long)]
        port: Option<u16>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::InitCheckpoint => "init-checkpoint",
            Command::SynthCorpus { .. } => "synth-corpus",
            Command::Curate { .. } => "curate",
            Command::Eda { .. } => "eda",
            Command::Embed { .. } => "embed",
            Command::TrainGenre { .. } => "train-genre",
            Command::TrainSuccess { .. } => "train-success",
            Command::TrainYear { .. } => "train-year",
            Command::BenchmarkYear => "benchmark-year",
            Command::Evaluate { .. } => "evaluate",
            Command::Predict { .. } => "predict",
            Command::Serve { .. } => "serve",
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let overrides = Overrides {
        seed: cli.seed,
        corpus: cli.corpus.clone(),
    };
    let cfg = PipelineConfig::load(cli.config.as_deref(), &overrides)?;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::InitCheckpoint => commands::init_checkpoint(&cfg, out),
        Command::SynthCorpus { rows } => commands::synth_corpus(&cfg, *rows, out),
        Command::Curate { task } => commands::curate_cmd(&cfg, (*task).into(), out),
        Command::Eda { top_k } => commands::eda(&cfg, out, *top_k),
        Command::Embed { task } => commands::embed(&cfg, (*task).into(), out),
        Command::TrainGenre { epochs } => commands::train_classifier_cmd(&cfg, Task::Genre, *epochs, out),
        Command::TrainSuccess { epochs } => commands::train_classifier_cmd(&cfg, Task::Success, *epochs, out),
        Command::TrainYear { regressor } => commands::train_year(&cfg, regressor.as_deref(), out),
        Command::BenchmarkYear => commands::benchmark_year(&cfg, out),
        Command::Evaluate { task } => commands::evaluate(&cfg, (*task).into(), out),
        Command::Predict {
            lyrics_file,
            lyrics,
            server,
        } => {
            let text = match (lyrics_file, lyrics) {
                (Some(p), _) => std::fs::read_to_string(p)
                    .map_err(|e| Failure::new("io", format!("{}: {e}", p.display())))?,
                (None, Some(t)) => t.clone(),
                (None, None) => unreachable!("clap requires one of --lyrics-file and --lyrics"),
            };
            commands::predict(&cfg, &text, server.as_deref(), out)
        }
        Command::Serve { port } => commands::serve(&cfg, *port),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "info",
        1 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.to_line(cli.command.name()));
            ExitCode::from(1)
        }
    }
}
