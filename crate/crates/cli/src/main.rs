use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod files;

use config::{FlagOverrides, RunConfig, StrategyKind};

#[derive(Parser)]
#[command(
    name = "chordframe",
    version,
    about = "Melody harmonization pipelines on a sixteenth-note grid"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug, Default)]
struct Common {
    /// Flat TOML file of settings.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override a single setting; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a directory of MusicXML or JSON lead sheets, filter it and
    /// write native JSON plus a manifest.
    Ingest {
        #[arg(required_unless_present = "demo")]
        src_dir: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Write the bundled synthetic corpus instead of reading files.
        #[arg(long)]
        demo: bool,
        /// Pieces generated by `--demo`.
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Train on an ingested corpus directory.
    Train {
        corpus_dir: PathBuf,
        /// Weights file; the vocabulary and report are written beside it.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Generate chords for a melody.
    Harmonize {
        melody: PathBuf,
        #[arg(short, long)]
        weights: PathBuf,
        /// Chord vocabulary; defaults to the one written beside the weights.
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, value_enum)]
        strategy: Option<StrategyKind>,
        #[arg(long)]
        temperature: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the per-step decoding trace.
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Score generated lead sheets against ground truth.
    Evaluate {
        generated_dir: PathBuf,
        truth_dir: PathBuf,
        /// JSON report; a CSV table is written beside it.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn resolve(common: &Common, mut flags: FlagOverrides) -> anyhow::Result<RunConfig> {
    flags.seed = common.seed;
    RunConfig::resolve(common.config.as_deref(), &common.sets, &flags)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Ingest {
            src_dir,
            out,
            demo,
            count,
            common,
        } => {
            let cfg = resolve(&common, FlagOverrides::default())?;
            if demo {
                commands::ingest_demo(count, &out, &cfg)
            } else {
                commands::ingest(&src_dir.expect("required without --demo"), &out, &cfg)
            }
        }
        Command::Train {
            corpus_dir,
            out,
            common,
        } => {
            let cfg = resolve(&common, FlagOverrides::default())?;
            commands::train(&corpus_dir, &out, &cfg)
        }
        Command::Harmonize {
            melody,
            weights,
            vocab,
            gamma,
            strategy,
            temperature,
            out,
            trace,
            common,
        } => {
            let flags = FlagOverrides {
                gamma,
                strategy,
                temperature,
                ..Default::default()
            };
            let cfg = resolve(&common, flags)?;
            let vocab = vocab.unwrap_or_else(|| files::vocab_path(&weights));
            commands::harmonize(&melody, &weights, &vocab, &out, trace, &cfg)
        }
        Command::Evaluate {
            generated_dir,
            truth_dir,
            out,
            common,
        } => {
            let cfg = resolve(&common, FlagOverrides::default())?;
            commands::evaluate(&generated_dir, &truth_dir, &out, &cfg)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
