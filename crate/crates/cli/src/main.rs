mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "itercode", version, about = "Iterative example-based code generation harness")]
struct Cli {
    /// Log progress (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every task file and probe its reference programs.
    Validate {
        #[arg(long, default_value = "corpus")]
        corpus: PathBuf,
        /// Sampled inputs per reference.
        #[arg(long, default_value_t = 100)]
        probes: usize,
    },
    /// Sample the example pools for a corpus and write them as JSON.
    Sample {
        #[command(flatten)]
        settings: Settings,
        /// Destination file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a synthesizer over the corpus.
    Run {
        #[command(flatten)]
        settings: Settings,
        /// Directory holding run directories.
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        /// Resume (or create) this run id instead of minting a new one.
        #[arg(long)]
        run_id: Option<String>,
        /// Use pools written by `sample` instead of sampling.
        #[arg(long)]
        pools: Option<PathBuf>,
        /// Also write the report with input-matching attempts counted as failures.
        #[arg(long)]
        filter_input_matching: bool,
    },
    /// Recompute the report of a run from its ledger.
    Report {
        run_dir: PathBuf,
        /// Corpus to categorize against (defaults to the run's corpus).
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// A natural-language run supplying difficulty labels.
        #[arg(long)]
        nl_run: Option<PathBuf>,
        #[arg(long)]
        filter_input_matching: bool,
        /// Fail on corrupt ledger lines instead of skipping them.
        #[arg(long)]
        strict: bool,
    },
    /// Re-execute recorded candidates and check every verdict reproduces.
    Replay {
        run_dir: PathBuf,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long = "task")]
        task_id: Option<String>,
        #[arg(long = "set")]
        set_index: Option<usize>,
        #[arg(long)]
        attempt: Option<usize>,
    },
}

/// Options shared by `sample` and `run`; flags override the config file.
#[derive(Args)]
struct Settings {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "corpus")]
    corpus: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    noe: Option<usize>,
    /// examples or natural_language.
    #[arg(long)]
    mode: Option<String>,
    /// perfect, input-matching, scripted, enumerative or chat.
    #[arg(long)]
    synthesizer: Option<String>,
    /// Fixture file for the scripted synthesizer.
    #[arg(long)]
    fixture: Option<PathBuf>,
    #[arg(long)]
    profile: Option<String>,
    /// Parallel executions (default: logical cores).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    keep_artifacts: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match commands::dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
