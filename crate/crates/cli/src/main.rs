//! `cocoa` command-line entry point.

mod config;
mod evaluate;
mod generate;
mod inspect;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{FileConfig, Overrides};

#[derive(Parser)]
#[command(
    name = "cocoa",
    about = "Divergence-aware decoding with middle-layer disagreement re-ranking",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate continuations for a JSONL prompt file
    Generate {
        /// TOML run configuration
        #[arg(long)]
        config: PathBuf,
        /// Penalty weight for the disagreement term
        #[arg(long)]
        alpha: Option<f64>,
        /// Divergence threshold in (0, 1]
        #[arg(long)]
        gamma: Option<f64>,
        /// Disagreement metric: conmlds | fmlds
        #[arg(long)]
        mode: Option<String>,
        /// Self-information gating: on | off
        #[arg(long)]
        gating: Option<String>,
        /// Middle-layer window: auto | M:N
        #[arg(long)]
        layers: Option<String>,
        /// Maximum candidate span length
        #[arg(long)]
        max_span_len: Option<usize>,
        /// Candidate cap per divergence point
        #[arg(long)]
        max_candidates: Option<usize>,
        /// What to commit at a divergence point: span | token
        #[arg(long)]
        commit: Option<String>,
        /// Prompt JSONL ({"id","prompt":[int,...]})
        #[arg(long)]
        input: Option<PathBuf>,
        /// Output JSONL path
        #[arg(long)]
        output: Option<PathBuf>,
        /// Divergence trace JSONL path
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Parallel samples
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Compute metrics from prediction and reference files
    Evaluate {
        /// Task family
        #[arg(long, value_enum)]
        task: evaluate::Task,
        /// Predictions JSONL
        #[arg(long)]
        pred: PathBuf,
        /// References JSONL
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Also write the metrics object to this path
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize a divergence trace
    Inspect {
        /// Trace JSONL produced by generate
        #[arg(long)]
        trace: PathBuf,
        /// Also write the table as CSV
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Generate {
            config,
            alpha,
            gamma,
            mode,
            gating,
            layers,
            max_span_len,
            max_candidates,
            commit,
            input,
            output,
            trace,
            workers,
        } => {
            let file = FileConfig::load(&config)?;
            let overrides = Overrides {
                alpha,
                gamma,
                mode,
                gating,
                layers,
                max_span_len,
                max_candidates,
                commit,
                input,
                output,
                trace,
                workers,
            };
            let run_config = config::resolve(file, overrides)?;
            generate::run(&run_config)
        }
        Command::Evaluate {
            task,
            pred,
            reference,
            out,
        } => evaluate::run(task, &pred, &reference, out.as_ref()),
        Command::Inspect { trace, csv } => inspect::run(&trace, csv.as_ref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
