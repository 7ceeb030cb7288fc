//! `intsel` command line: generate a corpus, train selectors, evaluate and
//! report.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
//! abort during training.

use clap::{Args, Parser, Subcommand, ValueEnum};
use intsel::config::RunConfig;
use intsel::nn::CellKind;
use intsel::pipeline::{cmd_eval, cmd_generate, cmd_report, cmd_train, PipelineError};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "intsel", version, about = "Learned selection of symbolic integration sub-algorithms")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; defaults are used when absent.
    #[arg(long, global = true, env = "INTSEL_CONFIG")]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the worker thread count.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Overrides the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Replace existing artifacts instead of refusing.
    #[arg(long, global = true)]
    overwrite: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Lstm,
    Treelstm,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Generate, label, split and vocabularize the corpus.
    Generate,
    /// Train one or both selector models on the train split.
    Train {
        #[arg(long, value_enum, default_value = "both")]
        model: ModelArg,
    },
    /// Compare the trained selectors with the baseline and the oracle.
    Eval,
    /// Summarize the corpus and the latest evaluation.
    Report,
}

fn config(c: &Common) -> Result<RunConfig, PipelineError> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if c.workers.is_some() {
        cfg.workers = c.workers;
    }
    if let Some(o) = &c.out {
        cfg.out = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<String, PipelineError> {
    let cfg = config(&cli.common)?;
    let ow = cli.common.overwrite;
    match &cli.command {
        Command::Generate => cmd_generate(&cfg, ow),
        Command::Train { model } => {
            let kinds: &[CellKind] = match model {
                ModelArg::Lstm => &[CellKind::Lstm],
                ModelArg::Treelstm => &[CellKind::Treelstm],
                ModelArg::Both => &CellKind::ALL,
            };
            let mut out = String::new();
            for &k in kinds {
                out.push_str(&cmd_train(&cfg, k, ow)?);
            }
            Ok(out)
        }
        Command::Eval => cmd_eval(&cfg, ow),
        Command::Report => cmd_report(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
