//! `weaksup`: weak labeling, noise-channel training and learning curves.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or format error,
//! 3 every reseeded run of a curve cell was degenerate.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use weaksup::corpus::{SplitUnit, Task};

#[derive(Parser, Debug)]
#[command(
    name = "weaksup",
    version,
    about = "Distant supervision and noisy-label learning toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TaskArg {
    Ner,
    Topic,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Task {
        match t {
            TaskArg::Ner => Task::Ner,
            TaskArg::Topic => Task::Topic,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum UnitArg {
    Sentence,
    Token,
}

impl From<UnitArg> for SplitUnit {
    fn from(u: UnitArg) -> SplitUnit {
        match u {
            UnitArg::Sentence => SplitUnit::Sentence,
            UnitArg::Token => SplitUnit::Token,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args, Debug)]
struct TaskFlag {
    /// Task of the input files (CoNLL for ner, TSV for topic).
    #[arg(long, value_enum)]
    task: TaskArg,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Partition a corpus into train, dev and test files.
    Split {
        #[command(flatten)]
        task: TaskFlag,
        #[arg(long)]
        input: PathBuf,
        /// Train, dev and test fractions.
        #[arg(
            long,
            default_value = "0.7,0.1,0.2",
            value_delimiter = ',',
            num_args = 3
        )]
        ratios: Vec<f64>,
        #[arg(long, value_enum, default_value = "sentence")]
        unit: UnitArg,
        /// Shuffle sentences with --seed before splitting.
        #[arg(long)]
        shuffle: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory for train/dev/test files.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write rule-based weak labels for a corpus.
    Annotate {
        #[command(flatten)]
        task: TaskFlag,
        #[arg(long)]
        input: PathBuf,
        /// INI rule file.
        #[arg(long)]
        rules: PathBuf,
        /// Topic classes whose dictionaries are required (defaults to the
        /// classes found in the input).
        #[arg(long, value_delimiter = ',')]
        classes: Vec<String>,
        /// Tie-breaking seed for topic rules (overrides the rule file).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score weak labels against gold labels.
    EvalRules {
        #[command(flatten)]
        task: TaskFlag,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        weak: PathBuf,
        /// Also write a metrics CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Estimate a clean-to-weak confusion matrix from aligned files.
    EstimateCm {
        #[command(flatten)]
        task: TaskFlag,
        #[arg(long)]
        clean: PathBuf,
        #[arg(long)]
        weak: PathBuf,
        /// Smoothing exponent in (0, 1]; no smoothing when omitted.
        #[arg(long)]
        beta: Option<f64>,
        /// Leave the O row of NER matrices as identity.
        #[arg(long)]
        exclude_o: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one model on clean (and optionally weakly labeled) data.
    Train {
        #[command(flatten)]
        task: TaskFlag,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        dev: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        /// Weakly labeled sentences.
        #[arg(long)]
        noisy: Option<PathBuf>,
        /// Confusion matrix for the noisy data.
        #[arg(long)]
        cm: Option<PathBuf>,
        /// Use noisy labels directly instead of through a channel.
        #[arg(long, conflicts_with = "cm")]
        noisy_as_clean: bool,
        #[arg(long, default_value_t = 50)]
        epochs: usize,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long, default_value_t = 1)]
        batch_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-epoch history CSV.
        #[arg(long)]
        history: Option<PathBuf>,
        /// Model checkpoint.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a checkpoint on a labeled file.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Setting name for the CSV rows.
        #[arg(long, default_value = "model")]
        setting: String,
        /// Seed value for the CSV rows.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sweep a training-size ladder over settings and seeds.
    Curve {
        /// INI experiment file.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        epochs: Option<usize>,
        /// Comma-separated ladder, e.g. 10,20,50,full.
        #[arg(long)]
        sizes: Option<String>,
        #[arg(long, value_enum)]
        dev_downsize: Option<Switch>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// Directory for runs.csv and summary.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
