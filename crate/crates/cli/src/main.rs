//! `recat`: construct a weakly-supervised training set for research-field
//! classification, remap it across taxonomy releases, train and evaluate
//! a linear classifier, and emit reports.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use recat_core::pipeline::{
    cmd_evaluate, cmd_ingest, cmd_label, cmd_predict, cmd_remap, cmd_report, cmd_train,
    PipelineConfig, PipelineError, ReportKind, RunDir, Strategy,
};

#[derive(Parser)]
#[command(
    name = "recat",
    about = "Weak-supervision pipeline for hierarchical research-field classification",
    version
)]
struct Cli {
    /// Path to the key=value pipeline configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Run directory (defaults to runs/<timestamp>-<confighash> under the
    /// current directory, or $RECAT_RUN_ROOT when set).
    #[arg(long, global = true)]
    run_dir: Option<PathBuf>,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Drop candidates the cluster filter could not rule on (default:
    /// retain them, flagged).
    #[arg(long, global = true)]
    drop_unfiltered: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Grants,
    Journals,
    Contributed,
}

impl From<StrategyArg> for Strategy {
    fn from(value: StrategyArg) -> Strategy {
        match value {
            StrategyArg::Grants => Strategy::Grants,
            StrategyArg::Journals => Strategy::Journals,
            StrategyArg::Contributed => Strategy::Contributed,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportArg {
    Coverage,
    Distribution,
    Transition,
    JournalList,
}

impl From<ReportArg> for ReportKind {
    fn from(value: ReportArg) -> ReportKind {
        match value {
            ReportArg::Coverage => ReportKind::Coverage,
            ReportArg::Distribution => ReportKind::Distribution,
            ReportArg::Transition => ReportKind::Transition,
            ReportArg::JournalList => ReportKind::JournalList,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Ingest the configured corpus files into the run's store.
    Ingest,
    /// Generate weak labels (grants, journal titles, contributed data)
    /// and run the cluster filter.
    Label {
        /// Restrict to specific strategies (default: all).
        #[arg(long = "strategy", value_enum)]
        strategies: Vec<StrategyArg>,
    },
    /// Move 2008-scheme labels onto the 2020 scheme.
    Remap,
    /// Build features, shape the dataset, and train the classifier.
    Train,
    /// Classify a JSONL file of documents (keys: id, title, abstract).
    Predict { input: PathBuf },
    /// Cross-validate the classifier on the shaped training set.
    Evaluate,
    /// Emit a report family from the run's label artifacts.
    Report {
        #[arg(value_enum)]
        which: ReportArg,
    },
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let config_path = cli
        .config
        .ok_or_else(|| PipelineError::ConfigInvalid("--config is required".to_string()))?;
    let mut config = PipelineConfig::load(&config_path)?;
    if let Some(seed) = cli.seed {
        config = config.with_seed(seed);
    }
    if cli.drop_unfiltered {
        config = config.with_drop_unfiltered();
    }
    let run_dir = match cli.run_dir {
        Some(path) => RunDir::open(path)?,
        None => {
            let base = std::env::var_os("RECAT_RUN_ROOT")
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("."));
            RunDir::for_config(&base, &config)?
        }
    };
    log::info!("run directory: {}", run_dir.root().display());

    match cli.command {
        Command::Ingest => cmd_ingest(&config, &run_dir),
        Command::Label { strategies } => {
            let selected: Vec<Strategy> = if strategies.is_empty() {
                Strategy::ALL.to_vec()
            } else {
                strategies.into_iter().map(Strategy::from).collect()
            };
            cmd_label(&config, &run_dir, &selected)
        }
        Command::Remap => cmd_remap(&config, &run_dir),
        Command::Train => cmd_train(&config, &run_dir),
        Command::Predict { input } => cmd_predict(&config, &run_dir, &input),
        Command::Evaluate => cmd_evaluate(&config, &run_dir),
        Command::Report { which } => cmd_report(&config, &run_dir, which.into()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            // Machine-readable error report on stderr.
            let report = serde_json::json!({
                "error": error.to_string(),
                "kind": error.kind(),
            });
            eprintln!("{report}");
            ExitCode::FAILURE
        }
    }
}
