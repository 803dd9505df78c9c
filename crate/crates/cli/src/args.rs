use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "nbdoc", version, about = "Documentation suggestions for computational notebooks")]
pub struct Cli {
    /// Print one JSON object on stdout instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Log progress to stderr (RUST_LOG overrides).
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP suggestion service.
    Serve(ServeArgs),
    /// Insert one generated markdown cell per code cell.
    Annotate(AnnotateArgs),
    /// Train the summarization model on extracted pairs.
    Train(TrainArgs),
    /// Score BLEU-a for a model's test split or for two token files.
    Eval(EvalArgs),
    /// Per-notebook cell and word counts with corpus medians.
    Stats(CorpusArgs),
    /// Pull (code, documentation) training pairs out of notebooks.
    ExtractPairs(CorpusArgs),
    /// Knowledge-base maintenance.
    Kb {
        #[command(subcommand)]
        command: KbCommand,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Approach {
    Deep,
    Query,
    Prompt,
    All,
}

impl Approach {
    pub fn needs_model(self) -> bool {
        matches!(self, Approach::Deep | Approach::All)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Approach::Deep => "deep",
            Approach::Query => "query",
            Approach::Prompt => "prompt",
            Approach::All => "all",
        }
    }
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// TOML or JSON service config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub kb: Option<PathBuf>,
    /// Directory notebooks are read from and saved to.
    #[arg(long)]
    pub root: Option<PathBuf>,
    #[arg(long)]
    pub port: Option<u16>,
    #[arg(long)]
    pub host: Option<String>,
}

#[derive(Debug, Args)]
pub struct AnnotateArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub approach: Approach,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Allow `--out` to name the input file.
    #[arg(long)]
    pub overwrite: bool,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// KB in JSONL form; the bundled seed KB otherwise.
    #[arg(long)]
    pub kb: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Pairs in JSONL form, as written by `extract-pairs`.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value = "model.nbds")]
    pub out: PathBuf,
    /// Training report path; `<out>.report.json` by default.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 30)]
    pub batch: usize,
    #[arg(long, default_value_t = 15)]
    pub patience: usize,
    /// Seeds the split, the initialization and the batch order.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub grad_clip: Option<f64>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub hops: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Split seed; must match the one used for training.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Score every pair of the corpus rather than the test split.
    #[arg(long)]
    pub all: bool,
    /// One whitespace-tokenized sentence per line.
    #[arg(long)]
    pub candidates: Option<PathBuf>,
    #[arg(long)]
    pub references: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Directory searched recursively for `.ipynb` files.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Log and skip notebooks that fail to parse.
    #[arg(long)]
    pub skip_invalid: bool,
}

#[derive(Debug, Subcommand)]
pub enum KbCommand {
    /// Check a JSONL KB for malformed records and duplicate keys.
    Validate { path: PathBuf },
    /// Convert a `library,qualified_name,description` CSV to JSONL.
    Build(KbBuildArgs),
}

#[derive(Debug, Args)]
pub struct KbBuildArgs {
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Existing KB whose entries come first.
    #[arg(long)]
    pub base: Option<PathBuf>,
}
