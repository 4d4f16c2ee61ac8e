//! `morphner` command-line tool.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on data errors.

mod commands;
mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "morphner", version, about = "Morphologically-aware named-entity recognition")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build morphological lattices for a token file.
    Analyze(AnalyzeArgs),
    /// Train a labeling model or a morphological disambiguator.
    Train(TrainArgs),
    /// Choose one segmentation per token.
    Disambiguate(DisambiguateArgs),
    /// Label a token or morpheme file with a trained model.
    Tag(TagArgs),
    /// Score predictions against gold mentions.
    #[command(long_about = EVALUATE_HELP)]
    Evaluate(EvaluateArgs),
    /// Count gold mentions per out-of-training-vocabulary class.
    Ootv(OotvArgs),
    /// Corpus statistics and token/morpheme consistency check.
    Validate(ValidateArgs),
    /// Write a seeded synthetic corpus and its lexicon.
    Generate(GenerateArgs),
}

const EVALUATE_HELP: &str = "Score predictions against gold mentions.

Mentions match when surface form and category agree; position is
ignored. Token-level scoring reads mentions over token forms,
morpheme-level scoring over morpheme forms. Predictions may be token
files (single or multi labels) or morpheme files; token multi-labels
scored at morpheme level are aligned to the segmentation given with
--morphemes (gold, standard or hybrid output of `disambiguate`).

Output: an aligned table (category, precision, recall, f1, gold, pred,
match), then machine-readable lines `METRIC<TAB>CATEGORY<TAB>VALUE`
with category ALL for the overall scores. With several --pred files
each is reported with a `pN.` prefix, followed by `f1_mean` and
`f1_ci95` (normal-approximation half width). With --train-tokens and
--train-morphemes a per-OOTV-class breakdown (token level) follows,
prefixed `ootv.CLASS.`.";

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Token file (`-` for stdin).
    #[arg(long)]
    pub tokens: PathBuf,
    #[arg(long)]
    pub lexicon: PathBuf,
    /// Lattice file (`-` for stdout).
    #[arg(short, long, default_value = "-")]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TrainVariant {
    TokenSingle,
    TokenMulti,
    Morpheme,
    Md,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub variant: TrainVariant,
    /// Token corpus.
    #[arg(long)]
    pub tokens: Option<PathBuf>,
    /// Morpheme corpus, parallel to --tokens when both are given.
    #[arg(long)]
    pub morphemes: Option<PathBuf>,
    /// Lexicon, required for `md`.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Dense feature table (`count dim` header).
    #[arg(long)]
    pub dense: Option<PathBuf>,
    /// `key = value` settings; flags below take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub trainer: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Model file.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Standard,
    Hybrid,
}

#[derive(Debug, Args)]
pub struct DisambiguateArgs {
    #[arg(long)]
    pub tokens: PathBuf,
    #[arg(long)]
    pub lexicon: PathBuf,
    #[arg(long)]
    pub md_model: PathBuf,
    #[arg(long, value_enum, default_value = "standard")]
    pub mode: Mode,
    /// Token-multi model; required in hybrid mode.
    #[arg(long)]
    pub ner_model: Option<PathBuf>,
    /// Morpheme file (`-` for stdout). Hybrid mode fills the label
    /// column with the aligned multi-labels.
    #[arg(short, long, default_value = "-")]
    pub output: PathBuf,
    /// Where to write the fallback report (default: stderr).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TagArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Token file, or morpheme file for morpheme models.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(short, long, default_value = "-")]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Level {
    Token,
    Morph,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Gold token file.
    #[arg(long)]
    pub gold_tokens: Option<PathBuf>,
    /// Gold morpheme file.
    #[arg(long)]
    pub gold_morphemes: Option<PathBuf>,
    /// Prediction file; repeat for runs with different seeds.
    #[arg(long, required = true)]
    pub pred: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "token")]
    pub level: Level,
    /// Segmentation that token multi-labels are aligned to.
    #[arg(long)]
    pub morphemes: Option<PathBuf>,
    /// Training token file, for the OOTV breakdown.
    #[arg(long, requires = "train_morphemes")]
    pub train_tokens: Option<PathBuf>,
    /// Training morpheme file, for the OOTV breakdown.
    #[arg(long, requires = "train_tokens")]
    pub train_morphemes: Option<PathBuf>,
    #[arg(short, long, default_value = "-")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct OotvArgs {
    #[arg(long)]
    pub tokens: PathBuf,
    #[arg(long)]
    pub morphemes: PathBuf,
    #[arg(long)]
    pub train_tokens: PathBuf,
    #[arg(long)]
    pub train_morphemes: PathBuf,
    #[arg(short, long, default_value = "-")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub tokens: PathBuf,
    #[arg(long)]
    pub morphemes: PathBuf,
    #[arg(short, long, default_value = "-")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 300)]
    pub sentences: usize,
    #[arg(long, default_value_t = 200)]
    pub train_sentences: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

/// An error in how the tool was invoked rather than in the data.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
