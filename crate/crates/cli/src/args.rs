use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use lexind::active::Strategy;
use lexind::candidates::{CandidateMode, SamplerConfig};
use lexind::corpus::CorpusFormat;
use lexind::learner::{HeuristicWeights, LearnerConfig};
use lexind::synth::GenConfig;

/// Learn a semantic lexicon from sentences paired with tree-structured
/// meanings, and run the synthetic and active-learning experiments.
#[derive(Parser, Debug)]
#[command(name = "lexind", version)]
pub struct Cli {
    /// File of `key=value` lines supplying flags of the subcommand; flags
    /// given on the command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads; defaults to the available parallelism. Outputs do
    /// not depend on it.
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,

    /// Print progress to stderr (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Learn a lexicon from a corpus.
    #[command(args_override_self = true)]
    Learn(LearnCmd),
    /// Generate a synthetic gold lexicon and corpus.
    #[command(args_override_self = true)]
    Gen(GenCmd),
    /// Score a learned lexicon against a gold lexicon.
    #[command(args_override_self = true)]
    Eval(EvalCmd),
    /// Learning curve over increasing training-set sizes.
    #[command(args_override_self = true)]
    Curve(CurveCmd),
    /// Selective sampling against random selection.
    #[command(args_override_self = true)]
    Active(ActiveCmd),
    /// Number of interpretation functions for P phrases and N vertices.
    #[command(name = "count-interp", args_override_self = true)]
    CountInterp(CountInterpCmd),
    /// Largest common connected sub-forests of two terms.
    #[command(args_override_self = true)]
    Lics(LicsCmd),
}

#[derive(Args, Debug)]
pub struct CorpusArgs {
    #[arg(long, value_name = "PATH")]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = CorpusFormat::PairedLines)]
    pub format: CorpusFormat,
    /// Remove an outer `answer(_, ...)` wrapper from every meaning.
    #[arg(long)]
    pub strip_answer: bool,
    /// Background lexicon (`phrase TAB term` lines).
    #[arg(long, value_name = "PATH")]
    pub background: Option<PathBuf>,
    /// Phrases with empty meaning, one per line.
    #[arg(long, value_name = "PATH")]
    pub stoplist: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct LearnerArgs {
    #[arg(long, default_value_t = 2)]
    pub max_phrase_len: usize,
    #[arg(long, default_value_t = CandidateMode::Lics)]
    pub candidate_mode: CandidateMode,
    #[arg(long, default_value_t = 20)]
    pub pairs_per_phrase: usize,
    #[arg(long, default_value_t = 200_000)]
    pub fracture_cap: u128,
    #[arg(long, default_value_t = 10.0)]
    pub w_fit: f64,
    #[arg(long, default_value_t = 1.0)]
    pub w_gen: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl LearnerArgs {
    pub fn config(&self) -> LearnerConfig {
        LearnerConfig {
            max_phrase_len: self.max_phrase_len,
            sampler: SamplerConfig {
                pairs_per_phrase: self.pairs_per_phrase,
                seed: self.seed,
                mode: self.candidate_mode,
                fracture_cap: self.fracture_cap,
            },
            weights: HeuristicWeights {
                w_fit: self.w_fit,
                w_gen: self.w_gen,
            },
        }
    }
}

#[derive(Args, Debug)]
pub struct LearnCmd {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub learner: LearnerArgs,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct GenCmd {
    #[arg(long, default_value_t = 100)]
    pub n_words: usize,
    #[arg(long, default_value_t = 25)]
    pub n_symbols: usize,
    #[arg(long, default_value_t = 1.0)]
    pub ambiguity: f64,
    #[arg(long, default_value_t = 1.0)]
    pub synonymy: f64,
    #[arg(long, default_value_t = 0.475)]
    pub noun_frac: f64,
    #[arg(long, default_value_t = 0.475)]
    pub verb_frac: f64,
    #[arg(long, default_value_t = 0.05)]
    pub empty_frac: f64,
    #[arg(long, default_value_t = 2)]
    pub max_depth: usize,
    #[arg(long, default_value_t = 2)]
    pub max_arity: usize,
    #[arg(long, default_value_t = 3)]
    pub max_vars: usize,
    #[arg(long, default_value_t = 1.0)]
    pub zipf_exponent: f64,
    #[arg(long, default_value_t = 1949)]
    pub n_examples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = CorpusFormat::PairedLines)]
    pub format: CorpusFormat,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

impl GenCmd {
    pub fn config(&self) -> GenConfig {
        GenConfig {
            n_words: self.n_words,
            n_symbols: self.n_symbols,
            ambiguity: self.ambiguity,
            synonymy: self.synonymy,
            noun_frac: self.noun_frac,
            verb_frac: self.verb_frac,
            empty_frac: self.empty_frac,
            max_depth: self.max_depth,
            max_arity: self.max_arity,
            max_vars: self.max_vars,
            zipf_exponent: self.zipf_exponent,
            seed: self.seed,
        }
    }
}

#[derive(Args, Debug)]
pub struct GoldArgs {
    /// Gold lexicon (`phrase TAB term` lines). Without one, precision and
    /// recall read zero and only coverage and lexicon size are meaningful.
    #[arg(long, value_name = "PATH")]
    pub gold: Option<PathBuf>,
    /// Phrase frequencies (`phrase TAB count` lines); counted from the
    /// corpus when absent.
    #[arg(long, value_name = "PATH")]
    pub freq: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalCmd {
    #[arg(long, value_name = "PATH")]
    pub learned: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub gold: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub freq: PathBuf,
    /// Also write `report.tsv` here.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CurveCmd {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub gold: GoldArgs,
    #[command(flatten)]
    pub learner: LearnerArgs,
    /// Comma-separated training-set sizes; every hundred examples when absent.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum StrategyArg {
    Active,
    Random,
    Both,
}

impl StrategyArg {
    pub fn strategies(self) -> Vec<Strategy> {
        match self {
            StrategyArg::Active => vec![Strategy::Active],
            StrategyArg::Random => vec![Strategy::Random],
            StrategyArg::Both => vec![Strategy::Active, Strategy::Random],
        }
    }
}

#[derive(Args, Debug)]
pub struct ActiveCmd {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub gold: GoldArgs,
    #[command(flatten)]
    pub learner: LearnerArgs,
    #[arg(long, value_enum, default_value_t = StrategyArg::Both)]
    pub strategy: StrategyArg,
    /// Examples annotated before the first round.
    #[arg(long, default_value_t = 25)]
    pub bootstrap: usize,
    /// Examples annotated per round.
    #[arg(long, default_value_t = 10)]
    pub batch: usize,
    #[arg(long, default_value_t = 20)]
    pub rounds: usize,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CountInterpCmd {
    /// Number of phrases.
    pub phrases: u64,
    /// Number of vertices.
    pub vertices: u64,
}

#[derive(Args, Debug)]
pub struct LicsCmd {
    pub first: String,
    pub second: String,
}
