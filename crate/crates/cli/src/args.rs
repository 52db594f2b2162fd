use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use structseq::corpus::Split;
use structseq::LossKind;

#[derive(Debug, Parser)]
#[command(name = "structseq", version, about = "Structured scoring of label sequences over lattices")]
pub struct Cli {
    /// Flat `key=value` file of flag defaults; command-line flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus directory.
    GenData(GenDataArgs),
    /// Train a linear, structured DNN or full-scale model.
    Train(TrainArgs),
    /// Build beam lattices for every split with a linear model.
    Lattice(LatticeArgs),
    /// Write one hypothesis per utterance of a split.
    Decode(DecodeArgs),
    /// Phone error rate of hypotheses, and the score-versus-accuracy export.
    Eval(EvalArgs),
    /// Train a full-scale model per (layers, width) cell and write a PER grid.
    Sweep(SweepArgs),
    /// Finite-difference checks of every analytic gradient.
    Gradcheck(GradcheckArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Linear,
    Sdnn,
    Fsdnn,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    ApproxAcc,
    MaxMargin,
}

impl From<LossArg> for LossKind {
    fn from(l: LossArg) -> Self {
        match l {
            LossArg::ApproxAcc => LossKind::ApproxAccuracy,
            LossArg::MaxMargin => LossKind::MaxMargin,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Dev,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Dev => Split::Dev,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Alphabet size K.
    #[arg(long, default_value_t = 6)]
    pub size: usize,
    /// Raw frame dimension.
    #[arg(long, default_value_t = 8)]
    pub dim: usize,
    #[arg(long, default_value_t = 200)]
    pub utterances: usize,
    /// Gaussian components per phone; 1 gives plain Gaussian emissions.
    #[arg(long, default_value_t = 2)]
    pub components: usize,
    #[arg(long, default_value_t = 0.5)]
    pub variance: f64,
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    /// Corpus directory written by `gen-data`.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Lattice directory; defaults to `<corpus>/lattices`.
    #[arg(long)]
    pub lattices: Option<PathBuf>,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Training log CSV; defaults to `<out>.log.csv`.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Continue from a saved model; the log is appended.
    #[arg(long)]
    pub init: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = LossArg::MaxMargin)]
    pub loss: LossArg,
    /// Hidden layers of the scorer.
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    /// Units per hidden layer of the scorer.
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    /// Learning rate; 4e-6 for neural models and 0.01 for linear by default.
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub l2: f64,
    /// Negatives drawn per source per utterance.
    #[arg(long, default_value_t = 1)]
    pub n_neg: usize,
    /// N-best depth for dev rescoring.
    #[arg(long, default_value_t = 10)]
    pub n_best: usize,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    /// Utterances per update; 8 for linear and 1 otherwise by default.
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Hinge weight C of the linear objective.
    #[arg(long, default_value_t = 1.0)]
    pub cost: f64,
    /// Front-end learning rate for joint training; a tenth of `--lr` by default.
    #[arg(long)]
    pub frontend_lr: Option<f64>,
    /// Hidden width of a freshly pre-trained front end.
    #[arg(long, default_value_t = 32)]
    pub frontend_width: usize,
    #[arg(long, default_value_t = 8)]
    pub frontend_epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct LatticeArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Linear model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Labels kept per frame.
    #[arg(long, default_value_t = 3)]
    pub beam: usize,
    /// Output directory; defaults to `<corpus>/lattices`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    pub split: SplitArg,
    #[arg(long)]
    pub lattices: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub n_best: usize,
    /// Hypothesis file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Hypothesis file, one utterance per line.
    #[arg(long)]
    pub hyps: PathBuf,
    /// Reference file in the same format; otherwise taken from `--corpus`.
    #[arg(long)]
    pub refs: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    pub split: SplitArg,
    /// Write `utterance_id,path_rank,score,accuracy` rows for the N-best lists.
    #[arg(long)]
    pub scores_csv: Option<PathBuf>,
    /// Model scoring the N-best lists for `--scores-csv`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub lattices: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub n_best: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Hidden-layer counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    pub layers: Vec<usize>,
    /// Hidden widths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "16,32,64")]
    pub width: Vec<usize>,
    /// Output directory for cell files and `grid.csv`.
    #[arg(long)]
    pub out: PathBuf,
    /// Compute only this `L:M` cell and skip assembling the grid.
    #[arg(long)]
    pub cell: Option<String>,
    #[arg(long, default_value_t = 6)]
    pub size: usize,
    #[arg(long, default_value_t = 8)]
    pub dim: usize,
    #[arg(long, default_value_t = 200)]
    pub utterances: usize,
    #[arg(long, default_value_t = 2024)]
    pub corpus_seed: u64,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Random configurations per check.
    #[arg(long, default_value_t = 20)]
    pub configs: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Use a wrong sigmoid derivative in the analytic pass.
    #[arg(long)]
    pub broken_derivative: bool,
}
