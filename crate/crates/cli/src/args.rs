use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "topicrate", version, about = "Topic models for rating mature content in narrative text")]
pub struct Cli {
    /// Progress messages on stderr; repeat for more.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Tokenize and filter a JSON-lines corpus into a corpus file.
    Preprocess(PreprocessArgs),
    /// Train an LDA model on a corpus file.
    TrainLda(TrainLdaArgs),
    /// Train a partially-labeled LDA model on a labeled corpus file.
    TrainPlda(TrainPldaArgs),
    /// Training and held-out perplexity for a list of topic counts.
    Perplexity(PerplexityArgs),
    /// Predict rating labels for documents with a trained PLDA model.
    Classify(ClassifyArgs),
    /// PLDA hyperparameter grid search over min-doc, n-bg and n-label.
    GridSearch(GridSearchArgs),
    /// Fit per-category rating regressors on inferred topic proportions.
    Regress(RegressArgs),
    /// Fleiss' kappa and pairwise Pearson correlation of annotators.
    Agreement(AgreementArgs),
    /// Generate a synthetic corpus with planted topics.
    Synth(SynthArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Consensus {
    Median,
    Union,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SamplerArgs {
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.01)]
    pub beta: f64,
    #[arg(long, default_value_t = 1000)]
    pub iters: usize,
    #[arg(long, default_value_t = 200)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Average estimates over post-burn-in sweeps spaced this far apart
    /// instead of reading them off the final state.
    #[arg(long)]
    pub thin: Option<usize>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct InferArgs {
    /// Fold-in sweeps per held-out document.
    #[arg(long, default_value_t = 50)]
    pub infer_iters: usize,
    #[arg(long, default_value_t = 10)]
    pub infer_burn_in: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct LabelArgs {
    /// Annotation CSV (doc_id,category,r1,r2,r3). Without it, ratings are
    /// read from the documents themselves.
    #[arg(long)]
    pub annotations_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Consensus::Median)]
    pub consensus: Consensus,
    /// Give every document the `appropriate` label, not only unflagged ones.
    #[arg(long)]
    pub appropriate_on_all: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PreprocessArgs {
    /// JSON-lines documents.
    #[arg(long)]
    pub input: PathBuf,
    /// Corpus file to write.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 15)]
    pub min_doc_freq: usize,
    #[arg(long, default_value_t = 20)]
    pub min_doc_len: usize,
    /// Keep documents that fail the English stopword-ratio check.
    #[arg(long)]
    pub no_language_filter: bool,
    /// Stopword list, one token per line (default: bundled English list).
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    #[command(flatten)]
    pub labels: LabelArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct TrainLdaArgs {
    /// Corpus file from `preprocess`.
    #[arg(long)]
    pub input: PathBuf,
    /// Model file; a `.gz` suffix writes it gzip-compressed.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub k: usize,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    /// Also write the training documents' θ as CSV.
    #[arg(long)]
    pub theta_output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct TrainPldaArgs {
    /// Labeled corpus file from `preprocess`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub n_label: usize,
    #[arg(long, default_value_t = 10)]
    pub n_bg: usize,
    /// Ordered label list, one per line (default: appropriate plus
    /// category:level for levels 2-4).
    #[arg(long)]
    pub labels_file: Option<PathBuf>,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    #[arg(long)]
    pub theta_output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PerplexityArgs {
    /// Corpus file from `preprocess`.
    #[arg(long)]
    pub input: PathBuf,
    /// CSV of k,train_perplexity,heldout_perplexity.
    #[arg(long)]
    pub output: PathBuf,
    /// Topic counts to evaluate, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub k: Vec<usize>,
    /// Held-out JSON-lines documents, encoded with the corpus vocabulary.
    /// Without it every n-th corpus document is held out.
    #[arg(long)]
    pub heldout: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub heldout_every: usize,
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    #[command(flatten)]
    pub infer: InferArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ClassifyArgs {
    /// PLDA model file.
    #[arg(long)]
    pub model: PathBuf,
    /// JSON-lines documents to classify.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long, default_value_t = 0.05)]
    pub threshold: f64,
    /// Divide label masses by the non-background mass before thresholding.
    #[arg(long)]
    pub renormalize: bool,
    #[arg(long, default_value_t = 1)]
    pub min_doc_len: usize,
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub infer: InferArgs,
    /// Also score predictions against gold labels derived from ratings.
    #[arg(long)]
    pub metrics_output: Option<PathBuf>,
    #[command(flatten)]
    pub labels: LabelArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GridSearchArgs {
    /// Training JSON-lines documents.
    #[arg(long)]
    pub input: PathBuf,
    /// Test JSON-lines documents.
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1, 5, 10, 15])]
    pub grid_min_doc: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0, 1, 5, 10])]
    pub grid_n_bg: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1, 5, 10])]
    pub grid_n_label: Vec<usize>,
    #[arg(long)]
    pub labels_file: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub min_doc_len: usize,
    #[arg(long)]
    pub no_language_filter: bool,
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    pub threshold: f64,
    #[arg(long)]
    pub renormalize: bool,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    #[command(flatten)]
    pub infer: InferArgs,
    #[command(flatten)]
    pub labels: LabelArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct RegressArgs {
    /// Topic model file (LDA or PLDA).
    #[arg(long)]
    pub model: PathBuf,
    /// Training JSON-lines documents.
    #[arg(long)]
    pub input: PathBuf,
    /// Evaluation JSON-lines documents (default: the training documents).
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Directory for errors.csv and one regressor file per category.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub l2: f64,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 0.05)]
    pub decay: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub min_doc_len: usize,
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    #[arg(long)]
    pub annotations_file: Option<PathBuf>,
    #[command(flatten)]
    pub infer: InferArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct AgreementArgs {
    /// Annotation CSV (doc_id,category,r1,r2,r3).
    #[arg(long, required_unless_present = "input")]
    pub annotations_file: Option<PathBuf>,
    /// JSON-lines documents carrying inline ratings.
    #[arg(long, conflicts_with = "annotations_file")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SynthArgs {
    /// JSON-lines corpus to write; planted truth goes beside it.
    #[arg(long)]
    pub output: PathBuf,
    /// Planted topic count (ignored with --labeled).
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 100)]
    pub vocab_size: usize,
    /// Document count, or documents per label with --labeled.
    #[arg(long, default_value_t = 500)]
    pub docs: usize,
    #[arg(long, default_value_t = 100)]
    pub doc_len: usize,
    /// Draw lengths uniformly from doc-len..=doc-len-max.
    #[arg(long)]
    pub doc_len_max: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    /// Share of each topic's mass on its own block of words.
    #[arg(long, default_value_t = 0.9)]
    pub in_block: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Plant one group of topics per rating label plus background topics,
    /// and emit matching ratings.
    #[arg(long)]
    pub labeled: bool,
    #[arg(long, default_value_t = 5)]
    pub n_label: usize,
    #[arg(long, default_value_t = 1)]
    pub n_bg: usize,
}
