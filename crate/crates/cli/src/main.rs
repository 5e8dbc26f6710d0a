mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use dialectkit::analysis::{Linkage, Metric};
use dialectkit::lintext::{Loss, Preset, FORMAT_VERSION};
use serde_json::{json, Value};

use config::RunConfig;

/// A configuration or input problem detected before any work is done (exit code 1).
#[derive(Debug)]
pub struct Invalid(pub String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

#[derive(Parser, Debug)]
#[command(name = "dialectkit", about = "Dialect corpus construction, n-gram text classifiers and dialect analysis")]
struct Cli {
    /// Run configuration (TOML). Flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for per-record stages.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for every stochastic stage.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Normalize text, one input line per output line.
    Normalize(NormalizeArgs),
    /// Build the MSA/DA corpus from relative-pronoun triggers.
    Weaklabel(WeaklabelArgs),
    /// Train a linear text classifier.
    Train(TrainArgs),
    /// Run the user filter cascade and assemble the per-country corpus.
    Filter(FilterArgs),
    /// Valence vectors and distinctive words per group.
    Valence(ValenceArgs),
    /// Agglomerative clustering of valence columns.
    Cluster(ClusterArgs),
    /// Evaluate a model on a labeled TSV.
    Eval(EvalArgs),
    /// Synthetic corpora.
    Fixture {
        #[command(subcommand)]
        action: FixtureAction,
    },
}

#[derive(Args, Debug)]
pub struct NormalizeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Replace relative pronouns with RELATIVE.
    #[arg(long)]
    pub mask_pronouns: bool,
    #[arg(long)]
    pub keep_mentions: bool,
    #[arg(long)]
    pub keep_urls: bool,
    #[arg(long)]
    pub keep_digits: bool,
    #[arg(long)]
    pub keep_emoji: bool,
    #[arg(long)]
    pub keep_newlines: bool,
    #[arg(long)]
    pub keep_hashtags: bool,
}

#[derive(Args, Debug)]
pub struct WeaklabelArgs {
    #[arg(long)]
    pub tweets: Option<PathBuf>,
    /// Labeled corpus (TSV label, text). Defaults to `<output_dir>/weak.tsv`.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Downsample the majority class to 1:1.
    #[arg(long)]
    pub balance: bool,
    /// Records per class reserved for testing.
    #[arg(long)]
    pub holdout_per_class: Option<usize>,
    /// Held-out records. Defaults to `<output_dir>/weak.test.tsv`.
    #[arg(long)]
    pub holdout_output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PresetArg {
    #[value(name = "msa-da")]
    MsaDa,
    C37,
    Cw26,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::MsaDa => Preset::MsaDa,
            PresetArg::C37 => Preset::C37,
            PresetArg::Cw26 => Preset::Cw26,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum LossArg {
    Softmax,
    Hinge,
}

impl From<LossArg> for Loss {
    fn from(l: LossArg) -> Self {
        match l {
            LossArg::Softmax => Loss::Softmax,
            LossArg::Hinge => Loss::Hinge,
        }
    }
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Training TSV: label in the first column, text in the last.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<PresetArg>,
    /// Defaults to `<output_dir>/<preset>.qdlm`.
    #[arg(long)]
    pub model_out: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<u32>,
    #[arg(long)]
    pub learning_rate: Option<f32>,
    #[arg(long, value_enum)]
    pub loss: Option<LossArg>,
    #[arg(long)]
    pub l2: Option<f32>,
    #[arg(long)]
    pub lr_decay: Option<bool>,
    #[arg(long)]
    pub embed_dim: Option<u32>,
    #[arg(long)]
    pub hash_buckets: Option<u32>,
}

#[derive(Args, Debug)]
pub struct FilterArgs {
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    #[arg(long)]
    pub tweets: Option<PathBuf>,
    /// Gazetteer TSV; the shipped table when omitted.
    #[arg(long)]
    pub gazetteer: Option<PathBuf>,
    /// MSA/DA model (softmax head).
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub obscene: Option<PathBuf>,
    /// Receives verdicts.jsonl, corpus.tsv, stats.json and counts.json.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub n_per_country: Option<usize>,
    #[arg(long)]
    pub dialectal_threshold: Option<f64>,
    #[arg(long)]
    pub vulgar_threshold: Option<f64>,
    #[arg(long)]
    pub min_confidence: Option<f64>,
}

#[derive(Args, Debug)]
pub struct ValenceArgs {
    /// Per-country corpus TSV (country, user, text).
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// MSA/DA corpus TSV; its MSA rows form the MSA group.
    #[arg(long)]
    pub msa_corpus: Option<PathBuf>,
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Defaults to `<output_dir>/valence.csv`.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Highest-valence words per group as JSON.
    #[arg(long)]
    pub top_words_output: Option<PathBuf>,
    #[arg(long)]
    pub top_words: Option<usize>,
    #[arg(long)]
    pub min_count: Option<u64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum LinkageArg {
    Average,
    Complete,
    Single,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum MetricArg {
    Cosine,
    Euclidean,
}

impl From<LinkageArg> for Linkage {
    fn from(l: LinkageArg) -> Self {
        match l {
            LinkageArg::Average => Linkage::Average,
            LinkageArg::Complete => Linkage::Complete,
            LinkageArg::Single => Linkage::Single,
        }
    }
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Cosine => Metric::Cosine,
            MetricArg::Euclidean => Metric::Euclidean,
        }
    }
}

#[derive(Args, Debug)]
pub struct ClusterArgs {
    /// Valence CSV. Defaults to `<output_dir>/valence.csv`.
    #[arg(long)]
    pub valence: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub linkage: Option<LinkageArg>,
    #[arg(long, value_enum)]
    pub metric: Option<MetricArg>,
    /// Output prefix; writes `<prefix>.nwk` and `<prefix>.json`.
    /// Defaults to `<output_dir>/dendrogram`.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Test TSV: gold label in the first column, text in the last.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// JSON object mapping labels to region names.
    #[arg(long)]
    pub regions: Option<PathBuf>,
    /// Defaults to `<output_dir>/eval.json`; the confusion matrix goes
    /// next to it as `<stem>.confusion.csv`.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub bin_width: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FixtureKind {
    /// Two-register MSA/DA corpus (label, text TSV).
    Variant,
    /// Multi-class corpus with planted word-pair markers (label, text TSV).
    Dialect,
    /// Profiles, tweets and obscene list for the filter cascade (directory).
    Cascade,
}

#[derive(Subcommand, Debug)]
enum FixtureAction {
    Generate(FixtureArgs),
}

#[derive(Args, Debug)]
pub struct FixtureArgs {
    #[arg(long, value_enum)]
    pub kind: FixtureKind,
    /// TSV file, or directory for `cascade`.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub docs: Option<usize>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub docs_per_class: Option<usize>,
    #[arg(long)]
    pub tokens_per_doc: Option<usize>,
    #[arg(long)]
    pub marker_rate: Option<f64>,
    /// Class k gets docs_per_class * (1 - skew)^k documents.
    #[arg(long)]
    pub skew: Option<f64>,
}

fn version_string() -> String {
    format!("{} (model format {FORMAT_VERSION})", env!("CARGO_PKG_VERSION"))
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Normalize(_) => "normalize",
        Command::Weaklabel(_) => "weaklabel",
        Command::Train(_) => "train",
        Command::Filter(_) => "filter",
        Command::Valence(_) => "valence",
        Command::Cluster(_) => "cluster",
        Command::Eval(_) => "eval",
        Command::Fixture { .. } => "fixture",
    }
}

fn run(cli: Cli) -> anyhow::Result<Value> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    if cfg.jobs == 0 {
        return Err(Invalid("`jobs` must be at least 1".into()).into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build_global().ok();
    match cli.command {
        Command::Normalize(a) => commands::normalize(&cfg, a),
        Command::Weaklabel(a) => commands::weaklabel(&cfg, a),
        Command::Train(a) => commands::train(&cfg, a),
        Command::Filter(a) => commands::filter(&cfg, a),
        Command::Valence(a) => commands::valence(&cfg, a),
        Command::Cluster(a) => commands::cluster(&cfg, a),
        Command::Eval(a) => commands::eval(&cfg, a),
        Command::Fixture { action: FixtureAction::Generate(a) } => commands::fixture(&cfg, a),
    }
}

fn main() -> ExitCode {
    let version = version_string();
    let matches = match Cli::command().version(version).try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let name = command_name(&cli.command);
    match run(cli) {
        Ok(mut summary) => {
            let obj = summary.as_object_mut().expect("summaries are objects");
            obj.insert("command".into(), json!(name));
            obj.insert("status".into(), json!("ok"));
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            let code: u8 = if err.chain().any(|e| e.is::<Invalid>()) { 1 } else { 2 };
            eprintln!("error: {err:#}");
            println!(
                "{}",
                json!({"command": name, "status": "error", "exit_code": code, "error": format!("{err:#}")})
            );
            ExitCode::from(code)
        }
    }
}
