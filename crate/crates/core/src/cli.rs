//! Command-line entry point.
//!
//! Exit codes: 0 on success, 1 for domain errors, 2 for usage errors
//! (bad flags, unreadable or invalid configuration, missing input paths).
//! Configuration precedence is flags, then the `--config` file, then
//! built-in defaults.

use std::collections::HashSet;
use std::ffi::OsString;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::corpus::{build_vocab, load_documents, preprocess, DocumentFormat, PreprocessConfig, ProcessedCorpus, Vocabulary};
use crate::dimension::{
    classify, crossvalidate_lexicon, dim_similarity, extract, train_svm, AnchorLexicon, Extracted, Method, Pole,
    Split, SvmOptions,
};
use crate::embedding::{load_model, save_model, train, Architecture, EmbeddingModel, Loss, ModelFormat, TrainOptions, TrainingConfig};
use crate::ensemble::{
    emit_figure_data, load_keywords, load_model_projections, run_ensemble, summarize_run, write_json, EnsembleConfig,
    EnsembleSummary,
};
use crate::error::Error;
use crate::evaluation::{eval_analogy, eval_wordsim, load_analogy_file, load_wordsim, OovMode};
use crate::report::Report;
use crate::vecmath::{nearest_neighbors, Embeddings};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "wordaxes", version, about = "Word embeddings, benchmarks and semantic dimensions")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for training, subsampling, SVM and fold assignment.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Training worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Single-threaded, bit-reproducible training.
    #[arg(long, global = true)]
    pub deterministic: bool,
    /// More logging; repeat for debug output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Print errors as JSON on stderr.
    #[arg(long, global = true)]
    pub error_json: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clean a raw corpus into sentences and build the vocabulary.
    Preprocess(PreprocessArgs),
    /// Train an embedding model on a processed corpus.
    Train(TrainArgs),
    /// Score a model on analogy and word-similarity benchmarks.
    Eval(EvalArgs),
    /// Print nearest neighbors as TSV.
    Neighbors(NeighborsArgs),
    /// Extract, validate, apply and compare semantic dimensions.
    Dim {
        #[command(subcommand)]
        command: DimCommand,
    },
    /// Run the resampled-ensemble robustness protocol.
    Ensemble(EnsembleArgs),
    /// Re-aggregate an ensemble from its persisted per-model files.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// Directory of .txt files or a JSONL file.
    #[arg(long)]
    pub input: PathBuf,
    /// text-dir or jsonl; guessed from the input when omitted.
    #[arg(long, value_parser = parse_format)]
    pub format: Option<DocumentFormat>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// File with one exclusion term per line.
    #[arg(long)]
    pub exclude_terms: Option<PathBuf>,
    #[arg(long)]
    pub min_count: Option<u64>,
    #[arg(long)]
    pub no_phrases: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Processed corpus file.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Model output path.
    #[arg(long)]
    pub out: PathBuf,
    /// native, binary or text.
    #[arg(long, default_value = "native")]
    pub format: ModelFormat,
    /// Vocabulary TSV; rebuilt from the corpus when omitted.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long)]
    pub min_count: Option<u64>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    /// cbow or skipgram.
    #[arg(long, value_parser = parse_arch)]
    pub arch: Option<Architecture>,
    /// ns (negative sampling) or hs (hierarchical softmax).
    #[arg(long)]
    pub loss: Option<String>,
    #[arg(long)]
    pub negatives: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub subsample: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Report path (default: model path + .report.json).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Analogy questions in `: section` format.
    #[arg(long)]
    pub analogies: Option<PathBuf>,
    /// Word-similarity CSV with a header row.
    #[arg(long)]
    pub wordsim: Option<PathBuf>,
    /// skip or wrong.
    #[arg(long)]
    pub oov: Option<OovMode>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NeighborsArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Query words.
    pub words: Vec<String>,
    /// File with one query word per line.
    #[arg(long)]
    pub words_file: Option<PathBuf>,
    #[arg(short, long)]
    pub k: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum DimCommand {
    /// Build a dimension (or SVM classifier) from a lexicon.
    Extract(DimExtractArgs),
    /// Train/test accuracy and cross-validation for a lexicon.
    Validate(DimValidateArgs),
    /// Project words onto a saved dimension.
    Project(DimProjectArgs),
    /// Cosine between two saved dimensions.
    Similarity(DimSimilarityArgs),
}

#[derive(Debug, Args)]
pub struct DimExtractArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub lexicon: PathBuf,
    /// larsen, bolukbasi or svm.
    #[arg(long)]
    pub method: Option<Method>,
    /// Where to write the dimension JSON.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DimValidateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub lexicon: PathBuf,
    #[arg(long)]
    pub method: Option<Method>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DimProjectArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Dimension JSON written by `dim extract`.
    #[arg(long)]
    pub dim: PathBuf,
    /// File with one word per line.
    #[arg(long = "words")]
    pub words_file: Option<PathBuf>,
    /// Inline words.
    pub inline: Vec<String>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DimSimilarityArgs {
    #[arg(long)]
    pub dim_a: PathBuf,
    #[arg(long)]
    pub dim_b: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    /// TOML run manifest.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Ensemble output directory.
    #[arg(long)]
    pub dir: PathBuf,
    /// Where to write the summary and figures (default: the same directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_format(s: &str) -> Result<DocumentFormat, String> {
    match s {
        "text-dir" | "text" => Ok(DocumentFormat::TextDir),
        "jsonl" => Ok(DocumentFormat::Jsonl),
        other => Err(format!("unknown corpus format {other:?} (text-dir or jsonl)")),
    }
}

fn parse_arch(s: &str) -> Result<Architecture, String> {
    match s {
        "cbow" => Ok(Architecture::Cbow),
        "skipgram" | "skip-gram" | "sg" => Ok(Architecture::SkipGram),
        other => Err(format!("unknown architecture {other:?} (cbow or skipgram)")),
    }
}

/// Evaluation defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub oov_mode: OovMode,
    pub neighbors: usize,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings { oov_mode: OovMode::Skip, neighbors: 10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DimSettings {
    pub method: Method,
    pub folds: usize,
    pub seed: u64,
}

impl Default for DimSettings {
    fn default() -> Self {
        DimSettings { method: Method::Larsen, folds: 10, seed: 1 }
    }
}

/// Scalar ensemble settings as they appear in config files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSettings {
    pub k_models: usize,
    pub subsample_fraction: f64,
    pub base_seed: u64,
    pub min_count: u64,
    pub keyword_min_count: u64,
    pub method: Method,
    pub jobs: usize,
    pub save_models: bool,
}

impl Default for EnsembleSettings {
    fn default() -> Self {
        let d = EnsembleConfig::default();
        EnsembleSettings {
            k_models: d.k_models,
            subsample_fraction: d.subsample_fraction,
            base_seed: d.base_seed,
            min_count: d.min_count,
            keyword_min_count: d.keyword_min_count,
            method: d.method,
            jobs: d.jobs,
            save_models: d.save_models,
        }
    }
}

/// Every tunable of the pipeline.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub deterministic: bool,
    pub preprocess: PreprocessConfig,
    pub training: TrainingConfig,
    pub svm: SvmOptions,
    pub evaluation: EvalSettings,
    pub dimension: DimSettings,
    pub ensemble: EnsembleSettings,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    fn apply_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.training.seed = seed;
        self.svm.seed = seed;
        self.dimension.seed = seed;
        self.ensemble.base_seed = seed;
    }
}

/// One ensemble run: inputs plus optional overrides of the run config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub corpus: PathBuf,
    pub lexicons: Vec<PathBuf>,
    pub keywords: Option<PathBuf>,
    pub ensemble: Option<EnsembleSettings>,
    pub training: Option<TrainingConfig>,
    pub svm: Option<SvmOptions>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Domain(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Domain(e)
    }
}

type CliResult<T> = Result<T, CliError>;

struct Ctx {
    cfg: RunConfig,
    threads: usize,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let error_json = args.iter().any(|a| a == "--error-json");
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            if code != 0 && error_json {
                print_error_json("usage", &e.kind().to_string(), &e.to_string(), EXIT_USAGE);
            } else {
                let _ = e.print();
            }
            return if code == 0 { EXIT_OK } else { EXIT_USAGE };
        }
    };
    init_logging(cli.global.verbose);
    let (kind, message, code) = match execute(&cli) {
        Ok(()) => return EXIT_OK,
        Err(CliError::Usage(m)) => ("usage".to_string(), m, EXIT_USAGE),
        Err(CliError::Domain(e)) => (e.kind().to_string(), e.to_string(), EXIT_DOMAIN),
    };
    if cli.global.error_json {
        print_error_json(if code == EXIT_USAGE { "usage" } else { "domain" }, &kind, &message, code);
    } else {
        eprintln!("error: {message}");
    }
    code
}

fn print_error_json(class: &str, kind: &str, message: &str, code: i32) {
    let v = serde_json::json!({
        "error": { "class": class, "kind": kind, "message": message, "exit_code": code }
    });
    eprintln!("{v}");
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_timestamp(None)
        .try_init();
}

fn load_run_config(global: &GlobalArgs) -> CliResult<Ctx> {
    let mut cfg = match &global.config {
        Some(path) => {
            require(path)?;
            let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            RunConfig::from_toml(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = global.seed.or(cfg.seed) {
        cfg.apply_seed(seed);
    }
    if let Some(t) = global.threads {
        cfg.threads = Some(t);
    }
    cfg.deterministic |= global.deterministic;
    let mut threads = cfg
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    if cfg.deterministic {
        threads = 1;
    }
    cfg.threads = Some(threads);
    info!("effective config: {}", serde_json::to_string(&cfg).unwrap_or_default());
    Ok(Ctx { cfg, threads })
}

fn require(path: &Path) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("input path does not exist: {}", path.display())))
    }
}

fn require_all<'a>(paths: impl IntoIterator<Item = &'a PathBuf>) -> CliResult<()> {
    paths.into_iter().try_for_each(|p| require(p))
}

fn execute(cli: &Cli) -> CliResult<()> {
    // Resolve every input path before doing any work.
    match &cli.command {
        Command::Preprocess(a) => require_all([&a.input].into_iter().chain(&a.exclude_terms))?,
        Command::Train(a) => require_all([&a.corpus].into_iter().chain(&a.vocab))?,
        Command::Eval(a) => {
            if a.analogies.is_none() && a.wordsim.is_none() {
                return Err(CliError::Usage("eval needs --analogies and/or --wordsim".into()));
            }
            require_all([&a.model].into_iter().chain(&a.analogies).chain(&a.wordsim))?
        }
        Command::Neighbors(a) => {
            if a.words.is_empty() && a.words_file.is_none() {
                return Err(CliError::Usage("neighbors needs query words or --words-file".into()));
            }
            require_all([&a.model].into_iter().chain(&a.words_file))?
        }
        Command::Dim { command } => match command {
            DimCommand::Extract(a) => require_all([&a.model, &a.lexicon])?,
            DimCommand::Validate(a) => require_all([&a.model, &a.lexicon])?,
            DimCommand::Project(a) => {
                if a.inline.is_empty() && a.words_file.is_none() {
                    return Err(CliError::Usage("dim project needs words or --words".into()));
                }
                require_all([&a.model, &a.dim].into_iter().chain(&a.words_file))?
            }
            DimCommand::Similarity(a) => require_all([&a.dim_a, &a.dim_b])?,
        },
        Command::Ensemble(a) => require(&a.manifest)?,
        Command::Report(a) => require(&a.dir)?,
    }
    let ctx = load_run_config(&cli.global)?;
    match &cli.command {
        Command::Preprocess(a) => cmd_preprocess(&ctx, a),
        Command::Train(a) => cmd_train(&ctx, a),
        Command::Eval(a) => cmd_eval(&ctx, a),
        Command::Neighbors(a) => cmd_neighbors(&ctx, a),
        Command::Dim { command } => match command {
            DimCommand::Extract(a) => cmd_dim_extract(&ctx, a),
            DimCommand::Validate(a) => cmd_dim_validate(&ctx, a),
            DimCommand::Project(a) => cmd_dim_project(a),
            DimCommand::Similarity(a) => cmd_dim_similarity(a),
        },
        Command::Ensemble(a) => cmd_ensemble(&ctx, &cli.global, a),
        Command::Report(a) => cmd_report(a),
    }
}

fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e).into())
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e).into())
}

/// Writes the report to `path`, or to stdout when no path is given.
fn emit(report: &Report, path: Option<&Path>) -> CliResult<()> {
    let json = report.to_json()?;
    match path {
        Some(p) => write_text(p, &json),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(json.as_bytes()).map_err(|e| Error::io("<stdout>", e))?;
            Ok(())
        }
    }
}

fn read_lines(path: &Path) -> CliResult<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

fn cmd_preprocess(ctx: &Ctx, a: &PreprocessArgs) -> CliResult<()> {
    let mut cfg = ctx.cfg.preprocess.clone();
    if let Some(path) = &a.exclude_terms {
        cfg.exclusion_terms = read_lines(path)?;
    }
    if let Some(m) = a.min_count {
        cfg.min_count = m;
    }
    if a.no_phrases {
        cfg.detect_phrases = false;
    }
    let format = a.format.unwrap_or(if a.input.is_dir() { DocumentFormat::TextDir } else { DocumentFormat::Jsonl });
    let docs = load_documents(&a.input, format)?;
    let (corpus, vocab, stats) = preprocess(docs, &cfg)?;

    create_dir(&a.out)?;
    let corpus_path = a.out.join("corpus.txt");
    let mut buf = Vec::new();
    corpus.write(&mut buf).map_err(|e| Error::io(&corpus_path, e))?;
    fs::write(&corpus_path, buf).map_err(|e| Error::io(&corpus_path, e))?;
    let vocab_path = a.out.join("vocab.tsv");
    let mut buf = Vec::new();
    vocab.write_tsv(&mut buf).map_err(|e| Error::io(&vocab_path, e))?;
    fs::write(&vocab_path, buf).map_err(|e| Error::io(&vocab_path, e))?;

    let mut report = Report::new("preprocess")
        .config(&serde_json::json!({ "format": format, "preprocess": cfg }))?
        .seeds(&serde_json::Value::Null)?
        .input("corpus", &a.input)?;
    if let Some(p) = &a.exclude_terms {
        report = report.input("exclude_terms", p)?;
    }
    let report = report.result(&stats)?;
    info!("{} documents kept, {} tokens, V={}", stats.documents_kept, stats.tokens, stats.vocabulary_size);
    emit(&report, Some(&a.out.join("preprocess_report.json")))
}

fn training_config(ctx: &Ctx, a: &TrainArgs) -> CliResult<TrainingConfig> {
    let mut t = ctx.cfg.training.clone();
    if let Some(v) = a.dim {
        t.dim = v;
    }
    if let Some(v) = a.window {
        t.window = v;
    }
    if let Some(v) = a.arch {
        t.architecture = v;
    }
    match a.loss.as_deref() {
        None => {}
        Some("ns" | "negative-sampling") => {
            if !matches!(t.loss, Loss::NegativeSampling { .. }) {
                t.loss = Loss::NegativeSampling { negatives: 5 };
            }
        }
        Some("hs" | "hierarchical-softmax") => t.loss = Loss::HierarchicalSoftmax,
        Some(other) => return Err(CliError::Usage(format!("unknown loss {other:?} (ns or hs)"))),
    }
    if let Some(k) = a.negatives {
        match &mut t.loss {
            Loss::NegativeSampling { negatives } => *negatives = k,
            Loss::HierarchicalSoftmax => {
                return Err(CliError::Usage("--negatives applies only to negative sampling".into()))
            }
        }
    }
    if let Some(v) = a.epochs {
        t.epochs = v;
    }
    if let Some(v) = a.subsample {
        t.subsample = v;
    }
    if let Some(v) = a.lr {
        t.lr_start = v;
    }
    t.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(t)
}

fn cmd_train(ctx: &Ctx, a: &TrainArgs) -> CliResult<()> {
    let training = training_config(ctx, a)?;
    let corpus = ProcessedCorpus::read_path(&a.corpus)?;
    let min_count = a.min_count.unwrap_or(ctx.cfg.preprocess.min_count);
    let vocab = match &a.vocab {
        Some(p) => {
            let f = fs::File::open(p).map_err(|e| Error::io(p, e))?;
            Vocabulary::read_tsv(BufReader::new(f), p)?
        }
        None => build_vocab(corpus.sentences(), min_count)?,
    };
    let encoded: Vec<Vec<u32>> = corpus.sentences().map(|s| vocab.encode(s)).filter(|s| !s.is_empty()).collect();
    let mut model = EmbeddingModel::init(vocab, training.clone())?;
    let opts = TrainOptions { threads: ctx.threads };
    let result = train(&mut model, &encoded, &opts)?;
    save_model(&model, &a.out, a.format)?;

    let mut report = Report::new("train")
        .config(&serde_json::json!({
            "training": training,
            "threads": ctx.threads,
            "min_count": min_count,
            "format": a.format,
        }))?
        .seeds(&serde_json::json!({ "training": training.seed }))?
        .input("corpus", &a.corpus)?;
    if let Some(p) = &a.vocab {
        report = report.input("vocab", p)?;
    }
    if ctx.threads > 1 {
        report.warn(format!("trained with {} threads; results are not bit-reproducible", ctx.threads));
    }
    let report = report.result(&serde_json::json!({
        "vocabulary_size": model.len(),
        "dim": model.dim(),
        "train": result,
        "model": a.out.display().to_string(),
    }))?;
    let path = a.report.clone().unwrap_or_else(|| {
        let mut s = a.out.clone().into_os_string();
        s.push(".report.json");
        PathBuf::from(s)
    });
    emit(&report, Some(&path))
}

fn cmd_eval(ctx: &Ctx, a: &EvalArgs) -> CliResult<()> {
    let mode = a.oov.unwrap_or(ctx.cfg.evaluation.oov_mode);
    let model = load_model(&a.model)?;
    let emb = Embeddings::new(&model);
    let mut report = Report::new("eval")
        .config(&serde_json::json!({ "oov_mode": mode }))?
        .input("model", &a.model)?;
    let mut result = serde_json::Map::new();
    if let Some(p) = &a.analogies {
        report = report.input("analogies", p)?;
        let sections = load_analogy_file(p)?;
        let r = eval_analogy(&emb, &sections, mode);
        result.insert("analogy".into(), serde_json::to_value(&r).map_err(Error::from)?);
    }
    if let Some(p) = &a.wordsim {
        report = report.input("wordsim", p)?;
        let pairs = load_wordsim(p)?;
        let r = eval_wordsim(&emb, &pairs, mode)?;
        if r.skipped > 0 {
            report.warn(format!("{} word-similarity pairs had out-of-vocabulary words", r.skipped));
        }
        result.insert("wordsim".into(), serde_json::to_value(&r).map_err(Error::from)?);
    }
    let report = report.result(&result)?;
    emit(&report, a.report.as_deref())
}

fn cmd_neighbors(ctx: &Ctx, a: &NeighborsArgs) -> CliResult<()> {
    let mut words = a.words.clone();
    if let Some(p) = &a.words_file {
        words.extend(read_lines(p)?);
    }
    let k = a.k.unwrap_or(ctx.cfg.evaluation.neighbors);
    let model = load_model(&a.model)?;
    let emb = Embeddings::new(&model);
    let mut out = String::from("query\trank\tneighbor\tsimilarity\n");
    let none = HashSet::new();
    for w in &words {
        let w = w.to_lowercase();
        match nearest_neighbors(&emb, &w, k, &none) {
            Ok(hits) => {
                for (rank, h) in hits.iter().enumerate() {
                    out.push_str(&format!("{w}\t{}\t{}\t{:.6}\n", rank + 1, h.word, h.similarity));
                }
            }
            Err(Error::OutOfVocabulary(_)) => warn!("{w:?} is not in the vocabulary"),
            Err(e) => return Err(e.into()),
        }
    }
    std::io::stdout()
        .lock()
        .write_all(out.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))?;
    Ok(())
}

fn load_dim_inputs(model: &Path, lexicon: &Path) -> CliResult<(Embeddings, AnchorLexicon)> {
    let lex = AnchorLexicon::load(lexicon)?;
    let model = load_model(model)?;
    Ok((Embeddings::new(&model), lex))
}

fn coverage_warnings(report: &mut Report, emb: &Embeddings, lex: &AnchorLexicon) -> crate::dimension::Coverage {
    let c = lex.coverage(emb);
    if !c.missing.is_empty() {
        report.warn(format!("{} anchors not in vocabulary: {}", c.missing.len(), c.missing.join(", ")));
    }
    c
}

fn cmd_dim_extract(ctx: &Ctx, a: &DimExtractArgs) -> CliResult<()> {
    let method = a.method.unwrap_or(ctx.cfg.dimension.method);
    let (emb, lex) = load_dim_inputs(&a.model, &a.lexicon)?;
    let mut report = Report::new("dim extract")
        .config(&serde_json::json!({ "method": method, "svm": ctx.cfg.svm }))?
        .seeds(&serde_json::json!({ "svm": ctx.cfg.svm.seed }))?
        .input("model", &a.model)?
        .input("lexicon", &a.lexicon)?;
    let coverage = coverage_warnings(&mut report, &emb, &lex);
    let (extracted, cv) = match method {
        Method::Svm => {
            let fit = train_svm(&emb, &lex, &ctx.cfg.svm)?;
            fit.warnings.iter().for_each(|w| report.warn(w.clone()));
            (Extracted::Classifier(fit.classifier), Some(fit.cv_accuracy))
        }
        m => (extract(&emb, &lex, m, &ctx.cfg.svm)?, None),
    };
    let json = serde_json::to_string_pretty(&extracted).map_err(Error::from)? + "\n";
    write_text(&a.out, &json)?;
    let report = report.result(&serde_json::json!({
        "name": lex.name,
        "method": method,
        "coverage": coverage,
        "svm_cv_accuracy": cv,
        "output": a.out.display().to_string(),
    }))?;
    emit(&report, a.report.as_deref())
}

fn cmd_dim_validate(ctx: &Ctx, a: &DimValidateArgs) -> CliResult<()> {
    let method = a.method.unwrap_or(ctx.cfg.dimension.method);
    let folds = a.folds.unwrap_or(ctx.cfg.dimension.folds);
    let (emb, lex) = load_dim_inputs(&a.model, &a.lexicon)?;
    let mut report = Report::new("dim validate")
        .config(&serde_json::json!({ "method": method, "folds": folds, "svm": ctx.cfg.svm }))?
        .seeds(&serde_json::json!({ "folds": ctx.cfg.dimension.seed, "svm": ctx.cfg.svm.seed }))?
        .input("model", &a.model)?
        .input("lexicon", &a.lexicon)?;
    let coverage = coverage_warnings(&mut report, &emb, &lex);
    let fitted = match method {
        Method::Svm => {
            let fit = train_svm(&emb, &lex, &ctx.cfg.svm)?;
            fit.warnings.iter().for_each(|w| report.warn(w.clone()));
            Extracted::Classifier(fit.classifier)
        }
        m => extract(&emb, &lex, m, &ctx.cfg.svm)?,
    };
    let train = classify(&emb, fitted.scorer(), &lex, Split::Train)?;
    let test = classify(&emb, fitted.scorer(), &lex, Split::Test)?;
    let boundary = train.words.iter().chain(&test.words).filter(|w| w.boundary).count();
    if boundary > 0 {
        report.warn(format!("{boundary} anchors scored exactly 0 and were assigned the negative pole"));
    }
    let cv = match crossvalidate_lexicon(&emb, &lex, folds, method, &ctx.cfg.svm, ctx.cfg.dimension.seed) {
        Ok(cv) => Some(cv),
        Err(e) => {
            report.warn(format!("cross-validation skipped: {e}"));
            None
        }
    };
    let report = report.result(&serde_json::json!({
        "name": lex.name,
        "method": method,
        "coverage": coverage,
        "train": train,
        "test": test,
        "cross_validation": cv,
    }))?;
    emit(&report, a.report.as_deref())
}

fn load_extracted(path: &Path) -> CliResult<Extracted> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()).into())
}

#[derive(Serialize)]
struct ProjectedWord {
    word: String,
    score: f64,
    pole: Option<Pole>,
}

fn cmd_dim_project(a: &DimProjectArgs) -> CliResult<()> {
    let mut words = a.inline.clone();
    if let Some(p) = &a.words_file {
        words.extend(read_lines(p)?);
    }
    let fitted = load_extracted(&a.dim)?;
    let model = load_model(&a.model)?;
    let emb = Embeddings::new(&model);
    let mut report = Report::new("dim project").input("model", &a.model)?.input("dimension", &a.dim)?;
    if let Some(p) = &a.words_file {
        report = report.input("words", p)?;
    }
    let scorer = fitted.scorer();
    let mut projected = Vec::new();
    let mut missing = Vec::new();
    for w in &words {
        let w = w.to_lowercase().replace(' ', "_");
        match scorer.score(&emb, &w) {
            Ok(score) => projected.push(ProjectedWord {
                word: w,
                score,
                pole: if score > 0.0 {
                    Some(Pole::Positive)
                } else if score < 0.0 {
                    Some(Pole::Negative)
                } else {
                    None
                },
            }),
            Err(Error::OutOfVocabulary(_)) => {
                report.warn(format!("{w:?} is not in the vocabulary"));
                missing.push(w);
            }
            Err(e) => return Err(e.into()),
        }
    }
    let report = report.result(&serde_json::json!({ "projections": projected, "missing": missing }))?;
    emit(&report, a.report.as_deref())
}

fn cmd_dim_similarity(a: &DimSimilarityArgs) -> CliResult<()> {
    let axis = |p: &Path| -> CliResult<crate::dimension::Dimension> {
        match load_extracted(p)? {
            Extracted::Axis(d) => Ok(d),
            Extracted::Classifier(_) => Err(Error::Config(format!("{} holds a classifier, not an axis", p.display())).into()),
        }
    };
    let da = axis(&a.dim_a)?;
    let db = axis(&a.dim_b)?;
    let cos = dim_similarity(&da, &db)?;
    let report = Report::new("dim similarity")
        .input("dim_a", &a.dim_a)?
        .input("dim_b", &a.dim_b)?
        .result(&serde_json::json!({ "a": da.name, "b": db.name, "cosine": cos }))?;
    emit(&report, a.report.as_deref())
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Reads a manifest and resolves its relative paths against its directory.
pub fn load_manifest(path: &Path) -> Result<Manifest, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut m: Manifest = toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    m.corpus = resolve(base, &m.corpus);
    m.lexicons = m.lexicons.iter().map(|p| resolve(base, p)).collect();
    m.keywords = m.keywords.as_ref().map(|p| resolve(base, p));
    Ok(m)
}

fn cmd_ensemble(ctx: &Ctx, global: &GlobalArgs, a: &EnsembleArgs) -> CliResult<()> {
    let manifest = load_manifest(&a.manifest).map_err(CliError::Usage)?;
    require_all([&manifest.corpus].into_iter().chain(&manifest.lexicons).chain(&manifest.keywords))?;
    if manifest.lexicons.is_empty() {
        return Err(CliError::Usage("manifest lists no lexicons".into()));
    }

    let mut settings = manifest.ensemble.clone().unwrap_or_else(|| ctx.cfg.ensemble.clone());
    let mut training = manifest.training.clone().unwrap_or_else(|| ctx.cfg.training.clone());
    let mut svm = manifest.svm.clone().unwrap_or_else(|| ctx.cfg.svm.clone());
    if let Some(seed) = global.seed {
        settings.base_seed = seed;
        training.seed = seed;
        svm.seed = seed;
    }
    let lexicons = manifest
        .lexicons
        .iter()
        .map(|p| AnchorLexicon::load(p))
        .collect::<Result<Vec<_>, _>>()?;
    let keywords = match &manifest.keywords {
        Some(p) => load_keywords(p)?,
        None => Vec::new(),
    };
    let cfg = EnsembleConfig {
        k_models: settings.k_models,
        subsample_fraction: settings.subsample_fraction,
        base_seed: settings.base_seed,
        min_count: settings.min_count,
        keyword_min_count: settings.keyword_min_count,
        method: settings.method,
        training,
        svm,
        threads: ctx.threads,
        jobs: settings.jobs,
        save_models: settings.save_models,
        lexicons,
        keywords,
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let corpus = ProcessedCorpus::read_path(&manifest.corpus)?;

    create_dir(&a.out)?;
    write_json(&a.out.join("ensemble_config.json"), &cfg)?;
    let run = run_ensemble(&cfg, &corpus, Some(&a.out))?;
    let summary = summarize_run(&cfg.lexicons, &run.models, run.excluded.clone());
    let figures = write_summary(&a.out, &summary)?;

    let mut report = Report::new("ensemble")
        .config(&cfg)?
        .seeds(&serde_json::json!({
            "base_seed": cfg.base_seed,
            "model_seeds": (0..cfg.k_models).map(|i| cfg.base_seed.wrapping_add(i as u64)).collect::<Vec<_>>(),
        }))?
        .input("manifest", &a.manifest)?
        .input("corpus", &manifest.corpus)?;
    for p in &manifest.lexicons {
        report = report.input("lexicon", p)?;
    }
    if let Some(p) = &manifest.keywords {
        report = report.input("keywords", p)?;
    }
    for ex in &run.excluded {
        report.warn(format!("model {} excluded: {}", ex.model_index, ex.error));
    }
    for m in &run.models {
        for issue in &m.keyword_issues {
            report.warn(format!("model {}: keyword {:?} {} (count {})", m.model_index, issue.word, issue.reason, issue.count));
        }
    }
    if ctx.threads > 1 {
        report.warn(format!("trained with {} threads; results are not bit-reproducible", ctx.threads));
    }
    let report = report.result(&serde_json::json!({
        "models_included": summary.models_included,
        "robust_accuracy": summary.robust_accuracy,
        "summary": "summary.json",
        "figures": figures,
    }))?;
    emit(&report, Some(&a.out.join("report.json")))
}

fn write_summary(out: &Path, summary: &EnsembleSummary) -> CliResult<Vec<String>> {
    write_json(&out.join("summary.json"), summary)?;
    let paths = emit_figure_data(&summary.dimensions, &out.join("figures"))?;
    Ok(paths
        .iter()
        .map(|p| p.strip_prefix(out).unwrap_or(p).display().to_string())
        .collect())
}

fn cmd_report(a: &ReportArgs) -> CliResult<()> {
    let cfg_path = a.dir.join("ensemble_config.json");
    require(&cfg_path)?;
    let text = fs::read_to_string(&cfg_path).map_err(|e| Error::io(&cfg_path, e))?;
    let cfg: EnsembleConfig = serde_json::from_str(&text).map_err(|e| Error::parse(&cfg_path, e.line(), e.to_string()))?;
    let models = load_model_projections(&a.dir)?;
    let present: HashSet<usize> = models.iter().map(|m| m.model_index).collect();
    let excluded = (0..cfg.k_models)
        .filter(|i| !present.contains(i))
        .map(|i| crate::ensemble::ExcludedModel { model_index: i, error: "no persisted projections".into() })
        .collect();
    let summary = summarize_run(&cfg.lexicons, &models, excluded);
    let out = a.out.clone().unwrap_or_else(|| a.dir.clone());
    create_dir(&out)?;
    let figures = write_summary(&out, &summary)?;
    let mut report = Report::new("report").config(&cfg)?.input("ensemble_config", &cfg_path)?;
    for m in &models {
        report = report.input("projections", &crate::ensemble::model_dir(&a.dir, m.model_index).join("projections.json"))?;
    }
    let report = report.result(&serde_json::json!({
        "models_included": summary.models_included,
        "robust_accuracy": summary.robust_accuracy,
        "figures": figures,
    }))?;
    emit(&report, Some(&out.join("aggregate_report.json")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(RunConfig::from_toml("bogus = 1").is_err());
        assert!(RunConfig::from_toml("[training]\nwindoww = 3").is_err());
        let c = RunConfig::from_toml("seed = 4\n[training]\ndim = 20\n[training.loss]\nkind = \"hierarchical-softmax\"").unwrap();
        assert_eq!(c.training.dim, 20);
        assert_eq!(c.training.loss, Loss::HierarchicalSoftmax);
        assert_eq!(c.training.window, TrainingConfig::default().window);
    }

    #[test]
    fn seed_flag_reaches_every_consumer() {
        let mut c = RunConfig::default();
        c.apply_seed(9);
        assert_eq!((c.training.seed, c.svm.seed, c.dimension.seed, c.ensemble.base_seed), (9, 9, 9, 9));
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["wordaxes", "--bogus"]), EXIT_USAGE);
        assert_eq!(run(["wordaxes", "train", "--corpus", "/no/such/file", "--out", "/tmp/x"]), EXIT_USAGE);
        assert_eq!(run(["wordaxes", "--help"]), EXIT_OK);
    }
}
