//! Resampled-ensemble robustness runs.
//!
//! Each model trains on a random subset of documents, re-extracts every
//! dimension and projects keywords and anchors. Per-model results are
//! persisted and then folded into per-word summaries.

use std::collections::HashMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{build_vocab, ProcessedCorpus};
use crate::dimension::{classify, extract, AnchorLexicon, ClassificationReport, Method, Pole, Split, SvmOptions};
use crate::embedding::{save_model, train, EmbeddingModel, ModelFormat, TrainOptions, TrainingConfig};
use crate::error::{Error, Result};
use crate::vecmath::Embeddings;

pub const SD_DEFINITION: &str = "population standard deviation (divide by n_models_present)";

/// A keyword tagged with a free-form role such as `fatness` or `health`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Keyword {
    pub token: String,
    pub role: String,
}

/// Parses `token<TAB>role` lines; `#` starts a comment line.
pub fn parse_keywords(text: &str, source: &Path) -> Result<Vec<Keyword>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((token, role)) = line.split_once('\t') else {
            return Err(Error::parse(source, i + 1, "expected token<TAB>role"));
        };
        let (token, role) = (token.trim(), role.trim());
        if token.is_empty() || role.is_empty() || role.contains('\t') {
            return Err(Error::parse(source, i + 1, "expected token<TAB>role"));
        }
        out.push(Keyword {
            token: token.to_lowercase().replace(' ', "_"),
            role: role.to_string(),
        });
    }
    Ok(out)
}

pub fn load_keywords(path: &Path) -> Result<Vec<Keyword>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_keywords(&text, path)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub k_models: usize,
    pub subsample_fraction: f64,
    pub base_seed: u64,
    /// Vocabulary minimum count, applied per subsample.
    pub min_count: u64,
    /// Keywords below this count in a model are not projected there.
    pub keyword_min_count: u64,
    pub method: Method,
    pub training: TrainingConfig,
    pub svm: SvmOptions,
    /// Worker threads per model; `1` is bit-reproducible.
    pub threads: usize,
    /// Models trained concurrently.
    pub jobs: usize,
    pub save_models: bool,
    pub lexicons: Vec<AnchorLexicon>,
    pub keywords: Vec<Keyword>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            k_models: 25,
            subsample_fraction: 0.9,
            base_seed: 1,
            min_count: 40,
            keyword_min_count: 40,
            method: Method::Larsen,
            training: TrainingConfig::default(),
            svm: SvmOptions::default(),
            threads: 1,
            jobs: 1,
            save_models: true,
            lexicons: Vec::new(),
            keywords: Vec::new(),
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_models < 1 {
            return Err(Error::Config("k_models must be >= 1".into()));
        }
        if !(self.subsample_fraction > 0.0 && self.subsample_fraction <= 1.0) {
            return Err(Error::Config("subsample_fraction must be in (0, 1]".into()));
        }
        if self.threads < 1 || self.jobs < 1 {
            return Err(Error::Config("threads and jobs must be >= 1".into()));
        }
        if self.lexicons.is_empty() {
            return Err(Error::Config("ensemble needs at least one lexicon".into()));
        }
        self.training.validate()
    }
}

/// Indices of `⌊fraction·D⌋` documents drawn without replacement, in
/// corpus order.
pub fn subsample_corpus(corpus: &ProcessedCorpus, fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!("subsample fraction {fraction} is not in (0, 1]")));
    }
    let d = corpus.documents.len();
    // The epsilon keeps products like 0.29 * 100 from flooring to 28.
    let take = ((fraction * d as f64) + 1e-9).floor() as usize;
    let take = take.min(d);
    if take == 0 {
        return Err(Error::Empty(format!("subsample of {d} documents at {fraction} is empty")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, d, take).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub word: String,
    /// Keyword role, or `train-anchor` / `test-anchor`.
    pub role: String,
    pub projection: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeywordIssue {
    pub word: String,
    pub count: u64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionProjections {
    pub name: String,
    pub pole_names: (String, String),
    pub method: Method,
    pub anchor_coverage: f64,
    pub projections: Vec<Projection>,
    pub train: ClassificationReport,
    pub test: ClassificationReport,
}

/// Everything persisted for one ensemble member.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelProjections {
    pub model_index: usize,
    pub seed: u64,
    pub documents_used: usize,
    pub vocabulary_size: usize,
    pub epoch_losses: Vec<f64>,
    pub keyword_issues: Vec<KeywordIssue>,
    pub dimensions: Vec<DimensionProjections>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcludedModel {
    pub model_index: usize,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRun {
    pub models: Vec<ModelProjections>,
    pub excluded: Vec<ExcludedModel>,
}

pub fn model_dir(out: &Path, index: usize) -> PathBuf {
    out.join(format!("model_{index:03}"))
}

/// Trains and analyzes every ensemble member, writing each to
/// `out/model_NNN/` when `out` is given. Members that fail are logged and
/// left out.
pub fn run_ensemble(cfg: &EnsembleConfig, corpus: &ProcessedCorpus, out: Option<&Path>) -> Result<EnsembleRun> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<Result<ModelProjections>> = pool.install(|| {
        (0..cfg.k_models)
            .into_par_iter()
            .map(|i| run_member(cfg, corpus, i, out))
            .collect()
    });
    let mut run = EnsembleRun { models: Vec::new(), excluded: Vec::new() };
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(m) => run.models.push(m),
            Err(e @ Error::Io { .. }) => return Err(e),
            Err(e) => {
                warn!("ensemble model {i} excluded: {e}");
                run.excluded.push(ExcludedModel { model_index: i, error: e.to_string() });
            }
        }
    }
    if run.models.is_empty() {
        return Err(Error::Empty("every ensemble model failed".into()));
    }
    Ok(run)
}

fn run_member(cfg: &EnsembleConfig, corpus: &ProcessedCorpus, i: usize, out: Option<&Path>) -> Result<ModelProjections> {
    let seed = cfg.base_seed.wrapping_add(i as u64);
    let docs = subsample_corpus(corpus, cfg.subsample_fraction, seed)?;
    let sentences: Vec<_> = docs.iter().flat_map(|&d| &corpus.documents[d]).collect();
    let vocab = build_vocab(sentences.iter().copied(), cfg.min_count)?;
    let encoded: Vec<Vec<u32>> = sentences
        .iter()
        .map(|s| vocab.encode(s))
        .filter(|s| !s.is_empty())
        .collect();
    let training = TrainingConfig { seed, ..cfg.training.clone() };
    let mut model = EmbeddingModel::init(vocab, training)?;
    let report = train(&mut model, &encoded, &TrainOptions { threads: cfg.threads })?;
    info!("ensemble model {i}: {} documents, V={}", docs.len(), model.len());
    let emb = Embeddings::new(&model);

    let mut keyword_issues = Vec::new();
    let mut usable_keywords = Vec::new();
    for k in &cfg.keywords {
        let count = emb.vocab().idx(&k.token).map_or(0, |i| emb.vocab().count(i));
        if count < cfg.keyword_min_count.max(1) {
            let reason = if count == 0 { "not in vocabulary" } else { "below keyword minimum count" };
            warn!("model {i}: keyword {:?} {reason} ({count})", k.token);
            keyword_issues.push(KeywordIssue { word: k.token.clone(), count, reason: reason.into() });
        } else {
            usable_keywords.push(k);
        }
    }

    let mut dimensions = Vec::new();
    for lex in &cfg.lexicons {
        let fitted = extract(&emb, lex, cfg.method, &cfg.svm)?;
        let scorer = fitted.scorer();
        let mut projections = Vec::new();
        for k in &usable_keywords {
            projections.push(Projection {
                word: k.token.clone(),
                role: k.role.clone(),
                projection: scorer.score(&emb, &k.token)?,
            });
        }
        for (split, role) in [(Split::Train, "train-anchor"), (Split::Test, "test-anchor")] {
            let mut seen = std::collections::HashSet::new();
            for e in lex.split(split) {
                if emb.vocab().idx(&e.word).is_some() && seen.insert(&e.word) {
                    projections.push(Projection {
                        word: e.word.clone(),
                        role: role.into(),
                        projection: scorer.score(&emb, &e.word)?,
                    });
                }
            }
        }
        dimensions.push(DimensionProjections {
            name: lex.name.clone(),
            pole_names: lex.pole_names.clone(),
            method: cfg.method,
            anchor_coverage: fitted.dimension().map_or_else(
                || {
                    let c = lex.coverage(&emb);
                    c.train_found as f64 / c.train_total as f64
                },
                |d| d.anchor_coverage,
            ),
            projections,
            train: classify(&emb, scorer, lex, Split::Train)?,
            test: classify(&emb, scorer, lex, Split::Test)?,
        });
    }

    let result = ModelProjections {
        model_index: i,
        seed,
        documents_used: docs.len(),
        vocabulary_size: model.len(),
        epoch_losses: report.epoch_losses,
        keyword_issues,
        dimensions,
    };
    if let Some(out) = out {
        let dir = model_dir(out, i);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        if cfg.save_models {
            save_model(&model, &dir.join("model.wax"), ModelFormat::Native)?;
        }
        write_json(&dir.join("projections.json"), &result)?;
    }
    Ok(result)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    std::io::Write::write_all(&mut w, b"\n").map_err(|e| Error::io(path, e))?;
    std::io::Write::flush(&mut w).map_err(|e| Error::io(path, e))
}

/// Reads every `model_*/projections.json` under `dir`, sorted by index.
pub fn load_model_projections(dir: &Path) -> Result<Vec<ModelProjections>> {
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        let file = entry.path().join("projections.json");
        if name.starts_with("model_") && file.is_file() {
            paths.push(file);
        }
    }
    let mut models = paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str::<ModelProjections>(&text).map_err(|e| Error::parse(p, e.line(), e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    models.sort_by_key(|m| m.model_index);
    if models.is_empty() {
        return Err(Error::Empty(format!("no model_*/projections.json under {}", dir.display())));
    }
    Ok(models)
}

/// Cross-model statistics for one (word, role) on one dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WordSummary {
    pub word: String,
    pub role: String,
    pub mean: f64,
    /// Population standard deviation.
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub n_models_present: usize,
    pub robust: bool,
    pub pole_at_mean: Option<Pole>,
    /// Missing from at least one model.
    pub incomplete: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionSummary {
    pub name: String,
    pub pole_names: (String, String),
    pub words: Vec<WordSummary>,
}

/// Summary statistics of one word's projections over `k` models.
pub fn summarize(word: &str, role: &str, values: &[f64], k: usize) -> WordSummary {
    let n = values.len();
    let mean_raw = values.iter().sum::<f64>() / n as f64;
    let sd = (values.iter().map(|x| (x - mean_raw).powi(2)).sum::<f64>() / n as f64).sqrt();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = mean_raw.clamp(min, max);
    let same_sign = values.iter().all(|&x| x > 0.0) || values.iter().all(|&x| x < 0.0);
    WordSummary {
        word: word.into(),
        role: role.into(),
        mean,
        sd,
        min,
        max,
        n_models_present: n,
        robust: n == k && same_sign,
        pole_at_mean: if mean > 0.0 {
            Some(Pole::Positive)
        } else if mean < 0.0 {
            Some(Pole::Negative)
        } else {
            None
        },
        incomplete: n < k,
    }
}

/// Folds per-model projections into per-dimension summaries. `k` is the
/// number of models supplied; words keep first-seen order.
pub fn robust_classify(models: &[ModelProjections]) -> Vec<DimensionSummary> {
    let k = models.len();
    let mut dims: Vec<(String, (String, String), Vec<(String, String)>, HashMap<(String, String), Vec<f64>>)> = Vec::new();
    for m in models {
        for d in &m.dimensions {
            let pos = match dims.iter().position(|x| x.0 == d.name) {
                Some(p) => p,
                None => {
                    dims.push((d.name.clone(), d.pole_names.clone(), Vec::new(), HashMap::new()));
                    dims.len() - 1
                }
            };
            let (_, _, order, values) = &mut dims[pos];
            for p in &d.projections {
                let key = (p.word.clone(), p.role.clone());
                values
                    .entry(key.clone())
                    .or_insert_with(|| {
                        order.push(key);
                        Vec::new()
                    })
                    .push(p.projection);
            }
        }
    }
    dims.into_iter()
        .map(|(name, pole_names, order, values)| DimensionSummary {
            name,
            pole_names,
            words: order.iter().map(|key| summarize(&key.0, &key.1, &values[key], k)).collect(),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustAccuracy {
    pub dimension: String,
    pub split: Split,
    /// Anchors correct in every model.
    pub robust_correct: usize,
    /// Anchors in the vocabulary of at least one model, repeats included.
    pub total: usize,
    pub accuracy: f64,
}

/// Counts anchors classified to their true pole in all models.
pub fn robust_accuracy(lexicon: &AnchorLexicon, models: &[ModelProjections]) -> Vec<RobustAccuracy> {
    let reports: Vec<&DimensionProjections> = models
        .iter()
        .filter_map(|m| m.dimensions.iter().find(|d| d.name == lexicon.name))
        .collect();
    [Split::Train, Split::Test]
        .into_iter()
        .map(|split| {
            let verdicts: Vec<HashMap<(&str, Pole), bool>> = reports
                .iter()
                .map(|d| {
                    let r = if split == Split::Train { &d.train } else { &d.test };
                    r.words.iter().map(|w| ((w.word.as_str(), w.pole), w.correct)).collect()
                })
                .collect();
            let mut robust_correct = 0;
            let mut total = 0;
            for e in lexicon.split(split) {
                let key = (e.word.as_str(), e.pole);
                let seen: Vec<bool> = verdicts.iter().filter_map(|v| v.get(&key).copied()).collect();
                if seen.is_empty() {
                    continue;
                }
                total += 1;
                if seen.len() == models.len() && seen.iter().all(|&c| c) {
                    robust_correct += 1;
                }
            }
            RobustAccuracy {
                dimension: lexicon.name.clone(),
                split,
                robust_correct,
                total,
                accuracy: if total == 0 { 0.0 } else { robust_correct as f64 / total as f64 },
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FigureRow {
    pub word: String,
    pub role: String,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub robust: bool,
}

/// Rows of a dimension sorted by mean, ties broken by word then role.
pub fn figure_rows(summary: &DimensionSummary) -> Vec<FigureRow> {
    let mut rows: Vec<FigureRow> = summary
        .words
        .iter()
        .map(|w| FigureRow {
            word: w.word.clone(),
            role: w.role.clone(),
            mean: w.mean,
            sd: w.sd,
            min: w.min,
            max: w.max,
            robust: w.robust,
        })
        .collect();
    rows.sort_by(|a, b| a.mean.total_cmp(&b.mean).then_with(|| a.word.cmp(&b.word)).then_with(|| a.role.cmp(&b.role)));
    rows
}

fn safe_file_name(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Writes `<dimension>.csv` per summary into `dir`; returns the paths.
pub fn emit_figure_data(summaries: &[DimensionSummary], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for s in summaries {
        let path = dir.join(format!("{}.csv", safe_file_name(&s.name)));
        let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
        for row in figure_rows(s) {
            w.serialize(row).map_err(|e| csv_error(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}

pub fn read_figure_data(path: &Path) -> Result<Vec<FigureRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| csv_error(path, e))).collect()
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(path, line, format!("{other:?}")),
    }
}

/// The JSON written next to the figure CSVs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub sd_definition: String,
    pub k_models: usize,
    pub models_included: Vec<usize>,
    pub excluded: Vec<ExcludedModel>,
    pub dimensions: Vec<DimensionSummary>,
    pub robust_accuracy: Vec<RobustAccuracy>,
}

pub fn summarize_run(lexicons: &[AnchorLexicon], models: &[ModelProjections], excluded: Vec<ExcludedModel>) -> EnsembleSummary {
    EnsembleSummary {
        sd_definition: SD_DEFINITION.into(),
        k_models: models.len(),
        models_included: models.iter().map(|m| m.model_index).collect(),
        excluded,
        dimensions: robust_classify(models),
        robust_accuracy: lexicons.iter().flat_map(|l| robust_accuracy(l, models)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Sentence;
    use proptest::prelude::*;

    fn corpus(d: usize) -> ProcessedCorpus {
        ProcessedCorpus {
            documents: (0..d).map(|i| vec![Sentence(vec![format!("w{i}")])]).collect(),
        }
    }

    #[test]
    fn subsample_sizes_and_determinism() {
        let c = corpus(10);
        assert_eq!(subsample_corpus(&c, 1.0, 3).unwrap(), (0..10).collect::<Vec<_>>());
        let a = subsample_corpus(&c, 0.9, 3).unwrap();
        assert_eq!(a.len(), 9);
        assert_eq!(a, subsample_corpus(&c, 0.9, 3).unwrap());
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(subsample_corpus(&corpus(100), 0.29, 1).unwrap().len(), 29);
        assert!(matches!(subsample_corpus(&c, 0.05, 1), Err(Error::Empty(_))));
        assert!(subsample_corpus(&c, 0.0, 1).is_err());
        assert!(subsample_corpus(&c, 1.5, 1).is_err());
    }

    fn model(index: usize, values: &[(&str, f64)]) -> ModelProjections {
        ModelProjections {
            model_index: index,
            seed: index as u64,
            documents_used: 0,
            vocabulary_size: 0,
            epoch_losses: vec![],
            keyword_issues: vec![],
            dimensions: vec![DimensionProjections {
                name: "g".into(),
                pole_names: ("f".into(), "m".into()),
                method: Method::Larsen,
                anchor_coverage: 1.0,
                projections: values
                    .iter()
                    .map(|(w, p)| Projection { word: w.to_string(), role: "kw".into(), projection: *p })
                    .collect(),
                train: empty_report(Split::Train),
                test: empty_report(Split::Test),
            }],
        }
    }

    fn empty_report(split: Split) -> ClassificationReport {
        ClassificationReport { split, method: "larsen".into(), words: vec![], correct: 0, total: 0, accuracy: 0.0, missing: vec![] }
    }

    #[test]
    fn robust_examples() {
        let ms = vec![model(0, &[("a", 0.2), ("b", 0.2)]), model(1, &[("a", 0.1), ("b", -0.01)]), model(2, &[("a", 0.3)])];
        let s = robust_classify(&ms);
        let a = &s[0].words[0];
        assert!(a.robust);
        assert_eq!(a.pole_at_mean, Some(Pole::Positive));
        assert!((a.mean - 0.2).abs() < 1e-12);
        assert!((a.sd - (0.02f64 / 3.0).sqrt()).abs() < 1e-12);
        let b = &s[0].words[1];
        assert!(!b.robust);
        assert!(b.incomplete);
        assert_eq!(b.n_models_present, 2);
    }

    #[test]
    fn zero_projection_is_not_robust() {
        assert!(!summarize("w", "r", &[0.0, 0.0], 2).robust);
        assert!(summarize("w", "r", &[-0.1, -0.2], 2).robust);
    }

    proptest! {
        #[test]
        fn summary_invariants(values in proptest::collection::vec(-1.0f64..1.0, 1..30), extra in 0usize..3) {
            let k = values.len() + extra;
            let s = summarize("w", "r", &values, k);
            prop_assert!(s.min <= s.mean && s.mean <= s.max);
            if s.robust {
                prop_assert!(s.min.signum() == s.max.signum() && s.min != 0.0 && s.max != 0.0);
                prop_assert!(s.mean.abs() >= s.min.abs().min(s.max.abs()));
            }
            let brute = values.len() == k && (values.iter().all(|&x| x > 0.0) || values.iter().all(|&x| x < 0.0));
            prop_assert_eq!(s.robust, brute);
        }

        #[test]
        fn dropping_lone_dissenter_only_helps(values in proptest::collection::vec(0.01f64..1.0, 2..10), flip in any::<prop::sample::Index>()) {
            let mut v = values.clone();
            let i = flip.index(v.len());
            v[i] = -v[i];
            prop_assert!(!summarize("w", "r", &v, v.len()).robust);
            v.remove(i);
            prop_assert!(summarize("w", "r", &v, v.len()).robust);
        }
    }

    #[test]
    fn robust_accuracy_counts() {
        use crate::dimension::{AnchorEntry, ClassifiedWord};
        let lex = AnchorLexicon::new(
            "g",
            ("f".into(), "m".into()),
            vec![
                AnchorEntry { word: "she".into(), pole: Pole::Positive, pair_id: None, split: Split::Train },
                AnchorEntry { word: "he".into(), pole: Pole::Negative, pair_id: None, split: Split::Train },
                AnchorEntry { word: "her".into(), pole: Pole::Positive, pair_id: None, split: Split::Test },
            ],
        )
        .unwrap();
        let classified = |w: &str, pole, correct| ClassifiedWord {
            word: w.into(),
            pole,
            predicted: if correct { pole } else if pole == Pole::Positive { Pole::Negative } else { Pole::Positive },
            score: 0.1,
            correct,
            boundary: false,
        };
        let mut ms: Vec<ModelProjections> = (0..25).map(|i| model(i, &[])).collect();
        for (i, m) in ms.iter_mut().enumerate() {
            m.dimensions[0].train.words = vec![classified("she", Pole::Positive, true), classified("he", Pole::Negative, i != 7)];
            m.dimensions[0].test.words = vec![classified("her", Pole::Positive, true)];
        }
        let acc = robust_accuracy(&lex, &ms);
        assert_eq!((acc[0].robust_correct, acc[0].total), (1, 2));
        assert_eq!((acc[1].robust_correct, acc[1].total), (1, 1));
    }

    #[test]
    fn figure_csv_round_trip_and_golden_header() {
        let ms = vec![model(0, &[("z", 0.5), ("a", -0.25), ("m", 0.0)])];
        let s = robust_classify(&ms);
        let dir = tempfile::tempdir().unwrap();
        let paths = emit_figure_data(&s, dir.path()).unwrap();
        let text = fs::read_to_string(&paths[0]).unwrap();
        assert_eq!(
            text,
            "word,role,mean,sd,min,max,robust\na,kw,-0.25,0.0,-0.25,-0.25,true\nm,kw,0.0,0.0,0.0,0.0,false\nz,kw,0.5,0.0,0.5,0.5,true\n"
        );
        assert_eq!(read_figure_data(&paths[0]).unwrap(), figure_rows(&s[0]));
    }

    #[test]
    fn keyword_parsing() {
        let k = parse_keywords("# roles\nObese\tfatness\nslim\tslenderness\n", Path::new("k.tsv")).unwrap();
        assert_eq!(k[0], Keyword { token: "obese".into(), role: "fatness".into() });
        assert!(parse_keywords("lonely\n", Path::new("k.tsv")).is_err());
    }
}
