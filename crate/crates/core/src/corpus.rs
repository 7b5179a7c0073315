//! Corpus ingestion and cleaning: documents in, tokenized sentences and a
//! frequency-filtered vocabulary out.
//!
//! The pipeline is `load_documents` → `filter_documents` → `split_sentences`
//! → `normalize` → `detect_phrases` → `build_vocab`. Every stage is
//! deterministic and preserves document order.

use std::collections::{HashMap, HashSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Characters removed during normalization: all Unicode punctuation plus
/// the ASCII symbol characters (`$+<=>^`|~`).
static PUNCTUATION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[\p{P}[\p{S}&&\p{ascii}]]").expect("valid regex"));

/// One raw document.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub text: String,
}

/// A normalized, tokenized sentence.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Sentence(pub Vec<String>);

impl Sentence {
    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Input layout for [`load_documents`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DocumentFormat {
    /// A directory of UTF-8 `.txt` files, one document per file.
    TextDir,
    /// One JSON object per line with fields `id` and `text`.
    Jsonl,
}

/// Reads every document under `path`.
///
/// Text directories are read non-recursively in file-name order; the file
/// stem becomes the document id. JSONL records without an `id` get their
/// 1-based line number as id.
pub fn load_documents(path: &Path, format: DocumentFormat) -> Result<Vec<Document>> {
    match format {
        DocumentFormat::TextDir => load_text_dir(path),
        DocumentFormat::Jsonl => load_jsonl(path),
    }
}

fn load_text_dir(path: &Path) -> Result<Vec<Document>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(path).map_err(|e| Error::io(path, e))? {
        let entry = entry.map_err(|e| Error::io(path, e))?;
        let p = entry.path();
        if p.is_file() && p.extension().is_some_and(|ext| ext == "txt") {
            files.push(p);
        }
    }
    files.sort();

    files
        .into_iter()
        .map(|p| {
            let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
            let id = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok(Document { id, text })
        })
        .collect()
}

#[derive(Deserialize)]
struct JsonlRecord {
    id: Option<serde_json::Value>,
    text: Option<String>,
}

fn load_jsonl(path: &Path) -> Result<Vec<Document>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut docs = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: JsonlRecord = serde_json::from_str(&line)
            .map_err(|e| Error::parse(path, lineno, format!("malformed JSON: {e}")))?;
        let text = record
            .text
            .ok_or_else(|| Error::parse(path, lineno, "record has no \"text\" field"))?;
        let id = match record.id {
            Some(serde_json::Value::String(s)) => s,
            Some(other) => other.to_string(),
            None => lineno.to_string(),
        };
        docs.push(Document { id, text });
    }
    Ok(docs)
}

/// Outcome of [`filter_documents`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub input: usize,
    pub kept: usize,
    pub dropped: usize,
}

impl FilterReport {
    pub fn dropped_fraction(&self) -> f64 {
        if self.input == 0 {
            0.0
        } else {
            self.dropped as f64 / self.input as f64
        }
    }
}

impl std::fmt::Display for FilterReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({:.1}%)", self.dropped, 100.0 * self.dropped_fraction())
    }
}

/// Drops documents whose normalized tokens include any exclusion term.
///
/// Matching is on whole tokens, so `recipes` does not match `recipe`.
pub fn filter_documents(
    docs: Vec<Document>,
    exclusion_terms: &HashSet<String>,
) -> (Vec<Document>, FilterReport) {
    let input = docs.len();
    if exclusion_terms.is_empty() {
        return (
            docs,
            FilterReport {
                input,
                kept: input,
                dropped: 0,
            },
        );
    }
    let kept: Vec<Document> = docs
        .into_iter()
        .filter(|d| {
            !normalize(&d.text)
                .0
                .iter()
                .any(|t| exclusion_terms.contains(t))
        })
        .collect();
    let report = FilterReport {
        input,
        kept: kept.len(),
        dropped: input - kept.len(),
    };
    (kept, report)
}

fn is_terminator(c: char) -> bool {
    matches!(c, ';' | ':' | '!' | '.' | '?')
}

fn is_quote(c: char) -> bool {
    matches!(c, '"' | '\u{201C}' | '\u{201D}')
}

/// Splits text into raw sentences.
///
/// A sentence ends at a run of `; : ! . ?` characters, or at a double quote
/// followed by whitespace or end of text. Sentences are trimmed; content after
/// the last terminator becomes a final sentence.
pub fn split_sentences(text: &str) -> Vec<String> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut i = 0;

    while i < chars.len() {
        let (_, c) = chars[i];
        let ends_here = if is_terminator(c) {
            true
        } else if is_quote(c) {
            chars
                .get(i + 1)
                .is_none_or(|&(_, next)| next.is_whitespace())
        } else {
            false
        };

        if ends_here {
            // Absorb a run of terminators ("...", "?!", ".\"").
            let mut j = i + 1;
            while j < chars.len() {
                let (_, n) = chars[j];
                let quote_end = is_quote(n)
                    && chars
                        .get(j + 1)
                        .is_none_or(|&(_, next)| next.is_whitespace());
                if is_terminator(n) || quote_end {
                    j += 1;
                } else {
                    break;
                }
            }
            let end = chars.get(j).map_or(text.len(), |&(b, _)| b);
            push_trimmed(&mut sentences, &text[start..end]);
            start = end;
            i = j;
        } else {
            i += 1;
        }
    }
    push_trimmed(&mut sentences, &text[start..]);
    sentences
}

fn push_trimmed(out: &mut Vec<String>, s: &str) {
    let s = s.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
}

/// Lowercases, strips punctuation and splits on whitespace.
pub fn normalize(sentence: &str) -> Sentence {
    let lowered = sentence.to_lowercase();
    let stripped = PUNCTUATION.replace_all(&lowered, "");
    Sentence(stripped.split_whitespace().map(str::to_string).collect())
}

/// Splits and normalizes a document, discarding sentences with no tokens.
pub fn tokenize_document(text: &str) -> Vec<Sentence> {
    split_sentences(text)
        .iter()
        .map(|s| normalize(s))
        .filter(|s| !s.is_empty())
        .collect()
}

/// Collocation scoring parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhraseConfig {
    /// Count discount subtracted from every bigram count.
    pub delta: f64,
    /// Minimum score for a bigram to be merged.
    pub threshold: f64,
    /// Number of bigram passes; a second pass can build trigrams.
    pub max_passes: usize,
}

impl Default for PhraseConfig {
    fn default() -> Self {
        PhraseConfig {
            delta: 5.0,
            threshold: 10.0,
            max_passes: 1,
        }
    }
}

impl PhraseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta >= 0.0) {
            return Err(Error::Config("phrase delta must be >= 0".into()));
        }
        if !(self.threshold > 0.0) {
            return Err(Error::Config("phrase threshold must be > 0".into()));
        }
        if self.max_passes < 1 {
            return Err(Error::Config("phrase max_passes must be >= 1".into()));
        }
        Ok(())
    }
}

/// Unigram and bigram statistics gathered in one counting pass.
#[derive(Clone, Debug, Default)]
pub struct PhraseStats {
    unigrams: HashMap<String, u64>,
    bigrams: HashMap<(String, String), u64>,
    total_tokens: u64,
}

impl PhraseStats {
    pub fn learn<'a>(sentences: impl IntoIterator<Item = &'a Sentence>) -> Self {
        let mut stats = PhraseStats::default();
        for sentence in sentences {
            let toks = sentence.tokens();
            stats.total_tokens += toks.len() as u64;
            for t in toks {
                *stats.unigrams.entry(t.clone()).or_insert(0) += 1;
            }
            for pair in toks.windows(2) {
                *stats
                    .bigrams
                    .entry((pair[0].clone(), pair[1].clone()))
                    .or_insert(0) += 1;
            }
        }
        stats
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn unigram_count(&self, token: &str) -> u64 {
        self.unigrams.get(token).copied().unwrap_or(0)
    }

    pub fn bigram_count(&self, a: &str, b: &str) -> u64 {
        self.bigrams
            .get(&(a.to_string(), b.to_string()))
            .copied()
            .unwrap_or(0)
    }

    /// `(count(ab) - delta) * T / (count(a) * count(b))`, or `None` if the
    /// bigram was never seen.
    pub fn score(&self, a: &str, b: &str, delta: f64) -> Option<f64> {
        let ab = self.bigram_count(a, b);
        if ab == 0 {
            return None;
        }
        Some(phrase_score(
            ab,
            self.unigram_count(a),
            self.unigram_count(b),
            self.total_tokens,
            delta,
        ))
    }

    /// Rewrites a sentence left to right, merging every qualifying pair.
    pub fn apply(&self, sentence: &Sentence, cfg: &PhraseConfig) -> Sentence {
        let toks = sentence.tokens();
        let mut out = Vec::with_capacity(toks.len());
        let mut i = 0;
        while i < toks.len() {
            if i + 1 < toks.len() {
                if let Some(score) = self.score(&toks[i], &toks[i + 1], cfg.delta) {
                    if score > cfg.threshold {
                        out.push(format!("{}_{}", toks[i], toks[i + 1]));
                        i += 2;
                        continue;
                    }
                }
            }
            out.push(toks[i].clone());
            i += 1;
        }
        Sentence(out)
    }
}

/// The collocation score of a bigram given its raw counts.
pub fn phrase_score(count_ab: u64, count_a: u64, count_b: u64, total: u64, delta: f64) -> f64 {
    (count_ab as f64 - delta) * total as f64 / (count_a as f64 * count_b as f64)
}

/// Merges frequent adjacent pairs into `a_b` tokens, running
/// `cfg.max_passes` count-then-rewrite passes.
pub fn detect_phrases(sentences: Vec<Sentence>, cfg: &PhraseConfig) -> Vec<Sentence> {
    let mut current = sentences;
    for _ in 0..cfg.max_passes {
        let stats = PhraseStats::learn(&current);
        current = current.iter().map(|s| stats.apply(s, cfg)).collect();
    }
    current
}

/// Token ↔ index map with corpus frequencies.
///
/// Indices are dense and assigned by descending count, ties broken
/// lexicographically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
    total_tokens: u64,
    min_count: u64,
}

impl Vocabulary {
    /// Builds a vocabulary from raw counts, keeping tokens with
    /// `count >= min_count`.
    pub fn from_counts(counts: HashMap<String, u64>, total_tokens: u64, min_count: u64) -> Self {
        let mut entries: Vec<(String, u64)> =
            counts.into_iter().filter(|(_, c)| *c >= min_count).collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self::from_ordered(entries, total_tokens, min_count)
            .expect("counted tokens are unique")
    }

    /// Builds a vocabulary whose indices follow `entries` order.
    pub fn from_ordered(entries: Vec<(String, u64)>, total_tokens: u64, min_count: u64) -> Result<Self> {
        let mut words = Vec::with_capacity(entries.len());
        let mut counts = Vec::with_capacity(entries.len());
        let mut index = HashMap::with_capacity(entries.len());
        for (i, (w, c)) in entries.into_iter().enumerate() {
            if index.insert(w.clone(), i as u32).is_some() {
                return Err(Error::Format(format!("duplicate token {w:?}")));
            }
            words.push(w);
            counts.push(c);
        }
        Ok(Vocabulary {
            words,
            counts,
            index,
            total_tokens,
            min_count,
        })
    }

    /// A vocabulary without frequency information, as read from interchange
    /// embedding formats.
    pub fn from_words(words: Vec<String>) -> Result<Self> {
        Self::from_ordered(words.into_iter().map(|w| (w, 0)).collect(), 0, 0)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn idx(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn word(&self, idx: u32) -> &str {
        &self.words[idx as usize]
    }

    pub fn count(&self, idx: u32) -> u64 {
        self.counts[idx as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Raw token occurrences before frequency filtering.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    /// Maps a sentence to indices, dropping out-of-vocabulary tokens.
    pub fn encode(&self, sentence: &Sentence) -> Vec<u32> {
        sentence.tokens().iter().filter_map(|t| self.idx(t)).collect()
    }

    /// Writes `token<TAB>count` lines in index order.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (word, count) in self.words.iter().zip(&self.counts) {
            writeln!(w, "{word}\t{count}")?;
        }
        Ok(())
    }

    /// Reads a vocabulary written by [`Vocabulary::write_tsv`].
    pub fn read_tsv<R: BufRead>(r: R, source: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::io(source, e))?;
            if line.is_empty() {
                continue;
            }
            let (word, count) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(source, i + 1, "expected token<TAB>count"))?;
            let count: u64 = count
                .parse()
                .map_err(|_| Error::parse(source, i + 1, format!("bad count {count:?}")))?;
            entries.push((word.to_string(), count));
        }
        let total = entries.iter().map(|(_, c)| c).sum();
        let min = entries.iter().map(|(_, c)| *c).min().unwrap_or(0);
        Self::from_ordered(entries, total, min)
    }
}

/// Counts tokens and keeps those occurring at least `min_count` times.
pub fn build_vocab<'a>(
    sentences: impl IntoIterator<Item = &'a Sentence>,
    min_count: u64,
) -> Result<Vocabulary> {
    if min_count < 1 {
        return Err(Error::Config("min_count must be >= 1".into()));
    }
    let mut counts: HashMap<String, u64> = HashMap::new();
    let mut total = 0u64;
    for s in sentences {
        for t in s.tokens() {
            total += 1;
            *counts.entry(t.clone()).or_insert(0) += 1;
        }
    }
    let vocab = Vocabulary::from_counts(counts, total, min_count);
    if vocab.is_empty() {
        return Err(Error::Empty(format!(
            "no token occurs at least {min_count} times"
        )));
    }
    Ok(vocab)
}

/// A cleaned corpus that keeps document boundaries.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProcessedCorpus {
    pub documents: Vec<Vec<Sentence>>,
}

impl ProcessedCorpus {
    pub fn sentences(&self) -> impl Iterator<Item = &Sentence> {
        self.documents.iter().flatten()
    }

    pub fn num_sentences(&self) -> usize {
        self.documents.iter().map(Vec::len).sum()
    }

    pub fn num_tokens(&self) -> usize {
        self.sentences().map(Sentence::len).sum()
    }

    /// One sentence per line, space-separated tokens, a blank line after
    /// each document.
    pub fn write<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut w = BufWriter::new(w);
        for doc in &self.documents {
            for s in doc {
                writeln!(w, "{}", s.0.join(" "))?;
            }
            writeln!(w)?;
        }
        w.flush()
    }

    pub fn read<R: BufRead>(r: R, source: &Path) -> Result<Self> {
        let mut documents = Vec::new();
        let mut current = Vec::new();
        for line in r.lines() {
            let line = line.map_err(|e| Error::io(source, e))?;
            let tokens: Vec<String> = line.split_whitespace().map(str::to_string).collect();
            if tokens.is_empty() {
                if !current.is_empty() {
                    documents.push(std::mem::take(&mut current));
                }
            } else {
                current.push(Sentence(tokens));
            }
        }
        if !current.is_empty() {
            documents.push(current);
        }
        Ok(ProcessedCorpus { documents })
    }

    pub fn read_path(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file), path)
    }
}

/// Settings for the full cleaning pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub exclusion_terms: Vec<String>,
    pub phrases: PhraseConfig,
    /// Skip collocation merging entirely.
    pub detect_phrases: bool,
    pub min_count: u64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            exclusion_terms: Vec::new(),
            phrases: PhraseConfig::default(),
            detect_phrases: true,
            min_count: 40,
        }
    }
}

/// Counts reported by [`preprocess`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreprocessStats {
    pub documents_in: usize,
    pub documents_dropped: usize,
    pub dropped_fraction: f64,
    pub documents_kept: usize,
    pub sentences: usize,
    pub tokens: u64,
    pub phrase_tokens: u64,
    pub vocabulary_size: usize,
}

/// Runs filter → split → normalize → phrases → vocabulary.
pub fn preprocess(
    docs: Vec<Document>,
    cfg: &PreprocessConfig,
) -> Result<(ProcessedCorpus, Vocabulary, PreprocessStats)> {
    cfg.phrases.validate()?;
    let exclusion: HashSet<String> = cfg.exclusion_terms.iter().map(|t| t.to_lowercase()).collect();
    let (kept, report) = filter_documents(docs, &exclusion);

    let tokenized: Vec<Vec<Sentence>> = kept.iter().map(|d| tokenize_document(&d.text)).collect();
    let documents = if cfg.detect_phrases {
        // Phrase statistics are corpus-wide, so flatten and re-split.
        let lengths: Vec<usize> = tokenized.iter().map(Vec::len).collect();
        let mut merged = detect_phrases(tokenized.into_iter().flatten().collect(), &cfg.phrases).into_iter();
        lengths
            .into_iter()
            .map(|n| merged.by_ref().take(n).collect())
            .collect()
    } else {
        tokenized
    };
    let corpus = ProcessedCorpus { documents };
    let vocab = build_vocab(corpus.sentences(), cfg.min_count)?;
    let phrase_tokens = corpus
        .sentences()
        .flat_map(|s| s.tokens())
        .filter(|t| t.contains('_'))
        .count() as u64;

    let stats = PreprocessStats {
        documents_in: report.input,
        documents_dropped: report.dropped,
        dropped_fraction: report.dropped_fraction(),
        documents_kept: report.kept,
        sentences: corpus.num_sentences(),
        tokens: vocab.total_tokens(),
        phrase_tokens,
        vocabulary_size: vocab.len(),
    };
    Ok((corpus, vocab, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sent(s: &str) -> Sentence {
        Sentence(s.split_whitespace().map(str::to_string).collect())
    }

    #[test]
    fn split_two_terminators() {
        assert_eq!(split_sentences("A b. C d!"), vec!["A b.", "C d!"]);
    }

    #[test]
    fn split_trailing_content() {
        assert_eq!(split_sentences("no terminator"), vec!["no terminator"]);
    }

    #[test]
    fn split_semicolon_colon_question() {
        assert_eq!(split_sentences("x; y: z?"), vec!["x;", "y:", "z?"]);
    }

    #[test]
    fn split_quotes_only_before_whitespace() {
        assert_eq!(
            split_sentences("He said \"stop\" then left"),
            vec!["He said \"stop\"", "then left"]
        );
        // An opening quote is followed by a letter and does not split.
        assert_eq!(split_sentences("\"go"), vec!["\"go"]);
    }

    #[test]
    fn split_absorbs_terminator_runs() {
        assert_eq!(split_sentences("Wait... what?!"), vec!["Wait...", "what?!"]);
        assert_eq!(split_sentences("Done.\" Next"), vec!["Done.\"", "Next"]);
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize("Obesity, rising!"), sent("obesity rising"));
        assert_eq!(normalize("U.S.A."), sent("usa"));
        assert_eq!(normalize(""), Sentence::default());
        assert_eq!(normalize("costs $5 + tax"), sent("costs 5 tax"));
        assert_eq!(normalize("«Élan» — über"), sent("élan über"));
    }

    #[test]
    fn filter_drops_whole_token_matches() {
        let docs = vec![
            Document { id: "1".into(), text: "A great recipe.".into() },
            Document { id: "2".into(), text: "Recipes galore".into() },
            Document { id: "3".into(), text: "preciperecipe words".into() },
        ];
        let terms: HashSet<String> = ["recipe".to_string()].into();
        let (kept, report) = filter_documents(docs, &terms);
        assert_eq!(kept.iter().map(|d| d.id.as_str()).collect::<Vec<_>>(), vec!["2", "3"]);
        assert_eq!(report.dropped, 1);
        assert_eq!(report.input, report.kept + report.dropped);
    }

    #[test]
    fn filter_reports_percentage() {
        let docs: Vec<Document> = (0..100)
            .map(|i| Document {
                id: i.to_string(),
                text: if i % 12 == 0 && i < 96 { "the recipe".into() } else { "the news".into() },
            })
            .collect();
        let expected_dropped = docs.iter().filter(|d| d.text.contains("recipe")).count();
        assert_eq!(expected_dropped, 8);
        let terms: HashSet<String> = ["recipe".to_string(), "recipes".to_string()].into();
        let (kept, report) = filter_documents(docs, &terms);
        assert_eq!(kept.len(), 92);
        assert_eq!(report.to_string(), "8 (8.0%)");
    }

    #[test]
    fn filter_empty_terms_is_identity() {
        let docs = vec![Document { id: "a".into(), text: "recipe".into() }];
        let (kept, report) = filter_documents(docs.clone(), &HashSet::new());
        assert_eq!(kept, docs);
        assert_eq!(report.dropped, 0);
    }

    #[test]
    fn phrase_score_hand_example() {
        let score = phrase_score(5, 6, 5, 1000, 0.0);
        assert!((score - 5000.0 / 30.0).abs() < 1e-12);
        assert!(score > 10.0);
    }

    #[test]
    fn phrases_merge_and_respect_threshold() {
        let mut sentences = vec![sent("new york is big"); 5];
        sentences.push(sent("new things"));
        sentences.extend(std::iter::repeat_n(sent("filler words here"), 20));
        let cfg = PhraseConfig { delta: 0.0, threshold: 10.0, max_passes: 1 };
        let merged = detect_phrases(sentences.clone(), &cfg);
        assert_eq!(merged[0], sent("new_york is_big"));

        let inf = PhraseConfig { threshold: f64::INFINITY, ..cfg.clone() };
        assert_eq!(detect_phrases(sentences.clone(), &inf), sentences);

        // count(ab) <= delta gives a non-positive score.
        let discounted = PhraseConfig { delta: 5.0, ..cfg };
        let out = detect_phrases(sentences, &discounted);
        assert!(out[0].tokens().iter().all(|t| !t.contains('_')));
    }

    #[test]
    fn two_passes_can_form_trigrams() {
        let sentences = vec![sent("a b c"); 10];
        let cfg = PhraseConfig { delta: 0.0, threshold: 0.5, max_passes: 2 };
        let out = detect_phrases(sentences, &cfg);
        assert_eq!(out[0], sent("a_b_c"));
    }

    #[test]
    fn vocab_min_count_and_ordering() {
        let mut sentences = vec![sent("x"); 41];
        sentences.extend(vec![sent("y"); 39]);
        let v = build_vocab(&sentences, 40).unwrap();
        assert_eq!(v.words(), ["x"]);
        assert_eq!(v.total_tokens(), 80);

        let v = build_vocab(&[sent("b a c a")], 1).unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(v.words(), ["a", "b", "c"]);
    }

    #[test]
    fn vocab_empty_is_error() {
        assert!(matches!(build_vocab(&[sent("a")], 2), Err(Error::Empty(_))));
    }

    #[test]
    fn jsonl_error_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.jsonl");
        fs::write(&p, "{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"b\",\"text\":\"y\"}\n{\"id\":\"c\"}\n").unwrap();
        match load_documents(&p, DocumentFormat::Jsonl) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        fs::write(&p, "{\"id\":\"a\",\"text\":\"x\"}\nnot json\n").unwrap();
        assert!(matches!(load_documents(&p, DocumentFormat::Jsonl), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn text_dir_loading() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_documents(dir.path(), DocumentFormat::TextDir).unwrap().is_empty());
        for name in ["b", "a", "c"] {
            fs::write(dir.path().join(format!("{name}.txt")), name).unwrap();
        }
        fs::write(dir.path().join("skip.md"), "no").unwrap();
        let docs = load_documents(dir.path(), DocumentFormat::TextDir).unwrap();
        assert_eq!(docs.len(), 3);
        assert_eq!(docs[0].id, "a");
    }

    #[test]
    fn processed_corpus_roundtrip() {
        let corpus = ProcessedCorpus {
            documents: vec![vec![sent("a b"), sent("c")], vec![sent("new_york")]],
        };
        let mut buf = Vec::new();
        corpus.write(&mut buf).unwrap();
        let back = ProcessedCorpus::read(&buf[..], Path::new("mem")).unwrap();
        assert_eq!(back, corpus);
    }
}
