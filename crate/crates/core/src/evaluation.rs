//! Analogy and word-similarity benchmarks.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::vecmath::{analogy, cosine, Embeddings};

/// A named group of `a : b :: c : d` questions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnalogySection {
    pub name: String,
    pub questions: Vec<[String; 4]>,
}

/// Parses the Google analogy format: `: name` opens a section, every other
/// non-blank line holds four whitespace-separated tokens. Tokens are
/// lowercased. Questions before the first header go to a `default`
/// section.
pub fn parse_analogies<R: BufRead>(reader: R, source: &Path) -> Result<Vec<AnalogySection>> {
    let mut sections: Vec<AnalogySection> = Vec::new();
    let mut names = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(source, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(name) = trimmed.strip_prefix(':') {
            let name = name.trim().to_string();
            if !names.insert(name.clone()) {
                return Err(Error::parse(source, lineno, format!("duplicate section {name:?}")));
            }
            sections.push(AnalogySection {
                name,
                questions: Vec::new(),
            });
            continue;
        }
        let tokens: Vec<String> = trimmed.split_whitespace().map(str::to_lowercase).collect();
        let question: [String; 4] = tokens.try_into().map_err(|t: Vec<String>| {
            Error::parse(source, lineno, format!("expected 4 tokens, found {}", t.len()))
        })?;
        if sections.is_empty() {
            names.insert("default".to_string());
            sections.push(AnalogySection {
                name: "default".into(),
                questions: Vec::new(),
            });
        }
        sections.last_mut().expect("section exists").questions.push(question);
    }
    Ok(sections)
}

pub fn load_analogy_file(path: &Path) -> Result<Vec<AnalogySection>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_analogies(BufReader::new(file), path)
}

/// What to do with questions or pairs containing unknown words.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OovMode {
    /// Leave them out and report how many were skipped.
    #[default]
    Skip,
    /// Count analogy questions as wrong; score similarity pairs as 0.
    Wrong,
}

impl std::str::FromStr for OovMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "skip" | "skip-oov" => Ok(OovMode::Skip),
            "wrong" | "count-as-wrong" => Ok(OovMode::Wrong),
            other => Err(Error::Config(format!("unknown OOV mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SectionScore {
    pub name: String,
    pub total: usize,
    pub answered: usize,
    pub skipped: usize,
    pub correct: usize,
    /// `correct / answered`, or `None` when nothing was answered.
    pub accuracy: Option<f64>,
}

impl SectionScore {
    fn finish(mut self) -> Self {
        self.accuracy = (self.answered > 0).then(|| self.correct as f64 / self.answered as f64);
        self
    }

    fn merge(name: &str, parts: &[&SectionScore]) -> Self {
        SectionScore {
            name: name.to_string(),
            total: parts.iter().map(|s| s.total).sum(),
            answered: parts.iter().map(|s| s.answered).sum(),
            skipped: parts.iter().map(|s| s.skipped).sum(),
            correct: parts.iter().map(|s| s.correct).sum(),
            accuracy: None,
        }
        .finish()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalogyReport {
    pub oov_mode: OovMode,
    pub sections: Vec<SectionScore>,
    pub family: Option<SectionScore>,
    /// Sections whose names start with `gram`.
    pub syntactic: SectionScore,
    pub semantic: SectionScore,
    pub all: SectionScore,
}

enum Outcome {
    Correct,
    Wrong,
    Skipped,
}

fn answer(emb: &Embeddings, q: &[String; 4]) -> Outcome {
    if q.iter().any(|w| emb.vocab().idx(w).is_none()) {
        return Outcome::Skipped;
    }
    match analogy(emb, &q[0], &q[1], &q[2]) {
        Ok(r) if r.word == q[3] => Outcome::Correct,
        _ => Outcome::Wrong,
    }
}

/// Scores every question; a question is correct iff the analogy query
/// returns its fourth word.
pub fn eval_analogy(emb: &Embeddings, sections: &[AnalogySection], mode: OovMode) -> AnalogyReport {
    let scores: Vec<SectionScore> = sections
        .iter()
        .map(|section| {
            let outcomes: Vec<Outcome> = section.questions.par_iter().map(|q| answer(emb, q)).collect();
            let mut s = SectionScore {
                name: section.name.clone(),
                total: outcomes.len(),
                ..Default::default()
            };
            for o in outcomes {
                match (o, mode) {
                    (Outcome::Correct, _) => {
                        s.answered += 1;
                        s.correct += 1;
                    }
                    (Outcome::Wrong, _) | (Outcome::Skipped, OovMode::Wrong) => s.answered += 1,
                    (Outcome::Skipped, OovMode::Skip) => s.skipped += 1,
                }
            }
            s.finish()
        })
        .collect();

    let syntactic: Vec<&SectionScore> = scores.iter().filter(|s| s.name.starts_with("gram")).collect();
    let semantic: Vec<&SectionScore> = scores.iter().filter(|s| !s.name.starts_with("gram")).collect();
    let all: Vec<&SectionScore> = scores.iter().collect();
    AnalogyReport {
        oov_mode: mode,
        family: scores.iter().find(|s| s.name == "family").cloned(),
        syntactic: SectionScore::merge("syntactic", &syntactic),
        semantic: SectionScore::merge("semantic", &semantic),
        all: SectionScore::merge("all", &all),
        sections: scores,
    }
}

/// A human-rated word pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityPair {
    pub w1: String,
    pub w2: String,
    pub human_score: f64,
}

/// Reads a CSV with a header row and columns `word1, word2, score`.
pub fn parse_wordsim<R: Read>(reader: R, source: &Path) -> Result<Vec<SimilarityPair>> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut pairs = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let lineno = i + 2;
        let record = record.map_err(|e| Error::parse(source, lineno, e.to_string()))?;
        if record.len() < 3 {
            return Err(Error::parse(source, lineno, "expected word1,word2,score"));
        }
        let human_score: f64 = record[2]
            .parse()
            .map_err(|_| Error::parse(source, lineno, format!("bad score {:?}", &record[2])))?;
        if !human_score.is_finite() {
            return Err(Error::parse(source, lineno, "score is not finite"));
        }
        pairs.push(SimilarityPair {
            w1: record[0].to_lowercase(),
            w2: record[1].to_lowercase(),
            human_score,
        });
    }
    Ok(pairs)
}

pub fn load_wordsim(path: &Path) -> Result<Vec<SimilarityPair>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_wordsim(file, path)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WordsimReport {
    pub oov_mode: OovMode,
    pub rho: f64,
    pub n_used: usize,
    pub n_total: usize,
    pub skipped: usize,
    /// Two-sided t-approximation; advisory only.
    pub p_value: Option<f64>,
}

/// Spearman correlation between human scores and model cosines.
pub fn eval_wordsim(emb: &Embeddings, pairs: &[SimilarityPair], mode: OovMode) -> Result<WordsimReport> {
    let mut human = Vec::with_capacity(pairs.len());
    let mut model = Vec::with_capacity(pairs.len());
    for p in pairs {
        match (emb.unit(&p.w1), emb.unit(&p.w2)) {
            (Some(a), Some(b)) => {
                human.push(p.human_score);
                model.push(cosine(a, b).unwrap_or(0.0));
            }
            _ if mode == OovMode::Wrong => {
                human.push(p.human_score);
                model.push(0.0);
            }
            _ => {}
        }
    }
    if human.len() < 2 {
        return Err(Error::Empty(format!(
            "only {} usable similarity pairs; need at least 2",
            human.len()
        )));
    }
    let rho = spearman(&human, &model)?;
    Ok(WordsimReport {
        oov_mode: mode,
        rho,
        n_used: human.len(),
        n_total: pairs.len(),
        skipped: pairs.len() - human.len(),
        p_value: spearman_p_value(rho, human.len()),
    })
}

/// 1-based ranks with ties given their average rank.
pub fn midranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && x[order[j]] == x[order[i]] {
            j += 1;
        }
        // Positions i..j (0-based) share ranks i+1..=j.
        let rank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("zero variance".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson correlation of midranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::Empty("spearman needs at least 2 observations".into()));
    }
    pearson(&midranks(x), &midranks(y))
}

/// `t = rho * sqrt((n-2)/(1-rho²))` against Student's t with `n-2` degrees
/// of freedom.
pub fn spearman_p_value(rho: f64, n: usize) -> Option<f64> {
    if n < 3 {
        return None;
    }
    let df = (n - 2) as f64;
    if rho.abs() >= 1.0 {
        return Some(0.0);
    }
    let t = rho * (df / (1.0 - rho * rho)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).ok()?;
    Some(2.0 * (1.0 - dist.cdf(t.abs())))
}
