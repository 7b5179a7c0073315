//! Cosine geometry over trained word vectors.

use std::collections::HashSet;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::embedding::{EmbeddingModel, Matrix};
use crate::error::{Error, Result};

/// `Σ aᵢbᵢ / (‖a‖‖b‖)`, clamped to `[-1, 1]`.
pub fn cosine<T: Copy + Into<f64>>(a: &[T], b: &[T]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x.into(), y.into());
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Degenerate("cosine of a zero vector".into()));
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

/// Scales `v` to unit length; zero vectors are left unchanged.
pub fn normalize_in_place(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// A ranked neighbor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub word: String,
    pub index: u32,
    pub similarity: f64,
}

/// Unit-normalized word vectors for querying. Built once per model.
#[derive(Clone, Debug)]
pub struct Embeddings {
    vocab: Vocabulary,
    unit: Matrix,
    zero: Vec<bool>,
}

impl Embeddings {
    pub fn new(model: &EmbeddingModel) -> Self {
        Self::from_parts(model.vocab().clone(), model.input())
    }

    pub fn from_parts(vocab: Vocabulary, vectors: &Matrix) -> Self {
        let mut unit = vectors.clone();
        let mut zero = Vec::with_capacity(unit.rows());
        for i in 0..unit.rows() {
            let row = unit.row_mut(i);
            let norm = row.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|x| *x = (*x as f64 / norm) as f32);
            }
            zero.push(norm == 0.0);
        }
        Embeddings { vocab, unit, zero }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.unit.cols()
    }

    pub fn len(&self) -> usize {
        self.unit.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.unit.rows() == 0
    }

    pub fn idx(&self, word: &str) -> Result<u32> {
        self.vocab
            .idx(word)
            .ok_or_else(|| Error::OutOfVocabulary(word.to_string()))
    }

    pub fn unit_row(&self, idx: u32) -> &[f32] {
        self.unit.row(idx as usize)
    }

    pub fn unit(&self, word: &str) -> Option<&[f32]> {
        self.vocab.idx(word).map(|i| self.unit_row(i))
    }

    pub fn unit_f64(&self, word: &str) -> Result<Vec<f64>> {
        let i = self.idx(word)?;
        Ok(self.unit_row(i).iter().map(|&x| x as f64).collect())
    }

    /// Top `k` rows by cosine to `query`, skipping `exclude` and zero rows.
    /// Ties go to the lower vocabulary index.
    pub fn nearest_to_vector(&self, query: &[f64], k: usize, exclude: &HashSet<u32>) -> Result<Vec<QueryResult>> {
        if query.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: query.len(),
            });
        }
        let mut q = query.to_vec();
        if normalize_in_place(&mut q) == 0.0 {
            return Err(Error::Degenerate("query vector is zero".into()));
        }
        let mut scored: Vec<(f64, u32)> = (0..self.len() as u32)
            .filter(|i| !exclude.contains(i) && !self.zero[*i as usize])
            .map(|i| {
                let sim: f64 = self
                    .unit_row(i)
                    .iter()
                    .zip(&q)
                    .map(|(&a, &b)| a as f64 * b)
                    .sum();
                (sim.clamp(-1.0, 1.0), i)
            })
            .collect();
        let k = k.min(scored.len());
        let by_rank = |a: &(f64, u32), b: &(f64, u32)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
        if k < scored.len() && k > 0 {
            scored.select_nth_unstable_by(k - 1, by_rank);
        }
        scored.truncate(k);
        scored.sort_by(by_rank);
        Ok(scored
            .into_iter()
            .map(|(similarity, index)| QueryResult {
                word: self.vocab.word(index).to_string(),
                index,
                similarity,
            })
            .collect())
    }
}

/// The `k` most similar words to `word`, excluding the word itself and
/// anything in `exclude`.
pub fn nearest_neighbors(
    emb: &Embeddings,
    word: &str,
    k: usize,
    exclude: &HashSet<String>,
) -> Result<Vec<QueryResult>> {
    let idx = emb.idx(word)?;
    let mut skip: HashSet<u32> = exclude.iter().filter_map(|w| emb.vocab.idx(w)).collect();
    skip.insert(idx);
    let query = emb.unit_f64(word)?;
    emb.nearest_to_vector(&query, k, &skip)
}

/// Solves `a : b :: c : ?` as the word maximizing `cos(x, b - a + c)` over
/// unit vectors, never returning `a`, `b` or `c`.
pub fn analogy(emb: &Embeddings, a: &str, b: &str, c: &str) -> Result<QueryResult> {
    let ids = [emb.idx(a)?, emb.idx(b)?, emb.idx(c)?];
    let target: Vec<f64> = (0..emb.dim())
        .map(|j| {
            emb.unit_row(ids[1])[j] as f64 - emb.unit_row(ids[0])[j] as f64
                + emb.unit_row(ids[2])[j] as f64
        })
        .collect();
    let exclude: HashSet<u32> = ids.into_iter().collect();
    emb.nearest_to_vector(&target, 1, &exclude)?
        .pop()
        .ok_or_else(|| Error::Empty("no candidate words outside the query".into()))
}

/// Mean of unit word vectors, with the words it could not find.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanVector {
    pub vector: Vec<f64>,
    pub found: usize,
    pub missing: Vec<String>,
}

impl MeanVector {
    pub fn coverage(&self) -> f64 {
        self.found as f64 / (self.found + self.missing.len()) as f64
    }
}

/// Averages the unit vectors of the in-vocabulary `words` (repeats count
/// each time). Out-of-vocabulary words are skipped and reported.
pub fn mean_vector<S: AsRef<str>>(emb: &Embeddings, words: &[S]) -> Result<MeanVector> {
    let mut acc = vec![0.0f64; emb.dim()];
    let mut found = 0;
    let mut missing = Vec::new();
    for w in words {
        let w = w.as_ref();
        match emb.unit(w) {
            Some(row) => {
                for (a, &x) in acc.iter_mut().zip(row) {
                    *a += x as f64;
                }
                found += 1;
            }
            None => missing.push(w.to_string()),
        }
    }
    if found == 0 {
        return Err(Error::Empty("none of the words are in the vocabulary".into()));
    }
    if !missing.is_empty() {
        warn!("{} of {} words not in vocabulary: {:?}", missing.len(), words.len(), missing);
    }
    acc.iter_mut().for_each(|a| *a /= found as f64);
    Ok(MeanVector {
        vector: acc,
        found,
        missing,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn embeddings(rows: &[(&str, &[f32])]) -> Embeddings {
        let n = rows[0].1.len();
        let vocab = Vocabulary::from_words(rows.iter().map(|(w, _)| w.to_string()).collect()).unwrap();
        let data = rows.iter().flat_map(|(_, v)| v.iter().copied()).collect();
        Embeddings::from_parts(vocab, &Matrix::from_vec(rows.len(), n, data).unwrap())
    }

    #[test]
    fn cosine_examples() {
        let v = [0.3f64, -1.2, 4.0];
        assert!((cosine(&v, &v).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[1.0f64, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let c = cosine(&[1.0f64, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert!((c - 32.0 / (14.0f64 * 77.0).sqrt()).abs() < 1e-15);
        assert!((c - 0.974_631_846_197_076_2).abs() < 1e-12);
        assert!(cosine(&[0.0f64, 0.0], &[1.0, 0.0]).is_err());
        assert!(cosine(&[1.0f64], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn planted_duplicate_neighbor() {
        let e = embeddings(&[
            ("w", &[0.2, 0.7, -0.1]),
            ("x", &[1.0, 0.0, 0.0]),
            ("u", &[0.2, 0.7, -0.1]),
            ("y", &[0.0, 0.0, 1.0]),
        ]);
        let res = nearest_neighbors(&e, "w", 1, &HashSet::new()).unwrap();
        assert_eq!(res[0].word, "u");
        assert!((res[0].similarity - 1.0).abs() < 1e-6);

        let excl: HashSet<String> = ["u".to_string()].into();
        let res = nearest_neighbors(&e, "w", 10, &excl).unwrap();
        assert_eq!(res.len(), 2);
        assert!(res.iter().all(|r| r.word != "w" && r.word != "u"));
        assert!(nearest_neighbors(&e, "zzz", 1, &HashSet::new()).is_err());
    }

    #[test]
    fn planted_analogy() {
        // d = b - a + c exactly, all unit length.
        let e = embeddings(&[
            ("man", &[1.0, 0.0, 0.0]),
            ("king", &[0.0, 1.0, 0.0]),
            ("woman", &[0.0, 0.0, 1.0]),
            ("queen", &[-0.577_350_26, 0.577_350_26, 0.577_350_26]),
            ("other", &[0.6, 0.8, 0.0]),
        ]);
        let r = analogy(&e, "man", "king", "woman").unwrap();
        assert_eq!(r.word, "queen");
        assert!((r.similarity - 1.0).abs() < 1e-6);
        assert!(analogy(&e, "man", "king", "nope").is_err());
    }

    #[test]
    fn analogy_with_equal_a_b_is_neighbor_of_c() {
        let e = embeddings(&[
            ("a", &[1.0, 0.0]),
            ("c", &[0.0, 1.0]),
            ("near", &[0.1, 1.0]),
            ("far", &[1.0, -0.2]),
        ]);
        let r = analogy(&e, "a", "a", "c").unwrap();
        let nn = nearest_neighbors(&e, "c", 1, &["a".to_string()].into()).unwrap();
        assert_eq!(r.word, nn[0].word);
        assert_eq!(r.word, "near");
    }

    #[test]
    fn mean_vector_examples() {
        let e = embeddings(&[("x", &[2.0, 0.0]), ("y", &[0.0, 5.0]), ("z", &[-3.0, 0.0])]);
        let m = mean_vector(&e, &["x", "y"]).unwrap();
        assert_eq!(m.vector, vec![0.5, 0.5]);
        let single = mean_vector(&e, &["x"]).unwrap();
        assert_eq!(single.vector, vec![1.0, 0.0]);
        let opposite = mean_vector(&e, &["x", "z"]).unwrap();
        assert_eq!(opposite.vector, vec![0.0, 0.0]);
        let partial = mean_vector(&e, &["x", "nope"]).unwrap();
        assert_eq!(partial.missing, vec!["nope"]);
        assert_eq!(partial.coverage(), 0.5);
        assert!(mean_vector(&e, &["nope"]).is_err());
    }

    #[test]
    fn ties_break_by_lower_index() {
        let e = embeddings(&[("q", &[1.0, 0.0]), ("b", &[0.0, 1.0]), ("a", &[0.0, -1.0]), ("c", &[0.0, 1.0])]);
        let res = nearest_neighbors(&e, "q", 3, &HashSet::new()).unwrap();
        assert_eq!(res.iter().map(|r| r.index).collect::<Vec<_>>(), vec![1, 2, 3]);
    }
}
