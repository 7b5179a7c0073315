//! Soft-margin linear SVM by dual coordinate descent on the hinge loss.
//!
//! The bias is learned as the weight of a constant feature appended to every
//! input, so it is regularized together with the weights.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lexicon::{AnchorLexicon, Pole, Split};
use crate::error::{Error, Result};
use crate::vecmath::Embeddings;

pub const DEFAULT_C_GRID: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmOptions {
    pub c_grid: Vec<f64>,
    /// Folds for choosing C; capped at the number of distinct anchors.
    pub cv_folds: usize,
    pub seed: u64,
    pub max_epochs: usize,
    /// Stopping threshold on the spread of projected gradients.
    pub tolerance: f64,
}

impl Default for SvmOptions {
    fn default() -> Self {
        SvmOptions {
            c_grid: DEFAULT_C_GRID.to_vec(),
            cv_folds: 5,
            seed: 1,
            max_epochs: 1000,
            tolerance: 1e-6,
        }
    }
}

/// `decision(x) = weight · x + bias` on unit vectors; positive means the
/// positive pole.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearClassifier {
    pub name: String,
    pub weight: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub pole_names: (String, String),
}

impl LinearClassifier {
    pub fn decision(&self, x: &[f32]) -> Result<f64> {
        if x.len() != self.weight.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weight.len(),
                actual: x.len(),
            });
        }
        Ok(self.weight.iter().zip(x).map(|(w, &v)| w * v as f64).sum::<f64>() + self.bias)
    }

    /// Decision value for a word's unit vector.
    pub fn decision_word(&self, emb: &Embeddings, word: &str) -> Result<f64> {
        let idx = emb.idx(word)?;
        self.decision(emb.unit_row(idx))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmFit {
    pub classifier: LinearClassifier,
    /// `(C, cross-validated accuracy)` in grid order.
    pub cv_accuracy: Vec<(f64, f64)>,
    pub warnings: Vec<String>,
}

struct Sample<'a> {
    x: &'a [f32],
    y: f64,
    group: usize,
}

/// Trains on the lexicon's in-vocabulary training anchors, picking C from
/// the grid by cross-validation grouped by distinct word.
pub fn train_svm(emb: &Embeddings, lexicon: &AnchorLexicon, opts: &SvmOptions) -> Result<SvmFit> {
    if opts.c_grid.is_empty() || opts.c_grid.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
        return Err(Error::Config("SVM C grid must be non-empty and positive".into()));
    }
    let mut groups: Vec<&str> = Vec::new();
    let mut samples = Vec::new();
    for e in lexicon.split(Split::Train) {
        let Some(x) = emb.unit(&e.word) else { continue };
        let group = match groups.iter().position(|w| *w == e.word) {
            Some(g) => g,
            None => {
                groups.push(&e.word);
                groups.len() - 1
            }
        };
        samples.push(Sample { x, y: e.pole.sign(), group });
    }
    for pole in [Pole::Positive, Pole::Negative] {
        let n = samples.iter().filter(|s| s.y == pole.sign()).count();
        if n < 2 {
            return Err(Error::Empty(format!(
                "lexicon {}: SVM needs at least 2 in-vocabulary {pole:?} training anchors, found {n}",
                lexicon.name
            )));
        }
    }

    let mut warnings = Vec::new();
    if let Some(w) = super::overfit_warning(samples.len(), emb.dim()) {
        warnings.push(w);
    }

    let folds = opts.cv_folds.clamp(1, groups.len());
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(opts.seed));
    let mut fold_of = vec![0; groups.len()];
    for (rank, &g) in order.iter().enumerate() {
        fold_of[g] = rank % folds;
    }

    let mut cv_accuracy = Vec::new();
    let mut best: Option<(f64, f64)> = None;
    for &c in &opts.c_grid {
        let acc = if folds < 2 {
            0.0
        } else {
            let mut correct = 0usize;
            let mut total = 0usize;
            for f in 0..folds {
                let train: Vec<&Sample> = samples.iter().filter(|s| fold_of[s.group] != f).collect();
                let (w, b) = dual_cd(&train, c, opts);
                for s in samples.iter().filter(|s| fold_of[s.group] == f) {
                    total += 1;
                    correct += usize::from((score(&w, b, s.x) > 0.0) == (s.y > 0.0));
                }
            }
            correct as f64 / total as f64
        };
        cv_accuracy.push((c, acc));
        best = match best {
            Some((bc, ba)) if ba > acc || (ba == acc && bc <= c) => Some((bc, ba)),
            _ => Some((c, acc)),
        };
    }
    let c = best.expect("non-empty grid").0;
    let all: Vec<&Sample> = samples.iter().collect();
    let (weight, bias) = dual_cd(&all, c, opts);
    Ok(SvmFit {
        classifier: LinearClassifier {
            name: lexicon.name.clone(),
            weight,
            bias,
            c,
            pole_names: lexicon.pole_names.clone(),
        },
        cv_accuracy,
        warnings,
    })
}

fn score(w: &[f64], b: f64, x: &[f32]) -> f64 {
    w.iter().zip(x).map(|(w, &v)| w * v as f64).sum::<f64>() + b
}

fn dual_cd(samples: &[&Sample], c: f64, opts: &SvmOptions) -> (Vec<f64>, f64) {
    let n = samples.first().map_or(0, |s| s.x.len());
    let mut w = vec![0.0; n];
    let mut b = 0.0;
    let mut alpha = vec![0.0; samples.len()];
    let q: Vec<f64> = samples
        .iter()
        .map(|s| s.x.iter().map(|&v| (v as f64).powi(2)).sum::<f64>() + 1.0)
        .collect();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    for _ in 0..opts.max_epochs {
        order.shuffle(&mut rng);
        let (mut pg_max, mut pg_min) = (f64::NEG_INFINITY, f64::INFINITY);
        for &i in &order {
            let s = samples[i];
            let g = s.y * score(&w, b, s.x) - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == c {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg.abs() > 1e-12 {
                let old = alpha[i];
                alpha[i] = (old - g / q[i]).clamp(0.0, c);
                let step = (alpha[i] - old) * s.y;
                for (wj, &xj) in w.iter_mut().zip(s.x) {
                    *wj += step * xj as f64;
                }
                b += step;
            }
        }
        if pg_max - pg_min < opts.tolerance {
            break;
        }
    }
    (w, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimension::tests::{emb, entry, planted};

    fn separable() -> (Embeddings, AnchorLexicon) {
        let e = emb(&[
            ("a", vec![1.0, 0.2]),
            ("b", vec![0.9, -0.3]),
            ("c", vec![0.8, 0.5]),
            ("x", vec![-1.0, 0.1]),
            ("y", vec![-0.7, -0.6]),
            ("z", vec![-0.9, 0.4]),
        ]);
        let mut entries: Vec<_> = ["a", "b", "c"].iter().map(|w| entry(w, Pole::Positive, None, Split::Train)).collect();
        entries.extend(["x", "y", "z"].iter().map(|w| entry(w, Pole::Negative, None, Split::Train)));
        entries.push(entry("a", Pole::Positive, None, Split::Test));
        (e, AnchorLexicon::new("s", ("p".into(), "n".into()), entries).unwrap())
    }

    #[test]
    fn separable_fixture_is_fit_with_margin() {
        let (e, lex) = separable();
        for &c in &DEFAULT_C_GRID {
            let opts = SvmOptions { c_grid: vec![c], ..Default::default() };
            let clf = train_svm(&e, &lex, &opts).unwrap().classifier;
            let mut margin = f64::INFINITY;
            for en in lex.split(Split::Train) {
                margin = margin.min(en.pole.sign() * clf.decision_word(&e, &en.word).unwrap());
            }
            assert!(margin > 0.0, "C={c} margin {margin}");
        }
    }

    #[test]
    fn large_c_reaches_hard_margin_kkt() {
        let (e, lex) = separable();
        let opts = SvmOptions { c_grid: vec![100.0], ..Default::default() };
        let clf = train_svm(&e, &lex, &opts).unwrap().classifier;
        let margins: Vec<f64> = lex
            .split(Split::Train)
            .map(|en| en.pole.sign() * clf.decision_word(&e, &en.word).unwrap())
            .collect();
        let min = margins.iter().copied().fold(f64::INFINITY, f64::min);
        assert!((min - 1.0).abs() < 1e-3, "{margins:?}");
    }

    #[test]
    fn grid_search_is_deterministic_and_prefers_small_c_on_ties() {
        let (e, lex) = separable();
        let a = train_svm(&e, &lex, &SvmOptions::default()).unwrap();
        let b = train_svm(&e, &lex, &SvmOptions::default()).unwrap();
        assert_eq!(a, b);
        let best = a.cv_accuracy.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
        let first = a.cv_accuracy.iter().find(|x| x.1 == best).unwrap().0;
        assert_eq!(a.classifier.c, first);
    }

    #[test]
    fn needs_two_anchors_per_pole() {
        let e = emb(&[("a", vec![1.0, 0.0]), ("b", vec![0.9, 0.1]), ("x", vec![-1.0, 0.0])]);
        let lex = AnchorLexicon::new(
            "s",
            ("p".into(), "n".into()),
            vec![
                entry("a", Pole::Positive, None, Split::Train),
                entry("b", Pole::Positive, None, Split::Train),
                entry("x", Pole::Negative, None, Split::Train),
                entry("oov", Pole::Negative, None, Split::Train),
                entry("a", Pole::Positive, None, Split::Test),
            ],
        )
        .unwrap();
        assert!(matches!(train_svm(&e, &lex, &SvmOptions::default()), Err(Error::Empty(_))));
        assert!(train_svm(&e, &lex, &SvmOptions { c_grid: vec![], ..Default::default() }).is_err());
    }

    #[test]
    fn overfitting_warning_when_few_anchors() {
        let (e, lex, _) = planted(50, 10, 4, 0.1, 2);
        let fit = train_svm(&e, &lex, &SvmOptions::default()).unwrap();
        assert_eq!(fit.warnings.len(), 1);
        let (e, lex, _) = planted(5, 10, 4, 0.1, 2);
        assert!(train_svm(&e, &lex, &SvmOptions::default()).unwrap().warnings.is_empty());
    }
}
