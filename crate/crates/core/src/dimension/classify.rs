use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lexicon::{AnchorEntry, AnchorLexicon, Pole, Split};
use super::svm::{LinearClassifier, SvmOptions};
use super::{extract, project, Dimension, Method};
use crate::error::{Error, Result};
use crate::vecmath::Embeddings;

/// Anything that assigns a signed score to a word.
#[derive(Clone, Copy, Debug)]
pub enum Scorer<'a> {
    Axis(&'a Dimension),
    Svm(&'a LinearClassifier),
}

impl Scorer<'_> {
    pub fn score(&self, emb: &Embeddings, word: &str) -> Result<f64> {
        match self {
            Scorer::Axis(d) => project(emb, d, word),
            Scorer::Svm(c) => c.decision_word(emb, word),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Scorer::Axis(d) => match d.method {
                Method::Larsen => "larsen",
                Method::Bolukbasi => "bolukbasi",
                Method::Svm => "svm",
            },
            Scorer::Svm(_) => "svm",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedWord {
    pub word: String,
    pub pole: Pole,
    pub predicted: Pole,
    pub score: f64,
    pub correct: bool,
    /// Score was exactly zero; assigned to the negative pole.
    pub boundary: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub split: Split,
    pub method: String,
    pub words: Vec<ClassifiedWord>,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
    /// Out-of-vocabulary anchors left out of the denominator.
    pub missing: Vec<String>,
}

/// Classifies every in-vocabulary anchor of `split`, repeats included.
pub fn classify(emb: &Embeddings, scorer: Scorer<'_>, lexicon: &AnchorLexicon, split: Split) -> Result<ClassificationReport> {
    let entries: Vec<&AnchorEntry> = lexicon.split(split).collect();
    let report = classify_entries(emb, scorer, &entries, split)?;
    if report.total == 0 {
        return Err(Error::Empty(format!(
            "lexicon {}: no in-vocabulary {split:?} anchors",
            lexicon.name
        )));
    }
    Ok(report)
}

fn classify_entries(emb: &Embeddings, scorer: Scorer<'_>, entries: &[&AnchorEntry], split: Split) -> Result<ClassificationReport> {
    let scored: Vec<Result<Option<ClassifiedWord>>> = entries
        .par_iter()
        .map(|e| {
            if emb.vocab().idx(&e.word).is_none() {
                return Ok(None);
            }
            let score = scorer.score(emb, &e.word)?;
            let predicted = if score > 0.0 { Pole::Positive } else { Pole::Negative };
            Ok(Some(ClassifiedWord {
                word: e.word.clone(),
                pole: e.pole,
                predicted,
                score,
                correct: predicted == e.pole,
                boundary: score == 0.0,
            }))
        })
        .collect();
    let mut words = Vec::new();
    let mut missing = Vec::new();
    for (e, r) in entries.iter().zip(scored) {
        match r? {
            Some(w) => words.push(w),
            None => {
                if !missing.contains(&e.word) {
                    missing.push(e.word.clone());
                }
            }
        }
    }
    let correct = words.iter().filter(|w| w.correct).count();
    let total = words.len();
    Ok(ClassificationReport {
        split,
        method: scorer.label().to_string(),
        words,
        correct,
        total,
        accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
        missing,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub train_correct: usize,
    pub train_total: usize,
    pub heldout_correct: usize,
    pub heldout_total: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub method: Method,
    pub folds: Vec<FoldResult>,
    /// Mean over folds of per-fold training accuracy.
    pub mean_train_accuracy: f64,
    /// Mean over folds of per-fold held-out accuracy.
    pub mean_heldout_accuracy: f64,
}

/// K-fold cross-validation over training anchors.
///
/// Pairs are held out together; unpaired anchors form single-word units.
/// Units are shuffled with `seed` and dealt round-robin into folds.
pub fn crossvalidate_lexicon(
    emb: &Embeddings,
    lexicon: &AnchorLexicon,
    folds: usize,
    method: Method,
    svm: &SvmOptions,
    seed: u64,
) -> Result<CrossValidation> {
    let mut units: Vec<Vec<&AnchorEntry>> = Vec::new();
    let mut by_pair: BTreeMap<u32, usize> = BTreeMap::new();
    for e in lexicon.split(Split::Train) {
        match e.pair_id {
            Some(id) => {
                let u = *by_pair.entry(id).or_insert_with(|| {
                    units.push(Vec::new());
                    units.len() - 1
                });
                units[u].push(e);
            }
            None => units.push(vec![e]),
        }
    }
    if folds < 2 {
        return Err(Error::Config("cross-validation needs at least 2 folds".into()));
    }
    if units.len() < folds {
        return Err(Error::Config(format!(
            "lexicon {}: {} anchor units for {folds} folds",
            lexicon.name,
            units.len()
        )));
    }
    let mut order: Vec<usize> = (0..units.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of = vec![0; units.len()];
    for (rank, &u) in order.iter().enumerate() {
        fold_of[u] = rank % folds;
    }

    let results: Vec<Result<FoldResult>> = (0..folds)
        .into_par_iter()
        .map(|f| {
            let (held, kept): (Vec<_>, Vec<_>) = units.iter().enumerate().partition(|(u, _)| fold_of[*u] == f);
            let kept: Vec<&AnchorEntry> = kept.into_iter().flat_map(|(_, es)| es.iter().copied()).collect();
            let held: Vec<&AnchorEntry> = held.into_iter().flat_map(|(_, es)| es.iter().copied()).collect();
            let sub = lexicon.subset(kept.iter().map(|e| (*e).clone()).collect());
            let fitted = extract(emb, &sub, method, svm)?;
            let train = classify_entries(emb, fitted.scorer(), &kept, Split::Train)?;
            let test = classify_entries(emb, fitted.scorer(), &held, Split::Test)?;
            Ok(FoldResult {
                train_correct: train.correct,
                train_total: train.total,
                heldout_correct: test.correct,
                heldout_total: test.total,
            })
        })
        .collect();
    let folds: Vec<FoldResult> = results.into_iter().collect::<Result<_>>()?;
    let mean = |f: &dyn Fn(&FoldResult) -> (usize, usize)| {
        let accs: Vec<f64> = folds
            .iter()
            .map(f)
            .filter(|(_, t)| *t > 0)
            .map(|(c, t)| c as f64 / t as f64)
            .collect();
        if accs.is_empty() {
            0.0
        } else {
            accs.iter().sum::<f64>() / accs.len() as f64
        }
    };
    Ok(CrossValidation {
        method,
        mean_train_accuracy: mean(&|r| (r.train_correct, r.train_total)),
        mean_heldout_accuracy: mean(&|r| (r.heldout_correct, r.heldout_total)),
        folds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimension::tests::{emb, entry, planted};
    use crate::dimension::{extract_larsen, train_svm};

    #[test]
    fn planted_anchors_classify_perfectly() {
        let (e, lex, _) = planted(50, 20, 40, 0.1, 3);
        let d = extract_larsen(&e, &lex).unwrap();
        for split in [Split::Train, Split::Test] {
            let r = classify(&e, Scorer::Axis(&d), &lex, split).unwrap();
            assert_eq!(r.correct, r.total);
            assert_eq!(r.accuracy, 1.0);
        }
    }

    #[test]
    fn zero_projection_goes_negative_with_boundary_flag() {
        let e = emb(&[("f", vec![1.0, 0.0]), ("m", vec![-1.0, 0.0]), ("o", vec![0.0, 1.0])]);
        let lex = AnchorLexicon::new(
            "g",
            ("f".into(), "m".into()),
            vec![
                entry("f", Pole::Positive, Some(1), Split::Train),
                entry("m", Pole::Negative, Some(1), Split::Train),
                entry("o", Pole::Positive, None, Split::Test),
                entry("gone", Pole::Positive, None, Split::Test),
            ],
        )
        .unwrap();
        let d = extract_larsen(&e, &lex).unwrap();
        let r = classify(&e, Scorer::Axis(&d), &lex, Split::Test).unwrap();
        assert_eq!(r.total, 1);
        assert_eq!(r.missing, vec!["gone".to_string()]);
        let w = &r.words[0];
        assert!(w.boundary);
        assert_eq!(w.predicted, Pole::Negative);
        assert!(!w.correct);
    }

    #[test]
    fn empty_usable_split_is_an_error() {
        let e = emb(&[("f", vec![1.0, 0.0]), ("m", vec![-1.0, 0.0])]);
        let lex = AnchorLexicon::new(
            "g",
            ("f".into(), "m".into()),
            vec![entry("f", Pole::Positive, None, Split::Train), entry("m", Pole::Negative, None, Split::Train), entry("zz", Pole::Positive, None, Split::Test)],
        )
        .unwrap();
        let d = extract_larsen(&e, &lex).unwrap();
        assert!(matches!(classify(&e, Scorer::Axis(&d), &lex, Split::Test), Err(Error::Empty(_))));
    }

    #[test]
    fn rescaling_a_word_does_not_change_classification() {
        let (e, lex, _) = planted(10, 6, 6, 0.3, 5);
        let d = extract_larsen(&e, &lex).unwrap();
        let before = classify(&e, Scorer::Axis(&d), &lex, Split::Test).unwrap();
        let rows: Vec<(String, Vec<f64>)> = e
            .vocab()
            .words()
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), e.unit_row(i as u32).iter().map(|&x| x as f64 * (1.0 + i as f64)).collect()))
            .collect();
        let refs: Vec<(&str, Vec<f64>)> = rows.iter().map(|(w, v)| (w.as_str(), v.clone())).collect();
        let scaled = emb(&refs);
        let after = classify(&scaled, Scorer::Axis(&d), &lex, Split::Test).unwrap();
        let preds = |r: &ClassificationReport| r.words.iter().map(|w| w.predicted).collect::<Vec<_>>();
        assert_eq!(preds(&before), preds(&after));
    }

    #[test]
    fn svm_report_rescoring_matches() {
        let (e, lex, _) = planted(8, 12, 6, 0.3, 6);
        let clf = train_svm(&e, &lex, &SvmOptions::default()).unwrap().classifier;
        let r = classify(&e, Scorer::Svm(&clf), &lex, Split::Train).unwrap();
        let recount = lex
            .split(Split::Train)
            .filter(|en| (clf.decision_word(&e, &en.word).unwrap() > 0.0) == (en.pole == Pole::Positive))
            .count();
        assert_eq!(r.correct, recount);
        assert_eq!(r.accuracy, recount as f64 / r.total as f64);
    }

    #[test]
    fn crossvalidation_on_planted_axis() {
        let (e, lex, _) = planted(50, 20, 4, 0.1, 7);
        for method in [Method::Larsen, Method::Bolukbasi, Method::Svm] {
            let cv = crossvalidate_lexicon(&e, &lex, 10, method, &SvmOptions::default(), 1).unwrap();
            assert_eq!(cv.folds.len(), 10);
            assert_eq!(cv.mean_heldout_accuracy, 1.0, "{method:?}");
            assert_eq!(cv.folds.iter().map(|f| f.heldout_total).sum::<usize>(), 40);
            let again = crossvalidate_lexicon(&e, &lex, 10, method, &SvmOptions::default(), 1).unwrap();
            assert_eq!(cv, again);
        }
    }

    #[test]
    fn more_folds_than_pairs_is_an_error() {
        let (e, lex, _) = planted(10, 4, 2, 0.1, 1);
        assert!(matches!(
            crossvalidate_lexicon(&e, &lex, 10, Method::Larsen, &SvmOptions::default(), 1),
            Err(Error::Config(_))
        ));
    }
}
