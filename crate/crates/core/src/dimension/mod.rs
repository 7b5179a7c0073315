//! Semantic dimensions extracted from anchor lexicons.
//!
//! Two geometric methods produce a unit axis: Larsen (difference of pole
//! means) and Bolukbasi (first principal component of pair-centered
//! anchors). A soft-margin linear SVM provides a third, non-geometric
//! classifier. All methods work on unit-normalized word vectors.

mod classify;
mod lexicon;
mod svm;

use log::warn;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vecmath::{cosine, mean_vector, normalize_in_place, Embeddings};

pub use classify::{
    classify, crossvalidate_lexicon, ClassificationReport, ClassifiedWord, CrossValidation, FoldResult, Scorer,
};
pub use lexicon::{AnchorEntry, AnchorLexicon, Coverage, Pole, Split};
pub use svm::{train_svm, LinearClassifier, SvmFit, SvmOptions, DEFAULT_C_GRID};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Larsen,
    Bolukbasi,
    Svm,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "larsen" => Ok(Method::Larsen),
            "bolukbasi" => Ok(Method::Bolukbasi),
            "svm" => Ok(Method::Svm),
            other => Err(Error::Config(format!("unknown extraction method {other:?}"))),
        }
    }
}

/// A unit axis whose positive direction points at the positive pole.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    pub axis: Vec<f64>,
    pub pole_names: (String, String),
    pub method: Method,
    /// Fraction of training anchors found in the vocabulary.
    pub anchor_coverage: f64,
}

/// Output of [`extract`]: a geometric axis or a trained classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Extracted {
    Axis(Dimension),
    Classifier(LinearClassifier),
}

impl Extracted {
    pub fn scorer(&self) -> Scorer<'_> {
        match self {
            Extracted::Axis(d) => Scorer::Axis(d),
            Extracted::Classifier(c) => Scorer::Svm(c),
        }
    }

    pub fn dimension(&self) -> Option<&Dimension> {
        match self {
            Extracted::Axis(d) => Some(d),
            Extracted::Classifier(_) => None,
        }
    }
}

/// Runs the named method with default SVM options.
pub fn extract(emb: &Embeddings, lexicon: &AnchorLexicon, method: Method, svm: &SvmOptions) -> Result<Extracted> {
    Ok(match method {
        Method::Larsen => Extracted::Axis(extract_larsen(emb, lexicon)?),
        Method::Bolukbasi => Extracted::Axis(extract_bolukbasi(emb, lexicon)?),
        Method::Svm => Extracted::Classifier(train_svm(emb, lexicon, svm)?.classifier),
    })
}

fn train_coverage(emb: &Embeddings, lexicon: &AnchorLexicon) -> f64 {
    let c = lexicon.coverage(emb);
    if c.train_total == 0 {
        0.0
    } else {
        c.train_found as f64 / c.train_total as f64
    }
}

/// `normalize(mean(positive) - mean(negative))` over unit training
/// anchors, counting repeated anchors each time they are listed.
pub fn extract_larsen(emb: &Embeddings, lexicon: &AnchorLexicon) -> Result<Dimension> {
    let pole_mean = |pole: Pole, label: &str| {
        mean_vector(emb, &lexicon.train_words(pole)).map_err(|_| {
            Error::Empty(format!(
                "lexicon {}: no {label} training anchor is in the vocabulary",
                lexicon.name
            ))
        })
    };
    let pos = pole_mean(Pole::Positive, &lexicon.pole_names.0)?;
    let neg = pole_mean(Pole::Negative, &lexicon.pole_names.1)?;
    let mut axis: Vec<f64> = pos.vector.iter().zip(&neg.vector).map(|(p, n)| p - n).collect();
    if normalize_in_place(&mut axis) < 1e-12 {
        return Err(Error::Degenerate(format!(
            "lexicon {}: pole means coincide",
            lexicon.name
        )));
    }
    Ok(Dimension {
        name: lexicon.name.clone(),
        axis,
        pole_names: lexicon.pole_names.clone(),
        method: Method::Larsen,
        anchor_coverage: train_coverage(emb, lexicon),
    })
}

/// First principal component of the pair-centered training anchors.
///
/// Centering each pair's two unit vectors about their mean leaves
/// `±(p - n)/2`, so the scatter matrix is `Σ ½(p - n)(p - n)ᵀ`. The
/// eigendecomposition runs on whichever of the `N×N` scatter or the `M×M`
/// Gram matrix of the centered rows is smaller. The sign is chosen so
/// positive anchors project above negative ones on average.
pub fn extract_bolukbasi(emb: &Embeddings, lexicon: &AnchorLexicon) -> Result<Dimension> {
    let pairs = lexicon.pairs();
    if pairs.is_empty() {
        return Err(Error::Config(format!(
            "lexicon {} is unpaired; the PCA method needs pair ids",
            lexicon.name
        )));
    }
    let diffs: Vec<Vec<f64>> = pairs
        .iter()
        .filter_map(|(p, n)| {
            let p = emb.unit(p)?;
            let n = emb.unit(n)?;
            Some(p.iter().zip(n).map(|(&a, &b)| (a as f64 - b as f64) / 2.0).collect())
        })
        .collect();
    if diffs.len() < 2 {
        return Err(Error::Empty(format!(
            "lexicon {}: {} complete in-vocabulary pairs, need at least 2",
            lexicon.name,
            diffs.len()
        )));
    }

    let n = emb.dim();
    // Stack +d and -d for each pair: the centered rows.
    let m = 2 * diffs.len();
    let rows = DMatrix::from_fn(m, n, |i, j| {
        let d = diffs[i / 2][j];
        if i % 2 == 0 {
            d
        } else {
            -d
        }
    });

    let mut axis: Vec<f64> = if m < n {
        let gram = &rows * rows.transpose();
        let (value, vec) = top_eigen(gram);
        if value <= 1e-12 {
            return Err(Error::Degenerate("pair differences are all zero".into()));
        }
        (rows.transpose() * vec).iter().copied().collect()
    } else {
        let scatter = rows.transpose() * &rows;
        let (value, vec) = top_eigen(scatter);
        if value <= 1e-12 {
            return Err(Error::Degenerate("pair differences are all zero".into()));
        }
        vec.iter().copied().collect()
    };
    normalize_in_place(&mut axis);

    let orientation: f64 = diffs
        .iter()
        .map(|d| d.iter().zip(&axis).map(|(a, b)| a * b).sum::<f64>())
        .sum();
    if orientation < 0.0 {
        axis.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(Dimension {
        name: lexicon.name.clone(),
        axis,
        pole_names: lexicon.pole_names.clone(),
        method: Method::Bolukbasi,
        anchor_coverage: train_coverage(emb, lexicon),
    })
}

fn top_eigen(sym: DMatrix<f64>) -> (f64, nalgebra::DVector<f64>) {
    let eig = SymmetricEigen::new(sym);
    let (best, value) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty matrix");
    (value, eig.eigenvectors.column(best).into_owned())
}

/// Cosine between a word's unit vector and the axis.
pub fn project(emb: &Embeddings, dim: &Dimension, word: &str) -> Result<f64> {
    let idx = emb.idx(word)?;
    if dim.axis.len() != emb.dim() {
        return Err(Error::DimensionMismatch {
            expected: emb.dim(),
            actual: dim.axis.len(),
        });
    }
    let v: Vec<f64> = emb.unit_row(idx).iter().map(|&x| x as f64).collect();
    cosine(&v, &dim.axis)
}

/// Cosine between two axes.
pub fn dim_similarity(a: &Dimension, b: &Dimension) -> Result<f64> {
    cosine(&a.axis, &b.axis)
}

pub(crate) fn overfit_warning(anchors: usize, dim: usize) -> Option<String> {
    (anchors < dim).then(|| {
        let msg = format!("SVM trained on {anchors} anchors in {dim} dimensions; expect overfitting");
        warn!("{msg}");
        msg
    })
}
