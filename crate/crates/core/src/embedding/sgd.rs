//! Single SGD updates for negative sampling and hierarchical softmax.

use rand::Rng;

use super::huffman::HuffmanTree;
use super::noise::NoiseTable;
use super::params::{DenseParams, Params};
use super::EmbeddingModel;
use crate::error::{Error, Result};

/// Per-worker buffers reused across steps.
pub(crate) struct Scratch {
    pub hidden: Vec<f32>,
    pub grad: Vec<f32>,
    pub row: Vec<f32>,
    pub negatives: Vec<u32>,
}

impl Scratch {
    pub fn new(dim: usize) -> Self {
        Scratch {
            hidden: vec![0.0; dim],
            grad: vec![0.0; dim],
            row: vec![0.0; dim],
            negatives: Vec::new(),
        }
    }
}

fn dot(a: &[f32], b: &[f32]) -> f32 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `ln(1 + e^x)` without overflow.
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// One update over a set of binary logistic units.
///
/// The hidden vector is the mean of the `inputs` rows. Each `(row, label)`
/// term contributes `-ln σ(f)` when `label == 1` and `-ln σ(-f)` when
/// `label == 0`, where `f` is the dot product of the hidden vector with
/// output row `row`. Output rows are updated as the terms are visited; the
/// input gradient is accumulated from the pre-update output rows and spread
/// evenly over the input rows at the end. Returns the total loss before the
/// update.
pub(crate) fn logistic_update<P: Params>(
    params: &mut P,
    inputs: &[u32],
    terms: impl Iterator<Item = (u32, f32)>,
    lr: f32,
    scratch: &mut Scratch,
) -> f64 {
    let Scratch {
        hidden, grad, row, ..
    } = scratch;

    hidden.fill(0.0);
    for &c in inputs {
        params.read_input(c as usize, row);
        for (h, &x) in hidden.iter_mut().zip(row.iter()) {
            *h += x;
        }
    }
    let inv = 1.0 / inputs.len() as f32;
    hidden.iter_mut().for_each(|h| *h *= inv);
    grad.fill(0.0);

    let mut loss = 0.0;
    for (id, label) in terms {
        params.read_output(id as usize, row);
        let f = dot(hidden, row) as f64;
        loss += if label > 0.5 { softplus(-f) } else { softplus(f) };
        let g = (label as f64 - sigmoid(f)) as f32;
        for (acc, &w) in grad.iter_mut().zip(row.iter()) {
            *acc += g * w;
        }
        if lr != 0.0 {
            params.add_output(id as usize, lr * g, hidden);
        }
    }

    if lr != 0.0 {
        let scale = lr * inv;
        for &c in inputs {
            params.add_input(c as usize, scale, grad);
        }
    }
    loss
}

pub(crate) fn ns_terms(target: u32, negatives: &[u32]) -> impl Iterator<Item = (u32, f32)> + '_ {
    std::iter::once((target, 1.0)).chain(negatives.iter().map(|&n| (n, 0.0)))
}

/// Hierarchical softmax terms: branch bit 0 is the "positive" side.
pub(crate) fn hs_terms(tree: &HuffmanTree, target: u32) -> impl Iterator<Item = (u32, f32)> + '_ {
    let t = target as usize;
    tree.points[t]
        .iter()
        .zip(&tree.codes[t])
        .map(|(&node, &bit)| (node, 1.0 - bit as f32))
}

/// Fills `out` with `k` noise words, redrawing any that equal `target`.
pub fn sample_negatives<R: Rng + ?Sized>(
    noise: &NoiseTable,
    k: usize,
    target: u32,
    rng: &mut R,
    out: &mut Vec<u32>,
) {
    out.clear();
    while out.len() < k {
        let n = noise.sample(rng);
        if n != target {
            out.push(n);
        }
    }
}

fn check_all(model: &EmbeddingModel, ids: &[u32]) -> Result<()> {
    ids.iter().try_for_each(|&i| model.check_index(i))
}

fn dense_step(
    model: &mut EmbeddingModel,
    inputs: &[u32],
    terms: impl Iterator<Item = (u32, f32)>,
    lr: f64,
) -> f64 {
    let mut scratch = Scratch::new(model.dim());
    let (input, output) = model.split_mut();
    let mut params = DenseParams { input, output };
    logistic_update(&mut params, inputs, terms, lr as f32, &mut scratch)
}

/// CBOW negative-sampling update with explicitly supplied negatives.
pub fn cbow_ns_update(
    model: &mut EmbeddingModel,
    context_ids: &[u32],
    target_id: u32,
    negatives: &[u32],
    lr: f64,
) -> Result<f64> {
    if context_ids.is_empty() {
        return Err(Error::Empty("context".into()));
    }
    check_all(model, context_ids)?;
    check_all(model, negatives)?;
    model.check_index(target_id)?;
    Ok(dense_step(model, context_ids, ns_terms(target_id, negatives), lr))
}

/// Skip-Gram negative-sampling update with explicitly supplied negatives.
/// The hidden vector is the center word's input vector.
pub fn sg_ns_update(
    model: &mut EmbeddingModel,
    center_id: u32,
    context_id: u32,
    negatives: &[u32],
    lr: f64,
) -> Result<f64> {
    cbow_ns_update(model, &[center_id], context_id, negatives, lr)
}

/// Samples negatives for the config's `k` and applies a CBOW update.
/// Returns the loss before the update.
pub fn train_step_cbow_ns<R: Rng + ?Sized>(
    model: &mut EmbeddingModel,
    context_ids: &[u32],
    target_id: u32,
    lr: f64,
    noise: &NoiseTable,
    rng: &mut R,
) -> Result<f64> {
    let k = negatives_for(model)?;
    let mut negs = Vec::with_capacity(k);
    sample_negatives(noise, k, target_id, rng, &mut negs);
    cbow_ns_update(model, context_ids, target_id, &negs, lr)
}

/// Samples negatives and applies a Skip-Gram update.
pub fn train_step_sg_ns<R: Rng + ?Sized>(
    model: &mut EmbeddingModel,
    center_id: u32,
    context_id: u32,
    lr: f64,
    noise: &NoiseTable,
    rng: &mut R,
) -> Result<f64> {
    train_step_cbow_ns(model, &[center_id], context_id, lr, noise, rng)
}

fn negatives_for(model: &EmbeddingModel) -> Result<usize> {
    match model.config.loss {
        super::Loss::NegativeSampling { negatives } => Ok(negatives),
        super::Loss::HierarchicalSoftmax => Err(Error::Config(
            "model is configured for hierarchical softmax".into(),
        )),
    }
}

/// Hierarchical softmax update along the target's tree path.
///
/// `inputs` is the context for CBOW or the single center word for
/// Skip-Gram. Returns the negative log path probability before the update.
pub fn train_step_hs(
    model: &mut EmbeddingModel,
    tree: &HuffmanTree,
    inputs: &[u32],
    target_id: u32,
    lr: f64,
) -> Result<f64> {
    if inputs.is_empty() {
        return Err(Error::Empty("context".into()));
    }
    if tree.len() != model.len() {
        return Err(Error::DimensionMismatch {
            expected: model.len(),
            actual: tree.len(),
        });
    }
    check_all(model, inputs)?;
    model.check_index(target_id)?;
    Ok(dense_step(model, inputs, hs_terms(tree, target_id), lr))
}

/// Product of branch probabilities along the target's path, in `f64`.
pub fn hs_path_probability(
    model: &EmbeddingModel,
    tree: &HuffmanTree,
    inputs: &[u32],
    target_id: u32,
) -> Result<f64> {
    if inputs.is_empty() {
        return Err(Error::Empty("context".into()));
    }
    check_all(model, inputs)?;
    model.check_index(target_id)?;
    let n = model.dim();
    let mut h = vec![0.0f64; n];
    for &c in inputs {
        for (a, &x) in h.iter_mut().zip(model.input.row(c as usize)) {
            *a += x as f64 / inputs.len() as f64;
        }
    }
    let t = target_id as usize;
    let mut p = 1.0;
    for (&node, &bit) in tree.points[t].iter().zip(&tree.codes[t]) {
        let f: f64 = match &model.output {
            Some(out) => out
                .row(node as usize)
                .iter()
                .zip(&h)
                .map(|(&w, &x)| w as f64 * x)
                .sum(),
            None => 0.0,
        };
        let s = sigmoid(f);
        p *= if bit == 0 { s } else { 1.0 - s };
    }
    Ok(p)
}
