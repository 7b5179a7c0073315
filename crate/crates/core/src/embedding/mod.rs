//! CBOW / Skip-Gram embedding models trained with negative sampling or
//! hierarchical softmax.

mod huffman;
mod io;
mod noise;
mod params;
mod sgd;
mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

pub use huffman::{build_huffman, HuffmanTree};
pub use io::{
    load_model, load_model_as, read_binary, read_native, read_text, save_model, write_binary,
    write_native, write_text, ModelFormat,
};
pub use noise::{keep_probability, subsample_keep, NoiseTable, DEFAULT_NOISE_TABLE_SIZE};
pub use sgd::{
    cbow_ns_update, hs_path_probability, sample_negatives, sg_ns_update, train_step_cbow_ns,
    train_step_hs, train_step_sg_ns,
};
pub use train::{train, TrainOptions, TrainReport};

/// Dense row-major `f32` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    Cbow,
    SkipGram,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Loss {
    NegativeSampling { negatives: usize },
    HierarchicalSoftmax,
}

/// Hyperparameters for [`train`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub dim: usize,
    /// Maximum context words on each side of the focal word.
    pub window: usize,
    pub architecture: Architecture,
    pub loss: Loss,
    pub epochs: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    /// Frequent-word subsampling threshold; `0` disables subsampling.
    pub subsample: f64,
    pub seed: u64,
    pub unigram_exponent: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            dim: 500,
            window: 10,
            architecture: Architecture::Cbow,
            loss: Loss::NegativeSampling { negatives: 5 },
            epochs: 5,
            lr_start: 0.025,
            lr_end: 1e-4,
            subsample: 1e-3,
            seed: 1,
            unigram_exponent: 0.75,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.dim < 1 {
            return fail("dim must be >= 1");
        }
        if self.window < 1 {
            return fail("window must be >= 1");
        }
        if let Loss::NegativeSampling { negatives } = self.loss {
            if negatives < 1 {
                return fail("negative sampling needs at least one negative");
            }
        }
        if self.epochs < 1 {
            return fail("epochs must be >= 1");
        }
        if !(self.lr_end > 0.0 && self.lr_start > self.lr_end) {
            return fail("learning rates must satisfy lr_start > lr_end > 0");
        }
        if !(self.subsample >= 0.0) {
            return fail("subsample threshold must be >= 0");
        }
        if !(self.unigram_exponent.is_finite()) {
            return fail("unigram exponent must be finite");
        }
        Ok(())
    }
}

/// Input vectors `W`, output vectors `W'` and the vocabulary they index.
///
/// Models loaded from the interchange formats carry no output vectors;
/// they are allocated as zeros on first use by a training step.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingModel {
    pub(crate) vocab: Vocabulary,
    pub(crate) input: Matrix,
    pub(crate) output: Option<Matrix>,
    pub(crate) config: TrainingConfig,
}

impl EmbeddingModel {
    /// Random input vectors, uniform on `[-0.5/N, 0.5/N]`, and zero output
    /// vectors.
    pub fn init(vocab: Vocabulary, config: TrainingConfig) -> Result<Self> {
        config.validate()?;
        if vocab.len() < 2 {
            return Err(Error::Degenerate(format!(
                "vocabulary has {} word(s); at least 2 are required",
                vocab.len()
            )));
        }
        let n = config.dim;
        let bound = 0.5 / n as f32;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let data = (0..vocab.len() * n)
            .map(|_| rng.random_range(-bound..=bound))
            .collect();
        let input = Matrix::from_vec(vocab.len(), n, data)?;
        let output = Some(Matrix::zeros(vocab.len(), n));
        Ok(EmbeddingModel {
            vocab,
            input,
            output,
            config,
        })
    }

    /// Assembles a model from parts, checking shapes.
    pub fn from_parts(
        vocab: Vocabulary,
        input: Matrix,
        output: Option<Matrix>,
        config: TrainingConfig,
    ) -> Result<Self> {
        if input.rows() != vocab.len() {
            return Err(Error::DimensionMismatch {
                expected: vocab.len(),
                actual: input.rows(),
            });
        }
        if let Some(out) = &output {
            if out.rows() != input.rows() || out.cols() != input.cols() {
                return Err(Error::DimensionMismatch {
                    expected: input.rows() * input.cols(),
                    actual: out.rows() * out.cols(),
                });
            }
        }
        let mut config = config;
        config.dim = input.cols();
        Ok(EmbeddingModel {
            vocab,
            input,
            output,
            config,
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn config(&self) -> &TrainingConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.input.cols()
    }

    pub fn len(&self) -> usize {
        self.input.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.input.rows() == 0
    }

    pub fn input(&self) -> &Matrix {
        &self.input
    }

    pub fn input_mut(&mut self) -> &mut Matrix {
        &mut self.input
    }

    pub fn output(&self) -> Option<&Matrix> {
        self.output.as_ref()
    }

    /// Output vectors, allocated as zeros if absent.
    pub fn output_mut(&mut self) -> &mut Matrix {
        let (rows, cols) = (self.input.rows(), self.input.cols());
        self.output.get_or_insert_with(|| Matrix::zeros(rows, cols))
    }

    /// The raw input vector of `word`.
    pub fn vector(&self, word: &str) -> Option<&[f32]> {
        self.vocab.idx(word).map(|i| self.input.row(i as usize))
    }

    pub(crate) fn split_mut(&mut self) -> (&mut Matrix, &mut Matrix) {
        self.output_mut();
        let output = self.output.as_mut().expect("allocated above");
        (&mut self.input, output)
    }

    pub(crate) fn check_index(&self, idx: u32) -> Result<()> {
        if (idx as usize) < self.len() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: idx as usize,
                len: self.len(),
            })
        }
    }

    pub fn is_finite(&self) -> bool {
        self.input.is_finite() && self.output.as_ref().is_none_or(Matrix::is_finite)
    }
}

/// Exact softmax probability of `target_id` given the averaged context
/// vectors, computed over the whole vocabulary.
///
/// Intended for small vocabularies; training uses the sampled or
/// hierarchical approximations instead.
pub fn cbow_probability(model: &EmbeddingModel, context_ids: &[u32], target_id: u32) -> Result<f64> {
    model.check_index(target_id)?;
    let dist = cbow_distribution(model, context_ids)?;
    Ok(dist[target_id as usize])
}

/// Full softmax distribution over targets for a context.
pub fn cbow_distribution(model: &EmbeddingModel, context_ids: &[u32]) -> Result<Vec<f64>> {
    if context_ids.is_empty() {
        return Err(Error::Empty("context".into()));
    }
    for &c in context_ids {
        model.check_index(c)?;
    }
    let n = model.dim();
    let mut h = vec![0.0f64; n];
    for &c in context_ids {
        for (acc, &x) in h.iter_mut().zip(model.input.row(c as usize)) {
            *acc += x as f64;
        }
    }
    let inv = 1.0 / context_ids.len() as f64;
    h.iter_mut().for_each(|x| *x *= inv);

    let scores: Vec<f64> = match &model.output {
        Some(out) => (0..model.len())
            .map(|w| {
                out.row(w)
                    .iter()
                    .zip(&h)
                    .map(|(&a, &b)| a as f64 * b)
                    .sum()
            })
            .collect(),
        None => vec![0.0; model.len()],
    };
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / z).collect())
}
