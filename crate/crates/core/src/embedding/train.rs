use std::sync::atomic::{AtomicU64, Ordering};

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::huffman::{build_huffman, HuffmanTree};
use super::noise::{keep_probability, NoiseTable};
use super::params::{DenseParams, Params, SharedParams, SharedView};
use super::sgd::{hs_terms, logistic_update, ns_terms, sample_negatives, Scratch};
use super::{Architecture, EmbeddingModel, Loss, TrainingConfig};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainOptions {
    /// Worker count. `1` gives a bit-reproducible run for a fixed seed.
    pub threads: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions { threads: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean loss per update, one entry per epoch.
    pub epoch_losses: Vec<f64>,
    pub updates_per_epoch: Vec<u64>,
    /// In-vocabulary corpus tokens seen per epoch, before subsampling.
    pub corpus_words: u64,
    pub threads: usize,
}

struct ShardCtx<'a> {
    cfg: &'a TrainingConfig,
    keep: Vec<f64>,
    noise: Option<NoiseTable>,
    tree: Option<HuffmanTree>,
    total_work: f64,
}

impl ShardCtx<'_> {
    fn lr_at(&self, done: u64) -> f32 {
        let progress = (done as f64 / self.total_work).min(1.0);
        (self.cfg.lr_start - (self.cfg.lr_start - self.cfg.lr_end) * progress) as f32
    }
}

#[derive(Default)]
struct ShardStats {
    loss: f64,
    updates: u64,
}

fn update<P: Params>(
    ctx: &ShardCtx<'_>,
    params: &mut P,
    inputs: &[u32],
    target: u32,
    lr: f32,
    rng: &mut ChaCha8Rng,
    scratch: &mut Scratch,
) -> f64 {
    match ctx.cfg.loss {
        Loss::NegativeSampling { negatives } => {
            let mut negs = std::mem::take(&mut scratch.negatives);
            let noise = ctx.noise.as_ref().expect("noise table built for NS");
            sample_negatives(noise, negatives, target, rng, &mut negs);
            let loss = logistic_update(params, inputs, ns_terms(target, &negs), lr, scratch);
            scratch.negatives = negs;
            loss
        }
        Loss::HierarchicalSoftmax => {
            let tree = ctx.tree.as_ref().expect("tree built for HS");
            logistic_update(params, inputs, hs_terms(tree, target), lr, scratch)
        }
    }
}

fn run_shard<P: Params>(
    ctx: &ShardCtx<'_>,
    params: &mut P,
    sentences: &[Vec<u32>],
    progress: &AtomicU64,
    rng: &mut ChaCha8Rng,
) -> ShardStats {
    let mut stats = ShardStats::default();
    let mut scratch = Scratch::new(ctx.cfg.dim);
    let mut retained = Vec::new();
    let mut context = Vec::new();

    for sentence in sentences {
        let done = progress.fetch_add(sentence.len() as u64, Ordering::Relaxed);
        let lr = ctx.lr_at(done);

        retained.clear();
        retained.extend(sentence.iter().copied().filter(|&w| {
            let p = ctx.keep[w as usize];
            p >= 1.0 || rng.random::<f64>() < p
        }));

        for pos in 0..retained.len() {
            let b = rng.random_range(1..=ctx.cfg.window);
            let lo = pos.saturating_sub(b);
            let hi = (pos + b + 1).min(retained.len());
            let center = retained[pos];
            context.clear();
            context.extend(
                (lo..hi)
                    .filter(|&j| j != pos)
                    .map(|j| retained[j]),
            );
            if context.is_empty() {
                continue;
            }
            match ctx.cfg.architecture {
                Architecture::Cbow => {
                    stats.loss += update(ctx, params, &context, center, lr, rng, &mut scratch);
                    stats.updates += 1;
                }
                Architecture::SkipGram => {
                    for &c in &context {
                        stats.loss += update(ctx, params, &[center], c, lr, rng, &mut scratch);
                        stats.updates += 1;
                    }
                }
            }
        }
    }
    stats
}

fn epoch_rng(seed: u64, epoch: usize, worker: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((epoch as u64) << 32) | worker as u64);
    rng
}

/// Trains `model` in place.
///
/// The corpus is a list of sentences already mapped to vocabulary indices.
/// Each epoch subsamples frequent tokens, draws a window size uniformly
/// from `1..=window` per position and applies one update per prediction.
/// The learning rate decays linearly from `lr_start` to `lr_end` over all
/// epochs. Token frequencies for subsampling, negative sampling and the
/// Huffman tree are taken from the corpus itself.
pub fn train(
    model: &mut EmbeddingModel,
    corpus: &[Vec<u32>],
    opts: &TrainOptions,
) -> Result<TrainReport> {
    let cfg = model.config.clone();
    cfg.validate()?;
    if cfg.dim != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            actual: cfg.dim,
        });
    }
    let v = model.len();
    let mut counts = vec![0u64; v];
    for &w in corpus.iter().flatten() {
        let w = w as usize;
        if w >= v {
            return Err(Error::IndexOutOfRange { index: w, len: v });
        }
        counts[w] += 1;
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::Empty("training corpus has no in-vocabulary tokens".into()));
    }

    let keep = counts
        .iter()
        .map(|&c| keep_probability(c, total, cfg.subsample))
        .collect();
    let (noise, tree) = match cfg.loss {
        Loss::NegativeSampling { .. } => (Some(NoiseTable::new(&counts, cfg.unigram_exponent)), None),
        Loss::HierarchicalSoftmax => (None, Some(build_huffman(&counts)?)),
    };
    let ctx = ShardCtx {
        cfg: &cfg,
        keep,
        noise,
        tree,
        total_work: (total * cfg.epochs as u64) as f64,
    };

    let threads = opts.threads.max(1);
    let progress = AtomicU64::new(0);
    let mut report = TrainReport {
        epoch_losses: Vec::with_capacity(cfg.epochs),
        updates_per_epoch: Vec::with_capacity(cfg.epochs),
        corpus_words: total,
        threads,
    };

    let (input, output) = model.split_mut();
    let shared = (threads > 1).then(|| SharedParams::new(input, output));

    for epoch in 0..cfg.epochs {
        let stats = match &shared {
            None => {
                let mut params = DenseParams {
                    input: &mut *input,
                    output: &mut *output,
                };
                let mut rng = epoch_rng(cfg.seed, epoch, 0);
                let s = run_shard(&ctx, &mut params, corpus, &progress, &mut rng);
                if !(input.is_finite() && output.is_finite()) {
                    return Err(Error::NonFinite(epoch + 1));
                }
                s
            }
            Some(shared) => {
                let chunk = corpus.len().div_ceil(threads).max(1);
                let parts: Vec<ShardStats> = std::thread::scope(|scope| {
                    let handles: Vec<_> = corpus
                        .chunks(chunk)
                        .enumerate()
                        .map(|(worker, shard)| {
                            let ctx = &ctx;
                            let progress = &progress;
                            scope.spawn(move || {
                                let mut view = SharedView(shared);
                                let mut rng = epoch_rng(ctx.cfg.seed, epoch, worker);
                                run_shard(ctx, &mut view, shard, progress, &mut rng)
                            })
                        })
                        .collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().expect("training worker panicked"))
                        .collect()
                });
                if !shared.is_finite() {
                    return Err(Error::NonFinite(epoch + 1));
                }
                parts.into_iter().fold(ShardStats::default(), |a, b| ShardStats {
                    loss: a.loss + b.loss,
                    updates: a.updates + b.updates,
                })
            }
        };
        let mean = if stats.updates > 0 {
            stats.loss / stats.updates as f64
        } else {
            0.0
        };
        debug!("epoch {}: mean loss {mean:.5} over {} updates", epoch + 1, stats.updates);
        report.epoch_losses.push(mean);
        report.updates_per_epoch.push(stats.updates);
    }

    if let Some(shared) = shared {
        shared.write_back(input, output);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Vocabulary;

    fn fixture() -> (Vocabulary, Vec<Vec<u32>>) {
        let words: Vec<(String, u64)> = (0..20).map(|i| (format!("w{i}"), 1)).collect();
        let vocab = Vocabulary::from_ordered(words, 0, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let corpus = (0..300)
            .map(|_| {
                let base = rng.random_range(0..2u32) * 10;
                (0..8).map(|_| base + rng.random_range(0..10u32)).collect()
            })
            .collect();
        (vocab, corpus)
    }

    fn cfg(arch: Architecture, loss: Loss) -> TrainingConfig {
        TrainingConfig {
            dim: 16,
            window: 3,
            architecture: arch,
            loss,
            epochs: 5,
            lr_start: 0.05,
            subsample: 0.0,
            seed: 42,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_single_worker() {
        let (vocab, corpus) = fixture();
        let c = cfg(Architecture::Cbow, Loss::NegativeSampling { negatives: 5 });
        let mut a = EmbeddingModel::init(vocab.clone(), c.clone()).unwrap();
        let mut b = EmbeddingModel::init(vocab, c).unwrap();
        let ra = train(&mut a, &corpus, &TrainOptions::default()).unwrap();
        let rb = train(&mut b, &corpus, &TrainOptions::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
    }

    #[test]
    fn loss_decreases_for_every_variant() {
        let (vocab, corpus) = fixture();
        for arch in [Architecture::Cbow, Architecture::SkipGram] {
            for loss in [Loss::NegativeSampling { negatives: 5 }, Loss::HierarchicalSoftmax] {
                let mut m = EmbeddingModel::init(vocab.clone(), cfg(arch, loss)).unwrap();
                let r = train(&mut m, &corpus, &TrainOptions::default()).unwrap();
                assert!(
                    r.epoch_losses[4] < r.epoch_losses[0],
                    "{arch:?}/{loss:?}: {:?}",
                    r.epoch_losses
                );
                assert!(m.is_finite());
            }
        }
    }

    #[test]
    fn multi_worker_trains() {
        let (vocab, corpus) = fixture();
        let c = cfg(Architecture::Cbow, Loss::NegativeSampling { negatives: 5 });
        let mut m = EmbeddingModel::init(vocab, c).unwrap();
        let r = train(&mut m, &corpus, &TrainOptions { threads: 4 }).unwrap();
        assert!(r.epoch_losses[4] < r.epoch_losses[0]);
        assert!(m.is_finite());
    }

    #[test]
    fn empty_corpus_is_error() {
        let (vocab, _) = fixture();
        let c = cfg(Architecture::Cbow, Loss::HierarchicalSoftmax);
        let mut m = EmbeddingModel::init(vocab, c).unwrap();
        assert!(matches!(
            train(&mut m, &[vec![], vec![]], &TrainOptions::default()),
            Err(Error::Empty(_))
        ));
    }
}
