use rand::Rng;

/// Entries in the default negative-sampling lookup table.
pub const DEFAULT_NOISE_TABLE_SIZE: usize = 10_000_000;

/// Negative-sampling distribution `p(w) ∝ count(w)^exponent`, stored as a
/// lookup table for O(1) draws.
#[derive(Clone, Debug)]
pub struct NoiseTable {
    probabilities: Vec<f64>,
    table: Vec<u32>,
}

impl NoiseTable {
    pub fn new(counts: &[u64], exponent: f64) -> Self {
        Self::with_size(counts, exponent, DEFAULT_NOISE_TABLE_SIZE)
    }

    /// Falls back to a uniform distribution when every count is zero.
    pub fn with_size(counts: &[u64], exponent: f64, size: usize) -> Self {
        assert!(!counts.is_empty(), "noise table over empty vocabulary");
        let mut weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(exponent)).collect();
        if counts.iter().all(|&c| c == 0) {
            weights.iter_mut().for_each(|w| *w = 1.0);
        }
        let z: f64 = weights.iter().sum();
        let probabilities: Vec<f64> = weights.iter().map(|w| w / z).collect();

        let mut table = Vec::with_capacity(size);
        let mut cumulative = 0.0;
        for (i, p) in probabilities.iter().enumerate() {
            cumulative += p;
            let end = if i + 1 == probabilities.len() {
                size
            } else {
                ((cumulative * size as f64).round() as usize).min(size)
            };
            while table.len() < end {
                table.push(i as u32);
            }
        }
        NoiseTable { probabilities, table }
    }

    /// Exact normalized probabilities.
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn table_len(&self) -> usize {
        self.table.len()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.table[rng.random_range(0..self.table.len())]
    }
}

/// Probability of keeping a token with relative frequency
/// `f = count/total`: `min(1, (sqrt(f/t) + 1) * t/f)`.
pub fn keep_probability(word_count: u64, total: u64, t: f64) -> f64 {
    if t <= 0.0 || word_count == 0 || total == 0 {
        return 1.0;
    }
    let f = word_count as f64 / total as f64;
    ((f / t).sqrt() + 1.0) * t / f
}

/// Draws whether a token survives frequent-word subsampling.
pub fn subsample_keep<R: Rng + ?Sized>(word_count: u64, total: u64, t: f64, rng: &mut R) -> bool {
    let p = keep_probability(word_count, total, t);
    p >= 1.0 || rng.random::<f64>() < p
}
