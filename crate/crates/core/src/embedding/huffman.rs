use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Binary Huffman codes over the vocabulary.
///
/// Internal nodes are numbered `0..V-1` in creation order (the root is
/// `V-2`); their vectors live in the first `V-1` rows of the output matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HuffmanTree {
    /// Branch bits from the root down to each leaf.
    pub(crate) codes: Vec<Vec<u8>>,
    /// Internal node indices from the root down to each leaf's parent.
    pub(crate) points: Vec<Vec<u32>>,
}

impl HuffmanTree {
    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn code(&self, word: usize) -> &[u8] {
        &self.codes[word]
    }

    pub fn path(&self, word: usize) -> &[u32] {
        &self.points[word]
    }

    pub fn code_lengths(&self) -> Vec<usize> {
        self.codes.iter().map(Vec::len).collect()
    }
}

/// Greedy min-heap construction. Equal weights pop lower ids first, where
/// leaves use their vocabulary index and internal nodes come after all
/// leaves in creation order. The first popped child gets bit 0.
pub fn build_huffman(counts: &[u64]) -> Result<HuffmanTree> {
    let v = counts.len();
    if v < 2 {
        return Err(Error::Degenerate(format!(
            "hierarchical softmax needs at least 2 words, got {v}"
        )));
    }

    let mut heap: BinaryHeap<Reverse<(u64, usize)>> =
        counts.iter().enumerate().map(|(i, &c)| Reverse((c, i))).collect();
    let mut parent = vec![0usize; 2 * v - 1];
    let mut bit = vec![0u8; 2 * v - 1];

    for next in v..2 * v - 1 {
        let Reverse((c1, a)) = heap.pop().expect("heap holds >= 2 nodes");
        let Reverse((c2, b)) = heap.pop().expect("heap holds >= 2 nodes");
        parent[a] = next;
        parent[b] = next;
        bit[b] = 1;
        heap.push(Reverse((c1 + c2, next)));
    }

    let root = 2 * v - 2;
    let mut codes = Vec::with_capacity(v);
    let mut points = Vec::with_capacity(v);
    for leaf in 0..v {
        let mut code = Vec::new();
        let mut path = Vec::new();
        let mut node = leaf;
        while node != root {
            code.push(bit[node]);
            node = parent[node];
            path.push((node - v) as u32);
        }
        code.reverse();
        path.reverse();
        codes.push(code);
        points.push(path);
    }
    Ok(HuffmanTree { codes, points })
}
