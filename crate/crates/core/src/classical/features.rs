use crate::link::ChunkSet;
use nalgebra::DMatrix;

/// Binomial coefficient C(n, k).
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Width of each order-m feature block, m = 0..=order: C(m + n_tap - 1, m).
pub fn volterra_block_widths(n_tap: usize, order: usize) -> Vec<usize> {
    (0..=order)
        .map(|m| binomial(m + n_tap - 1, m))
        .collect()
}

pub fn volterra_feature_count(n_tap: usize, order: usize) -> usize {
    volterra_block_widths(n_tap, order).iter().sum()
}

/// Monomial basis of a Volterra equalizer.
///
/// Feature 0 is the constant 1. Every other feature is the product of an
/// earlier feature (one order lower) with one more window sample, so each row
/// costs one multiplication per feature. Within an order the index tuples
/// j ≤ k ≤ … are enumerated lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct VolterraBasis {
    n_tap: usize,
    order: usize,
    /// (parent feature, window tap) for features 1..len.
    factors: Vec<(usize, usize)>,
}

impl VolterraBasis {
    pub fn new(n_tap: usize, order: usize) -> Self {
        let mut factors = Vec::with_capacity(volterra_feature_count(n_tap, order));
        // last tap index of each feature in the previous order block
        let mut prev: Vec<(usize, usize)> = vec![(0, 0)];
        let mut next_index = 1;
        for _ in 1..=order {
            let mut block = Vec::new();
            for &(parent, last_tap) in &prev {
                for tap in last_tap..n_tap {
                    factors.push((parent, tap));
                    block.push((next_index, tap));
                    next_index += 1;
                }
            }
            prev = block;
        }
        Self {
            n_tap,
            order,
            factors,
        }
    }

    pub fn n_tap(&self) -> usize {
        self.n_tap
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.factors.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Writes the feature row of `chunk` into `out` (length [`Self::len`]).
    pub fn eval_into(&self, chunk: &[f64], out: &mut [f64]) {
        debug_assert_eq!(chunk.len(), self.n_tap);
        out[0] = 1.0;
        for (k, &(parent, tap)) in self.factors.iter().enumerate() {
            out[k + 1] = out[parent] * chunk[tap];
        }
    }

    pub fn eval(&self, chunk: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(chunk, &mut out);
        out
    }

    pub fn matrix(&self, chunks: &ChunkSet) -> DMatrix<f64> {
        let cols = self.len();
        let mut m = DMatrix::zeros(chunks.len(), cols);
        let mut row = vec![0.0; cols];
        for (r, chunk) in chunks.iter().enumerate() {
            self.eval_into(chunk, &mut row);
            for (c, v) in row.iter().enumerate() {
                m[(r, c)] = *v;
            }
        }
        m
    }
}

/// Rows `[1, ỹ_n]`.
pub fn build_le_features(chunks: &ChunkSet) -> DMatrix<f64> {
    VolterraBasis::new(chunks.n_tap(), 1).matrix(chunks)
}

/// Rows `[f_0, f_1, …, f_order]` of concatenated monomial blocks.
pub fn build_volterra_features(chunks: &ChunkSet, order: usize) -> DMatrix<f64> {
    VolterraBasis::new(chunks.n_tap(), order).matrix(chunks)
}
