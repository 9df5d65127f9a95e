//! Common interface of all demappers.

use crate::link::{gray_demap, ChunkSet, GRAY_LABELS};

/// Maps a window of received samples to a PAM4 symbol decision.
pub trait Demapper: Send + Sync {
    /// Window length the demapper consumes.
    fn n_tap(&self) -> usize;

    /// Alphabet index (0..4) decided for the center sample of `chunk`.
    fn decide(&self, chunk: &[f64]) -> usize;

    fn decide_all(&self, chunks: &ChunkSet) -> Vec<usize> {
        chunks.iter().map(|c| self.decide(c)).collect()
    }

    /// Bit decision via the Gray label.
    fn demap(&self, chunk: &[f64]) -> [u8; 2] {
        gray_demap(self.decide(chunk)).expect("demapper returned an index outside 0..4")
    }
}

impl<D: Demapper + ?Sized> Demapper for Box<D> {
    fn n_tap(&self) -> usize {
        (**self).n_tap()
    }
    fn decide(&self, chunk: &[f64]) -> usize {
        (**self).decide(chunk)
    }
    fn decide_all(&self, chunks: &ChunkSet) -> Vec<usize> {
        (**self).decide_all(chunks)
    }
}

/// Number of differing Gray bits between decided and true symbol indices.
pub fn count_bit_errors(decided: &[usize], truth: &[u8]) -> u64 {
    decided
        .iter()
        .zip(truth)
        .map(|(&d, &t)| {
            let a = GRAY_LABELS[d];
            let b = GRAY_LABELS[t as usize];
            ((a[0] ^ b[0]) + (a[1] ^ b[1])) as u64
        })
        .sum()
}
