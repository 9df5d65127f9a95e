use super::rrc::{circular_filter, rrc_taps};
use super::{LinkParams, NoiseLevel};
use crate::{Error, Result};
use std::ops::Range;

/// Received symbol-rate sequence ỹ for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct RxSamples {
    pub samples: Vec<f64>,
    pub noise_level_db: f64,
    pub origin: LinkParams,
}

impl RxSamples {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

pub(crate) fn filter_and_decimate(
    signal: &[f64],
    taps: &[f64],
    params: &LinkParams,
    noise: NoiseLevel,
) -> Result<RxSamples> {
    let expected = params.seq_len * params.n_up;
    if signal.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            got: signal.len(),
        });
    }
    // TX/RX filters are centered and the dispersion phase is even in f, so
    // the cascade has zero group delay at DC and symbol n sits at n·n_down.
    let filtered = circular_filter(signal, taps);
    let samples: Vec<f64> = filtered.iter().step_by(params.n_down).copied().collect();
    debug_assert_eq!(samples.len(), params.seq_len);
    Ok(RxSamples {
        samples,
        noise_level_db: noise.db(),
        origin: params.clone(),
    })
}

/// RX RRC matched filter followed by decimation by `n_down`.
pub fn matched_filter_downsample(
    signal: &[f64],
    params: &LinkParams,
    noise: NoiseLevel,
) -> Result<RxSamples> {
    let taps = rrc_taps(params.rrc_rolloff, params.n_up, params.rrc_span)?;
    filter_and_decimate(signal, &taps, params, noise)
}

/// Sliding windows of `n_tap` received samples centered on each interior symbol.
///
/// The first and last ⌊n_tap/2⌋ symbols of the frame have incomplete windows
/// and are excluded; [`ChunkSet::symbol_range`] tells which symbols are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkSet {
    n_tap: usize,
    first_symbol: usize,
    data: Vec<f64>,
}

impl ChunkSet {
    pub fn n_tap(&self) -> usize {
        self.n_tap
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.n_tap
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Symbol indices (into the frame) whose chunks are present.
    pub fn symbol_range(&self) -> Range<usize> {
        self.first_symbol..self.first_symbol + self.len()
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_tap..(i + 1) * self.n_tap]
    }

    /// All windows back to back, `len() × n_tap` values.
    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.n_tap)
    }

    /// Builds a chunk set directly from flattened windows.
    pub fn from_flat(n_tap: usize, data: Vec<f64>) -> Result<Self> {
        if n_tap.is_multiple_of(2) {
            return Err(Error::EvenTapCount(n_tap));
        }
        if !data.len().is_multiple_of(n_tap) {
            return Err(Error::LengthMismatch {
                expected: data.len() / n_tap * n_tap,
                got: data.len(),
            });
        }
        Ok(Self {
            n_tap,
            first_symbol: n_tap / 2,
            data,
        })
    }

    /// Keeps only the chunks at the given positions.
    pub fn select(&self, positions: &[usize]) -> ChunkSet {
        let mut data = Vec::with_capacity(positions.len() * self.n_tap);
        for &p in positions {
            data.extend_from_slice(self.get(p));
        }
        ChunkSet {
            n_tap: self.n_tap,
            first_symbol: self.first_symbol,
            data,
        }
    }

    /// Concatenates chunk sets with equal `n_tap`.
    pub fn concat(sets: &[ChunkSet]) -> Result<ChunkSet> {
        let first = sets.first().ok_or(Error::Empty("chunk sets"))?;
        let mut data = Vec::new();
        for s in sets {
            if s.n_tap != first.n_tap {
                return Err(Error::LengthMismatch {
                    expected: first.n_tap,
                    got: s.n_tap,
                });
            }
            data.extend_from_slice(&s.data);
        }
        Ok(ChunkSet {
            n_tap: first.n_tap,
            first_symbol: first.first_symbol,
            data,
        })
    }
}

pub fn extract_chunks(samples: &[f64], n_tap: usize) -> Result<ChunkSet> {
    if n_tap.is_multiple_of(2) {
        return Err(Error::EvenTapCount(n_tap));
    }
    if n_tap > samples.len() {
        return Err(Error::TapCountTooLarge {
            n_tap,
            len: samples.len(),
        });
    }
    let count = samples.len() - n_tap + 1;
    let mut data = Vec::with_capacity(count * n_tap);
    for w in samples.windows(n_tap) {
        data.extend_from_slice(w);
    }
    Ok(ChunkSet {
        n_tap,
        first_symbol: n_tap / 2,
        data,
    })
}
