use crate::{Error, Result};
use rand::Rng;

/// Bit labels of the ascending alphabet indices 0..4.
pub const GRAY_LABELS: [[u8; 2]; 4] = [[0, 0], [0, 1], [1, 1], [1, 0]];

/// Transmitted bits and the PAM4 symbols they map to.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFrame {
    pub bits: Vec<u8>,
    /// Alphabet index of each symbol.
    pub indices: Vec<u8>,
    pub symbols: Vec<f64>,
}

impl SymbolFrame {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Builds a frame from alphabet indices.
    pub fn from_indices(indices: &[u8], alphabet: &[f64; 4]) -> Result<Self> {
        let mut bits = Vec::with_capacity(2 * indices.len());
        let mut symbols = Vec::with_capacity(indices.len());
        for &i in indices {
            bits.extend_from_slice(&gray_demap(i as usize)?);
            symbols.push(alphabet[i as usize]);
        }
        Ok(Self {
            bits,
            indices: indices.to_vec(),
            symbols,
        })
    }
}

pub fn gray_index(bits: [u8; 2]) -> usize {
    match (bits[0] & 1, bits[1] & 1) {
        (0, 0) => 0,
        (0, 1) => 1,
        (1, 1) => 2,
        _ => 3,
    }
}

pub fn gray_demap(index: usize) -> Result<[u8; 2]> {
    GRAY_LABELS
        .get(index)
        .copied()
        .ok_or(Error::InvalidSymbolIndex(index))
}

pub fn map_bits_to_pam4(bits: &[u8], alphabet: &[f64; 4]) -> Result<SymbolFrame> {
    if !bits.len().is_multiple_of(2) {
        return Err(Error::OddBitCount(bits.len()));
    }
    let indices: Vec<u8> = bits
        .chunks_exact(2)
        .map(|b| gray_index([b[0], b[1]]) as u8)
        .collect();
    let symbols = indices.iter().map(|&i| alphabet[i as usize]).collect();
    Ok(SymbolFrame {
        bits: bits.iter().map(|b| b & 1).collect(),
        indices,
        symbols,
    })
}

pub fn random_bits<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Vec<u8> {
    let mut bits = Vec::with_capacity(count);
    while bits.len() < count {
        let word: u64 = rng.random();
        let take = (count - bits.len()).min(64);
        bits.extend((0..take).map(|k| ((word >> k) & 1) as u8));
    }
    bits
}
