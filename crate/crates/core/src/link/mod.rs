//! Simulated IM/DD link.
//!
//! Processing order: Gray mapping onto the PAM4 alphabet, zero-stuffed
//! upsampling with RRC shaping plus a constant bias, chromatic dispersion as a
//! frequency-domain allpass on the optical field, square-law detection,
//! additive white Gaussian noise at the oversampled rate, RX RRC matched
//! filtering and decimation back to one sample per symbol.
//!
//! All filtering is circular over a frame, so every frame is one period of a
//! periodic signal and there is no filter transient at the frame edges.

mod channel;
mod dataset;
mod gray;
mod params;
mod receiver;
mod rrc;

pub use channel::{add_awgn, chromatic_dispersion, photodiode, ChromaticDispersion, SPEED_OF_LIGHT};
pub use dataset::{
    generate_frame, read_dataset, write_dataset, LabeledDataset, LabeledFrame, Split,
};
pub use gray::{gray_demap, gray_index, map_bits_to_pam4, random_bits, SymbolFrame, GRAY_LABELS};
pub use params::{LinkParams, NoiseLevel};
pub use receiver::{extract_chunks, matched_filter_downsample, ChunkSet, RxSamples};
pub use rrc::{circular_filter, rrc_taps, shape_and_bias, MIN_RRC_SPAN};

use crate::Result;
use num_complex::Complex64;
use rand::Rng;

/// Precomputed link stages for repeated frame generation.
///
/// Holds the RRC taps and the dispersion operator so that simulating many
/// frames does not redo filter design or FFT planning.
#[derive(Clone)]
pub struct Link {
    params: LinkParams,
    taps: Vec<f64>,
    dispersion: ChromaticDispersion,
}

impl std::fmt::Debug for Link {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Link")
            .field("params", &self.params)
            .field("taps", &self.taps.len())
            .finish()
    }
}

impl Link {
    pub fn new(params: LinkParams) -> Result<Self> {
        params.validate()?;
        let taps = rrc_taps(params.rrc_rolloff, params.n_up, params.rrc_span)?;
        let dispersion = ChromaticDispersion::new(&params, params.seq_len * params.n_up);
        Ok(Self {
            params,
            taps,
            dispersion,
        })
    }

    pub fn params(&self) -> &LinkParams {
        &self.params
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn dispersion(&self) -> &ChromaticDispersion {
        &self.dispersion
    }

    /// Upsampled, RRC-shaped and biased transmit waveform.
    pub fn transmit(&self, frame: &SymbolFrame) -> Vec<f64> {
        rrc::shape_with_taps(&frame.symbols, &self.taps, self.params.n_up, self.params.bias)
    }

    /// Optical field after the fiber.
    pub fn fiber(&self, waveform: &[f64]) -> Vec<Complex64> {
        self.dispersion.apply(waveform)
    }

    /// RX RRC filter and decimation of a detected (real) signal.
    pub fn receive(&self, detected: &[f64], noise: NoiseLevel) -> Result<RxSamples> {
        receiver::filter_and_decimate(detected, &self.taps, &self.params, noise)
    }

    /// One frame through the whole link with freshly drawn bits.
    pub fn simulate<R: Rng + ?Sized>(
        &self,
        noise: NoiseLevel,
        rng: &mut R,
    ) -> Result<(SymbolFrame, RxSamples)> {
        let bits = random_bits(2 * self.params.seq_len, rng);
        let frame = map_bits_to_pam4(&bits, &self.params.alphabet)?;
        let rx = self.simulate_frame(&frame, noise, rng)?;
        Ok((frame, rx))
    }

    /// Pushes a given symbol frame through the link.
    pub fn simulate_frame<R: Rng + ?Sized>(
        &self,
        frame: &SymbolFrame,
        noise: NoiseLevel,
        rng: &mut R,
    ) -> Result<RxSamples> {
        let tx = self.transmit(frame);
        let field = self.fiber(&tx);
        let detected = photodiode(&field);
        let noisy = add_awgn(&detected, noise, rng);
        self.receive(&noisy, noise)
    }
}

/// Simulates one frame of `params.seq_len` symbols through the full link.
pub fn simulate_link<R: Rng + ?Sized>(
    params: &LinkParams,
    noise: NoiseLevel,
    rng: &mut R,
) -> Result<(SymbolFrame, RxSamples)> {
    Link::new(params.clone())?.simulate(noise, rng)
}
