//! Joint equalization and demapping for a simulated 112 GBd PAM4 IM/DD link.
//!
//! The crate is organized along the processing chain:
//!
//! - [`link`]: bits to PAM4 symbols, RRC pulse shaping, chromatic dispersion,
//!   square-law photodiode, AWGN, matched filter and symbol-rate sampling.
//! - [`classical`]: LMMSE linear equalizer, Volterra nonlinear equalizer and the
//!   BER-minimizing threshold demapper.
//! - [`neural`]: a small tape-based reverse-mode gradient engine, Adam, and the
//!   7-40-20-4 ANN demapper.
//! - [`snn`]: distance-coded spike encoding, a hidden LIF layer with an LI
//!   readout, max-over-time decoding and surrogate-gradient BPTT training.
//! - [`experiment`]: the noise-sweep training protocol, BER estimation with
//!   credibility intervals, relative-gain interpolation and reporting.
//!
//! Every runnable capability has a matching program under `examples/`.

pub mod classical;
pub mod demapper;
pub mod error;
pub mod experiment;
pub mod link;
pub mod neural;
pub mod rng;
pub mod snn;

pub use demapper::Demapper;
pub use error::{Error, Result};
