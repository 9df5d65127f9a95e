use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Physical and waveform parameters of the simulated link.
///
/// Units are SI throughout: baudrate in Bd, wavelength and fiber length in
/// meters, dispersion in s/m².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkParams {
    pub baudrate: f64,
    pub wavelength: f64,
    pub dispersion: f64,
    pub fiber_length: f64,
    pub alphabet: [f64; 4],
    pub seq_len: usize,
    pub bias: f64,
    pub rrc_rolloff: f64,
    pub n_up: usize,
    pub n_down: usize,
    /// RRC filter length in symbols.
    pub rrc_span: usize,
    pub rng_seed: u64,
}

impl Default for LinkParams {
    fn default() -> Self {
        Self {
            baudrate: 112e9,
            wavelength: 1270e-9,
            dispersion: Self::ps_per_nm_km(-5.0),
            fiber_length: 4e3,
            alphabet: [-3.0, -1.0, 1.0, 3.0],
            seq_len: 10_000,
            bias: 2.25,
            rrc_rolloff: 0.2,
            n_up: 3,
            n_down: 3,
            rrc_span: 32,
            rng_seed: 0,
        }
    }
}

impl LinkParams {
    /// Converts a dispersion coefficient in ps/(nm·km) to s/m².
    pub fn ps_per_nm_km(d: f64) -> f64 {
        d * 1e-12 / (1e-9 * 1e3)
    }

    pub fn sample_rate(&self) -> f64 {
        self.baudrate * self.n_up as f64
    }

    pub fn symbol_period(&self) -> f64 {
        1.0 / self.baudrate
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidLinkParams(msg));
        if self.n_up == 0 || self.n_up != self.n_down {
            return bad(format!(
                "n_up ({}) and n_down ({}) must be equal and nonzero",
                self.n_up, self.n_down
            ));
        }
        if !self.alphabet.windows(2).all(|w| w[0] < w[1]) {
            return bad(format!("alphabet {:?} is not strictly increasing", self.alphabet));
        }
        if self.seq_len == 0 {
            return bad("sequence length must be positive".into());
        }
        if !(self.baudrate > 0.0 && self.wavelength > 0.0 && self.fiber_length >= 0.0) {
            return bad("baudrate and wavelength must be positive, fiber length non-negative".into());
        }
        if !(self.bias.is_finite() && self.dispersion.is_finite()) {
            return bad("bias and dispersion must be finite".into());
        }
        Ok(())
    }
}

/// Noise level σ² in dB (10·log10 σ²). `-inf` means a noiseless link.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NoiseLevel(pub f64);

impl NoiseLevel {
    pub const NOISELESS: NoiseLevel = NoiseLevel(f64::NEG_INFINITY);

    pub fn db(self) -> f64 {
        self.0
    }

    pub fn variance(self) -> f64 {
        if self.0 == f64::NEG_INFINITY {
            0.0
        } else {
            10f64.powf(self.0 / 10.0)
        }
    }
}
