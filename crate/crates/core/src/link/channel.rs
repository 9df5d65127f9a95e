use super::{LinkParams, NoiseLevel};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

/// Vacuum speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Linear fiber dispersion, H(f) = exp(i·π·D·l·λ²·f²/c).
#[derive(Clone)]
pub struct ChromaticDispersion {
    /// π·D·l·λ²/c in rad/Hz².
    coeff: f64,
    sample_rate: f64,
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl ChromaticDispersion {
    /// Operator for waveforms of `len` samples at the link's oversampled rate.
    pub fn new(params: &LinkParams, len: usize) -> Self {
        let coeff = PI * params.dispersion * params.fiber_length * params.wavelength.powi(2)
            / SPEED_OF_LIGHT;
        let mut planner = FftPlanner::new();
        Self {
            coeff,
            sample_rate: params.sample_rate(),
            len,
            forward: planner.plan_fft_forward(len.max(1)),
            inverse: planner.plan_fft_inverse(len.max(1)),
        }
    }

    pub fn phase(&self, freq: f64) -> f64 {
        self.coeff * freq * freq
    }

    pub fn transfer(&self, freq: f64) -> Complex64 {
        Complex64::from_polar(1.0, self.phase(freq))
    }

    /// Group delay dφ/dω in seconds.
    pub fn group_delay(&self, freq: f64) -> f64 {
        self.coeff * freq / PI
    }

    /// Frequency of DFT bin `k` for a length-`n` transform, in (-fs/2, fs/2].
    fn bin_frequency(&self, k: usize, n: usize) -> f64 {
        let k = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        k * self.sample_rate / n as f64
    }

    pub fn apply(&self, waveform: &[f64]) -> Vec<Complex64> {
        let field: Vec<Complex64> = waveform.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.apply_complex(field)
    }

    pub fn apply_complex(&self, mut field: Vec<Complex64>) -> Vec<Complex64> {
        let n = field.len();
        if n == 0 {
            return field;
        }
        let (fwd, inv) = if n == self.len {
            (self.forward.clone(), self.inverse.clone())
        } else {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        };
        fwd.process(&mut field);
        for (k, x) in field.iter_mut().enumerate() {
            *x *= self.transfer(self.bin_frequency(k, n));
        }
        inv.process(&mut field);
        let scale = 1.0 / n as f64;
        field.iter_mut().for_each(|x| *x *= scale);
        field
    }
}

/// Applies chromatic dispersion to a real waveform sampled at `baudrate·n_up`.
pub fn chromatic_dispersion(waveform: &[f64], params: &LinkParams) -> Vec<Complex64> {
    ChromaticDispersion::new(params, waveform.len()).apply(waveform)
}

/// Square-law detection.
pub fn photodiode(field: &[Complex64]) -> Vec<f64> {
    field.iter().map(|x| x.norm_sqr()).collect()
}

/// Adds i.i.d. zero-mean Gaussian noise of variance σ² = 10^(dB/10).
pub fn add_awgn<R: Rng + ?Sized>(signal: &[f64], noise: NoiseLevel, rng: &mut R) -> Vec<f64> {
    let var = noise.variance();
    if var == 0.0 {
        return signal.to_vec();
    }
    let sigma = var.sqrt();
    signal
        .iter()
        .map(|&x| {
            let z: f64 = rng.sample(StandardNormal);
            x + sigma * z
        })
        .collect()
}
