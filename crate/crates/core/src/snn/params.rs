use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Time-stepping scheme for the neuron ODEs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    #[default]
    Euler,
    ExponentialEuler,
}

/// Encoding and neuron constants. Times are in µs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SnnParams {
    /// Samples per chunk.
    pub n_tap: usize,
    /// Affine map `gain·ỹ + shift` applied to received samples before encoding.
    pub input_gain: f64,
    pub input_shift: f64,
    /// α: spike time per unit distance to a reference point.
    pub enc_scale: f64,
    /// o: constant spike-time offset.
    pub enc_offset: f64,
    /// χ_i, one input neuron per point and per sample.
    pub ref_points: Vec<f64>,
    /// t_c: spikes at or after this time are dropped.
    pub cutoff: f64,
    pub n_hidden: usize,
    pub n_out: usize,
    pub tau_m: f64,
    pub tau_s: f64,
    pub v_leak: f64,
    pub v_reset: f64,
    pub threshold: f64,
    pub leak_resistance: f64,
    pub dt: f64,
    pub t_sim: f64,
    /// Steepness of the SuperSpike pseudo-derivative.
    pub surrogate_beta: f64,
    pub integrator: Integrator,
    /// Multiplies the ±1/√fan_in weight initialization range.
    pub init_gain: f64,
}

impl Default for SnnParams {
    fn default() -> Self {
        Self {
            n_tap: 7,
            input_gain: 0.7,
            input_shift: 0.0,
            enc_scale: 8.0,
            enc_offset: 0.0,
            ref_points: (0..10).map(|i| 7.0 * i as f64 / 9.0).collect(),
            cutoff: 15.0,
            n_hidden: 40,
            n_out: 4,
            tau_m: 6.0,
            tau_s: 6.0,
            v_leak: 0.0,
            v_reset: 0.0,
            threshold: 1.0,
            leak_resistance: 1.0,
            dt: 0.5,
            t_sim: 30.0,
            surrogate_beta: 10.0,
            integrator: Integrator::Euler,
            init_gain: 1.0,
        }
    }
}

/// Per-step update coefficients derived from [`SnnParams`].
///
/// Current: `I ← syn_decay·I + input`.
/// Membrane: `v ← mem_keep·v + mem_leak + mem_gain·I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dynamics {
    pub syn_decay: f64,
    pub mem_keep: f64,
    pub mem_leak: f64,
    pub mem_gain: f64,
    pub threshold: f64,
    pub v_reset: f64,
}

impl SnnParams {
    /// Input neurons per chunk, `n_tap · N̄ⁱ`.
    pub fn n_inputs(&self) -> usize {
        self.n_tap * self.ref_points.len()
    }

    pub fn n_ref(&self) -> usize {
        self.ref_points.len()
    }

    pub fn n_steps(&self) -> usize {
        (self.t_sim / self.dt).round() as usize
    }

    /// First step at which input spikes are no longer allowed.
    pub fn cutoff_step(&self) -> usize {
        (self.cutoff / self.dt).ceil() as usize
    }

    pub fn dynamics(&self) -> Dynamics {
        let (syn_decay, mem_keep) = match self.integrator {
            Integrator::Euler => (1.0 - self.dt / self.tau_s, 1.0 - self.dt / self.tau_m),
            Integrator::ExponentialEuler => {
                ((-self.dt / self.tau_s).exp(), (-self.dt / self.tau_m).exp())
            }
        };
        Dynamics {
            syn_decay,
            mem_keep,
            mem_leak: (1.0 - mem_keep) * self.v_leak,
            mem_gain: (1.0 - mem_keep) * self.leak_resistance,
            threshold: self.threshold,
            v_reset: self.v_reset,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSnnParams(m.to_string()));
        if self.n_tap.is_multiple_of(2) {
            return Err(Error::EvenTapCount(self.n_tap));
        }
        if self.ref_points.is_empty() || self.n_hidden == 0 || self.n_out == 0 {
            return bad("layer sizes must be positive");
        }
        if !(self.dt > 0.0 && self.tau_m > 0.0 && self.tau_s > 0.0) {
            return bad("dt and time constants must be positive");
        }
        let steps = self.t_sim / self.dt;
        if (steps - steps.round()).abs() > 1e-9 || steps.round() < 1.0 {
            return bad("t_sim must be a positive integer multiple of dt");
        }
        if self.cutoff > self.t_sim {
            return bad("cutoff must not exceed t_sim");
        }
        if self.integrator == Integrator::Euler && (self.dt >= self.tau_m || self.dt >= self.tau_s)
        {
            return bad("forward Euler needs dt below both time constants");
        }
        let finite = [
            self.input_gain,
            self.input_shift,
            self.enc_scale,
            self.enc_offset,
            self.cutoff,
            self.v_leak,
            self.v_reset,
            self.threshold,
            self.leak_resistance,
            self.surrogate_beta,
            self.init_gain,
        ];
        if finite.iter().chain(&self.ref_points).any(|v| !v.is_finite()) {
            return bad("non-finite constant");
        }
        if self.enc_scale <= 0.0 || self.surrogate_beta < 0.0 {
            return bad("enc_scale must be positive and surrogate_beta non-negative");
        }
        Ok(())
    }
}
