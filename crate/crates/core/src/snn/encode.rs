use super::SnnParams;
use crate::{Error, Result};

/// Input spikes of one chunk: at most one spike per input neuron.
///
/// Neuron `ℓ·N̄ⁱ + i` encodes sample ℓ against reference point χ_i.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpikeRaster {
    n_steps: usize,
    times: Vec<Option<u16>>,
}

impl SpikeRaster {
    pub fn silent(n_inputs: usize, n_steps: usize) -> Self {
        Self {
            n_steps,
            times: vec![None; n_inputs],
        }
    }

    pub fn n_inputs(&self) -> usize {
        self.times.len()
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Spike step of `neuron`, if it fires.
    pub fn spike_step(&self, neuron: usize) -> Option<usize> {
        self.times[neuron].map(usize::from)
    }

    pub fn get(&self, neuron: usize, step: usize) -> bool {
        self.spike_step(neuron) == Some(step)
    }

    /// `(neuron, step)` for every spike, in neuron order.
    pub fn events(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.times
            .iter()
            .enumerate()
            .filter_map(|(n, t)| t.map(|s| (n, s as usize)))
    }

    pub fn spike_count(&self) -> usize {
        self.times.iter().filter(|t| t.is_some()).count()
    }

    /// Dense `n_inputs × n_steps` 0/1 matrix, row-major.
    pub fn to_dense(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.times.len() * self.n_steps];
        for (n, s) in self.events() {
            out[n * self.n_steps + s] = 1;
        }
        out
    }

    /// Neurons firing at each step.
    pub fn by_step(&self) -> Vec<Vec<usize>> {
        let mut steps = vec![Vec::new(); self.n_steps];
        for (n, s) in self.events() {
            steps[s].push(n);
        }
        steps
    }
}

/// Distance coding `t = α·|x − χ_i| + o`, discretized to `floor(t/Δt)`.
///
/// Neurons whose spike time reaches the cutoff stay silent.
pub fn encode_spikes(chunk: &[f64], params: &SnnParams) -> Result<SpikeRaster> {
    if chunk.len() != params.n_tap {
        return Err(Error::LengthMismatch {
            expected: params.n_tap,
            got: chunk.len(),
        });
    }
    let n_ref = params.n_ref();
    let n_steps = params.n_steps();
    let mut raster = SpikeRaster::silent(params.n_inputs(), n_steps);
    for (l, &x) in chunk.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::NonFinite(format!("input sample {l}")));
        }
        for (i, &chi) in params.ref_points.iter().enumerate() {
            let t = params.enc_scale * (x - chi).abs() + params.enc_offset;
            if t < params.cutoff && t >= 0.0 {
                let step = (t / params.dt).floor() as usize;
                if step < n_steps {
                    raster.times[l * n_ref + i] = Some(step as u16);
                }
            }
        }
    }
    Ok(raster)
}
