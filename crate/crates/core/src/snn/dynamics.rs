use super::{Dynamics, SnnModel, SnnParams, SpikeRaster};
use crate::neural::Tensor;
use crate::{Error, Result};

/// Membrane potentials and synaptic currents of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerState {
    pub v: Vec<f64>,
    pub i: Vec<f64>,
}

impl LayerState {
    pub fn rest(n: usize, v_leak: f64) -> Self {
        Self {
            v: vec![v_leak; n],
            i: vec![0.0; n],
        }
    }

    fn integrate(&mut self, input: &[f64], d: &Dynamics) {
        for ((v, i), x) in self.v.iter_mut().zip(self.i.iter_mut()).zip(input) {
            *i = d.syn_decay * *i + x;
            *v = d.mem_keep * *v + d.mem_leak + d.mem_gain * *i;
        }
    }

    fn check_finite(&self) -> Result<()> {
        if self.v.iter().chain(&self.i).all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("neuron state".into()))
        }
    }

    /// LIF update: current, then membrane, then threshold and reset.
    /// Writes the emitted spikes to `spikes`.
    pub fn lif_step(&mut self, input: &[f64], d: &Dynamics, spikes: &mut [bool]) -> Result<()> {
        self.integrate(input, d);
        self.check_finite()?;
        self.fire(d, spikes);
        Ok(())
    }

    fn fire(&mut self, d: &Dynamics, spikes: &mut [bool]) {
        for (v, z) in self.v.iter_mut().zip(spikes.iter_mut()) {
            *z = *v >= d.threshold;
            if *z {
                *v = d.v_reset;
            }
        }
    }

    /// Leaky-integrator update, no spiking.
    pub fn li_step(&mut self, input: &[f64], d: &Dynamics) -> Result<()> {
        self.integrate(input, d);
        self.check_finite()
    }
}

/// One LIF step with already weighted input; returns the spikes.
pub fn lif_layer_step(
    state: &mut LayerState,
    weighted_input: &[f64],
    params: &SnnParams,
) -> Result<Vec<bool>> {
    let mut z = vec![false; state.v.len()];
    state.lif_step(weighted_input, &params.dynamics(), &mut z)?;
    Ok(z)
}

/// One leaky-integrator step with already weighted input.
pub fn li_layer_step(
    state: &mut LayerState,
    weighted_input: &[f64],
    params: &SnnParams,
) -> Result<()> {
    state.li_step(weighted_input, &params.dynamics())
}

/// Per-step values of a layer, `neurons × steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerTrace {
    pub v: Tensor,
    pub i: Tensor,
    /// Present for spiking layers only.
    pub spikes: Option<Tensor>,
}

impl LayerTrace {
    fn new(n: usize, steps: usize, spiking: bool) -> Self {
        Self {
            v: Tensor::zeros(n, steps),
            i: Tensor::zeros(n, steps),
            spikes: spiking.then(|| Tensor::zeros(n, steps)),
        }
    }

    fn record(&mut self, step: usize, state: &LayerState, spikes: Option<&[bool]>) {
        for (n, (&v, &i)) in state.v.iter().zip(&state.i).enumerate() {
            self.v.set(n, step, v);
            self.i.set(n, step, i);
        }
        if let (Some(t), Some(z)) = (self.spikes.as_mut(), spikes) {
            for (n, &s) in z.iter().enumerate() {
                t.set(n, step, if s { 1.0 } else { 0.0 });
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnnTrace {
    pub hidden: LayerTrace,
    pub output: LayerTrace,
}

/// Full simulation of one raster, recording every state.
pub fn snn_forward(model: &SnnModel, raster: &SpikeRaster) -> Result<SnnTrace> {
    let p = &model.params;
    let n_steps = p.n_steps();
    let mut trace = SnnTrace {
        hidden: LayerTrace::new(p.n_hidden, n_steps, true),
        output: LayerTrace::new(p.n_out, n_steps, false),
    };
    simulate(model, raster, |k, h, z, o| {
        trace.hidden.record(k, h, Some(z));
        trace.output.record(k, o, None);
    })?;
    Ok(trace)
}

/// Max-over-time output scores without recording traces.
pub fn snn_scores(model: &SnnModel, raster: &SpikeRaster) -> Result<Vec<f64>> {
    let mut best = vec![f64::NEG_INFINITY; model.params.n_out];
    simulate(model, raster, |_, _, _, o| {
        for (b, &v) in best.iter_mut().zip(&o.v) {
            if v > *b {
                *b = v;
            }
        }
    })?;
    Ok(best)
}

fn simulate(
    model: &SnnModel,
    raster: &SpikeRaster,
    mut observe: impl FnMut(usize, &LayerState, &[bool], &LayerState),
) -> Result<()> {
    let p = &model.params;
    if raster.n_inputs() != model.w_ih.rows() || raster.n_steps() != p.n_steps() {
        return Err(Error::Shape {
            op: "snn_forward",
            detail: format!(
                "raster {}x{}, model expects {}x{}",
                raster.n_inputs(),
                raster.n_steps(),
                model.w_ih.rows(),
                p.n_steps()
            ),
        });
    }
    let d = p.dynamics();
    let mut events: Vec<(usize, usize)> = raster.events().map(|(n, k)| (k, n)).collect();
    events.sort_unstable();
    let mut next = events.iter().peekable();
    let mut hidden = LayerState::rest(p.n_hidden, p.v_leak);
    let mut output = LayerState::rest(p.n_out, p.v_leak);
    let mut h_in = vec![0.0; p.n_hidden];
    let mut o_in = vec![0.0; p.n_out];
    let mut z = vec![false; p.n_hidden];
    for k in 0..p.n_steps() {
        h_in.iter_mut().for_each(|x| *x = 0.0);
        while let Some(&(_, n)) = next.next_if(|e| e.0 == k) {
            for (x, w) in h_in.iter_mut().zip(model.w_ih.row(n)) {
                *x += w;
            }
        }
        hidden.integrate(&h_in, &d);
        hidden.fire(&d, &mut z);
        o_in.iter_mut().for_each(|x| *x = 0.0);
        for (j, _) in z.iter().enumerate().filter(|(_, s)| **s) {
            for (x, w) in o_in.iter_mut().zip(model.w_ho.row(j)) {
                *x += w;
            }
        }
        output.integrate(&o_in, &d);
        observe(k, &hidden, &z, &output);
    }
    // A non-finite current never decays back to a finite value.
    hidden.check_finite()?;
    output.check_finite()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rest_is_a_fixed_point() {
        let p = SnnParams::default();
        let mut s = LayerState::rest(3, 0.0);
        for _ in 0..100 {
            let z = lif_layer_step(&mut s, &[0.0; 3], &p).unwrap();
            assert!(z.iter().all(|z| !z));
        }
        assert_eq!(s, LayerState::rest(3, 0.0));
    }

    #[test]
    fn free_decay_matches_closed_form() {
        let p = SnnParams::default();
        let mut s = LayerState::rest(1, 0.0);
        s.v[0] = 0.5;
        for k in 1..=40 {
            lif_layer_step(&mut s, &[0.0], &p).unwrap();
            let expect = 0.5 * (11.0f64 / 12.0).powi(k);
            assert!((s.v[0] - expect).abs() < 1e-15, "step {k}");
        }
    }

    #[test]
    fn strong_input_spikes_once_and_resets() {
        let p = SnnParams::default();
        let mut s = LayerState::rest(1, 0.0);
        let z = lif_layer_step(&mut s, &[12.5], &p).unwrap();
        assert!(z[0]);
        assert_eq!(s.v[0], 0.0);
        let z = lif_layer_step(&mut s, &[0.0], &p).unwrap();
        assert!(!z[0]);
        assert!(s.v[0] > 0.0 && s.v[0] < 1.0);
    }

    #[test]
    fn li_matches_lif_below_threshold() {
        let p = SnnParams {
            threshold: f64::INFINITY,
            ..SnnParams::default()
        };
        let inputs = [0.3, 0.0, -0.1, 0.7, 0.0, 0.0, 0.2];
        let mut a = LayerState::rest(1, 0.0);
        let mut b = LayerState::rest(1, 0.0);
        for x in inputs {
            lif_layer_step(&mut a, &[x], &p).unwrap();
            li_layer_step(&mut b, &[x], &SnnParams::default()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn li_bump_rises_then_decays() {
        let p = SnnParams::default();
        let mut s = LayerState::rest(1, 0.0);
        li_layer_step(&mut s, &[0.4], &p).unwrap();
        let mut vs = vec![s.v[0]];
        for _ in 0..59 {
            li_layer_step(&mut s, &[0.0], &p).unwrap();
            vs.push(s.v[0]);
        }
        let peak = vs.iter().cloned().fold(0.0, f64::max);
        assert!(peak > 0.0);
        assert!(vs[59] < peak && vs[59] > 0.0);
    }

    #[test]
    fn non_finite_state_is_an_error() {
        let p = SnnParams::default();
        let mut s = LayerState::rest(1, 0.0);
        assert!(lif_layer_step(&mut s, &[f64::NAN], &p).is_err());
    }
}
