use rand::seq::SliceRandom;
use rand::Rng;

use super::{encode_spikes, snn_scores, SnnParams, SpikeRaster};
use crate::link::{gray_demap, ChunkSet};
use crate::neural::{
    argmax, cross_entropy, AdamConfig, AdamState, Checkpoint, Tape, Tensor, Var,
};
use crate::{Demapper, Error, Result};

const KIND: &str = "snn";

/// Input→hidden and hidden→output weights plus the dynamics they run under.
#[derive(Debug, Clone, PartialEq)]
pub struct SnnModel {
    pub params: SnnParams,
    /// `n_inputs × n_hidden`
    pub w_ih: Tensor,
    /// `n_hidden × n_out`
    pub w_ho: Tensor,
}

impl SnnModel {
    pub fn new(params: SnnParams, w_ih: Tensor, w_ho: Tensor) -> Result<Self> {
        params.validate()?;
        let want_ih = (params.n_inputs(), params.n_hidden);
        let want_ho = (params.n_hidden, params.n_out);
        if w_ih.shape() != want_ih || w_ho.shape() != want_ho {
            return Err(Error::Shape {
                op: "snn",
                detail: format!(
                    "w_ih {:?} (want {want_ih:?}), w_ho {:?} (want {want_ho:?})",
                    w_ih.shape(),
                    w_ho.shape()
                ),
            });
        }
        if !w_ih.is_finite() || !w_ho.is_finite() {
            return Err(Error::NonFinite("SNN weights".into()));
        }
        Ok(Self { params, w_ih, w_ho })
    }

    pub fn zeros(params: SnnParams) -> Result<Self> {
        let w_ih = Tensor::zeros(params.n_inputs(), params.n_hidden);
        let w_ho = Tensor::zeros(params.n_hidden, params.n_out);
        Self::new(params, w_ih, w_ho)
    }

    /// Uniform `±init_gain/√fan_in` weights.
    pub fn init<R: Rng + ?Sized>(params: SnnParams, rng: &mut R) -> Result<Self> {
        let uniform = |rows: usize, cols: usize, rng: &mut R| {
            let a = params.init_gain / (rows as f64).sqrt();
            Tensor::from_fn(rows, cols, |_, _| rng.random_range(-a..=a))
        };
        let w_ih = uniform(params.n_inputs(), params.n_hidden, rng);
        let w_ho = uniform(params.n_hidden, params.n_out, rng);
        Self::new(params, w_ih, w_ho)
    }

    pub fn weights(&self) -> Vec<&Tensor> {
        vec![&self.w_ih, &self.w_ho]
    }

    pub fn weights_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.w_ih, &mut self.w_ho]
    }

    pub fn adam(&self, config: AdamConfig) -> AdamState {
        AdamState::new(config, &self.weights())
    }

    /// Applies the input affine map, then the distance encoder.
    pub fn encode(&self, chunk: &[f64]) -> Result<SpikeRaster> {
        let p = &self.params;
        let scaled: Vec<f64> = chunk
            .iter()
            .map(|y| p.input_gain * y + p.input_shift)
            .collect();
        encode_spikes(&scaled, p)
    }

    pub fn encode_all(&self, chunks: &ChunkSet) -> Result<Vec<SpikeRaster>> {
        chunks.iter().map(|c| self.encode(c)).collect()
    }

    /// Max-over-time output scores of one chunk.
    pub fn scores(&self, chunk: &[f64]) -> Result<Vec<f64>> {
        snn_scores(self, &self.encode(chunk)?)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::new(KIND);
        ck.push("w_ih", self.w_ih.clone());
        ck.push("w_ho", self.w_ho.clone());
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint, params: SnnParams) -> Result<Self> {
        ck.expect_kind(KIND)?;
        let w_ih = ck.expect("w_ih", params.n_inputs(), params.n_hidden)?;
        let w_ho = ck.expect("w_ho", params.n_hidden, params.n_out)?;
        Self::new(params, w_ih, w_ho)
    }
}

impl Demapper for SnnModel {
    fn n_tap(&self) -> usize {
        self.params.n_tap
    }

    fn decide(&self, chunk: &[f64]) -> usize {
        let scores = self.scores(chunk).expect("SNN forward pass failed");
        argmax(&scores)
    }
}

/// Scores `max_t v_k(t)`, the decided index (ties to the lower index) and its
/// Gray bits. `traces` is `n_out × steps`.
pub fn decode_max_over_time(traces: &Tensor) -> Result<(Vec<f64>, usize, [u8; 2])> {
    if !traces.is_finite() {
        return Err(Error::NonFinite("output traces".into()));
    }
    let scores: Vec<f64> = (0..traces.rows())
        .map(|k| traces.row(k).iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let index = argmax(&scores);
    Ok((scores, index, gray_demap(index)?))
}

/// Cross-entropy of the max-over-time scores of `traces` (`n_out × steps`).
pub fn snn_loss(traces: &Tensor, target: usize) -> Result<f64> {
    let (scores, _, _) = decode_max_over_time(traces)?;
    if target >= scores.len() {
        return Err(Error::InvalidSymbolIndex(target));
    }
    Ok(cross_entropy(&scores, target))
}

/// Handles to the recorded batch simulation.
#[derive(Debug, Clone)]
pub struct SnnGraph {
    pub w_ih: Var,
    pub w_ho: Var,
    /// Hidden spikes per step, `batch × n_hidden`.
    pub hidden_spikes: Vec<Var>,
    /// Output membranes per step, `batch × n_out`.
    pub output_v: Vec<Var>,
    /// `batch × n_out`
    pub scores: Var,
    /// Mean cross-entropy, present when targets were given.
    pub loss: Option<Var>,
}

/// Records the unrolled network for a batch of rasters on `tape`.
///
/// With `clamp`, the hidden spikes are replaced by the given per-step
/// `batch × n_hidden` patterns and treated as constants.
pub fn snn_record(
    tape: &mut Tape,
    model: &SnnModel,
    rasters: &[&SpikeRaster],
    targets: Option<&[usize]>,
    clamp: Option<&[Tensor]>,
) -> Result<SnnGraph> {
    let p = &model.params;
    let d = p.dynamics();
    let (b, n_steps) = (rasters.len(), p.n_steps());
    if b == 0 {
        return Err(Error::Empty("SNN batch"));
    }
    let mut events = vec![Vec::new(); n_steps];
    for (r, raster) in rasters.iter().enumerate() {
        if raster.n_inputs() != p.n_inputs() || raster.n_steps() != n_steps {
            return Err(Error::Shape {
                op: "snn_record",
                detail: format!("raster {}x{}", raster.n_inputs(), raster.n_steps()),
            });
        }
        for (n, s) in raster.events() {
            events[s].push((r, n));
        }
    }
    if let Some(c) = clamp {
        if c.len() != n_steps || c.iter().any(|t| t.shape() != (b, p.n_hidden)) {
            return Err(Error::Shape {
                op: "snn_record",
                detail: "clamped hidden spikes must be one batch × n_hidden tensor per step"
                    .into(),
            });
        }
    }

    let w_ih = tape.param(model.w_ih.clone());
    let w_ho = tape.param(model.w_ho.clone());
    let mut i_h = tape.constant(Tensor::zeros(b, p.n_hidden));
    let mut v_h = tape.constant(Tensor::filled(b, p.n_hidden, p.v_leak));
    let mut i_o = tape.constant(Tensor::zeros(b, p.n_out));
    let mut v_o = tape.constant(Tensor::filled(b, p.n_out, p.v_leak));
    let mut hidden_spikes = Vec::with_capacity(n_steps);
    let mut output_v = Vec::with_capacity(n_steps);

    for (k, ev) in events.into_iter().enumerate() {
        let x = tape.spike_projection(b, ev, w_ih)?;
        i_h = tape.affine(i_h, d.syn_decay, x, 1.0, 0.0)?;
        v_h = tape.affine(v_h, d.mem_keep, i_h, d.mem_gain, d.mem_leak)?;
        let z = match clamp {
            Some(c) => tape.constant(c[k].clone()),
            None => tape.spike(v_h, d.threshold, p.surrogate_beta),
        };
        v_h = tape.reset(v_h, z, d.v_reset)?;
        let y = tape.matmul(z, w_ho)?;
        i_o = tape.affine(i_o, d.syn_decay, y, 1.0, 0.0)?;
        v_o = tape.affine(v_o, d.mem_keep, i_o, d.mem_gain, d.mem_leak)?;
        if !tape.value(v_h).is_finite() || !tape.value(v_o).is_finite() {
            return Err(Error::NonFinite(format!("SNN state at step {k}")));
        }
        hidden_spikes.push(z);
        output_v.push(v_o);
    }
    let scores = tape.max_over(output_v.clone())?;
    let loss = match targets {
        Some(t) => Some(tape.softmax_cross_entropy(scores, t)?),
        None => None,
    };
    Ok(SnnGraph {
        w_ih,
        w_ho,
        hidden_spikes,
        output_v,
        scores,
        loss,
    })
}

/// Mean loss and `[∂/∂w_ih, ∂/∂w_ho]` for one batch via BPTT.
pub fn snn_batch_gradients(
    model: &SnnModel,
    rasters: &[&SpikeRaster],
    targets: &[usize],
) -> Result<(f64, Vec<Tensor>)> {
    if rasters.len() != targets.len() {
        return Err(Error::LengthMismatch {
            expected: rasters.len(),
            got: targets.len(),
        });
    }
    let mut tape = Tape::new();
    let g = snn_record(&mut tape, model, rasters, Some(targets), None)?;
    let loss = g.loss.expect("targets given");
    let value = tape.value(loss).data()[0];
    if !value.is_finite() {
        return Err(Error::NonFinite("SNN loss".into()));
    }
    let grads = tape.backward(loss)?;
    Ok((value, vec![grads.wrt(g.w_ih), grads.wrt(g.w_ho)]))
}

/// Mean cross-entropy of the max-over-time scores.
pub fn snn_eval_loss(model: &SnnModel, rasters: &[SpikeRaster], targets: &[usize]) -> Result<f64> {
    if rasters.is_empty() || rasters.len() != targets.len() {
        return Err(Error::LengthMismatch {
            expected: rasters.len(),
            got: targets.len(),
        });
    }
    let mut total = 0.0;
    for (r, &t) in rasters.iter().zip(targets) {
        total += cross_entropy(&snn_scores(model, r)?, t);
    }
    Ok(total / rasters.len() as f64)
}

/// Fraction of rasters for which no hidden neuron fires.
pub fn hidden_silent_fraction(model: &SnnModel, rasters: &[SpikeRaster]) -> Result<f64> {
    if rasters.is_empty() {
        return Err(Error::Empty("rasters"));
    }
    let mut silent = 0usize;
    for r in rasters {
        let trace = super::snn_forward(model, r)?;
        let spikes = trace.hidden.spikes.as_ref().expect("hidden layer spikes");
        if spikes.data().iter().all(|&z| z == 0.0) {
            silent += 1;
        }
    }
    Ok(silent as f64 / rasters.len() as f64)
}

/// One shuffled mini-batch BPTT pass with Adam updates; returns the mean
/// batch loss weighted by batch size.
pub fn snn_train_epoch<R: Rng + ?Sized>(
    model: &mut SnnModel,
    rasters: &[SpikeRaster],
    targets: &[usize],
    adam: &mut AdamState,
    batch_size: usize,
    rng: &mut R,
) -> Result<f64> {
    if rasters.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if rasters.len() != targets.len() {
        return Err(Error::LengthMismatch {
            expected: rasters.len(),
            got: targets.len(),
        });
    }
    if batch_size == 0 {
        return Err(Error::InvalidConfig("batch size must be positive".into()));
    }
    let mut order: Vec<usize> = (0..rasters.len()).collect();
    order.shuffle(rng);
    let mut total = 0.0;
    for batch in order.chunks(batch_size) {
        let r: Vec<&SpikeRaster> = batch.iter().map(|&i| &rasters[i]).collect();
        let t: Vec<usize> = batch.iter().map(|&i| targets[i]).collect();
        let (loss, grads) = super::snn_bptt(model, &r, &t)?;
        if !loss.is_finite() {
            return Err(Error::NonFinite("SNN training loss".into()));
        }
        total += loss * batch.len() as f64;
        adam.step(&mut model.weights_mut(), &grads)?;
    }
    Ok(total / rasters.len() as f64)
}
