//! Feed-forward 7–40–20–4 demapper with tanh hidden activations.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    argmax, log_softmax, AdamConfig, AdamState, Checkpoint, DenseLayer, DenseVars, Tape, Tensor,
    Var,
};
use crate::link::{gray_demap, ChunkSet};
use crate::{Demapper, Error, Result};

pub const ANN_LAYERS: [usize; 4] = [7, 40, 20, 4];
const KIND: &str = "ann";

/// Arithmetic used for inference.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    Double,
    Single,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnModel {
    pub hidden1: DenseLayer,
    pub hidden2: DenseLayer,
    pub output: DenseLayer,
    pub precision: Precision,
}

#[derive(Debug, Clone, Copy)]
pub struct AnnVars {
    pub layers: [DenseVars; 3],
}

impl AnnModel {
    pub fn init<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let [a, b, c, d] = ANN_LAYERS;
        Self {
            hidden1: DenseLayer::init(a, b, rng),
            hidden2: DenseLayer::init(b, c, rng),
            output: DenseLayer::init(c, d, rng),
            precision: Precision::Double,
        }
    }

    pub fn zeros() -> Self {
        let [a, b, c, d] = ANN_LAYERS;
        Self {
            hidden1: DenseLayer::zeros(a, b),
            hidden2: DenseLayer::zeros(b, c),
            output: DenseLayer::zeros(c, d),
            precision: Precision::Double,
        }
    }

    pub fn with_precision(mut self, precision: Precision) -> Self {
        self.precision = precision;
        self
    }

    fn layers(&self) -> [&DenseLayer; 3] {
        [&self.hidden1, &self.hidden2, &self.output]
    }

    pub fn params(&self) -> Vec<&Tensor> {
        self.layers()
            .into_iter()
            .flat_map(|l| [&l.weights, &l.biases])
            .collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        [&mut self.hidden1, &mut self.hidden2, &mut self.output]
            .into_iter()
            .flat_map(|l| [&mut l.weights, &mut l.biases])
            .collect()
    }

    pub fn adam(&self, config: AdamConfig) -> AdamState {
        AdamState::new(config, &self.params())
    }

    pub fn record(&self, tape: &mut Tape) -> AnnVars {
        AnnVars {
            layers: self.layers().map(|l| l.record(tape)),
        }
    }

    /// Batched logits on the tape; `x` is `batch × 7`.
    pub fn forward_tape(tape: &mut Tape, vars: &AnnVars, x: Var) -> Result<Var> {
        let [l1, l2, l3] = vars.layers;
        let h = DenseLayer::forward(tape, l1, x)?;
        let h = tape.tanh(h);
        let h = DenseLayer::forward(tape, l2, h)?;
        let h = tape.tanh(h);
        DenseLayer::forward(tape, l3, h)
    }

    /// Output logits for one chunk in the configured precision.
    pub fn logits(&self, chunk: &[f64]) -> Result<[f64; 4]> {
        if chunk.len() != ANN_LAYERS[0] {
            return Err(Error::Shape {
                op: "ann",
                detail: format!("chunk length {}, expected {}", chunk.len(), ANN_LAYERS[0]),
            });
        }
        let mut out = [0.0; 4];
        match self.precision {
            Precision::Double => {
                let (mut a, mut b) = (Vec::with_capacity(40), Vec::with_capacity(40));
                self.hidden1.apply(chunk, &mut a)?;
                a.iter_mut().for_each(|v| *v = v.tanh());
                self.hidden2.apply(&a, &mut b)?;
                b.iter_mut().for_each(|v| *v = v.tanh());
                self.output.apply(&b, &mut a)?;
                out.copy_from_slice(&a);
            }
            Precision::Single => {
                let x: Vec<f32> = chunk.iter().map(|&v| v as f32).collect();
                let (mut a, mut b) = (Vec::with_capacity(40), Vec::with_capacity(40));
                self.hidden1.apply_f32(&x, &mut a);
                a.iter_mut().for_each(|v| *v = v.tanh());
                self.hidden2.apply_f32(&a, &mut b);
                b.iter_mut().for_each(|v| *v = v.tanh());
                self.output.apply_f32(&b, &mut a);
                for (o, v) in out.iter_mut().zip(a) {
                    *o = v as f64;
                }
            }
        }
        Ok(out)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::new(KIND);
        for (i, l) in self.layers().iter().enumerate() {
            ck.push(format!("layer{i}.weights"), l.weights.clone());
            ck.push(format!("layer{i}.biases"), l.biases.clone());
        }
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        ck.expect_kind(KIND)?;
        let layer = |i: usize| -> Result<DenseLayer> {
            let (n_in, n_out) = (ANN_LAYERS[i], ANN_LAYERS[i + 1]);
            DenseLayer::new(
                ck.expect(&format!("layer{i}.weights"), n_out, n_in)?,
                ck.expect(&format!("layer{i}.biases"), 1, n_out)?,
            )
        };
        Ok(Self {
            hidden1: layer(0)?,
            hidden2: layer(1)?,
            output: layer(2)?,
            precision: Precision::Double,
        })
    }
}

impl Demapper for AnnModel {
    fn n_tap(&self) -> usize {
        ANN_LAYERS[0]
    }

    fn decide(&self, chunk: &[f64]) -> usize {
        let logits = self.logits(chunk).expect("chunk length checked by caller");
        argmax(&logits)
    }
}

/// Log-probabilities and the hard bit decision for one chunk.
pub fn ann_demap(model: &AnnModel, chunk: &[f64]) -> Result<([f64; 4], [u8; 2])> {
    let logits = model.logits(chunk)?;
    let lp = log_softmax(&logits);
    let bits = gray_demap(argmax(&logits))?;
    Ok(([lp[0], lp[1], lp[2], lp[3]], bits))
}

fn check_data(chunks: &ChunkSet, targets: &[u8]) -> Result<()> {
    if chunks.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if chunks.n_tap() != ANN_LAYERS[0] {
        return Err(Error::LengthMismatch {
            expected: ANN_LAYERS[0],
            got: chunks.n_tap(),
        });
    }
    if chunks.len() != targets.len() {
        return Err(Error::LengthMismatch {
            expected: chunks.len(),
            got: targets.len(),
        });
    }
    Ok(())
}

/// Mean loss and parameter gradients of one batch.
pub fn ann_batch_gradients(
    model: &AnnModel,
    chunks: &ChunkSet,
    targets: &[u8],
) -> Result<(f64, Vec<Tensor>)> {
    check_data(chunks, targets)?;
    let mut tape = Tape::new();
    let vars = model.record(&mut tape);
    let x = tape.constant(Tensor::from_vec(
        chunks.len(),
        chunks.n_tap(),
        chunks.as_flat().to_vec(),
    )?);
    let logits = AnnModel::forward_tape(&mut tape, &vars, x)?;
    let t: Vec<usize> = targets.iter().map(|&t| t as usize).collect();
    let loss = tape.softmax_cross_entropy(logits, &t)?;
    let grads = tape.backward(loss)?;
    let g = vars
        .layers
        .iter()
        .flat_map(|l| [grads.wrt(l.weights), grads.wrt(l.biases)])
        .collect();
    Ok((tape.value(loss).data()[0], g))
}

/// Mean cross-entropy over a data set.
pub fn ann_loss(model: &AnnModel, chunks: &ChunkSet, targets: &[u8]) -> Result<f64> {
    check_data(chunks, targets)?;
    let mut total = 0.0;
    for (c, &t) in chunks.iter().zip(targets) {
        total -= log_softmax(&model.logits(c)?)[t as usize];
    }
    Ok(total / targets.len() as f64)
}

/// One shuffled mini-batch pass; returns the sample-weighted mean batch loss.
pub fn ann_train_epoch<R: Rng + ?Sized>(
    model: &mut AnnModel,
    chunks: &ChunkSet,
    targets: &[u8],
    adam: &mut AdamState,
    batch_size: usize,
    rng: &mut R,
) -> Result<f64> {
    check_data(chunks, targets)?;
    if batch_size == 0 {
        return Err(Error::InvalidConfig("batch size must be positive".into()));
    }
    let mut order: Vec<usize> = (0..chunks.len()).collect();
    order.shuffle(rng);
    let mut total = 0.0;
    for batch in order.chunks(batch_size) {
        let x = chunks.select(batch);
        let t: Vec<u8> = batch.iter().map(|&i| targets[i]).collect();
        let (loss, grads) = ann_batch_gradients(model, &x, &t)?;
        if !loss.is_finite() {
            return Err(Error::NonFinite("ANN training loss".into()));
        }
        total += loss * batch.len() as f64;
        adam.step(&mut model.params_mut(), &grads)?;
    }
    Ok(total / chunks.len() as f64)
}
