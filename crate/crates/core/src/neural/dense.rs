use rand::Rng;

use super::{Tape, Tensor, Var};
use crate::{Error, Result};

/// Affine layer `W·x + b` with `W` stored `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Tensor,
    /// `1 × out`
    pub biases: Tensor,
}

/// Tape handles of a layer's parameters.
#[derive(Debug, Clone, Copy)]
pub struct DenseVars {
    pub weights: Var,
    pub biases: Var,
}

impl DenseLayer {
    pub fn new(weights: Tensor, biases: Tensor) -> Result<Self> {
        if biases.rows() != 1 || biases.cols() != weights.rows() {
            return Err(Error::Shape {
                op: "dense",
                detail: format!("weights {:?}, biases {:?}", weights.shape(), biases.shape()),
            });
        }
        if !weights.is_finite() || !biases.is_finite() {
            return Err(Error::NonFinite("dense layer parameters".into()));
        }
        Ok(Self { weights, biases })
    }

    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        Self {
            weights: Tensor::zeros(n_out, n_in),
            biases: Tensor::zeros(1, n_out),
        }
    }

    /// Uniform ±1/√fan_in for weights and biases.
    pub fn init<R: Rng + ?Sized>(n_in: usize, n_out: usize, rng: &mut R) -> Self {
        let a = 1.0 / (n_in as f64).sqrt();
        Self {
            weights: Tensor::from_fn(n_out, n_in, |_, _| rng.random_range(-a..a)),
            biases: Tensor::from_fn(1, n_out, |_, _| rng.random_range(-a..a)),
        }
    }

    pub fn n_in(&self) -> usize {
        self.weights.cols()
    }

    pub fn n_out(&self) -> usize {
        self.weights.rows()
    }

    pub fn record(&self, tape: &mut Tape) -> DenseVars {
        DenseVars {
            weights: tape.param(self.weights.clone()),
            biases: tape.param(self.biases.clone()),
        }
    }

    /// Batched forward on the tape: `x` is `batch × in`.
    pub fn forward(tape: &mut Tape, vars: DenseVars, x: Var) -> Result<Var> {
        let h = tape.matmul_t(x, vars.weights)?;
        tape.add_row(h, vars.biases)
    }

    /// Single-vector forward without a tape.
    pub fn apply(&self, x: &[f64], out: &mut Vec<f64>) -> Result<()> {
        if x.len() != self.n_in() {
            return Err(Error::Shape {
                op: "dense",
                detail: format!("input length {} for {} inputs", x.len(), self.n_in()),
            });
        }
        out.clear();
        out.extend((0..self.n_out()).map(|o| {
            self.biases.data()[o]
                + self
                    .weights
                    .row(o)
                    .iter()
                    .zip(x)
                    .map(|(w, v)| w * v)
                    .sum::<f64>()
        }));
        Ok(())
    }

    /// Same as [`apply`](Self::apply) with every product and sum in `f32`.
    pub fn apply_f32(&self, x: &[f32], out: &mut Vec<f32>) {
        out.clear();
        out.extend((0..self.n_out()).map(|o| {
            self.biases.data()[o] as f32
                + self
                    .weights
                    .row(o)
                    .iter()
                    .zip(x)
                    .map(|(&w, &v)| w as f32 * v)
                    .sum::<f32>()
        }));
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|v| (v - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

/// Log-softmax, the log-probabilities of a logit vector.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_z = m + logits.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    logits.iter().map(|v| v - log_z).collect()
}

/// −log softmax(logits)[target].
pub fn cross_entropy(logits: &[f64], target: usize) -> f64 {
    -log_softmax(logits)[target]
}

/// Index of the largest value; ties go to the lower index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
