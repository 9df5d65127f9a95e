//! Tape-based reverse-mode differentiation over batched row-major tensors.
//!
//! Operations are recorded in evaluation order, so the tape is already a
//! topological order of the computation graph and the backward pass is a
//! single reverse sweep.

use super::Tensor;
use crate::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    /// x[B×in] · w[in×out]
    MatMul { x: Var, w: Var },
    /// x[B×in] · wᵀ with w[out×in]
    MatMulT { x: Var, w: Var },
    /// Binary input given as (row, column) events, times w[in×out].
    SpikeProjection { events: Vec<(usize, usize)>, w: Var },
    /// x + b with b[1×cols] broadcast over rows
    AddRow { x: Var, b: Var },
    Add(Var, Var),
    Mul(Var, Var),
    /// a·x + b·y + c
    Affine { x: Var, a: f64, y: Var, b: f64 },
    Tanh(Var),
    /// Heaviside step forward, SuperSpike pseudo-derivative backward.
    Spike { v: Var, threshold: f64, beta: f64 },
    /// v·(1 − z) + v_reset·z
    Reset { v: Var, z: Var, v_reset: f64 },
    /// Elementwise maximum over a sequence of equally shaped values.
    MaxOver { steps: Vec<Var>, argmax: Vec<u32> },
    /// Mean over rows of −log softmax(logits)[target].
    SoftmaxCrossEntropy { logits: Var, targets: Vec<usize>, probs: Tensor },
    Sum(Var),
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    value: Tensor,
    requires_grad: bool,
}

/// Gradient of a scalar with respect to every recorded value that needs one.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    shapes: Vec<(usize, usize)>,
}

impl Gradients {
    pub fn get(&self, var: Var) -> Option<&Tensor> {
        self.grads.get(var.0).and_then(Option::as_ref)
    }

    /// Gradient of `var`, or zeros of its shape if nothing reached it.
    pub fn wrt(&self, var: Var) -> Tensor {
        self.get(var).cloned().unwrap_or_else(|| {
            let (r, c) = self.shapes[var.0];
            Tensor::zeros(r, c)
        })
    }
}

/// SuperSpike pseudo-derivative (β·|v − ϑ| + 1)⁻².
pub fn superspike(v: f64, threshold: f64, beta: f64) -> f64 {
    let d = beta * (v - threshold).abs() + 1.0;
    1.0 / (d * d)
}

#[derive(Debug, Default, Clone)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn shape_err(op: &'static str, detail: String) -> Error {
    Error::Shape { op, detail }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, value: Tensor, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            op,
            value,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Trainable leaf.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push(Op::Leaf, value, true)
    }

    /// Leaf that receives no gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(Op::Leaf, value, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn matmul(&mut self, x: Var, w: Var) -> Result<Var> {
        let (xv, wv) = (self.value(x), self.value(w));
        if xv.cols() != wv.rows() {
            return Err(shape_err(
                "matmul",
                format!("{:?} · {:?}", xv.shape(), wv.shape()),
            ));
        }
        let (b, n_in, n_out) = (xv.rows(), xv.cols(), wv.cols());
        let mut out = Tensor::zeros(b, n_out);
        for r in 0..b {
            let xr = xv.row(r);
            let or = out.row_mut(r);
            for i in 0..n_in {
                let xi = xr[i];
                if xi != 0.0 {
                    for (o, wio) in or.iter_mut().zip(wv.row(i)) {
                        *o += xi * wio;
                    }
                }
            }
        }
        let rg = self.needs(x) || self.needs(w);
        Ok(self.push(Op::MatMul { x, w }, out, rg))
    }

    pub fn matmul_t(&mut self, x: Var, w: Var) -> Result<Var> {
        let (xv, wv) = (self.value(x), self.value(w));
        if xv.cols() != wv.cols() {
            return Err(shape_err(
                "matmul_t",
                format!("{:?} · {:?}ᵀ", xv.shape(), wv.shape()),
            ));
        }
        let mut out = Tensor::zeros(xv.rows(), wv.rows());
        for r in 0..xv.rows() {
            let xr = xv.row(r);
            for o in 0..wv.rows() {
                let s: f64 = xr.iter().zip(wv.row(o)).map(|(a, b)| a * b).sum();
                out.set(r, o, s);
            }
        }
        let rg = self.needs(x) || self.needs(w);
        Ok(self.push(Op::MatMulT { x, w }, out, rg))
    }

    /// Projects binary events `(row, input)` through `w[in×out]` into a
    /// `batch × out` result.
    pub fn spike_projection(
        &mut self,
        batch: usize,
        events: Vec<(usize, usize)>,
        w: Var,
    ) -> Result<Var> {
        let wv = self.value(w);
        let mut out = Tensor::zeros(batch, wv.cols());
        for &(r, i) in &events {
            if r >= batch || i >= wv.rows() {
                return Err(shape_err(
                    "spike_projection",
                    format!("event ({r}, {i}) outside {batch}x{}", wv.rows()),
                ));
            }
            for (o, wio) in out.row_mut(r).iter_mut().zip(wv.row(i)) {
                *o += wio;
            }
        }
        let rg = self.needs(w);
        Ok(self.push(Op::SpikeProjection { events, w }, out, rg))
    }

    pub fn add_row(&mut self, x: Var, b: Var) -> Result<Var> {
        let (xv, bv) = (self.value(x), self.value(b));
        if bv.rows() != 1 || bv.cols() != xv.cols() {
            return Err(shape_err(
                "add_row",
                format!("{:?} + {:?}", xv.shape(), bv.shape()),
            ));
        }
        let mut out = xv.clone();
        for r in 0..out.rows() {
            for (o, bi) in out.row_mut(r).iter_mut().zip(bv.data()) {
                *o += bi;
            }
        }
        let rg = self.needs(x) || self.needs(b);
        Ok(self.push(Op::AddRow { x, b }, out, rg))
    }

    fn same_shape(&self, op: &'static str, x: Var, y: Var) -> Result<()> {
        let (a, b) = (self.value(x).shape(), self.value(y).shape());
        if a != b {
            return Err(shape_err(op, format!("{a:?} vs {b:?}")));
        }
        Ok(())
    }

    pub fn add(&mut self, x: Var, y: Var) -> Result<Var> {
        self.same_shape("add", x, y)?;
        let mut out = self.value(x).clone();
        out.add_assign(self.value(y));
        let rg = self.needs(x) || self.needs(y);
        Ok(self.push(Op::Add(x, y), out, rg))
    }

    pub fn mul(&mut self, x: Var, y: Var) -> Result<Var> {
        self.same_shape("mul", x, y)?;
        let (xv, yv) = (self.value(x), self.value(y));
        let data = xv.data().iter().zip(yv.data()).map(|(a, b)| a * b).collect();
        let out = Tensor::from_vec(xv.rows(), xv.cols(), data)?;
        let rg = self.needs(x) || self.needs(y);
        Ok(self.push(Op::Mul(x, y), out, rg))
    }

    /// a·x + b·y + c, elementwise.
    pub fn affine(&mut self, x: Var, a: f64, y: Var, b: f64, c: f64) -> Result<Var> {
        self.same_shape("affine", x, y)?;
        let (xv, yv) = (self.value(x), self.value(y));
        let data = xv
            .data()
            .iter()
            .zip(yv.data())
            .map(|(p, q)| a * p + b * q + c)
            .collect();
        let out = Tensor::from_vec(xv.rows(), xv.cols(), data)?;
        let rg = self.needs(x) || self.needs(y);
        Ok(self.push(Op::Affine { x, a, y, b }, out, rg))
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let out = self.value(x).map(f64::tanh);
        let rg = self.needs(x);
        self.push(Op::Tanh(x), out, rg)
    }

    pub fn spike(&mut self, v: Var, threshold: f64, beta: f64) -> Var {
        let out = self
            .value(v)
            .map(|x| if x >= threshold { 1.0 } else { 0.0 });
        let rg = self.needs(v);
        self.push(
            Op::Spike {
                v,
                threshold,
                beta,
            },
            out,
            rg,
        )
    }

    pub fn reset(&mut self, v: Var, z: Var, v_reset: f64) -> Result<Var> {
        self.same_shape("reset", v, z)?;
        let (vv, zv) = (self.value(v), self.value(z));
        let data = vv
            .data()
            .iter()
            .zip(zv.data())
            .map(|(v, z)| v * (1.0 - z) + v_reset * z)
            .collect();
        let out = Tensor::from_vec(vv.rows(), vv.cols(), data)?;
        let rg = self.needs(v) || self.needs(z);
        Ok(self.push(Op::Reset { v, z, v_reset }, out, rg))
    }

    /// Elementwise maximum over `steps`; ties resolve to the earliest step.
    pub fn max_over(&mut self, steps: Vec<Var>) -> Result<Var> {
        let first = *steps.first().ok_or(Error::Empty("max_over steps"))?;
        for &s in &steps[1..] {
            self.same_shape("max_over", first, s)?;
        }
        let mut out = self.value(first).clone();
        let mut argmax = vec![0u32; out.len()];
        for (k, &s) in steps.iter().enumerate().skip(1) {
            for ((o, a), v) in out
                .data_mut()
                .iter_mut()
                .zip(argmax.iter_mut())
                .zip(self.nodes[s.0].value.data())
            {
                if *v > *o {
                    *o = *v;
                    *a = k as u32;
                }
            }
        }
        let rg = steps.iter().any(|&s| self.needs(s));
        Ok(self.push(Op::MaxOver { steps, argmax }, out, rg))
    }

    /// Mean softmax cross-entropy over rows; returns a 1×1 value.
    pub fn softmax_cross_entropy(&mut self, logits: Var, targets: &[usize]) -> Result<Var> {
        let lv = self.value(logits);
        if lv.rows() != targets.len() || lv.rows() == 0 {
            return Err(shape_err(
                "softmax_cross_entropy",
                format!("{} rows, {} targets", lv.rows(), targets.len()),
            ));
        }
        if let Some(&t) = targets.iter().find(|&&t| t >= lv.cols()) {
            return Err(Error::InvalidSymbolIndex(t));
        }
        let mut probs = Tensor::zeros(lv.rows(), lv.cols());
        let mut total = 0.0;
        for (r, &t) in targets.iter().enumerate() {
            let row = lv.row(r);
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = row.iter().map(|v| (v - m).exp()).sum();
            let log_z = m + z.ln();
            for (p, v) in probs.row_mut(r).iter_mut().zip(row) {
                *p = (v - log_z).exp();
            }
            total += log_z - row[t];
        }
        let out = Tensor::scalar(total / targets.len() as f64);
        let rg = self.needs(logits);
        Ok(self.push(
            Op::SoftmaxCrossEntropy {
                logits,
                targets: targets.to_vec(),
                probs,
            },
            out,
            rg,
        ))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().sum();
        let rg = self.needs(x);
        self.push(Op::Sum(x), Tensor::scalar(s), rg)
    }

    /// Reverse sweep from `loss`, seeded with ones.
    ///
    /// Values with no path to `loss` get no gradient; [`Gradients::wrt`]
    /// reports zeros for them.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let n = loss.0 + 1;
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        let shapes = self.nodes.iter().map(|n| n.value.shape()).collect();
        if !self.nodes[loss.0].value.is_finite() {
            return Err(Error::NonFinite("loss".into()));
        }
        let (r, c) = self.nodes[loss.0].value.shape();
        grads[loss.0] = Some(Tensor::filled(r, c, 1.0));

        for i in (0..n).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.requires_grad {
                grads[i] = Some(g);
                continue;
            }
            self.propagate(node, &g, &mut grads);
            grads[i] = Some(g);
        }
        Ok(Gradients { grads, shapes })
    }

    fn slot<'a>(&self, grads: &'a mut [Option<Tensor>], v: Var) -> &'a mut Tensor {
        let (r, c) = self.nodes[v.0].value.shape();
        grads[v.0].get_or_insert_with(|| Tensor::zeros(r, c))
    }

    fn propagate(&self, node: &Node, g: &Tensor, grads: &mut [Option<Tensor>]) {
        match &node.op {
            Op::Leaf => {}
            Op::MatMul { x, w } => {
                let (xv, wv) = (self.value(*x), self.value(*w));
                if self.needs(*x) {
                    let gx = self.slot(grads, *x);
                    for r in 0..xv.rows() {
                        let gr = g.row(r);
                        let gxr = gx.row_mut(r);
                        for (i, gxi) in gxr.iter_mut().enumerate() {
                            *gxi += gr.iter().zip(wv.row(i)).map(|(a, b)| a * b).sum::<f64>();
                        }
                    }
                }
                if self.needs(*w) {
                    let gw = self.slot(grads, *w);
                    for r in 0..xv.rows() {
                        let gr = g.row(r);
                        for (i, &xi) in xv.row(r).iter().enumerate() {
                            if xi != 0.0 {
                                for (a, b) in gw.row_mut(i).iter_mut().zip(gr) {
                                    *a += xi * b;
                                }
                            }
                        }
                    }
                }
            }
            Op::MatMulT { x, w } => {
                let (xv, wv) = (self.value(*x), self.value(*w));
                if self.needs(*x) {
                    let gx = self.slot(grads, *x);
                    for r in 0..xv.rows() {
                        for (o, &go) in g.row(r).iter().enumerate() {
                            if go != 0.0 {
                                for (a, b) in gx.row_mut(r).iter_mut().zip(wv.row(o)) {
                                    *a += go * b;
                                }
                            }
                        }
                    }
                }
                if self.needs(*w) {
                    let gw = self.slot(grads, *w);
                    for r in 0..xv.rows() {
                        let xr = xv.row(r);
                        for (o, &go) in g.row(r).iter().enumerate() {
                            if go != 0.0 {
                                for (a, b) in gw.row_mut(o).iter_mut().zip(xr) {
                                    *a += go * b;
                                }
                            }
                        }
                    }
                }
            }
            Op::SpikeProjection { events, w } => {
                let gw = self.slot(grads, *w);
                for &(r, i) in events {
                    for (a, b) in gw.row_mut(i).iter_mut().zip(g.row(r)) {
                        *a += b;
                    }
                }
            }
            Op::AddRow { x, b } => {
                if self.needs(*x) {
                    self.slot(grads, *x).add_assign(g);
                }
                if self.needs(*b) {
                    let gb = self.slot(grads, *b);
                    for r in 0..g.rows() {
                        for (a, v) in gb.data_mut().iter_mut().zip(g.row(r)) {
                            *a += v;
                        }
                    }
                }
            }
            Op::Add(x, y) => {
                for v in [*x, *y] {
                    if self.needs(v) {
                        self.slot(grads, v).add_assign(g);
                    }
                }
            }
            Op::Mul(x, y) => {
                for (a, b) in [(*x, *y), (*y, *x)] {
                    if self.needs(a) {
                        let other = self.value(b).data();
                        let ga = self.slot(grads, a);
                        for ((s, gi), o) in ga.data_mut().iter_mut().zip(g.data()).zip(other) {
                            *s += gi * o;
                        }
                    }
                }
            }
            Op::Affine { x, a, y, b } => {
                for (v, k) in [(*x, *a), (*y, *b)] {
                    if self.needs(v) && k != 0.0 {
                        let gv = self.slot(grads, v);
                        for (s, gi) in gv.data_mut().iter_mut().zip(g.data()) {
                            *s += k * gi;
                        }
                    }
                }
            }
            Op::Tanh(x) => {
                let gx = self.slot(grads, *x);
                for ((s, gi), y) in gx.data_mut().iter_mut().zip(g.data()).zip(node.value.data()) {
                    *s += gi * (1.0 - y * y);
                }
            }
            Op::Spike {
                v,
                threshold,
                beta,
            } => {
                let vv = self.value(*v).data();
                let gv = self.slot(grads, *v);
                for ((s, gi), x) in gv.data_mut().iter_mut().zip(g.data()).zip(vv) {
                    if *gi != 0.0 {
                        *s += gi * superspike(*x, *threshold, *beta);
                    }
                }
            }
            Op::Reset { v, z, v_reset } => {
                let (vv, zv) = (self.value(*v).data(), self.value(*z).data());
                if self.needs(*v) {
                    let gv = self.slot(grads, *v);
                    for ((s, gi), zi) in gv.data_mut().iter_mut().zip(g.data()).zip(zv) {
                        *s += gi * (1.0 - zi);
                    }
                }
                if self.needs(*z) {
                    let gz = self.slot(grads, *z);
                    for ((s, gi), vi) in gz.data_mut().iter_mut().zip(g.data()).zip(vv) {
                        *s += gi * (v_reset - vi);
                    }
                }
            }
            Op::MaxOver { steps, argmax } => {
                for (e, (&k, &gi)) in argmax.iter().zip(g.data()).enumerate() {
                    let s = steps[k as usize];
                    if gi != 0.0 && self.needs(s) {
                        self.slot(grads, s).data_mut()[e] += gi;
                    }
                }
            }
            Op::SoftmaxCrossEntropy {
                logits,
                targets,
                probs,
            } => {
                let scale = g.data()[0] / targets.len() as f64;
                let gl = self.slot(grads, *logits);
                for (r, &t) in targets.iter().enumerate() {
                    for (k, (s, p)) in gl.row_mut(r).iter_mut().zip(probs.row(r)).enumerate() {
                        let onehot = if k == t { 1.0 } else { 0.0 };
                        *s += scale * (p - onehot);
                    }
                }
            }
            Op::Sum(x) => {
                let gi = g.data()[0];
                self.slot(grads, *x).data_mut().iter_mut().for_each(|s| *s += gi);
            }
        }
    }
}
