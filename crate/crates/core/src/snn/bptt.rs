//! Fused backpropagation through time for the two-layer network.
//!
//! Computes the same loss and gradients as recording the unrolled network
//! with [`snn_record`](super::snn_record) and calling `Tape::backward`, but
//! runs per sample over flat buffers. Training uses this path.

use super::{SnnModel, SpikeRaster};
use crate::neural::{log_softmax, superspike, Tensor};
use crate::{Error, Result};

/// Reusable per-sample buffers.
struct Workspace {
    /// Pre-reset hidden membrane, `steps × hidden`.
    u: Vec<f64>,
    /// Hidden spikes, `steps × hidden`.
    z: Vec<bool>,
    /// Output membrane, `steps × out`.
    o: Vec<f64>,
    events: Vec<Vec<usize>>,
}

/// Mean cross-entropy and `[∂/∂w_ih, ∂/∂w_ho]` over a batch.
pub fn snn_bptt(
    model: &SnnModel,
    rasters: &[&SpikeRaster],
    targets: &[usize],
) -> Result<(f64, Vec<Tensor>)> {
    let p = &model.params;
    if rasters.is_empty() {
        return Err(Error::Empty("SNN batch"));
    }
    if rasters.len() != targets.len() {
        return Err(Error::LengthMismatch {
            expected: rasters.len(),
            got: targets.len(),
        });
    }
    let (nh, no, ns) = (p.n_hidden, p.n_out, p.n_steps());
    let d = p.dynamics();
    let mut g_ih = Tensor::zeros(p.n_inputs(), nh);
    let mut g_ho = Tensor::zeros(nh, no);
    let mut ws = Workspace {
        u: vec![0.0; ns * nh],
        z: vec![false; ns * nh],
        o: vec![0.0; ns * no],
        events: vec![Vec::new(); ns],
    };
    let inv_b = 1.0 / rasters.len() as f64;
    let mut total = 0.0;

    let mut i_h = vec![0.0; nh];
    let mut v_h = vec![0.0; nh];
    let mut i_o = vec![0.0; no];
    let mut v_o = vec![0.0; no];
    // adjoints
    let mut a_oh = vec![0.0; no];
    let mut a_j = vec![0.0; no];
    let mut a_v = vec![0.0; nh];
    let mut a_i = vec![0.0; nh];

    for (raster, &target) in rasters.iter().zip(targets) {
        if raster.n_inputs() != p.n_inputs() || raster.n_steps() != ns {
            return Err(Error::Shape {
                op: "snn_bptt",
                detail: format!("raster {}x{}", raster.n_inputs(), raster.n_steps()),
            });
        }
        if target >= no {
            return Err(Error::InvalidSymbolIndex(target));
        }
        ws.events.iter_mut().for_each(Vec::clear);
        for (n, s) in raster.events() {
            ws.events[s].push(n);
        }

        i_h.fill(0.0);
        v_h.fill(p.v_leak);
        i_o.fill(0.0);
        v_o.fill(p.v_leak);
        for k in 0..ns {
            for &n in &ws.events[k] {
                for (x, w) in i_h.iter_mut().zip(model.w_ih.row(n)) {
                    *x += w;
                }
            }
            let u = &mut ws.u[k * nh..(k + 1) * nh];
            let z = &mut ws.z[k * nh..(k + 1) * nh];
            for (((u, z), v), i) in u.iter_mut().zip(z.iter_mut()).zip(&mut v_h).zip(&i_h) {
                let uj = d.mem_keep * *v + d.mem_leak + d.mem_gain * i;
                *u = uj;
                *z = uj >= d.threshold;
                *v = if *z { d.v_reset } else { uj };
            }
            for (j, _) in z.iter().enumerate().filter(|(_, s)| **s) {
                for (x, w) in i_o.iter_mut().zip(model.w_ho.row(j)) {
                    *x += w;
                }
            }
            let o = &mut ws.o[k * no..(k + 1) * no];
            for m in 0..no {
                v_o[m] = d.mem_keep * v_o[m] + d.mem_leak + d.mem_gain * i_o[m];
                o[m] = v_o[m];
            }
            if !v_o.iter().chain(&v_h).all(|x| x.is_finite()) {
                return Err(Error::NonFinite(format!("SNN state at step {k}")));
            }
            // currents decay before the next step's input is added
            i_h.iter_mut().for_each(|x| *x *= d.syn_decay);
            i_o.iter_mut().for_each(|x| *x *= d.syn_decay);
        }

        // max over time, earliest step on ties
        let mut best_step = vec![0usize; no];
        let mut scores = vec![0.0; no];
        for m in 0..no {
            let mut best = ws.o[m];
            for k in 1..ns {
                let v = ws.o[k * no + m];
                if v > best {
                    best = v;
                    best_step[m] = k;
                }
            }
            scores[m] = best;
        }
        let lp = log_softmax(&scores);
        total -= lp[target];
        let d_scores: Vec<f64> = lp
            .iter()
            .enumerate()
            .map(|(m, l)| (l.exp() - if m == target { 1.0 } else { 0.0 }) * inv_b)
            .collect();

        a_oh.fill(0.0);
        a_j.fill(0.0);
        a_v.fill(0.0);
        a_i.fill(0.0);
        for k in (0..ns).rev() {
            for m in 0..no {
                let seed = if best_step[m] == k { d_scores[m] } else { 0.0 };
                a_oh[m] = seed + d.mem_keep * a_oh[m];
                a_j[m] = d.mem_gain * a_oh[m] + d.syn_decay * a_j[m];
            }
            let u = &ws.u[k * nh..(k + 1) * nh];
            let z = &ws.z[k * nh..(k + 1) * nh];
            let rows = model.w_ho.data().chunks_exact(no);
            for (j, ((((w, &u), &z), a_v), a_i)) in rows
                .zip(u)
                .zip(z)
                .zip(a_v.iter_mut())
                .zip(a_i.iter_mut())
                .enumerate()
            {
                let mut a_z: f64 = w.iter().zip(&a_j).map(|(w, a)| w * a).sum();
                a_z += *a_v * (d.v_reset - u);
                if z {
                    for (g, a) in g_ho.row_mut(j).iter_mut().zip(&a_j) {
                        *g += a;
                    }
                }
                let keep = if z { 0.0 } else { *a_v };
                let a_u = keep + a_z * superspike(u, d.threshold, p.surrogate_beta);
                *a_i = d.mem_gain * a_u + d.syn_decay * *a_i;
                *a_v = d.mem_keep * a_u;
            }
            for &n in &ws.events[k] {
                for (g, a) in g_ih.row_mut(n).iter_mut().zip(&a_i) {
                    *g += a;
                }
            }
        }
    }
    Ok((total * inv_b, vec![g_ih, g_ho]))
}
