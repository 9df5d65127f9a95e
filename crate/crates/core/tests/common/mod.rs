//! Shared oracles: finite-difference gradient checks and the property
//! checks, each returning its worst observed deviation so that both the
//! focused test targets and the acceptance report can use them.
#![allow(dead_code)]

use imdd_snn::classical::{fit_boundary, fit_least_squares};
use imdd_snn::experiment::credibility_interval;
use imdd_snn::link::{chromatic_dispersion, circular_filter, rrc_taps, LinkParams};
use imdd_snn::neural::{AnnModel, DenseLayer, Tape, Tensor, Var};
use imdd_snn::snn::{snn_record, SnnModel, SnnParams, SpikeRaster};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Tensor {
    Tensor::from_fn(rows, cols, |_, _| rng.random_range(-scale..scale))
}

/// `|a − b| / max(|a|, |b|, 1e-3)`; the floor keeps gradients that are zero
/// up to rounding from dominating the ratio.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

/// Worst relative deviation between tape gradients and central differences
/// for a scalar built from `params`.
pub fn fd_check(params: &[Tensor], build: &dyn Fn(&mut Tape, &[Var]) -> Var) -> f64 {
    let mut tape = Tape::new();
    let vars: Vec<Var> = params.iter().map(|p| tape.param(p.clone())).collect();
    let out = build(&mut tape, &vars);
    assert_eq!(tape.value(out).shape(), (1, 1), "check needs a scalar");
    let grads = tape.backward(out).expect("backward");
    let eval = |ps: &[Tensor]| {
        let mut t = Tape::new();
        let vs: Vec<Var> = ps.iter().map(|p| t.param(p.clone())).collect();
        let o = build(&mut t, &vs);
        t.value(o).data()[0]
    };
    let mut worst: f64 = 0.0;
    for (pi, p) in params.iter().enumerate() {
        let analytic = grads.wrt(vars[pi]);
        for e in 0..p.len() {
            let mut ps = params.to_vec();
            ps[pi].data_mut()[e] = p.data()[e] + FD_STEP;
            let up = eval(&ps);
            ps[pi].data_mut()[e] = p.data()[e] - FD_STEP;
            let down = eval(&ps);
            let fd = (up - down) / (2.0 * FD_STEP);
            worst = worst.max(rel_err(analytic.data()[e], fd));
        }
    }
    worst
}

/// Projects a tensor onto a fixed random direction so every element
/// contributes to the scalar.
fn project(tape: &mut Tape, x: Var, rng: &mut ChaCha8Rng) -> Var {
    let (r, c) = tape.value(x).shape();
    let dir = tape.constant(random_tensor(rng, r, c, 1.0));
    let m = tape.mul(x, dir).unwrap();
    tape.sum(m)
}

#[derive(Debug, Clone)]
pub struct GradReport {
    pub op: &'static str,
    pub instances: usize,
    pub worst: f64,
}

/// Finite-difference checks of every differentiable tape operation, the
/// dense layer, the full ANN and the SNN readout with frozen hidden spikes.
pub fn gradient_suite(instances: usize, seed: u64) -> Vec<GradReport> {
    let mut reports = Vec::new();
    let mut run = |op: &'static str, f: &mut dyn FnMut(&mut ChaCha8Rng) -> f64| {
        let mut r = rng(seed ^ op.len() as u64 ^ (op.as_bytes()[0] as u64) << 8);
        let worst = (0..instances).map(|_| f(&mut r)).fold(0.0, f64::max);
        reports.push(GradReport {
            op,
            instances,
            worst,
        });
    };
    let dims = |r: &mut ChaCha8Rng| (r.random_range(1..4usize), r.random_range(1..5usize), r.random_range(1..4usize));

    run("matmul", &mut |r| {
        let (b, i, o) = dims(r);
        let ps = [random_tensor(r, b, i, 1.0), random_tensor(r, i, o, 1.0)];
        let seed = r.random::<u64>();
        fd_check(&ps, &|t, v| {
            let y = t.matmul(v[0], v[1]).unwrap();
            project(t, y, &mut rng(seed))
        })
    });
    run("matmul_t", &mut |r| {
        let (b, i, o) = dims(r);
        let ps = [random_tensor(r, b, i, 1.0), random_tensor(r, o, i, 1.0)];
        let seed = r.random::<u64>();
        fd_check(&ps, &|t, v| {
            let y = t.matmul_t(v[0], v[1]).unwrap();
            project(t, y, &mut rng(seed))
        })
    });
    run("spike_projection", &mut |r| {
        let (b, i, o) = dims(r);
        let events: Vec<(usize, usize)> = (0..r.random_range(0..6))
            .map(|_| (r.random_range(0..b), r.random_range(0..i)))
            .collect();
        let ps = [random_tensor(r, i, o, 1.0)];
        let seed = r.random::<u64>();
        fd_check(&ps, &|t, v| {
            let y = t.spike_projection(b, events.clone(), v[0]).unwrap();
            project(t, y, &mut rng(seed))
        })
    });
    run("add_row", &mut |r| {
        let (b, _, o) = dims(r);
        let ps = [random_tensor(r, b, o, 1.0), random_tensor(r, 1, o, 1.0)];
        let seed = r.random::<u64>();
        fd_check(&ps, &|t, v| {
            let y = t.add_row(v[0], v[1]).unwrap();
            project(t, y, &mut rng(seed))
        })
    });
    run("add", &mut |r| {
        let (b, i, _) = dims(r);
        let ps = [random_tensor(r, b, i, 1.0), random_tensor(r, b, i, 1.0)];
        let seed = r.random::<u64>();
        fd_check(&ps, &|t, v| {
            let y = t.add(v[0], v[1]).unwrap();
            project(t, y, &mut rng(seed))
        })
    });
    run("mul", &mut |r| {
        let (b, i, _) = dims(r);
        let ps = [random_tensor(r, b, i, 1.0), random_tensor(r, b, i, 1.0)];
        fd_check(&ps, &|t, v| {
            let y = t.mul(v[0], v[1]).unwrap();
            t.sum(y)
        })
    });
    run("affine", &mut |r| {
        let (b, i, _) = dims(r);
        let ps = [random_tensor(r, b, i, 1.0), random_tensor(r, b, i, 1.0)];
        let (a, c, k) = (r.random_range(-2.0..2.0), r.random_range(-2.0..2.0), r.random_range(-1.0..1.0));
        let seed = r.random::<u64>();
        fd_check(&ps, &|t, v| {
            let y = t.affine(v[0], a, v[1], c, k).unwrap();
            project(t, y, &mut rng(seed))
        })
    });
    run("tanh", &mut |r| {
        let (b, i, _) = dims(r);
        let ps = [random_tensor(r, b, i, 3.0)];
        let seed = r.random::<u64>();
        fd_check(&ps, &|t, v| {
            let y = t.tanh(v[0]);
            project(t, y, &mut rng(seed))
        })
    });
    run("reset", &mut |r| {
        let (b, i, _) = dims(r);
        let ps = [random_tensor(r, b, i, 2.0), random_tensor(r, b, i, 1.0)];
        let v_reset = r.random_range(-1.0..1.0);
        let seed = r.random::<u64>();
        fd_check(&ps, &|t, v| {
            let y = t.reset(v[0], v[1], v_reset).unwrap();
            project(t, y, &mut rng(seed))
        })
    });
    run("max_over", &mut |r| {
        let (b, i, _) = dims(r);
        let steps = r.random_range(1..6);
        let ps: Vec<Tensor> = (0..steps).map(|_| random_tensor(r, b, i, 1.0)).collect();
        let seed = r.random::<u64>();
        fd_check(&ps, &|t, v| {
            let y = t.max_over(v.to_vec()).unwrap();
            project(t, y, &mut rng(seed))
        })
    });
    run("softmax_cross_entropy", &mut |r| {
        let b = r.random_range(1..5);
        let targets: Vec<usize> = (0..b).map(|_| r.random_range(0..4)).collect();
        let ps = [random_tensor(r, b, 4, 3.0)];
        fd_check(&ps, &|t, v| t.softmax_cross_entropy(v[0], &targets).unwrap())
    });
    run("sum", &mut |r| {
        let (b, i, _) = dims(r);
        let ps = [random_tensor(r, b, i, 1.0)];
        fd_check(&ps, &|t, v| t.sum(v[0]))
    });
    run("dense_layer", &mut |r| {
        let (b, i, o) = dims(r);
        let ps = [
            random_tensor(r, b, i, 1.0),
            random_tensor(r, o, i, 1.0),
            random_tensor(r, 1, o, 1.0),
        ];
        let seed = r.random::<u64>();
        fd_check(&ps, &|t, v| {
            let layer = imdd_snn::neural::DenseVars {
                weights: v[1],
                biases: v[2],
            };
            let y = DenseLayer::forward(t, layer, v[0]).unwrap();
            project(t, y, &mut rng(seed))
        })
    });
    run("ann_loss", &mut |r| {
        let model = AnnModel::init(r);
        let b = r.random_range(1..4);
        let x = random_tensor(r, b, 7, 3.0);
        let targets: Vec<usize> = (0..b).map(|_| r.random_range(0..4)).collect();
        let ps: Vec<Tensor> = model.params().into_iter().cloned().collect();
        fd_check(&ps, &|t, v| {
            let vars = imdd_snn::neural::AnnVars {
                layers: [
                    imdd_snn::neural::DenseVars { weights: v[0], biases: v[1] },
                    imdd_snn::neural::DenseVars { weights: v[2], biases: v[3] },
                    imdd_snn::neural::DenseVars { weights: v[4], biases: v[5] },
                ],
            };
            let xv = t.constant(x.clone());
            let logits = AnnModel::forward_tape(t, &vars, xv).unwrap();
            t.softmax_cross_entropy(logits, &targets).unwrap()
        })
    });
    run("snn_frozen_readout", &mut |r| frozen_readout_check(r));
    reports
}

/// The SNN loss with hidden spikes clamped to a fixed pattern is a smooth
/// function of the readout weights; its tape gradient must match central
/// differences, and the input weights must get exactly zero.
pub fn frozen_readout_check(r: &mut ChaCha8Rng) -> f64 {
    let params = SnnParams {
        n_hidden: 6,
        ..SnnParams::default()
    };
    let n_steps = params.n_steps();
    let model = SnnModel::init(params.clone(), r).unwrap();
    let b = r.random_range(1..4);
    let rasters: Vec<SpikeRaster> = (0..b)
        .map(|_| model.encode(&(0..7).map(|_| r.random_range(1.0..10.0)).collect::<Vec<_>>()).unwrap())
        .collect();
    let refs: Vec<&SpikeRaster> = rasters.iter().collect();
    let targets: Vec<usize> = (0..b).map(|_| r.random_range(0..4)).collect();
    let clamp: Vec<Tensor> = (0..n_steps)
        .map(|_| Tensor::from_fn(b, 6, |_, _| if r.random_bool(0.15) { 1.0 } else { 0.0 }))
        .collect();
    let w_ho = random_tensor(r, 6, 4, 1.5);
    let loss_at = |w: &Tensor| {
        let m = SnnModel::new(params.clone(), model.w_ih.clone(), w.clone()).unwrap();
        let mut t = Tape::new();
        let g = snn_record(&mut t, &m, &refs, Some(&targets), Some(&clamp)).unwrap();
        t.value(g.loss.unwrap()).data()[0]
    };
    let m = SnnModel::new(params.clone(), model.w_ih.clone(), w_ho.clone()).unwrap();
    let mut tape = Tape::new();
    let g = snn_record(&mut tape, &m, &refs, Some(&targets), Some(&clamp)).unwrap();
    let grads = tape.backward(g.loss.unwrap()).unwrap();
    assert!(grads.wrt(g.w_ih).data().iter().all(|&x| x == 0.0));
    let analytic = grads.wrt(g.w_ho);
    let mut worst: f64 = 0.0;
    for e in 0..w_ho.len() {
        let mut w = w_ho.clone();
        w.data_mut()[e] += FD_STEP;
        let up = loss_at(&w);
        w.data_mut()[e] -= 2.0 * FD_STEP;
        let down = loss_at(&w);
        worst = worst.max(rel_err(analytic.data()[e], (up - down) / (2.0 * FD_STEP)));
    }
    worst
}

#[derive(Debug, Clone)]
pub struct PropertyReport {
    pub name: &'static str,
    pub value: f64,
    pub bound: f64,
    /// `value` must be at least `bound` instead of at most.
    pub lower_bound: bool,
}

impl PropertyReport {
    pub fn pass(&self) -> bool {
        if self.lower_bound {
            self.value >= self.bound
        } else {
            self.value < self.bound
        }
    }
}

/// Worst relative energy change of the dispersion allpass over random
/// waveforms and fiber lengths.
pub fn cd_energy_worst(cases: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let n = r.random_range(16..4000);
        let p = LinkParams {
            fiber_length: r.random_range(0.0..20_000.0),
            ..LinkParams::default()
        };
        let x: Vec<f64> = (0..n).map(|_| r.random_range(-3.0..5.0)).collect();
        let y = chromatic_dispersion(&x, &p);
        let ex: f64 = x.iter().map(|v| v * v).sum();
        let ey: f64 = y.iter().map(|v| v.norm_sqr()).sum();
        worst = worst.max(((ey - ex) / ex).abs());
    }
    worst
}

/// Largest off-peak symbol-spaced sample of the RRC cascade relative to the
/// peak, computed by direct convolution.
pub fn rrc_isi(rolloff: f64, n_up: usize, span: usize) -> f64 {
    let h = rrc_taps(rolloff, n_up, span).unwrap();
    let n = h.len();
    let mut g = vec![0.0; 2 * n - 1];
    for (i, a) in h.iter().enumerate() {
        for (j, b) in h.iter().enumerate() {
            g[i + j] += a * b;
        }
    }
    let center = n - 1;
    let peak = g[center];
    let mut worst: f64 = 0.0;
    let mut k = n_up;
    while k <= center {
        worst = worst.max(g[center + k].abs()).max(g[center - k].abs());
        k += n_up;
    }
    worst / peak
}

/// Same cascade through the circular filter used by the link, as a second
/// route to the ISI floor.
pub fn rrc_isi_circular(rolloff: f64, n_up: usize, span: usize) -> f64 {
    let h = rrc_taps(rolloff, n_up, span).unwrap();
    let len = n_up * 4 * span;
    let mut impulse = vec![0.0; len];
    impulse[0] = 1.0;
    let g = circular_filter(&circular_filter(&impulse, &h), &h);
    let peak = g[0];
    let mut worst: f64 = 0.0;
    let mut k = n_up;
    while k < len {
        worst = worst.max(g[k].abs());
        k += n_up;
    }
    worst / peak
}

/// Worst normalized `‖Aᵀr‖ / (‖A‖·‖y‖)` of least-squares residuals over
/// random full-rank and rank-deficient systems.
pub fn lstsq_orthogonality_worst(cases: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for c in 0..cases {
        let cols = r.random_range(1..12);
        let rows = cols + r.random_range(0..40);
        let mut a = DMatrix::from_fn(rows, cols, |_, _| r.random_range(-2.0..2.0));
        if c % 4 == 0 && cols > 1 {
            let (i, j) = (0, cols - 1);
            let s = r.random_range(-2.0..2.0);
            for k in 0..rows {
                a[(k, j)] = s * a[(k, i)];
            }
        }
        let y: Vec<f64> = (0..rows).map(|_| r.random_range(-5.0..5.0)).collect();
        let sol = fit_least_squares(&a, &y).unwrap();
        let x = nalgebra::DVector::from_vec(sol.coefficients);
        let yv = nalgebra::DVector::from_vec(y);
        let res = &yv - &a * &x;
        let g = a.transpose() * res;
        worst = worst.max(g.norm() / (a.norm() * yv.norm()).max(f64::MIN_POSITIVE));
    }
    worst
}

fn boundary_errors(lower: &[f64], upper: &[f64], theta: f64) -> usize {
    lower.iter().filter(|&&x| x >= theta).count() + upper.iter().filter(|&&x| x < theta).count()
}

/// Number of 1-D two-class mixtures where the fitted boundary makes more
/// errors than the best point of a brute-force grid (all sample values,
/// their neighbours and a fine uniform grid).
pub fn threshold_mismatches(cases: usize, seed: u64) -> usize {
    let mut r = rng(seed);
    let mut bad = 0;
    for _ in 0..cases {
        let gap = r.random_range(-1.0..3.0);
        let lower: Vec<f64> = (0..r.random_range(1..40)).map(|_| r.random_range(0.0..2.0)).collect();
        let upper: Vec<f64> = (0..r.random_range(1..40))
            .map(|_| r.random_range(0.0..2.0) + gap)
            .collect();
        let theta = fit_boundary(&lower, &upper).unwrap();
        let got = boundary_errors(&lower, &upper, theta);
        let mut grid: Vec<f64> = lower.iter().chain(&upper).flat_map(|&x| [x, x + 1e-9, x - 1e-9]).collect();
        let (lo, hi) = grid.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
        grid.extend((0..=2000).map(|i| lo - 1.0 + (hi - lo + 2.0) * i as f64 / 2000.0));
        let best = grid.iter().map(|&t| boundary_errors(&lower, &upper, t)).min().unwrap();
        if got != best {
            bad += 1;
        }
    }
    bad
}

/// Fraction of Bernoulli replays whose 99 % interval contains the true
/// error probability.
pub fn interval_coverage(replays: usize, bits: u64, p: f64, seed: u64) -> f64 {
    let mut r = rng(seed);
    let dist = rand_distr::Binomial::new(bits, p).unwrap();
    let mut covered = 0;
    for _ in 0..replays {
        let k: u64 = r.sample(dist);
        let (lo, hi) = credibility_interval(k, bits, 0.99).unwrap();
        if lo <= p && p <= hi {
            covered += 1;
        }
    }
    covered as f64 / replays as f64
}

pub fn property_suite() -> Vec<PropertyReport> {
    let isi = [0.2, 0.35, 0.5]
        .iter()
        .flat_map(|&b| [(b, 2, 32), (b, 3, 32), (b, 4, 48), (b, 3, 64)])
        .map(|(b, n, s)| rrc_isi(b, n, s).max(rrc_isi_circular(b, n, s)))
        .fold(0.0, f64::max);
    vec![
        PropertyReport {
            name: "dispersion allpass energy change (relative)",
            value: cd_energy_worst(50, 1),
            bound: 1e-10,
            lower_bound: false,
        },
        PropertyReport {
            name: "RRC cascade ISI floor (fraction of peak)",
            value: isi,
            bound: 1e-3,
            lower_bound: false,
        },
        PropertyReport {
            name: "least-squares residual orthogonality",
            value: lstsq_orthogonality_worst(200, 2),
            bound: 1e-8,
            lower_bound: false,
        },
        PropertyReport {
            name: "threshold search vs brute-force grid (mismatches)",
            value: threshold_mismatches(300, 3) as f64,
            bound: 1.0,
            lower_bound: false,
        },
        PropertyReport {
            name: "99% interval coverage over 1000 replays",
            value: interval_coverage(1000, 100_000, 2e-3, 4),
            bound: 0.99,
            lower_bound: true,
        },
    ]
}

/// Group-delay difference between ±Nyquist in symbol periods, read off the
/// allpass phase by central differences.
pub fn delay_spread_symbols(p: &LinkParams) -> f64 {
    let cd = imdd_snn::link::ChromaticDispersion::new(p, 16);
    let f = p.baudrate / 2.0;
    let df = 1e6;
    let tau = |f: f64| (cd.phase(f + df) - cd.phase(f - df)) / (2.0 * df) / (2.0 * std::f64::consts::PI);
    (tau(f) - tau(-f)).abs() * p.baudrate
}

/// Carrier-to-signal power ratio of the transmitted waveform over `frames`
/// random frames.
pub fn cspr_db(p: &LinkParams, frames: usize, seed: u64) -> f64 {
    let link = imdd_snn::link::Link::new(p.clone()).unwrap();
    let mut r = rng(seed);
    let (mut acc, mut n) = (0.0, 0usize);
    for _ in 0..frames {
        let bits = imdd_snn::link::random_bits(2 * p.seq_len, &mut r);
        let frame = imdd_snn::link::map_bits_to_pam4(&bits, &[-3.0, -1.0, 1.0, 3.0]).unwrap();
        let x = link.transmit(&frame);
        acc += x.iter().map(|v| (v - p.bias).powi(2)).sum::<f64>();
        n += x.len();
    }
    10.0 * (p.bias.powi(2) / (acc / n as f64)).log10()
}

/// Amplitude of the DFT bin at `bin` of a real sequence.
fn tone_amplitude(x: &[f64], bin: usize) -> f64 {
    let n = x.len() as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for (k, v) in x.iter().enumerate() {
        let ph = -2.0 * std::f64::consts::PI * (bin * k) as f64 / n;
        re += v * ph.cos();
        im += v * ph.sin();
    }
    2.0 * (re * re + im * im).sqrt() / n
}

/// Attenuation of the carrier × signal beat term at `freq` relative to a
/// dispersion-free fiber: a small probe tone rides on the bias, goes through
/// dispersion and the square-law detector, and the detected tone amplitude
/// is compared with the back-to-back one.
pub fn beat_attenuation_db(p: &LinkParams, freq: f64) -> f64 {
    let n = 6000;
    let fs = p.sample_rate();
    let bin = (freq / fs * n as f64).round() as usize;
    let a = 1e-3;
    let x: Vec<f64> = (0..n)
        .map(|k| p.bias + a * (2.0 * std::f64::consts::PI * (bin * k) as f64 / n as f64).cos())
        .collect();
    let detect = |p: &LinkParams| {
        let field = chromatic_dispersion(&x, p);
        tone_amplitude(&imdd_snn::link::photodiode(&field), bin)
    };
    let b2b = LinkParams {
        fiber_length: 0.0,
        ..p.clone()
    };
    20.0 * (detect(&b2b) / detect(p)).log10()
}
