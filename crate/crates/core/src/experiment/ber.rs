use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::demapper::count_bit_errors;
use crate::link::{extract_chunks, Link, NoiseLevel};
use crate::rng::StreamKey;
use crate::{Demapper, Error, Result};

/// One point of a BER curve. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerRecord {
    pub demapper: String,
    pub noise_db: f64,
    pub errors: u64,
    pub bits: u64,
    pub ber: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
    /// The bit cap was reached before the error target.
    pub censored: bool,
}

impl BerRecord {
    /// Builds a record with its 99 % interval. Censored records get a lower
    /// bound of zero.
    pub fn new(
        demapper: impl Into<String>,
        noise_db: f64,
        errors: u64,
        bits: u64,
        seed: u64,
        censored: bool,
    ) -> Result<Self> {
        let (low, high) = credibility_interval(errors, bits, 0.99)?;
        Ok(Self {
            demapper: demapper.into(),
            noise_db,
            errors,
            bits,
            ber: errors as f64 / bits as f64,
            ci_low: if censored { 0.0 } else { low },
            ci_high: high,
            seed,
            censored,
        })
    }
}

/// Equal-tailed interval of the Jeffreys posterior Beta(k + ½, n − k + ½).
pub fn credibility_interval(errors: u64, bits: u64, level: f64) -> Result<(f64, f64)> {
    if bits == 0 {
        return Err(Error::NoTrials);
    }
    if errors > bits {
        return Err(Error::LengthMismatch {
            expected: bits as usize,
            got: errors as usize,
        });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidConfig(format!("credibility level {level}")));
    }
    let a = errors as f64 + 0.5;
    let b = (bits - errors) as f64 + 0.5;
    let tail = (1.0 - level) / 2.0;
    Ok((beta_quantile(a, b, tail), beta_quantile(a, b, 1.0 - tail)))
}

/// Inverse of the regularized incomplete beta function by bisection.
fn beta_quantile(a: f64, b: f64, p: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if beta_reg(a, b, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Stopping rule and frame scheduling for BER estimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub min_errors: u64,
    pub bit_cap: u64,
    /// Frames simulated per round; rounds run in parallel and the stopping
    /// rule is checked between rounds.
    pub frames_per_round: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            min_errors: 2000,
            bit_cap: 1_000_000_000,
            frames_per_round: 4,
        }
    }
}

/// Streams fresh frames through `demapper` until `min_errors` bit errors are
/// seen or `bit_cap` bits were tested.
///
/// Frame `i` is drawn from `key.index(i)`, so the result does not depend on
/// the number of worker threads.
pub fn evaluate_ber_until(
    demapper: &dyn Demapper,
    name: &str,
    link: &Link,
    noise: NoiseLevel,
    config: &EvalConfig,
    key: StreamKey,
) -> Result<BerRecord> {
    if config.frames_per_round == 0 {
        return Err(Error::InvalidConfig("frames_per_round must be positive".into()));
    }
    let n_tap = demapper.n_tap();
    let (mut errors, mut bits, mut next) = (0u64, 0u64, 0u64);
    while errors < config.min_errors && bits < config.bit_cap {
        let counts: Vec<Result<(u64, u64)>> = (next..next + config.frames_per_round as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = key.index(i).rng();
                let (frame, rx) = link.simulate(noise, &mut rng)?;
                let chunks = extract_chunks(&rx.samples, n_tap)?;
                let decided = demapper.decide_all(&chunks);
                let e = count_bit_errors(&decided, &frame.indices[chunks.symbol_range()]);
                Ok((e, 2 * chunks.len() as u64))
            })
            .collect();
        for c in counts {
            let (e, b) = c?;
            errors += e;
            bits += b;
        }
        next += config.frames_per_round as u64;
    }
    BerRecord::new(
        name,
        noise.db(),
        errors,
        bits,
        key.seed,
        errors < config.min_errors,
    )
}

/// Noise level (dB) at which a BER curve crosses `target`, by linear
/// interpolation of log10(BER) between the bracketing points.
///
/// `curve` holds `(noise_db, ber)` pairs sorted by noise level.
pub fn crossing_db(curve: &[(f64, f64)], target: f64) -> Result<f64> {
    let lt = target.log10();
    for w in curve.windows(2) {
        let ((x0, b0), (x1, b1)) = (w[0], w[1]);
        if b0 <= 0.0 || b1 <= 0.0 {
            continue;
        }
        let (l0, l1) = (b0.log10(), b1.log10());
        if (l0 - lt) * (l1 - lt) <= 0.0 && l0 != l1 {
            return Ok(x0 + (lt - l0) / (l1 - l0) * (x1 - x0));
        }
        if l0 == lt {
            return Ok(x0);
        }
    }
    let (lo, hi) = curve
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, b)| (lo.min(b), hi.max(b)));
    Err(Error::NotBracketed {
        target,
        curve: format!("BER spans [{lo:.3e}, {hi:.3e}] over {} points", curve.len()),
    })
}

/// Gain of curve `a` over curve `b` in dB at `target` BER: how much more noise
/// `a` tolerates. Positive when `a` is better.
pub fn interpolate_gain_db(a: &[(f64, f64)], b: &[(f64, f64)], target: f64) -> Result<f64> {
    Ok(crossing_db(a, target)? - crossing_db(b, target)?)
}
