use super::{LinkParams, SymbolFrame};
use crate::{Error, Result};
use std::f64::consts::PI;

/// Shortest accepted RRC span in symbols.
pub const MIN_RRC_SPAN: usize = 8;

/// Root-raised-cosine taps at `n_up` samples per symbol.
///
/// The filter has `span * n_up - 1` taps, is even-symmetric about its center
/// and is scaled to Σh² = 1/n_up. With that scaling the TX+RX cascade has a
/// peak of 1/n_up and unit DC gain per filter.
pub fn rrc_taps(rolloff: f64, n_up: usize, span: usize) -> Result<Vec<f64>> {
    if !(rolloff > 0.0 && rolloff < 1.0) {
        return Err(Error::InvalidRolloff(rolloff));
    }
    if span < MIN_RRC_SPAN {
        return Err(Error::RrcSpanTooShort {
            span,
            min: MIN_RRC_SPAN,
        });
    }
    if n_up == 0 {
        return Err(Error::InvalidLinkParams("n_up must be positive".into()));
    }
    // Taps at |t| < span/2: the two outermost taps of a closed ±span/2
    // window raise the cascade ISI floor above 1e-3 for span 32.
    let len = span * n_up - 1;
    let center = (len / 2) as f64;
    let mut taps: Vec<f64> = (0..len)
        .map(|k| rrc_value((k as f64 - center) / n_up as f64, rolloff))
        .collect();
    let energy: f64 = taps.iter().map(|h| h * h).sum();
    let scale = (1.0 / (n_up as f64 * energy)).sqrt();
    taps.iter_mut().for_each(|h| *h *= scale);
    Ok(taps)
}

/// Unnormalized RRC impulse response at `t` symbol periods.
fn rrc_value(t: f64, b: f64) -> f64 {
    if t == 0.0 {
        1.0 - b + 4.0 * b / PI
    } else if ((4.0 * b * t).abs() - 1.0).abs() < 1e-12 {
        b / 2f64.sqrt()
            * ((1.0 + 2.0 / PI) * (PI / (4.0 * b)).sin() + (1.0 - 2.0 / PI) * (PI / (4.0 * b)).cos())
    } else {
        ((PI * t * (1.0 - b)).sin() + 4.0 * b * t * (PI * t * (1.0 + b)).cos())
            / (PI * t * (1.0 - (4.0 * b * t).powi(2)))
    }
}

/// Circular convolution with an odd-length kernel centered on its middle tap.
pub fn circular_filter(signal: &[f64], taps: &[f64]) -> Vec<f64> {
    let m = signal.len();
    let mut out = vec![0.0; m];
    if m == 0 {
        return out;
    }
    let center = (taps.len() / 2) as isize;
    for (k, &x) in signal.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        scatter(&mut out, k as isize - center, taps, x);
    }
    out
}

/// Adds `x * taps` into `out` starting at (circular) position `start`.
fn scatter(out: &mut [f64], start: isize, taps: &[f64], x: f64) {
    let m = out.len() as isize;
    let mut idx = start.rem_euclid(m) as usize;
    for &h in taps {
        out[idx] += x * h;
        idx += 1;
        if idx == out.len() {
            idx = 0;
        }
    }
}

pub(crate) fn shape_with_taps(symbols: &[f64], taps: &[f64], n_up: usize, bias: f64) -> Vec<f64> {
    let m = symbols.len() * n_up;
    let mut out = vec![0.0; m];
    if m > 0 {
        let center = (taps.len() / 2) as isize;
        for (n, &y) in symbols.iter().enumerate() {
            if y != 0.0 {
                scatter(&mut out, (n * n_up) as isize - center, taps, y);
            }
        }
    }
    out.iter_mut().for_each(|v| *v += bias);
    out
}

/// Zero-stuffed upsampling by `n_up`, RRC filtering, plus the constant bias.
pub fn shape_and_bias(frame: &SymbolFrame, params: &LinkParams) -> Result<Vec<f64>> {
    let taps = rrc_taps(params.rrc_rolloff, params.n_up, params.rrc_span)?;
    Ok(shape_with_taps(&frame.symbols, &taps, params.n_up, params.bias))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_and_normalized() {
        let h = rrc_taps(0.2, 3, 32).unwrap();
        assert_eq!(h.len(), 95);
        for k in 0..h.len() {
            assert!((h[k] - h[h.len() - 1 - k]).abs() < 1e-15);
        }
        let e: f64 = h.iter().map(|x| x * x).sum();
        assert!((e - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn short_span_rejected() {
        assert!(matches!(
            rrc_taps(0.2, 3, 4),
            Err(Error::RrcSpanTooShort { .. })
        ));
        assert!(rrc_taps(0.0, 3, 32).is_err());
        assert!(rrc_taps(1.0, 3, 32).is_err());
    }

    #[test]
    fn singular_point_is_continuous() {
        for b in [0.2, 0.25, 0.5] {
            let ts = 1.0 / (4.0 * b);
            let at = rrc_value(ts, b);
            for d in [1e-6, -1e-6] {
                assert!((rrc_value(ts + d, b) - at).abs() < 1e-5, "rolloff {b}");
            }
            assert!((rrc_value(0.0, b) - rrc_value(1e-9, b)).abs() < 1e-8);
        }
    }

    #[test]
    fn cascade_is_nyquist() {
        let h = rrc_taps(0.2, 3, 32).unwrap();
        let c = h.len() - 1;
        let mut cascade = vec![0.0; 2 * h.len() - 1];
        for (i, a) in h.iter().enumerate() {
            for (j, b) in h.iter().enumerate() {
                cascade[i + j] += a * b;
            }
        }
        let peak = cascade[c];
        assert!((peak - 1.0 / 3.0).abs() < 1e-12);
        let mut k = 3;
        while k <= c {
            assert!(cascade[c + k].abs() < 1e-3 * peak, "ISI at lag {k}");
            assert!(cascade[c - k].abs() < 1e-3 * peak);
            k += 3;
        }
    }

    #[test]
    fn zero_symbols_give_constant_bias() {
        let p = LinkParams {
            seq_len: 64,
            ..LinkParams::default()
        };
        let frame = SymbolFrame {
            bits: vec![],
            indices: vec![],
            symbols: vec![0.0; 64],
        };
        let w = shape_and_bias(&frame, &p).unwrap();
        assert_eq!(w.len(), 192);
        assert!(w.iter().all(|&v| v == 2.25));
        let zero = shape_with_taps(&frame.symbols, &rrc_taps(0.2, 3, 32).unwrap(), 3, 0.0);
        assert!(zero.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn circular_filter_matches_direct_sum() {
        let x: Vec<f64> = (0..20).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let h = [0.5, -1.0, 2.0, 0.25, 1.5];
        let y = circular_filter(&x, &h);
        for i in 0..x.len() {
            let mut acc = 0.0;
            for (j, hj) in h.iter().enumerate() {
                let idx = (i as isize + 2 - j as isize).rem_euclid(20) as usize;
                acc += hj * x[idx];
            }
            assert!((acc - y[i]).abs() < 1e-12);
        }
    }
}
