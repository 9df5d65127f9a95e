use crate::link::gray_demap;
use crate::{Error, Result};

/// Three decision boundaries on the equalized sample.
///
/// Intervals are half-open: a sample exactly on boundary k belongs to the
/// upper symbol k+1. Symbol indices ascend with the equalized level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdDemapper {
    boundaries: [f64; 3],
}

impl ThresholdDemapper {
    pub fn new(boundaries: [f64; 3]) -> Result<Self> {
        let ordered = boundaries.iter().all(|b| b.is_finite())
            && boundaries[0] < boundaries[1]
            && boundaries[1] < boundaries[2];
        if !ordered {
            return Err(Error::UnorderedBoundaries(boundaries));
        }
        Ok(Self { boundaries })
    }

    pub fn boundaries(&self) -> [f64; 3] {
        self.boundaries
    }

    pub fn decide(&self, y: f64) -> usize {
        self.boundaries.iter().filter(|&&b| y >= b).count()
    }

    pub fn hard_decide(&self, y: f64) -> [u8; 2] {
        gray_demap(self.decide(y)).expect("decision index is always below 4")
    }
}

/// Boundary between two adjacent classes minimizing
/// `#{lower ≥ θ} + #{upper < θ}`.
///
/// Candidates are the midpoints between consecutive distinct sorted samples
/// plus one point below and one above all samples.
/// Among equally good candidates the one closest to the middle of the tied
/// range is returned.
pub fn fit_boundary(lower: &[f64], upper: &[f64]) -> Result<f64> {
    if lower.is_empty() || upper.is_empty() {
        return Err(Error::Empty("boundary class samples"));
    }
    let mut samples: Vec<(f64, bool)> = lower
        .iter()
        .map(|&v| (v, false))
        .chain(upper.iter().map(|&v| (v, true)))
        .collect();
    if samples.iter().any(|(v, _)| !v.is_finite()) {
        return Err(Error::NonFinite("equalized samples".into()));
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));

    // θ at the smallest sample: every lower sample is misclassified
    let mut errors = lower.len() as i64;
    let mut best = errors;
    let mut tied: Vec<f64> = vec![samples[0].0];
    let mut i = 0;
    while i < samples.len() {
        let v = samples[i].0;
        while i < samples.len() && samples[i].0 == v {
            errors += if samples[i].1 { 1 } else { -1 };
            i += 1;
        }
        // past the largest sample every upper sample is misclassified
        let theta = match samples.get(i) {
            Some(next) => 0.5 * (v + next.0),
            None => v.next_up(),
        };
        if errors < best {
            best = errors;
            tied.clear();
            tied.push(theta);
        } else if errors == best {
            tied.push(theta);
        }
    }
    let center = 0.5 * (tied[0] + tied[tied.len() - 1]);
    let pick = tied
        .iter()
        .copied()
        .min_by(|a, b| (a - center).abs().total_cmp(&(b - center).abs()))
        .expect("tied set is nonempty");
    Ok(pick)
}

/// Fits the three boundaries from equalized samples and their true symbol indices.
pub fn fit_thresholds(equalized: &[f64], truth: &[u8]) -> Result<ThresholdDemapper> {
    if equalized.len() != truth.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            got: equalized.len(),
        });
    }
    let mut classes: [Vec<f64>; 4] = Default::default();
    for (&y, &t) in equalized.iter().zip(truth) {
        let t = t as usize;
        if t >= 4 {
            return Err(Error::InvalidSymbolIndex(t));
        }
        classes[t].push(y);
    }
    if let Some(missing) = classes.iter().position(|c| c.is_empty()) {
        return Err(Error::MissingClass(missing));
    }
    let mut boundaries = [0.0; 3];
    for k in 0..3 {
        boundaries[k] = fit_boundary(&classes[k], &classes[k + 1])?;
    }
    ThresholdDemapper::new(boundaries)
}
