use super::features::{build_le_features, VolterraBasis};
use super::lstsq::fit_least_squares;
use super::thresholds::{fit_thresholds, ThresholdDemapper};
use crate::link::ChunkSet;
use crate::{Demapper, Error, Result};
use std::fmt::Write as _;
use std::path::Path;

/// FIR equalizer with DC bias: ŷ = c + Σ_j ỹ_j·h_j.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub taps: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn n_tap(&self) -> usize {
        self.taps.len()
    }

    pub fn equalize(&self, chunk: &[f64]) -> Result<f64> {
        check_len(chunk, self.n_tap())?;
        Ok(self.apply(chunk))
    }

    fn apply(&self, chunk: &[f64]) -> f64 {
        self.bias + chunk.iter().zip(&self.taps).map(|(y, h)| y * h).sum::<f64>()
    }
}

/// Linear regression over all monomials of the window up to `order`.
#[derive(Debug, Clone, PartialEq)]
pub struct VolterraModel {
    basis: VolterraBasis,
    pub coefficients: Vec<f64>,
}

impl VolterraModel {
    pub fn new(n_tap: usize, order: usize, coefficients: Vec<f64>) -> Result<Self> {
        let basis = VolterraBasis::new(n_tap, order);
        if coefficients.len() != basis.len() {
            return Err(Error::LengthMismatch {
                expected: basis.len(),
                got: coefficients.len(),
            });
        }
        Ok(Self {
            basis,
            coefficients,
        })
    }

    pub fn n_tap(&self) -> usize {
        self.basis.n_tap()
    }

    pub fn order(&self) -> usize {
        self.basis.order()
    }

    pub fn equalize(&self, chunk: &[f64]) -> Result<f64> {
        check_len(chunk, self.n_tap())?;
        Ok(self.apply(chunk, &mut vec![0.0; self.basis.len()]))
    }

    fn apply(&self, chunk: &[f64], scratch: &mut [f64]) -> f64 {
        self.basis.eval_into(chunk, scratch);
        scratch.iter().zip(&self.coefficients).map(|(f, c)| f * c).sum()
    }
}

fn check_len(chunk: &[f64], n_tap: usize) -> Result<()> {
    if chunk.len() != n_tap {
        return Err(Error::LengthMismatch {
            expected: n_tap,
            got: chunk.len(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Equalizer {
    Linear(LinearModel),
    Volterra(VolterraModel),
}

impl Equalizer {
    pub fn n_tap(&self) -> usize {
        match self {
            Equalizer::Linear(m) => m.n_tap(),
            Equalizer::Volterra(m) => m.n_tap(),
        }
    }

    pub fn equalize(&self, chunk: &[f64]) -> Result<f64> {
        match self {
            Equalizer::Linear(m) => m.equalize(chunk),
            Equalizer::Volterra(m) => m.equalize(chunk),
        }
    }

    pub fn equalize_all(&self, chunks: &ChunkSet) -> Result<Vec<f64>> {
        if chunks.n_tap() != self.n_tap() {
            return Err(Error::LengthMismatch {
                expected: self.n_tap(),
                got: chunks.n_tap(),
            });
        }
        Ok(match self {
            Equalizer::Linear(m) => chunks.iter().map(|c| m.apply(c)).collect(),
            Equalizer::Volterra(m) => {
                let mut scratch = vec![0.0; m.basis.len()];
                chunks.iter().map(|c| m.apply(c, &mut scratch)).collect()
            }
        })
    }
}

pub fn fit_linear(chunks: &ChunkSet, targets: &[f64]) -> Result<LinearModel> {
    let a = build_le_features(chunks);
    let sol = fit_least_squares(&a, targets)?;
    Ok(LinearModel {
        bias: sol.coefficients[0],
        taps: sol.coefficients[1..].to_vec(),
    })
}

pub fn fit_volterra(chunks: &ChunkSet, targets: &[f64], order: usize) -> Result<VolterraModel> {
    let basis = VolterraBasis::new(chunks.n_tap(), order);
    let a = basis.matrix(chunks);
    let sol = fit_least_squares(&a, targets)?;
    Ok(VolterraModel {
        basis,
        coefficients: sol.coefficients,
    })
}

/// Equalizer followed by the threshold demapper.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalDemapper {
    pub equalizer: Equalizer,
    pub thresholds: ThresholdDemapper,
}

impl ClassicalDemapper {
    /// Data-aided fit: least squares on the transmitted symbols, then
    /// BER-minimizing thresholds on the equalized training samples.
    ///
    /// `order == 1` gives the LMMSE linear equalizer.
    pub fn fit(chunks: &ChunkSet, symbols: &[f64], indices: &[u8], order: usize) -> Result<Self> {
        if chunks.is_empty() {
            return Err(Error::Empty("training chunks"));
        }
        let equalizer = if order == 1 {
            Equalizer::Linear(fit_linear(chunks, symbols)?)
        } else {
            Equalizer::Volterra(fit_volterra(chunks, symbols, order)?)
        };
        let equalized = equalizer.equalize_all(chunks)?;
        let thresholds = fit_thresholds(&equalized, indices)?;
        Ok(Self {
            equalizer,
            thresholds,
        })
    }

    pub fn order(&self) -> usize {
        match &self.equalizer {
            Equalizer::Linear(_) => 1,
            Equalizer::Volterra(m) => m.order(),
        }
    }
}

impl Demapper for ClassicalDemapper {
    fn n_tap(&self) -> usize {
        self.equalizer.n_tap()
    }

    fn decide(&self, chunk: &[f64]) -> usize {
        let y = match &self.equalizer {
            Equalizer::Linear(m) => m.apply(chunk),
            Equalizer::Volterra(m) => m.apply(chunk, &mut vec![0.0; m.basis.len()]),
        };
        self.thresholds.decide(y)
    }

    fn decide_all(&self, chunks: &ChunkSet) -> Vec<usize> {
        self.equalizer
            .equalize_all(chunks)
            .expect("chunk width matches the equalizer")
            .into_iter()
            .map(|y| self.thresholds.decide(y))
            .collect()
    }
}

const CLASSICAL_MAGIC: &str = "imdd-snn classical v1";

fn format_classical(model: &ClassicalDemapper) -> String {
    let (kind, coefficients): (&str, Vec<f64>) = match &model.equalizer {
        Equalizer::Linear(m) => (
            "le",
            std::iter::once(m.bias).chain(m.taps.iter().copied()).collect(),
        ),
        Equalizer::Volterra(m) => ("vnle", m.coefficients.clone()),
    };
    let mut s = String::new();
    writeln!(s, "{CLASSICAL_MAGIC}").unwrap();
    writeln!(s, "kind {kind}").unwrap();
    writeln!(s, "n_tap {}", model.equalizer.n_tap()).unwrap();
    writeln!(s, "order {}", model.order()).unwrap();
    writeln!(s, "coefficients {}", coefficients.len()).unwrap();
    for c in coefficients {
        writeln!(s, "{c:?}").unwrap();
    }
    writeln!(s, "boundaries 3").unwrap();
    for b in model.thresholds.boundaries() {
        writeln!(s, "{b:?}").unwrap();
    }
    s
}

fn parse_classical(text: &str, ctx: &str) -> Result<ClassicalDemapper> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| Error::parse(ctx, format!("unexpected end of file, expected {what}")))
    };
    if next("magic")? != CLASSICAL_MAGIC {
        return Err(Error::parse(ctx, "not a classical model file"));
    }
    let field = |line: &str, key: &str| -> Result<String> {
        line.strip_prefix(key)
            .map(|v| v.trim().to_string())
            .ok_or_else(|| Error::parse(ctx, format!("expected `{key}`, found `{line}`")))
    };
    let num = |v: &str| -> Result<f64> { v.parse::<f64>().map_err(|e| Error::parse(ctx, e)) };
    let int = |v: String| -> Result<usize> { v.parse::<usize>().map_err(|e| Error::parse(ctx, e)) };

    let kind = field(next("kind")?, "kind")?;
    let n_tap = int(field(next("n_tap")?, "n_tap")?)?;
    let order = int(field(next("order")?, "order")?)?;
    let count = int(field(next("coefficients")?, "coefficients")?)?;
    let mut coefficients = Vec::with_capacity(count);
    for _ in 0..count {
        coefficients.push(num(next("coefficient")?)?);
    }
    if int(field(next("boundaries")?, "boundaries")?)? != 3 {
        return Err(Error::parse(ctx, "expected exactly 3 boundaries"));
    }
    let mut boundaries = [0.0; 3];
    for b in &mut boundaries {
        *b = num(next("boundary")?)?;
    }
    let equalizer = match kind.as_str() {
        "le" => {
            if coefficients.len() != n_tap + 1 || order != 1 {
                return Err(Error::parse(ctx, "linear model shape mismatch"));
            }
            Equalizer::Linear(LinearModel {
                bias: coefficients[0],
                taps: coefficients[1..].to_vec(),
            })
        }
        "vnle" => Equalizer::Volterra(VolterraModel::new(n_tap, order, coefficients)?),
        other => return Err(Error::parse(ctx, format!("unknown model kind `{other}`"))),
    };
    Ok(ClassicalDemapper {
        equalizer,
        thresholds: ThresholdDemapper::new(boundaries)?,
    })
}

pub fn save_classical(model: &ClassicalDemapper, path: &Path) -> Result<()> {
    std::fs::write(path, format_classical(model)).map_err(|e| Error::io(path, e))
}

pub fn load_classical(path: &Path) -> Result<ClassicalDemapper> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_classical(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::build_volterra_features;
    use nalgebra::DVector;

    fn chunks() -> ChunkSet {
        let data: Vec<f64> = (0..70).map(|i| ((i * 37) % 11) as f64 * 0.3 - 1.0).collect();
        ChunkSet::from_flat(7, data).unwrap()
    }

    #[test]
    fn unit_center_tap_passes_sample() {
        let mut taps = vec![0.0; 7];
        taps[3] = 1.0;
        let m = LinearModel { taps, bias: 0.0 };
        let c = [1.0, 2.0, 3.0, 4.5, 5.0, 6.0, 7.0];
        assert_eq!(m.equalize(&c).unwrap(), 4.5);
        let zero = LinearModel {
            taps: vec![0.0; 7],
            bias: 0.7,
        };
        assert_eq!(zero.equalize(&c).unwrap(), 0.7);
        assert!(matches!(m.equalize(&c[..5]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn volterra_path_matches_matrix_path() {
        let cs = chunks();
        let coeffs: Vec<f64> = (0..120).map(|i| ((i * 13) % 7) as f64 * 0.01 - 0.03).collect();
        let model = VolterraModel::new(7, 3, coeffs.clone()).unwrap();
        let a = build_volterra_features(&cs, 3);
        let via_matrix = a * DVector::from_vec(coeffs);
        for (i, c) in cs.iter().enumerate() {
            let y = model.equalize(c).unwrap();
            assert!((y - via_matrix[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn text_format_round_trip() {
        let vol = VolterraModel::new(3, 2, (0..10).map(|v| v as f64 / 3.0).collect()).unwrap();
        let m = ClassicalDemapper {
            equalizer: Equalizer::Volterra(vol),
            thresholds: ThresholdDemapper::new([-1.5, 0.1, 2.0 / 3.0]).unwrap(),
        };
        let parsed = parse_classical(&format_classical(&m), "mem").unwrap();
        assert_eq!(parsed, m);
        let le = ClassicalDemapper {
            equalizer: Equalizer::Linear(LinearModel {
                taps: vec![0.1, 1.0 / 7.0, -0.2],
                bias: 1e-17,
            }),
            thresholds: ThresholdDemapper::new([-2.0, 0.0, 2.0]).unwrap(),
        };
        assert_eq!(parse_classical(&format_classical(&le), "mem").unwrap(), le);
        assert!(parse_classical("garbage", "mem").is_err());
    }
}
