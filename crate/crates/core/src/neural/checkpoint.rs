//! Text checkpoint format shared by the trainable demappers.
//!
//! ```text
//! imdd-snn checkpoint v1
//! kind <model kind>
//! tensor <name> <rows> <cols>
//! <row-major values, one row per line>
//! ...
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::Tensor;
use crate::{Error, Result};

const MAGIC: &str = "imdd-snn checkpoint v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub kind: String,
    pub tensors: Vec<(String, Tensor)>,
}

impl Checkpoint {
    pub fn new(kind: impl Into<String>) -> Self {
        Self {
            kind: kind.into(),
            tensors: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, tensor: Tensor) {
        self.tensors.push((name.into(), tensor));
    }

    pub fn tensor(&self, name: &str) -> Result<&Tensor> {
        self.tensors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
            .ok_or_else(|| Error::parse("checkpoint", format!("missing tensor `{name}`")))
    }

    /// Fetches a tensor and checks its shape.
    pub fn expect(&self, name: &str, rows: usize, cols: usize) -> Result<Tensor> {
        let t = self.tensor(name)?;
        if t.shape() != (rows, cols) {
            return Err(Error::Shape {
                op: "checkpoint",
                detail: format!("`{name}` is {:?}, expected ({rows}, {cols})", t.shape()),
            });
        }
        Ok(t.clone())
    }

    pub fn expect_kind(&self, kind: &str) -> Result<()> {
        if self.kind != kind {
            return Err(Error::parse(
                "checkpoint",
                format!("kind `{}`, expected `{kind}`", self.kind),
            ));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{MAGIC}\nkind {}\n", self.kind);
        for (name, t) in &self.tensors {
            let _ = writeln!(s, "tensor {name} {} {}", t.rows(), t.cols());
            for r in 0..t.rows() {
                let line: Vec<String> = t.row(r).iter().map(|v| v.to_string()).collect();
                s.push_str(&line.join(" "));
                s.push('\n');
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let err = |d: String| Error::parse("checkpoint", d);
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some(MAGIC) {
            return Err(err("missing header line".into()));
        }
        let kind = lines
            .next()
            .and_then(|l| l.trim().strip_prefix("kind "))
            .ok_or_else(|| err("missing kind line".into()))?;
        let mut ck = Checkpoint::new(kind.trim());
        while let Some(line) = lines.next() {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [tag, name, rows, cols] = parts[..] else {
                return Err(err(format!("bad tensor line `{line}`")));
            };
            if tag != "tensor" {
                return Err(err(format!("expected `tensor`, got `{tag}`")));
            }
            let rows: usize = rows.parse().map_err(|e| err(format!("{e}")))?;
            let cols: usize = cols.parse().map_err(|e| err(format!("{e}")))?;
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let row = lines
                    .next()
                    .ok_or_else(|| err(format!("`{name}` truncated")))?;
                for v in row.split_whitespace() {
                    data.push(v.parse::<f64>().map_err(|e| err(format!("`{v}`: {e}")))?);
                }
            }
            ck.push(name, Tensor::from_vec(rows, cols, data)?);
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let mut ck = Checkpoint::new("test");
        ck.push("a", Tensor::from_fn(2, 3, |r, c| (r as f64 + 0.1) / (c as f64 + 3.0)));
        ck.push("b", Tensor::from_vec(1, 2, vec![-1e-300, 7.25e12]).unwrap());
        let back = Checkpoint::from_text(&ck.to_text()).unwrap();
        assert_eq!(back, ck);
        assert!(back.expect("a", 2, 3).is_ok());
        assert!(back.expect("a", 3, 2).is_err());
        assert!(back.tensor("c").is_err());
    }

    #[test]
    fn rejects_truncated_input() {
        let mut ck = Checkpoint::new("test");
        ck.push("a", Tensor::zeros(3, 2));
        let text = ck.to_text();
        let cut: String = text.lines().take(4).collect::<Vec<_>>().join("\n");
        assert!(Checkpoint::from_text(&cut).is_err());
        assert!(Checkpoint::from_text("nonsense").is_err());
    }
}
