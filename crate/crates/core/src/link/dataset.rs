use super::{gray_index, Link, LinkParams, NoiseLevel, RxSamples, SymbolFrame};
use crate::rng::{StreamKey, StreamPurpose};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn purpose(self) -> StreamPurpose {
        match self {
            Split::Train => StreamPurpose::Train,
            Split::Validation => StreamPurpose::Validation,
            Split::Test => StreamPurpose::Test,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFrame {
    pub split: Split,
    pub frame: SymbolFrame,
    pub rx: RxSamples,
}

/// Frames for one noise level, each tagged with the split it was drawn for.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledDataset {
    pub frames: Vec<LabeledFrame>,
}

impl LabeledDataset {
    /// Draws `count` frames per split. Each split uses its own random stream.
    pub fn generate(
        link: &Link,
        noise: NoiseLevel,
        key: StreamKey,
        counts: &[(Split, usize)],
    ) -> Result<Self> {
        let mut frames = Vec::new();
        for &(split, count) in counts {
            for i in 0..count {
                let k = StreamKey {
                    purpose: split.purpose(),
                    index: key.index + i as u64,
                    ..key
                };
                frames.push(generate_frame(link, noise, split, k)?);
            }
        }
        Ok(Self { frames })
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &LabeledFrame> {
        self.frames.iter().filter(move |f| f.split == split)
    }
}

/// Simulates one frame from the random stream identified by `key`.
pub fn generate_frame(
    link: &Link,
    noise: NoiseLevel,
    split: Split,
    key: StreamKey,
) -> Result<LabeledFrame> {
    let mut rng = key.rng();
    let (frame, rx) = link.simulate(noise, &mut rng)?;
    Ok(LabeledFrame { split, frame, rx })
}

#[derive(Serialize, Deserialize)]
struct DatasetHeader {
    noise_level_db: f64,
    link: LinkParams,
}

const DATASET_MAGIC: &str = "# imdd-snn dataset v1";

/// Writes one frame as CSV rows `bit1,bit2,y,y_rx` behind a commented TOML header.
pub fn write_dataset(path: &Path, frame: &SymbolFrame, rx: &RxSamples) -> Result<()> {
    if frame.len() != rx.len() {
        return Err(Error::LengthMismatch {
            expected: frame.len(),
            got: rx.len(),
        });
    }
    let header = DatasetHeader {
        noise_level_db: rx.noise_level_db,
        link: rx.origin.clone(),
    };
    let toml = toml::to_string(&header).map_err(|e| Error::parse("dataset header", e))?;
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "{DATASET_MAGIC}")?;
        for line in toml.lines() {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "bit1,bit2,y,y_rx")?;
        for n in 0..frame.len() {
            writeln!(
                out,
                "{},{},{},{:?}",
                frame.bits[2 * n],
                frame.bits[2 * n + 1],
                frame.symbols[n],
                rx.samples[n]
            )?;
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: &Path) -> Result<(SymbolFrame, RxSamples)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut header = String::new();
    let mut line = String::new();
    let ctx = path.display().to_string();
    reader.read_line(&mut line).map_err(|e| Error::io(path, e))?;
    if line.trim_end() != DATASET_MAGIC {
        return Err(Error::parse(ctx, "missing dataset magic line"));
    }
    loop {
        line.clear();
        let n = reader.read_line(&mut line).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            return Err(Error::parse(ctx, "missing column header"));
        }
        match line.strip_prefix('#') {
            Some(rest) => {
                header.push_str(rest.strip_prefix(' ').unwrap_or(rest));
            }
            None => break,
        }
    }
    let header: DatasetHeader = toml::from_str(&header).map_err(|e| Error::parse(&ctx, e))?;
    if line.trim_end() != "bit1,bit2,y,y_rx" {
        return Err(Error::parse(ctx, format!("unexpected columns `{}`", line.trim_end())));
    }
    let mut rows = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(reader);
    let mut bits = Vec::new();
    let mut samples = Vec::new();
    for record in rows.deserialize::<(u8, u8, f64, f64)>() {
        let (b1, b2, _y, rx) = record?;
        bits.push(b1);
        bits.push(b2);
        samples.push(rx);
    }
    let indices: Vec<u8> = bits
        .chunks_exact(2)
        .map(|b| gray_index([b[0], b[1]]) as u8)
        .collect();
    let frame = SymbolFrame::from_indices(&indices, &header.link.alphabet)?;
    Ok((
        frame,
        RxSamples {
            samples,
            noise_level_db: header.noise_level_db,
            origin: header.link,
        },
    ))
}
