use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EvalConfig;
use crate::link::LinkParams;
use crate::neural::{AdamConfig, Precision};
use crate::snn::SnnParams;
use crate::{Error, Result};

/// Demappers a run can compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DemapperKind {
    /// Linear equalizer with the given number of taps.
    Le(usize),
    /// Volterra equalizer with taps and order from [`ClassicalConfig`].
    Vnle,
    Ann,
    Snn,
}

impl DemapperKind {
    pub fn is_trainable(self) -> bool {
        matches!(self, DemapperKind::Ann | DemapperKind::Snn)
    }
}

impl fmt::Display for DemapperKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DemapperKind::Le(n) => write!(f, "le{n}"),
            DemapperKind::Vnle => f.write_str("vnle"),
            DemapperKind::Ann => f.write_str("ann"),
            DemapperKind::Snn => f.write_str("snn"),
        }
    }
}

impl FromStr for DemapperKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vnle" => Ok(DemapperKind::Vnle),
            "ann" => Ok(DemapperKind::Ann),
            "snn" => Ok(DemapperKind::Snn),
            _ => s
                .strip_prefix("le")
                .and_then(|n| n.parse().ok())
                .filter(|n: &usize| n % 2 == 1)
                .map(DemapperKind::Le)
                .ok_or_else(|| {
                    Error::InvalidConfig(format!(
                        "unknown demapper `{s}` (expected le<odd taps>, vnle, ann or snn)"
                    ))
                }),
        }
    }
}

impl TryFrom<String> for DemapperKind {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DemapperKind> for String {
    fn from(k: DemapperKind) -> String {
        k.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSchedule {
    /// Strictly increasing; training visits them in this order.
    pub noise_levels_db: Vec<f64>,
    pub seeds: Vec<u64>,
    pub epochs_per_level: usize,
    /// Fresh validation symbols drawn after every epoch.
    pub validation_size: usize,
    /// Stop a level after this many epochs without a better checkpoint.
    pub patience: usize,
    /// Validation symbols used to compare the seeds' best checkpoints.
    pub selection_size: usize,
}

impl Default for SweepSchedule {
    fn default() -> Self {
        Self {
            noise_levels_db: (0..9).map(|i| -10.0 + i as f64).collect(),
            seeds: vec![0, 1, 2, 3, 4],
            epochs_per_level: 100,
            validation_size: 2000,
            patience: 100,
            selection_size: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassicalConfig {
    pub vnle_taps: usize,
    pub vnle_order: usize,
    /// Training frames per noise level for the least-squares fits.
    pub train_frames: usize,
}

impl Default for ClassicalConfig {
    fn default() -> Self {
        Self {
            vnle_taps: 7,
            vnle_order: 5,
            train_frames: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnConfig {
    pub batch_size: usize,
    pub precision: Precision,
    pub adam: AdamConfig,
}

impl Default for AnnConfig {
    fn default() -> Self {
        Self {
            batch_size: 256,
            precision: Precision::Double,
            adam: AdamConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SnnConfig {
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub params: SnnParams,
}

impl Default for SnnConfig {
    fn default() -> Self {
        Self {
            batch_size: 256,
            adam: AdamConfig::default(),
            params: SnnParams::default(),
        }
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub root_seed: u64,
    pub demappers: Vec<DemapperKind>,
    pub output_dir: PathBuf,
    /// Progress messages on stderr.
    pub verbose: bool,
    pub link: LinkParams,
    pub schedule: SweepSchedule,
    pub classical: ClassicalConfig,
    pub ann: AnnConfig,
    pub snn: SnnConfig,
    pub evaluation: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            root_seed: 2024,
            demappers: vec![
                DemapperKind::Le(7),
                DemapperKind::Vnle,
                DemapperKind::Ann,
                DemapperKind::Snn,
            ],
            output_dir: PathBuf::from("results"),
            verbose: false,
            link: LinkParams::default(),
            schedule: SweepSchedule::default(),
            classical: ClassicalConfig::default(),
            ann: AnnConfig::default(),
            snn: SnnConfig::default(),
            evaluation: EvalConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::parse("config", e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::parse("config", e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        self.link.validate()?;
        self.snn.params.validate()?;
        let s = &self.schedule;
        if s.noise_levels_db.is_empty() {
            return bad("schedule.noise_levels_db is empty".into());
        }
        if s.noise_levels_db.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("schedule.noise_levels_db must be strictly increasing".into());
        }
        if s.seeds.is_empty() {
            return bad("schedule.seeds is empty".into());
        }
        if s.epochs_per_level == 0 || s.validation_size == 0 || s.selection_size == 0 {
            return bad("epochs_per_level, validation_size and selection_size must be positive".into());
        }
        if self.ann.batch_size == 0 || self.snn.batch_size == 0 {
            return bad("batch sizes must be positive".into());
        }
        if self.classical.train_frames == 0 {
            return bad("classical.train_frames must be positive".into());
        }
        if self.snn.params.n_tap > self.link.seq_len || self.classical.vnle_taps.is_multiple_of(2) {
            return bad("tap counts must be odd and fit in a frame".into());
        }
        if self.demappers.is_empty() {
            return bad("no demappers selected".into());
        }
        if self.evaluation.min_errors == 0 || self.evaluation.bit_cap == 0 {
            return bad("evaluation.min_errors and bit_cap must be positive".into());
        }
        Ok(())
    }
}
