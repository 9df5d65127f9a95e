//! Training and testing protocol: progressive noise-level training over
//! several seeds, champion selection on validation data, BER estimation with
//! credibility intervals, and CSV/SVG reports.

mod ber;
mod config;
mod report;
mod sweep;

pub use ber::{
    credibility_interval, crossing_db, evaluate_ber_until, interpolate_gain_db, BerRecord,
    EvalConfig,
};
pub use config::{AnnConfig, ClassicalConfig, DemapperKind, RunConfig, SnnConfig, SweepSchedule};
pub use report::{curves, emit_report, read_records, render_svg, write_records};
pub use sweep::{
    draw_chunks, fit_classical, noise_sweep_train, select_best_seed, select_champion,
    sweep_demapper, test_key, train_level, train_seeds, write_history, Champion, DemapperResult, EpochStats, LevelOutcome,
    SeedRun, TrainedModel, Validation,
};

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::classical::{load_classical, save_classical};
use crate::neural::Checkpoint;
use crate::{Demapper, Error, Result};

/// Pre-FEC BER at which gains are compared.
pub const TARGET_BER: f64 = 2e-3;

/// File names written into the output directory.
pub const CONFIG_FILE: &str = "run_config.toml";
pub const RESULTS_FILE: &str = "results.csv";
pub const PLOT_FILE: &str = "ber_vs_noise.svg";
pub const SUMMARY_FILE: &str = "summary.txt";

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub results: Vec<DemapperResult>,
    pub records: Vec<BerRecord>,
    pub output_dir: PathBuf,
}

impl SweepOutcome {
    /// `(noise_db, ber)` points of one demapper.
    pub fn curve(&self, name: &str) -> Vec<(f64, f64)> {
        curve_of(&self.records, name)
    }

    pub fn gain_db(&self, a: &str, b: &str) -> Result<f64> {
        interpolate_gain_db(&self.curve(a), &self.curve(b), TARGET_BER)
    }
}

pub fn curve_of(records: &[BerRecord], name: &str) -> Vec<(f64, f64)> {
    let mut c: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.demapper == name)
        .map(|r| (r.noise_db, r.ber))
        .collect();
    c.sort_by(|a, b| a.0.total_cmp(&b.0));
    c
}

/// Pairwise gains at [`TARGET_BER`], one line per pair.
pub fn gain_summary(records: &[BerRecord]) -> String {
    let names: Vec<String> = curves(records).keys().cloned().collect();
    let mut s = String::new();
    for a in &names {
        let _ = match crossing_db(&curve_of(records, a), TARGET_BER) {
            Ok(x) => writeln!(s, "{a}: BER {TARGET_BER:e} at {x:.3} dB"),
            Err(e) => writeln!(s, "{a}: {e}"),
        };
    }
    for a in &names {
        for b in &names {
            if a != b {
                if let Ok(g) = interpolate_gain_db(
                    &curve_of(records, a),
                    &curve_of(records, b),
                    TARGET_BER,
                ) {
                    let _ = writeln!(s, "gain {a} over {b}: {g:+.3} dB");
                }
            }
        }
    }
    s
}

/// Runs every configured demapper over the schedule and writes the resolved
/// config, checkpoints, CSV table, plot and gain summary to `output_dir`.
pub fn run_sweep(cfg: &RunConfig) -> Result<SweepOutcome> {
    cfg.validate()?;
    let dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    cfg.save(&dir.join(CONFIG_FILE))?;
    let ck_dir = dir.join("checkpoints");
    std::fs::create_dir_all(&ck_dir).map_err(|e| Error::io(&ck_dir, e))?;

    let mut results = Vec::new();
    let mut records = Vec::new();
    for &kind in &cfg.demappers {
        let r = sweep_demapper(cfg, kind)?;
        save_checkpoints(&ck_dir, cfg, &r)?;
        records.extend(r.records.iter().cloned());
        results.push(r);
    }
    emit_report(&records, &dir.join(RESULTS_FILE), &dir.join(PLOT_FILE))?;
    let summary = gain_summary(&records);
    let path = dir.join(SUMMARY_FILE);
    std::fs::write(&path, &summary).map_err(|e| Error::io(&path, e))?;
    Ok(SweepOutcome {
        results,
        records,
        output_dir: dir,
    })
}

fn save_checkpoints(dir: &Path, cfg: &RunConfig, r: &DemapperResult) -> Result<()> {
    for (l, &db) in cfg.schedule.noise_levels_db.iter().enumerate() {
        let stem = format!("{}_{:+.1}dB", r.kind, db);
        if let Some(c) = r.champions.get(l) {
            c.model
                .to_checkpoint()
                .save(&dir.join(format!("{stem}_seed{}.ckpt", c.seed)))?;
        }
        if let Some(m) = r.classical.get(l) {
            save_classical(m, &dir.join(format!("{stem}.txt")))?;
        }
    }
    Ok(())
}

/// Loads a saved classical model or network checkpoint, whichever the file
/// holds.
pub fn load_demapper(path: &Path, cfg: &RunConfig) -> Result<Box<dyn Demapper>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.starts_with("imdd-snn classical") {
        Ok(Box::new(load_classical(path)?))
    } else {
        let ck = Checkpoint::from_text(&text)?;
        Ok(Box::new(TrainedModel::from_checkpoint(&ck, cfg)?))
    }
}
