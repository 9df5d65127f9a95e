use std::path::Path;

use rand::Rng;
use rayon::prelude::*;

use super::{evaluate_ber_until, BerRecord, DemapperKind, RunConfig};
use crate::classical::ClassicalDemapper;
use crate::demapper::count_bit_errors;
use crate::link::{extract_chunks, ChunkSet, Link, NoiseLevel};
use crate::neural::{
    ann_train_epoch, argmax, cross_entropy, AdamState, AnnModel, Checkpoint,
};
use crate::rng::{StreamKey, StreamPurpose};
use crate::snn::{snn_scores, snn_train_epoch, SnnModel};
use crate::{Demapper, Error, Result};

/// Stream index offset of the seed-selection validation data, far away from
/// the per-epoch validation frames.
const SELECTION_INDEX: u64 = 1 << 40;

/// A demapper with trainable weights.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Ann(AnnModel),
    Snn(SnnModel),
}

impl TrainedModel {
    /// Fresh model with weights drawn from `rng`.
    pub fn init<R: Rng + ?Sized>(kind: DemapperKind, cfg: &RunConfig, rng: &mut R) -> Result<Self> {
        match kind {
            DemapperKind::Ann => Ok(TrainedModel::Ann(
                AnnModel::init(rng).with_precision(cfg.ann.precision),
            )),
            DemapperKind::Snn => Ok(TrainedModel::Snn(SnnModel::init(cfg.snn.params.clone(), rng)?)),
            other => Err(Error::InvalidConfig(format!("`{other}` is not trainable"))),
        }
    }

    pub fn kind(&self) -> DemapperKind {
        match self {
            TrainedModel::Ann(_) => DemapperKind::Ann,
            TrainedModel::Snn(_) => DemapperKind::Snn,
        }
    }

    fn adam(&self, cfg: &RunConfig) -> AdamState {
        match self {
            TrainedModel::Ann(m) => m.adam(cfg.ann.adam),
            TrainedModel::Snn(m) => m.adam(cfg.snn.adam),
        }
    }

    /// Class scores (logits for the ANN, max-over-time voltages for the SNN).
    pub fn scores(&self, chunk: &[f64]) -> Result<Vec<f64>> {
        match self {
            TrainedModel::Ann(m) => Ok(m.logits(chunk)?.to_vec()),
            TrainedModel::Snn(m) => snn_scores(m, &m.encode(chunk)?),
        }
    }

    pub fn train_epoch<R: Rng + ?Sized>(
        &mut self,
        chunks: &ChunkSet,
        targets: &[u8],
        adam: &mut AdamState,
        cfg: &RunConfig,
        rng: &mut R,
    ) -> Result<f64> {
        match self {
            TrainedModel::Ann(m) => {
                ann_train_epoch(m, chunks, targets, adam, cfg.ann.batch_size, rng)
            }
            TrainedModel::Snn(m) => {
                let rasters = m.encode_all(chunks)?;
                let t: Vec<usize> = targets.iter().map(|&t| t as usize).collect();
                snn_train_epoch(m, &rasters, &t, adam, cfg.snn.batch_size, rng)
            }
        }
    }

    /// Bit errors, bits and mean cross-entropy on a labeled set.
    pub fn validate(&self, chunks: &ChunkSet, targets: &[u8]) -> Result<Validation> {
        let mut decided = Vec::with_capacity(chunks.len());
        let mut loss = 0.0;
        for (c, &t) in chunks.iter().zip(targets) {
            let s = self.scores(c)?;
            loss += cross_entropy(&s, t as usize);
            decided.push(argmax(&s));
        }
        let errors = count_bit_errors(&decided, targets);
        let bits = 2 * targets.len() as u64;
        Ok(Validation {
            errors,
            bits,
            ber: errors as f64 / bits as f64,
            loss: loss / targets.len() as f64,
        })
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        match self {
            TrainedModel::Ann(m) => m.to_checkpoint(),
            TrainedModel::Snn(m) => m.to_checkpoint(),
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint, cfg: &RunConfig) -> Result<Self> {
        match ck.kind.as_str() {
            "ann" => Ok(TrainedModel::Ann(
                AnnModel::from_checkpoint(ck)?.with_precision(cfg.ann.precision),
            )),
            "snn" => Ok(TrainedModel::Snn(SnnModel::from_checkpoint(
                ck,
                cfg.snn.params.clone(),
            )?)),
            other => Err(Error::parse("checkpoint", format!("unknown kind `{other}`"))),
        }
    }
}

impl Demapper for TrainedModel {
    fn n_tap(&self) -> usize {
        match self {
            TrainedModel::Ann(m) => m.n_tap(),
            TrainedModel::Snn(m) => m.n_tap(),
        }
    }

    fn decide(&self, chunk: &[f64]) -> usize {
        match self {
            TrainedModel::Ann(m) => m.decide(chunk),
            TrainedModel::Snn(m) => m.decide(chunk),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Validation {
    pub errors: u64,
    pub bits: u64,
    pub ber: f64,
    pub loss: f64,
}

impl Validation {
    /// Ordering used to pick checkpoints: BER first, loss breaks ties.
    fn better_than(&self, other: &Validation) -> bool {
        (self.ber, self.loss) < (other.ber, other.loss)
    }
}

/// Draws labeled chunks from consecutive frames of the stream `key` until
/// `count` chunks are collected.
pub fn draw_chunks(
    link: &Link,
    noise: NoiseLevel,
    key: StreamKey,
    n_tap: usize,
    count: usize,
) -> Result<(ChunkSet, Vec<u8>)> {
    let mut sets = Vec::new();
    let mut targets = Vec::with_capacity(count);
    let mut i = 0;
    while targets.len() < count {
        let (frame, rx) = link.simulate(noise, &mut key.index(key.index + i).rng())?;
        let chunks = extract_chunks(&rx.samples, n_tap)?;
        let take = (count - targets.len()).min(chunks.len());
        let positions: Vec<usize> = (0..take).collect();
        targets.extend_from_slice(&frame.indices[chunks.symbol_range()][..take]);
        sets.push(chunks.select(&positions));
        i += 1;
    }
    Ok((ChunkSet::concat(&sets)?, targets))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub train_loss: f64,
    pub validation: Validation,
}

/// Best checkpoint of one seed at one noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelOutcome {
    pub noise_db: f64,
    pub model: TrainedModel,
    pub best_epoch: usize,
    pub validation: Validation,
    pub history: Vec<EpochStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub seed: u64,
    /// One entry per completed level, in schedule order.
    pub levels: Vec<LevelOutcome>,
    /// Set when training produced a non-finite loss.
    pub diverged: Option<String>,
}

fn key(cfg: &RunConfig, purpose: StreamPurpose, seed: u64, level: usize) -> StreamKey {
    StreamKey::new(cfg.root_seed, purpose)
        .seed(seed)
        .level(level as u64)
}

/// Trains one seed through the noise schedule, warm-starting every level
/// from the previous level's best checkpoint.
pub fn noise_sweep_train(cfg: &RunConfig, kind: DemapperKind, seed: u64) -> Result<SeedRun> {
    let link = Link::new(cfg.link.clone())?;
    let mut model = TrainedModel::init(kind, cfg, &mut key(cfg, StreamPurpose::Init, seed, 0).rng())?;
    let mut run = SeedRun {
        seed,
        levels: Vec::new(),
        diverged: None,
    };
    for (l, &db) in cfg.schedule.noise_levels_db.iter().enumerate() {
        match train_level(cfg, &link, model.clone(), seed, l, NoiseLevel(db)) {
            Ok(outcome) => {
                if cfg.verbose {
                    eprintln!(
                        "[{kind} seed {seed}] {db:+.1} dB: best epoch {} val BER {:.3e} loss {:.4}",
                        outcome.best_epoch, outcome.validation.ber, outcome.validation.loss
                    );
                }
                model = outcome.model.clone();
                run.levels.push(outcome);
            }
            Err(Error::NonFinite(msg)) => {
                if cfg.verbose {
                    eprintln!("[{kind} seed {seed}] diverged at {db:+.1} dB: {msg}");
                }
                run.diverged = Some(format!("{db} dB: {msg}"));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(run)
}

/// Plain train/validate/select at one noise level starting from `model`.
pub fn train_level(
    cfg: &RunConfig,
    link: &Link,
    mut model: TrainedModel,
    seed: u64,
    level: usize,
    noise: NoiseLevel,
) -> Result<LevelOutcome> {
    let s = &cfg.schedule;
    let n_tap = model.n_tap();
    let mut adam = model.adam(cfg);
    let mut shuffle = key(cfg, StreamPurpose::Shuffle, seed, level).rng();
    let mut best: Option<(usize, Validation, TrainedModel)> = None;
    let mut history = Vec::new();
    let frame_len = link.params().seq_len - n_tap + 1;
    for epoch in 0..s.epochs_per_level {
        let train_key = key(cfg, StreamPurpose::Train, seed, level).index(epoch as u64);
        let (chunks, targets) = draw_chunks(link, noise, train_key, n_tap, frame_len)?;
        let train_loss = model.train_epoch(&chunks, &targets, &mut adam, cfg, &mut shuffle)?;
        let val_key = key(cfg, StreamPurpose::Validation, seed, level).index(epoch as u64);
        let (vc, vt) = draw_chunks(link, noise, val_key, n_tap, s.validation_size)?;
        let validation = model.validate(&vc, &vt)?;
        if !validation.loss.is_finite() {
            return Err(Error::NonFinite("validation loss".into()));
        }
        history.push(EpochStats {
            train_loss,
            validation,
        });
        if best.as_ref().is_none_or(|(_, v, _)| validation.better_than(v)) {
            best = Some((epoch, validation, model.clone()));
        }
        let best_epoch = best.as_ref().map_or(0, |b| b.0);
        if epoch - best_epoch >= s.patience {
            break;
        }
    }
    let (best_epoch, validation, model) = best.expect("at least one epoch");
    Ok(LevelOutcome {
        noise_db: noise.db(),
        model,
        best_epoch,
        validation,
        history,
    })
}

/// Index of the lowest score; ties go to the lower index. `None` marks a
/// diverged seed.
pub fn select_best_seed(scores: &[Option<f64>]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.iter().enumerate() {
        if let Some(s) = *s {
            if best.is_none_or(|(_, b)| s < b) {
                best = Some((i, s));
            }
        }
    }
    best.map(|(i, _)| i).ok_or(Error::AllSeedsDiverged)
}

/// Fits a classical demapper on the training frames of one level.
pub fn fit_classical(
    cfg: &RunConfig,
    link: &Link,
    kind: DemapperKind,
    level: usize,
    noise: NoiseLevel,
) -> Result<ClassicalDemapper> {
    let (n_tap, order) = match kind {
        DemapperKind::Le(n) => (n, 1),
        DemapperKind::Vnle => (cfg.classical.vnle_taps, cfg.classical.vnle_order),
        other => return Err(Error::InvalidConfig(format!("`{other}` is not classical"))),
    };
    let mut sets = Vec::new();
    let (mut symbols, mut indices) = (Vec::new(), Vec::new());
    for i in 0..cfg.classical.train_frames {
        let k = key(cfg, StreamPurpose::Train, 0, level).index(i as u64);
        let (frame, rx) = link.simulate(noise, &mut k.rng())?;
        let chunks = extract_chunks(&rx.samples, n_tap)?;
        symbols.extend_from_slice(&frame.symbols[chunks.symbol_range()]);
        indices.extend_from_slice(&frame.indices[chunks.symbol_range()]);
        sets.push(chunks);
    }
    ClassicalDemapper::fit(&ChunkSet::concat(&sets)?, &symbols, &indices, order)
}

/// Champion of one level after training all seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct Champion {
    pub seed: u64,
    pub model: TrainedModel,
    pub selection: Validation,
}

/// Compares every seed's best checkpoint at `level` on a shared validation
/// set and returns the winner.
pub fn select_champion(
    cfg: &RunConfig,
    link: &Link,
    runs: &[SeedRun],
    level: usize,
) -> Result<Champion> {
    let noise = NoiseLevel(cfg.schedule.noise_levels_db[level]);
    let mut sel: Option<(ChunkSet, Vec<u8>)> = None;
    let mut scores = Vec::with_capacity(runs.len());
    let mut validations = Vec::with_capacity(runs.len());
    for run in runs {
        match run.levels.get(level) {
            Some(outcome) => {
                if sel.is_none() {
                    let k = key(cfg, StreamPurpose::Validation, 0, level).index(SELECTION_INDEX);
                    let n_tap = outcome.model.n_tap();
                    sel = Some(draw_chunks(link, noise, k, n_tap, cfg.schedule.selection_size)?);
                }
                let (c, t) = sel.as_ref().expect("selection set drawn");
                let v = outcome.model.validate(c, t)?;
                scores.push(Some(v.ber));
                validations.push(Some(v));
            }
            None => {
                scores.push(None);
                validations.push(None);
            }
        }
    }
    let i = select_best_seed(&scores)?;
    Ok(Champion {
        seed: runs[i].seed,
        model: runs[i].levels[level].model.clone(),
        selection: validations[i].expect("selected seed completed the level"),
    })
}

/// Trains every configured seed through the schedule and picks one champion
/// per noise level.
pub fn train_seeds(cfg: &RunConfig, kind: DemapperKind) -> Result<(Vec<SeedRun>, Vec<Champion>)> {
    let link = Link::new(cfg.link.clone())?;
    let runs = cfg
        .schedule
        .seeds
        .par_iter()
        .map(|&seed| noise_sweep_train(cfg, kind, seed))
        .collect::<Result<Vec<_>>>()?;
    let champions = (0..cfg.schedule.noise_levels_db.len())
        .map(|l| select_champion(cfg, &link, &runs, l))
        .collect::<Result<Vec<_>>>()?;
    Ok((runs, champions))
}

/// Writes per-epoch training curves of all seeds as CSV.
pub fn write_history(path: &Path, runs: &[SeedRun]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["seed", "noise_db", "epoch", "train_loss", "val_ber", "val_loss", "best"])?;
    for run in runs {
        for level in &run.levels {
            for (epoch, e) in level.history.iter().enumerate() {
                w.write_record([
                    run.seed.to_string(),
                    level.noise_db.to_string(),
                    epoch.to_string(),
                    e.train_loss.to_string(),
                    e.validation.ber.to_string(),
                    e.validation.loss.to_string(),
                    (epoch == level.best_epoch).to_string(),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Per-demapper results of a sweep.
#[derive(Debug, Clone)]
pub struct DemapperResult {
    pub kind: DemapperKind,
    pub records: Vec<BerRecord>,
    /// Champions per level for trainable demappers.
    pub champions: Vec<Champion>,
    pub classical: Vec<ClassicalDemapper>,
    pub runs: Vec<SeedRun>,
}

/// Test-data key shared by all demappers at a level, so that every curve is
/// measured on the same frames.
pub fn test_key(cfg: &RunConfig, level: usize) -> StreamKey {
    key(cfg, StreamPurpose::Test, 0, level)
}

/// Runs training or fitting plus BER evaluation for one demapper over the
/// whole noise schedule.
pub fn sweep_demapper(cfg: &RunConfig, kind: DemapperKind) -> Result<DemapperResult> {
    let link = Link::new(cfg.link.clone())?;
    let levels = &cfg.schedule.noise_levels_db;
    let mut out = DemapperResult {
        kind,
        records: Vec::new(),
        champions: Vec::new(),
        classical: Vec::new(),
        runs: Vec::new(),
    };
    let name = kind.to_string();
    if kind.is_trainable() {
        let (runs, champions) = train_seeds(cfg, kind)?;
        out.runs = runs;
        for (l, (&db, champion)) in levels.iter().zip(champions).enumerate() {
            let mut rec = evaluate_ber_until(
                &champion.model,
                &name,
                &link,
                NoiseLevel(db),
                &cfg.evaluation,
                test_key(cfg, l),
            )?;
            rec.seed = champion.seed;
            if cfg.verbose {
                eprintln!("[{name}] {db:+.1} dB: BER {:.3e} (seed {})", rec.ber, rec.seed);
            }
            out.records.push(rec);
            out.champions.push(champion);
        }
    } else {
        for (l, &db) in levels.iter().enumerate() {
            let model = fit_classical(cfg, &link, kind, l, NoiseLevel(db))?;
            let rec = evaluate_ber_until(
                &model,
                &name,
                &link,
                NoiseLevel(db),
                &cfg.evaluation,
                test_key(cfg, l),
            )?;
            if cfg.verbose {
                eprintln!("[{name}] {db:+.1} dB: BER {:.3e}", rec.ber);
            }
            out.records.push(rec);
            out.classical.push(model);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_selection_rules() {
        assert_eq!(select_best_seed(&[Some(0.3)]).unwrap(), 0);
        assert_eq!(select_best_seed(&[Some(0.2), Some(0.2), Some(0.2)]).unwrap(), 0);
        assert_eq!(select_best_seed(&[None, Some(0.5), Some(0.1), Some(0.1)]).unwrap(), 2);
        assert!(matches!(
            select_best_seed(&[None, None]),
            Err(Error::AllSeedsDiverged)
        ));
    }

    #[test]
    fn draw_chunks_spans_frames() {
        let link = Link::new(crate::link::LinkParams {
            seq_len: 50,
            ..Default::default()
        })
        .unwrap();
        let k = StreamKey::new(1, StreamPurpose::Validation);
        let (c, t) = draw_chunks(&link, NoiseLevel(-10.0), k, 7, 120).unwrap();
        assert_eq!((c.len(), t.len()), (120, 120));
        let (c2, _) = draw_chunks(&link, NoiseLevel(-10.0), k, 7, 120).unwrap();
        assert_eq!(c, c2);
    }
}
