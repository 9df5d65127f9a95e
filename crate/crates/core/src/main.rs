use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use imdd_snn::classical::{save_classical, ClassicalDemapper};
use imdd_snn::experiment::{
    emit_report, evaluate_ber_until, gain_summary, load_demapper, read_records, run_sweep,
    test_key, train_seeds, write_history, write_records, DemapperKind, RunConfig, CONFIG_FILE,
    PLOT_FILE, RESULTS_FILE, SUMMARY_FILE,
};
use imdd_snn::link::{extract_chunks, read_dataset, write_dataset, Link, NoiseLevel};
use imdd_snn::rng::{StreamKey, StreamPurpose};

#[derive(Parser)]
#[command(name = "imdd-snn", version, about = "PAM4 IM/DD link simulation and demapper benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration; keys it omits keep their defaults.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Root seed of every random stream.
    #[arg(long)]
    seed: Option<u64>,
    /// Progress on stderr.
    #[arg(long, short)]
    verbose: bool,
}

#[derive(Args, Clone)]
struct Schedule {
    /// Comma-separated noise levels in dB, ascending.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, value_name = "DB,...")]
    noise_db: Option<Vec<f64>>,
    /// Comma-separated training seeds.
    #[arg(long, value_delimiter = ',', value_name = "SEED,...")]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Minimum bit errors per BER point.
    #[arg(long)]
    min_errors: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one frame and write it as a labeled dataset.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        noise_db: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a classical demapper (le<taps> or vnle) on a dataset.
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        demapper: DemapperKind,
        #[arg(long, value_name = "DATASET")]
        train: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train ANN or SNN seeds through the noise schedule and keep the champions.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        schedule: Schedule,
        #[arg(long)]
        demapper: DemapperKind,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Measure the BER of a saved model at one noise level.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        noise_db: f64,
        #[arg(long)]
        min_errors: Option<u64>,
        /// Output CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Full benchmark: train or fit every demapper, then test each level.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        schedule: Schedule,
        /// Comma-separated demappers, e.g. le7,vnle,ann,snn.
        #[arg(long, value_delimiter = ',')]
        demappers: Option<Vec<DemapperKind>>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Re-render plot and gain summary from a results CSV.
    Report {
        #[arg(long, value_name = "CSV")]
        results: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
}

fn resolve(common: &Common) -> anyhow::Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.root_seed = seed;
    }
    cfg.verbose |= common.verbose;
    Ok(cfg)
}

fn apply_schedule(cfg: &mut RunConfig, s: &Schedule) {
    if let Some(v) = &s.noise_db {
        cfg.schedule.noise_levels_db = v.clone();
    }
    if let Some(v) = &s.seeds {
        cfg.schedule.seeds = v.clone();
    }
    if let Some(n) = s.epochs {
        cfg.schedule.epochs_per_level = n;
    }
    if let Some(n) = s.min_errors {
        cfg.evaluation.min_errors = n;
    }
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn save_config(cfg: &RunConfig, dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    cfg.validate()?;
    cfg.save(&dir.join(CONFIG_FILE))?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate {
            common,
            noise_db,
            out,
        } => {
            let cfg = resolve(&common)?;
            save_config(&cfg, &parent_dir(&out))?;
            let link = Link::new(cfg.link.clone())?;
            let key = StreamKey::new(cfg.root_seed, StreamPurpose::Train);
            let (frame, rx) = link.simulate(NoiseLevel(noise_db), &mut key.rng())?;
            write_dataset(&out, &frame, &rx)?;
        }
        Command::Fit {
            common,
            demapper,
            train,
            out,
        } => {
            let cfg = resolve(&common)?;
            let (n_tap, order) = match demapper {
                DemapperKind::Le(n) => (n, 1),
                DemapperKind::Vnle => (cfg.classical.vnle_taps, cfg.classical.vnle_order),
                other => bail!("`{other}` is trained with the `train` subcommand"),
            };
            save_config(&cfg, &parent_dir(&out))?;
            let (frame, rx) = read_dataset(&train)?;
            let chunks = extract_chunks(&rx.samples, n_tap)?;
            let r = chunks.symbol_range();
            let model =
                ClassicalDemapper::fit(&chunks, &frame.symbols[r.clone()], &frame.indices[r], order)?;
            save_classical(&model, &out)?;
        }
        Command::Train {
            common,
            schedule,
            demapper,
            out,
        } => {
            let mut cfg = resolve(&common)?;
            apply_schedule(&mut cfg, &schedule);
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            if !demapper.is_trainable() {
                bail!("`{demapper}` is fitted with the `fit` subcommand");
            }
            let dir = cfg.output_dir.clone();
            save_config(&cfg, &dir)?;
            let (runs, champions) = train_seeds(&cfg, demapper)?;
            write_history(&dir.join("history.csv"), &runs)?;
            for (c, db) in champions.iter().zip(&cfg.schedule.noise_levels_db) {
                let path = dir.join(format!("{demapper}_{db:+.1}dB_seed{}.ckpt", c.seed));
                c.model.to_checkpoint().save(&path)?;
                println!(
                    "{db:+.1} dB: seed {} selection BER {:.3e} -> {}",
                    c.seed,
                    c.selection.ber,
                    path.display()
                );
            }
        }
        Command::Evaluate {
            common,
            model,
            noise_db,
            min_errors,
            out,
        } => {
            let mut cfg = resolve(&common)?;
            if let Some(n) = min_errors {
                cfg.evaluation.min_errors = n;
            }
            save_config(&cfg, &parent_dir(&out))?;
            let demapper = load_demapper(&model, &cfg)?;
            let name = model
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "model".into());
            let link = Link::new(cfg.link.clone())?;
            let key = StreamKey {
                index: 0,
                ..test_key(&cfg, 0)
            };
            let rec = evaluate_ber_until(
                demapper.as_ref(),
                &name,
                &link,
                NoiseLevel(noise_db),
                &cfg.evaluation,
                key,
            )?;
            println!(
                "{name} at {noise_db:+.1} dB: BER {:.4e} [{:.4e}, {:.4e}] ({} errors in {} bits{})",
                rec.ber,
                rec.ci_low,
                rec.ci_high,
                rec.errors,
                rec.bits,
                if rec.censored { ", censored" } else { "" }
            );
            write_records(&out, &[rec])?;
        }
        Command::Sweep {
            common,
            schedule,
            demappers,
            out,
        } => {
            let mut cfg = resolve(&common)?;
            apply_schedule(&mut cfg, &schedule);
            if let Some(d) = demappers {
                cfg.demappers = d;
            }
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            let outcome = run_sweep(&cfg)?;
            print!("{}", gain_summary(&outcome.records));
            println!("results in {}", outcome.output_dir.display());
        }
        Command::Report { results, out } => {
            let records = read_records(&results)?;
            let dir = out;
            std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            let resolved = parent_dir(&results).join(CONFIG_FILE);
            if resolved.exists() && parent_dir(&results) != dir {
                std::fs::copy(&resolved, dir.join(CONFIG_FILE))?;
            }
            emit_report(&records, &dir.join(RESULTS_FILE), &dir.join(PLOT_FILE))?;
            let summary = gain_summary(&records);
            std::fs::write(dir.join(SUMMARY_FILE), &summary)?;
            print!("{summary}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
