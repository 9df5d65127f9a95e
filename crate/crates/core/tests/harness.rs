use std::path::Path;
use std::process::Command;

use imdd_snn::classical::ClassicalDemapper;
use imdd_snn::experiment::{
    credibility_interval, evaluate_ber_until, read_records, render_svg, run_sweep,
    select_champion, test_key, train_level, write_records, BerRecord, DemapperKind, EvalConfig,
    RunConfig, TrainedModel, CONFIG_FILE, PLOT_FILE, RESULTS_FILE,
};
use imdd_snn::link::{extract_chunks, Link, LinkParams, NoiseLevel, GRAY_LABELS};
use imdd_snn::rng::{StreamKey, StreamPurpose};
use imdd_snn::Demapper;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erfc;

const BIN: &str = env!("CARGO_BIN_EXE_imdd-snn");

fn tiny_config(dir: &Path) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.output_dir = dir.to_path_buf();
    cfg.link.seq_len = 600;
    cfg.classical.train_frames = 2;
    cfg.demappers = vec![DemapperKind::Le(3), DemapperKind::Vnle, DemapperKind::Ann, DemapperKind::Snn];
    cfg.schedule.noise_levels_db = vec![-6.0, -4.0];
    cfg.schedule.seeds = vec![0, 1];
    cfg.schedule.epochs_per_level = 2;
    cfg.schedule.validation_size = 200;
    cfg.schedule.selection_size = 400;
    cfg.evaluation = EvalConfig {
        min_errors: 30,
        bit_cap: 20_000,
        frames_per_round: 2,
    };
    cfg
}

fn back_to_back() -> LinkParams {
    LinkParams {
        fiber_length: 0.0,
        seq_len: 2000,
        ..LinkParams::default()
    }
}

/// Single-sample demapper fitted on a noiseless frame.
fn fit_le1(link: &Link) -> ClassicalDemapper {
    let (frame, rx) = link.simulate(NoiseLevel::NOISELESS, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let chunks = extract_chunks(&rx.samples, 1).unwrap();
    ClassicalDemapper::fit(&chunks, &frame.symbols, &frame.indices, 1).unwrap()
}

#[test]
fn error_free_demapper_hits_the_bit_cap_and_is_censored() {
    let link = Link::new(back_to_back()).unwrap();
    let le1 = fit_le1(&link);
    let eval = EvalConfig {
        min_errors: 10,
        bit_cap: 100_000,
        frames_per_round: 4,
    };
    let key = StreamKey::new(3, StreamPurpose::Test);
    let rec = evaluate_ber_until(&le1, "le1", &link, NoiseLevel::NOISELESS, &eval, key).unwrap();
    assert_eq!(rec.errors, 0);
    assert!(rec.censored);
    assert!(rec.bits >= eval.bit_cap);
    assert_eq!(rec.ber, 0.0);
    assert_eq!(rec.ci_low, 0.0);
    let (_, hi) = credibility_interval(0, rec.bits, 0.99).unwrap();
    assert_eq!(rec.ci_high, hi);
    assert!(hi > 0.0 && hi < 1e-4);
}

struct Guesser;

impl Demapper for Guesser {
    fn n_tap(&self) -> usize {
        1
    }
    fn decide(&self, chunk: &[f64]) -> usize {
        let mut r = ChaCha8Rng::seed_from_u64(chunk[0].to_bits());
        r.random_range(0..4)
    }
}

#[test]
fn random_guessing_gives_half_the_bits_wrong() {
    let link = Link::new(LinkParams::default()).unwrap();
    let eval = EvalConfig {
        min_errors: 20_000,
        bit_cap: 1_000_000,
        frames_per_round: 4,
    };
    let key = StreamKey::new(5, StreamPurpose::Test);
    let rec = evaluate_ber_until(&Guesser, "guess", &link, NoiseLevel(-6.0), &eval, key).unwrap();
    assert!(!rec.censored);
    assert!(rec.ci_low < 0.5 && 0.5 < rec.ci_high, "{rec:?}");
}

fn q(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Decision boundaries of a single-sample demapper found by bisection on
/// its output.
fn boundaries(d: &dyn Demapper, lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for k in 1..4 {
        let (mut a, mut b) = (lo, hi);
        assert!(d.decide(&[a]) < k && d.decide(&[b]) >= k);
        for _ in 0..100 {
            let m = 0.5 * (a + b);
            if d.decide(&[m]) >= k {
                b = m;
            } else {
                a = m;
            }
        }
        out.push(0.5 * (a + b));
    }
    out
}

#[test]
fn single_tap_ber_matches_the_gaussian_tail_oracle() {
    // Noise enters after the square-law detector, so given the noiseless
    // received sample it is Gaussian with variance σ²·Σh².
    let link = Link::new(back_to_back()).unwrap();
    let le1 = fit_le1(&link);
    let noise = NoiseLevel(4.0);
    let sigma = (noise.variance() * link.taps().iter().map(|h| h * h).sum::<f64>()).sqrt();
    let b = boundaries(&le1, -100.0, 100.0);
    let (mut predicted, mut errors, mut symbols) = (0.0, 0u64, 0u64);
    let mut r = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..60 {
        let (frame, clean) = link.simulate(NoiseLevel::NOISELESS, &mut r).unwrap();
        let noisy = link.simulate_frame(&frame, noise, &mut r).unwrap();
        for ((&t, &y0), &y) in frame.indices.iter().zip(&clean.samples).zip(&noisy.samples) {
            let edges: Vec<f64> = std::iter::once(f64::NEG_INFINITY)
                .chain(b.iter().copied())
                .chain(std::iter::once(f64::INFINITY))
                .collect();
            for k in 0..4 {
                let p = q((edges[k] - y0) / sigma) - q((edges[k + 1] - y0) / sigma);
                let (a, c) = (GRAY_LABELS[k], GRAY_LABELS[t as usize]);
                predicted += p * ((a[0] ^ c[0]) + (a[1] ^ c[1])) as f64;
            }
            let d = GRAY_LABELS[le1.decide(&[y])];
            let c = GRAY_LABELS[t as usize];
            errors += ((d[0] ^ c[0]) + (d[1] ^ c[1])) as u64;
            symbols += 1;
        }
    }
    let bits = 2 * symbols;
    let predicted = predicted / bits as f64;
    let rec = BerRecord::new("le1", noise.db(), errors, bits, 0, false).unwrap();
    assert!(errors > 1000, "{errors} errors");
    assert!(
        rec.ci_low <= predicted && predicted <= rec.ci_high,
        "oracle {predicted:e}, measured {} [{:e}, {:e}]",
        rec.ber,
        rec.ci_low,
        rec.ci_high
    );
}

#[test]
fn identical_configs_give_identical_results() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_sweep(&tiny_config(a.path())).unwrap();
    run_sweep(&tiny_config(b.path())).unwrap();
    let ra = std::fs::read(a.path().join(RESULTS_FILE)).unwrap();
    let rb = std::fs::read(b.path().join(RESULTS_FILE)).unwrap();
    assert_eq!(ra, rb);
    let recs = read_records(&a.path().join(RESULTS_FILE)).unwrap();
    assert_eq!(recs.len(), 8);
    let saved = RunConfig::load(&a.path().join(CONFIG_FILE)).unwrap();
    assert_eq!(saved, tiny_config(a.path()));
    assert!(a.path().join(PLOT_FILE).exists());
}

#[test]
fn warm_start_beats_fresh_initialization() {
    let mut cfg = tiny_config(Path::new("unused"));
    cfg.link.seq_len = 2000;
    cfg.schedule.validation_size = 4000;
    cfg.schedule.epochs_per_level = 6;
    let link = Link::new(cfg.link.clone()).unwrap();
    let mut wins = 0;
    for seed in 0..5u64 {
        let init = |s: u64| {
            let mut r = StreamKey::new(cfg.root_seed, StreamPurpose::Init).seed(s).rng();
            TrainedModel::init(DemapperKind::Ann, &cfg, &mut r).unwrap()
        };
        let first = train_level(&cfg, &link, init(seed), seed, 0, NoiseLevel(-6.0)).unwrap();
        let warm = train_level(&cfg, &link, first.model, seed, 1, NoiseLevel(-4.0)).unwrap();
        let fresh = train_level(&cfg, &link, init(seed), seed, 1, NoiseLevel(-4.0)).unwrap();
        if warm.validation.ber <= fresh.validation.ber {
            wins += 1;
        }
    }
    assert!(wins >= 4, "warm start won on {wins} of 5 seeds");
}

#[test]
fn champion_is_no_worse_than_any_seed_on_the_selection_set() {
    let mut cfg = tiny_config(Path::new("unused"));
    cfg.schedule.seeds = vec![0, 1, 2, 3];
    let link = Link::new(cfg.link.clone()).unwrap();
    let runs: Vec<_> = cfg
        .schedule
        .seeds
        .iter()
        .map(|&s| imdd_snn::experiment::noise_sweep_train(&cfg, DemapperKind::Ann, s).unwrap())
        .collect();
    for level in 0..cfg.schedule.noise_levels_db.len() {
        let champ = select_champion(&cfg, &link, &runs, level).unwrap();
        for run in &runs {
            let alone = select_champion(&cfg, &link, std::slice::from_ref(run), level).unwrap();
            assert!(champ.selection.ber <= alone.selection.ber);
        }
        assert!(runs.iter().any(|r| r.seed == champ.seed));
    }
}

#[test]
fn random_streams_do_not_overlap() {
    let cfg = RunConfig::default();
    let purposes = [
        StreamPurpose::Train,
        StreamPurpose::Validation,
        StreamPurpose::Test,
        StreamPurpose::Init,
        StreamPurpose::Shuffle,
    ];
    let mut seen = std::collections::HashSet::new();
    for p in purposes {
        for seed in 0..3 {
            for level in 0..3 {
                for index in 0..3 {
                    let key = StreamKey::new(cfg.root_seed, p).seed(seed).level(level).index(index);
                    let mut r = key.rng();
                    let head: [u64; 4] = std::array::from_fn(|_| r.random());
                    assert!(seen.insert(head), "{key:?} repeats another stream");
                }
            }
        }
    }
    assert_eq!(test_key(&cfg, 2).purpose, StreamPurpose::Test);
    assert_ne!(test_key(&cfg, 1), test_key(&cfg, 2));
}

#[test]
fn records_round_trip_and_plot_is_valid_svg() {
    let recs = vec![
        BerRecord::new("le7", -6.0, 150, 100_000, 0, false).unwrap(),
        BerRecord::new("le7", -4.0, 480, 100_000, 0, false).unwrap(),
        BerRecord::new("snn", -6.0, 0, 1_000_000, 3, true).unwrap(),
        BerRecord::new("snn", -4.0, 90, 100_000, 3, false).unwrap(),
    ];
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    write_records(&path, &recs).unwrap();
    assert_eq!(read_records(&path).unwrap(), recs);
    let svg = render_svg(&recs);
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    let text: String = doc.descendants().filter_map(|n| n.text()).collect();
    assert!(text.contains("le7") && text.contains("snn"));
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).output().unwrap()
}

#[test]
fn cli_rejects_unknown_flags() {
    let out = cli(&["sweep", "--no-such-flag"]);
    assert!(!out.status.success());
    let out = cli(&["evaluate", "--model", "x", "--noise-db", "-4", "--out", "y", "--bogus", "1"]);
    assert!(!out.status.success());
    let out = cli(&["fit", "--demapper", "le4", "--train", "x", "--out", "y"]);
    assert!(!out.status.success());
}

#[test]
fn cli_seed_override_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str, name: &str| {
        let out = dir.path().join(name).join("frame.csv");
        let o = cli(&["simulate", "--seed", seed, "--noise-db", "-5", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let cfg = RunConfig::load(&dir.path().join(name).join(CONFIG_FILE)).unwrap();
        assert_eq!(cfg.root_seed, seed.parse::<u64>().unwrap());
        std::fs::read(out).unwrap()
    };
    let a = run("11", "a");
    let b = run("11", "b");
    let c = run("12", "c");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn cli_fit_evaluate_report_chain() {
    let dir = tempfile::tempdir().unwrap();
    let p = |s: &str| dir.path().join(s).to_str().unwrap().to_string();
    let cfg_path = p("small.toml");
    std::fs::write(&cfg_path, "[link]\nseq_len = 2000\n[evaluation]\nmin_errors = 50\nbit_cap = 200000\n").unwrap();
    let steps: [Vec<String>; 4] = [
        vec!["simulate".into(), "--config".into(), cfg_path.clone(), "--noise-db".into(), "-6".into(), "--out".into(), p("data/train.csv")],
        vec!["fit".into(), "--config".into(), cfg_path.clone(), "--demapper".into(), "le7".into(), "--train".into(), p("data/train.csv"), "--out".into(), p("model/le7.txt")],
        vec!["evaluate".into(), "--config".into(), cfg_path.clone(), "--model".into(), p("model/le7.txt"), "--noise-db".into(), "-6".into(), "--out".into(), p("eval/ber.csv")],
        vec!["report".into(), "--results".into(), p("eval/ber.csv"), "--out".into(), p("report")],
    ];
    for s in &steps {
        let args: Vec<&str> = s.iter().map(String::as_str).collect();
        let o = cli(&args);
        assert!(o.status.success(), "{:?}: {}", s[0], String::from_utf8_lossy(&o.stderr));
    }
    for d in ["data", "model", "eval", "report"] {
        let cfg = RunConfig::load(&dir.path().join(d).join(CONFIG_FILE)).unwrap();
        assert_eq!(cfg.link.seq_len, 2000);
    }
    let recs = read_records(&dir.path().join("report").join(RESULTS_FILE)).unwrap();
    assert_eq!(recs.len(), 1);
    assert!(recs[0].errors >= 50 && recs[0].ber > 1e-4 && recs[0].ber < 1e-2, "{:?}", recs[0]);
    assert!(dir.path().join("report").join(PLOT_FILE).exists());
}
