//! A reduced version of the full benchmark: every demapper over a short
//! noise grid with two seeds and few epochs, written to a temp directory.
//!
//! The full run is `imdd-snn sweep --config default.cfg`.

use imdd_snn::experiment::{gain_summary, run_sweep, EvalConfig, RunConfig};

fn main() -> imdd_snn::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.output_dir = std::env::temp_dir().join("imdd_snn_noise_sweep");
    cfg.verbose = true;
    cfg.schedule.noise_levels_db = vec![-8.0, -6.0, -4.0];
    cfg.schedule.seeds = vec![0, 1];
    cfg.schedule.epochs_per_level = 15;
    cfg.schedule.selection_size = 20_000;
    cfg.evaluation = EvalConfig {
        min_errors: 200,
        bit_cap: 20_000_000,
        frames_per_round: 4,
    };
    let outcome = run_sweep(&cfg)?;
    for r in &outcome.records {
        println!("{:5} {:+.1} dB  BER {:.3e}", r.demapper, r.noise_db, r.ber);
    }
    print!("{}", gain_summary(&outcome.records));
    println!("results in {}", outcome.output_dir.display());
    Ok(())
}
