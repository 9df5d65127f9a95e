//! Fits linear equalizers of growing length and the 5th-order Volterra
//! equalizer, then compares their BER on fresh frames.

use imdd_snn::classical::{volterra_block_widths, ClassicalDemapper};
use imdd_snn::experiment::{evaluate_ber_until, EvalConfig};
use imdd_snn::link::{extract_chunks, Link, LinkParams, NoiseLevel};
use imdd_snn::rng::{StreamKey, StreamPurpose};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> imdd_snn::Result<()> {
    let link = Link::new(LinkParams::default())?;
    let noise = NoiseLevel(-6.0);
    let (frame, rx) = link.simulate(noise, &mut ChaCha8Rng::seed_from_u64(7))?;
    let eval = EvalConfig {
        min_errors: 300,
        bit_cap: 10_000_000,
        frames_per_round: 4,
    };
    println!("Volterra widths per order (7 taps): {:?}", volterra_block_widths(7, 5));

    for (name, n_tap, order) in [("LE1", 1, 1), ("LE3", 3, 1), ("LE7", 7, 1), ("LE15", 15, 1), ("VNLE 7/5", 7, 5)] {
        let chunks = extract_chunks(&rx.samples, n_tap)?;
        let r = chunks.symbol_range();
        let model = ClassicalDemapper::fit(&chunks, &frame.symbols[r.clone()], &frame.indices[r], order)?;
        let key = StreamKey::new(0, StreamPurpose::Test);
        let rec = evaluate_ber_until(&model, name, &link, noise, &eval, key)?;
        println!(
            "{name:9} BER {:.3e}  [{:.2e}, {:.2e}]  thresholds {:.3?}",
            rec.ber,
            rec.ci_low,
            rec.ci_high,
            model.thresholds.boundaries()
        );
    }
    Ok(())
}
