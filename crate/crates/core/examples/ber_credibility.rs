//! Jeffreys credibility intervals of BER estimates and how they shrink with
//! the number of observed bits.

use imdd_snn::experiment::{credibility_interval, BerRecord};

fn main() -> imdd_snn::Result<()> {
    for (errors, bits) in [(0, 1_000), (0, 1_000_000), (2, 1_000), (20, 10_000), (200, 100_000), (2000, 1_000_000)] {
        let (lo, hi) = credibility_interval(errors, bits, 0.99)?;
        println!("{errors:5} errors / {bits:8} bits: 99% interval [{lo:.3e}, {hi:.3e}]");
    }
    let censored = BerRecord::new("example", -8.0, 0, 1_000_000_000, 0, true)?;
    println!(
        "censored at the bit cap: BER {} with upper bound {:.3e}",
        censored.ber, censored.ci_high
    );
    Ok(())
}
