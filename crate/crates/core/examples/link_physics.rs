//! Pushes one PAM4 frame through the 4 km O-band link and prints what the
//! fiber and the square-law detector do to it.

use imdd_snn::link::{Link, LinkParams, NoiseLevel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> imdd_snn::Result<()> {
    let params = LinkParams::default();
    let link = Link::new(params.clone())?;
    println!(
        "{:.0} GBd, {} km, D = {:.1} ps/nm/km, {} RRC taps",
        params.baudrate / 1e9,
        params.fiber_length / 1e3,
        params.dispersion * 1e6,
        link.taps().len()
    );

    let f = params.baudrate / 2.0;
    let cd = link.dispersion();
    let spread = (cd.group_delay(f) - cd.group_delay(-f)).abs() / params.symbol_period();
    println!("group-delay spread between ±Nyquist: {spread:.3} symbols");
    let beat = -20.0 * cd.phase(f).cos().abs().log10();
    println!("carrier×signal beat attenuation at Nyquist: {beat:.2} dB");

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (label, p) in [
        ("back-to-back", LinkParams { fiber_length: 0.0, ..params.clone() }),
        ("4 km fiber  ", params.clone()),
    ] {
        let link = Link::new(p)?;
        let (frame, rx) = link.simulate(NoiseLevel::NOISELESS, &mut rng)?;
        let mut stats = [(0.0, 0.0, 0usize); 4];
        for (&i, &y) in frame.indices.iter().zip(&rx.samples) {
            let s = &mut stats[i as usize];
            s.0 += y;
            s.1 += y * y;
            s.2 += 1;
        }
        print!("{label} received level mean ± std:");
        for (sum, sq, n) in stats {
            let m = sum / n as f64;
            print!("  {m:.3} ± {:.3}", (sq / n as f64 - m * m).max(0.0).sqrt());
        }
        println!();
    }

    for db in [-10.0, -6.0, -2.0] {
        let (_, rx) = link.simulate(NoiseLevel(db), &mut rng)?;
        let head: Vec<String> = rx.samples[..6].iter().map(|v| format!("{v:.3}")).collect();
        println!("σ² at {db:+} dB, first samples: {}", head.join(" "));
    }
    Ok(())
}
