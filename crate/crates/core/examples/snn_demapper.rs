//! Trains the spiking demapper at one noise level, then dumps the spike
//! raster and membrane traces of one symbol as CSV.

use imdd_snn::demapper::count_bit_errors;
use imdd_snn::experiment::draw_chunks;
use imdd_snn::link::{Link, LinkParams, NoiseLevel};
use imdd_snn::neural::AdamConfig;
use imdd_snn::rng::{StreamKey, StreamPurpose};
use imdd_snn::snn::{
    hidden_silent_fraction, snn_forward, snn_train_epoch, write_symbol_csv, SnnModel, SnnParams,
};
use imdd_snn::Demapper;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let link = Link::new(LinkParams::default())?;
    let noise = NoiseLevel(-6.0);
    let params = SnnParams::default();
    println!(
        "{} inputs, {} hidden LIF, {} LI outputs, {} steps of {}",
        params.n_inputs(),
        params.n_hidden,
        params.n_out,
        params.n_steps(),
        params.dt
    );
    let (test, truth) = draw_chunks(&link, noise, StreamKey::new(0, StreamPurpose::Test), 7, 20_000)?;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut model = SnnModel::init(params, &mut rng)?;
    let mut adam = model.adam(AdamConfig::default());
    for epoch in 0..30 {
        let key = StreamKey::new(0, StreamPurpose::Train).index(epoch);
        let (chunks, targets) = draw_chunks(&link, noise, key, 7, 9994)?;
        let rasters = model.encode_all(&chunks)?;
        let targets: Vec<usize> = targets.iter().map(|&t| t as usize).collect();
        let loss = snn_train_epoch(&mut model, &rasters, &targets, &mut adam, 256, &mut rng)?;
        if epoch % 5 == 4 {
            let silent = hidden_silent_fraction(&model, &rasters[..1000])?;
            let errors = count_bit_errors(&model.decide_all(&test), &truth);
            println!(
                "epoch {:2}  loss {loss:.4}  silent {silent:.3}  test BER {:.3e}",
                epoch + 1,
                errors as f64 / (2 * truth.len()) as f64
            );
        }
    }

    let raster = model.encode(test.get(0))?;
    let trace = snn_forward(&model, &raster)?;
    let path = std::env::temp_dir().join("snn_symbol.csv");
    let file = std::fs::File::create(&path)?;
    write_symbol_csv(file, &raster, &trace)?;
    println!("symbol 0 (true index {}) traces written to {}", truth[0], path.display());
    Ok(())
}
