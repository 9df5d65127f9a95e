//! Trains the 7-40-20-4 ANN demapper at one noise level and saves it.

use imdd_snn::demapper::count_bit_errors;
use imdd_snn::experiment::draw_chunks;
use imdd_snn::link::{Link, LinkParams, NoiseLevel};
use imdd_snn::neural::{ann_demap, ann_train_epoch, AdamConfig, AnnModel, Precision};
use imdd_snn::rng::{StreamKey, StreamPurpose};
use imdd_snn::Demapper;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> imdd_snn::Result<()> {
    let link = Link::new(LinkParams::default())?;
    let noise = NoiseLevel(-6.0);
    let test_key = StreamKey::new(0, StreamPurpose::Test);
    let (test, truth) = draw_chunks(&link, noise, test_key, 7, 50_000)?;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut model = AnnModel::init(&mut rng);
    let mut adam = model.adam(AdamConfig::default());
    for epoch in 0..30 {
        let key = StreamKey::new(0, StreamPurpose::Train).index(epoch);
        let (chunks, targets) = draw_chunks(&link, noise, key, 7, 9994)?;
        let loss = ann_train_epoch(&mut model, &chunks, &targets, &mut adam, 256, &mut rng)?;
        if epoch % 5 == 4 {
            let errors = count_bit_errors(&model.decide_all(&test), &truth);
            println!("epoch {:2}  loss {loss:.4}  test BER {:.3e}", epoch + 1, errors as f64 / (2 * truth.len()) as f64);
        }
    }

    let (log_probs, bits) = ann_demap(&model, test.get(0))?;
    println!("first test symbol: bits {bits:?}, log-probabilities {log_probs:.3?}");
    let single = model.clone().with_precision(Precision::Single);
    let errors = count_bit_errors(&single.decide_all(&test), &truth);
    println!("f32 inference test BER {:.3e}", errors as f64 / (2 * truth.len()) as f64);

    let path = std::env::temp_dir().join("ann_example.ckpt");
    model.to_checkpoint().save(&path)?;
    println!("checkpoint written to {}", path.display());
    Ok(())
}
