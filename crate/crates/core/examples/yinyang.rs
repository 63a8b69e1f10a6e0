//! Yin-Yang classification with the shipped config: 5000 training points,
//! 1000 test points, one hidden layer of 150 neurons.
//!
//! `cargo run --release --example yinyang -- [seed] [epochs]`

use fpsnn::config::TrainConfig;
use fpsnn::train::{train, Dataset, Split};

fn main() -> fpsnn::Result<()> {
    let mut cfg = TrainConfig::yinyang();
    let mut args = std::env::args().skip(1);
    if let Some(seed) = args.next().and_then(|s| s.parse().ok()) {
        cfg.seed = seed;
    }
    if let Some(epochs) = args.next().and_then(|s| s.parse().ok()) {
        cfg.epochs = epochs;
    }
    let data = Dataset::from_config(&cfg)?;
    println!("{} train / {} test samples, dataset {}", data.train.len(), data.test.len(), data.fingerprint());
    let out = train(&cfg, &data)?;
    for m in out.history.iter().filter(|m| m.split == Split::Test) {
        println!("epoch {:>4}  test loss {:.4}  accuracy {:.4}", m.epoch, m.loss, m.accuracy);
    }
    let test_acc = out.last(Split::Test).map_or(0.0, |m| m.accuracy);
    println!("seed {}: final test accuracy {test_acc:.4} after {} steps ({:.1?})", cfg.seed, out.steps, out.elapsed);
    Ok(())
}
