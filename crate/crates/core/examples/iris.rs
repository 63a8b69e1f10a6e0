//! Iris classification with the bundled dataset and shipped config.
//!
//! `cargo run --release --example iris -- [seed]`

use fpsnn::config::TrainConfig;
use fpsnn::train::{train, Dataset, Split};

fn main() -> fpsnn::Result<()> {
    let mut cfg = TrainConfig::iris();
    if let Some(seed) = std::env::args().nth(1).and_then(|s| s.parse().ok()) {
        cfg.seed = seed;
    }
    let data = Dataset::from_config(&cfg)?;
    println!("{} train / {} test samples", data.train.len(), data.test.len());
    let out = train(&cfg, &data)?;
    for m in out.history.iter().filter(|m| m.split == Split::Test) {
        println!("epoch {:>4}  test loss {:.4}  accuracy {:.4}", m.epoch, m.loss, m.accuracy);
    }
    let train_acc = out.last(Split::Train).map_or(0.0, |m| m.accuracy);
    let test_acc = out.last(Split::Test).map_or(0.0, |m| m.accuracy);
    println!("final train accuracy {train_acc:.4}, test accuracy {test_acc:.4} ({:.1?})", out.elapsed);
    Ok(())
}
