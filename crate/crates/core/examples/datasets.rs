//! The three datasets and their spike encodings.

use fpsnn::config::TrainConfig;
use fpsnn::data::{generate_yinyang, parse_iris, xor_dataset, IRIS_CSV};
use fpsnn::train::Dataset;

fn main() -> fpsnn::Result<()> {
    for s in xor_dataset(0.0, 2.0, true) {
        println!("xor label {}  spikes {:?}", s.label, s.spikes);
    }

    let iris = parse_iris(IRIS_CSV.as_bytes())?;
    println!("\niris: {} rows, classes {:?}, counts {:?}", iris.len(), iris.class_names, iris.class_counts());
    let encoded = iris.encode(16.0)?;
    println!("first sample {:?} -> {:?}", iris.features[0], encoded[0].spikes);

    let points = generate_yinyang(9, 0.5, 0)?;
    println!("\nyin-yang points (x, y, class):");
    for p in &points {
        println!("  ({:.3}, {:.3}) {}", p.x, p.y, p.class);
    }

    for cfg in [TrainConfig::xor(), TrainConfig::iris(), TrainConfig::yinyang()] {
        let ds = Dataset::from_config(&cfg)?;
        println!("{:?}: {} train, {} test, {}", cfg.dataset, ds.train.len(), ds.test.len(), ds.fingerprint());
    }
    Ok(())
}
