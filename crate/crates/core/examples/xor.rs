//! Trains the XOR network from many seeds and reports steps to convergence.
//!
//! `cargo run --release --example xor -- [n_seeds]`

use fpsnn::config::TrainConfig;
use fpsnn::train::{train, Dataset};

fn main() -> fpsnn::Result<()> {
    let n_seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100);
    let base = TrainConfig::xor();
    let data = Dataset::from_config(&base)?;
    let mut steps = Vec::new();
    let mut failed = 0;
    for seed in 0..n_seeds {
        let cfg = TrainConfig { seed, ..base.clone() };
        let out = train(&cfg, &data)?;
        if out.converged {
            steps.push(out.steps);
        } else {
            failed += 1;
            println!("seed {seed}: not converged after {} steps", out.steps);
        }
    }
    let mean = steps.iter().sum::<usize>() as f64 / steps.len().max(1) as f64;
    let max = steps.iter().max().copied().unwrap_or(0);
    println!("converged {}/{n_seeds}, mean steps {mean:.2}, max steps {max}", steps.len());
    if failed > 0 {
        std::process::exit(1);
    }
    Ok(())
}
