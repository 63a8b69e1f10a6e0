//! Exact gradients against central finite differences on random small
//! networks with random losses over their fire times.
//!
//! `cargo run --release --example gradient_check -- [trials] [seed]`

use fpsnn::gradcheck::{check_case, random_case};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> fpsnn::Result<()> {
    let mut args = std::env::args().skip(1);
    let trials: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(200);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst, mut worst_all, mut fires) = (0.0f64, 0.0f64, 0);
    let (mut checked, mut unstable, mut reordered) = (0, 0, 0);
    for _ in 0..trials {
        let case = random_case(&mut rng)?;
        let report = check_case(&case, 1e-6)?;
        worst = worst.max(report.max_rel_err_smooth);
        worst_all = worst_all.max(report.max_rel_err);
        fires += report.n_fires;
        checked += report.n_order_stable();
        unstable += report.stable.len() - report.n_stable();
        reordered += report.n_stable() - report.n_order_stable();
        assert!(report.triangular, "system not lower triangular");
    }
    println!("{trials} networks, {fires} fires, {checked} weights compared");
    println!("skipped: {unstable} change a spike count, {reordered} move a fire past another spike");
    println!("max relative error {worst:.2e} ({worst_all:.2e} including reordering weights)");
    Ok(())
}
