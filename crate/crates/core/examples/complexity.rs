//! Cost of solving for `∂F/∂W` as the number of fires grows with the
//! network, and so `|W|`, held fixed.
//!
//! Every fire's equation references all earlier spikes of its feeders, so
//! the solve does `O(|F|)` row combinations of width up to `|W|` per fire:
//! doubling `|F|` should roughly quadruple the time.

use std::time::{Duration, Instant};

use fpsnn::fpgrad::{assemble_system, solve_firing_jacobian};
use fpsnn::{simulate, NetworkTopology, NeuronParams, SimOptions};

/// Fire count, inner-loop multiply-adds, and median solve time of five runs.
fn median_solve(net: &NetworkTopology, inputs: &[Vec<f64>], t_max: f64) -> fpsnn::Result<(usize, usize, Duration)> {
    let sim = simulate(net, inputs, &SimOptions::new(t_max))?;
    let system = assemble_system(&sim.record, &sim.graph, net)?;
    let mut times: Vec<Duration> = (0..5)
        .map(|_| {
            let t0 = Instant::now();
            let j = solve_firing_jacobian(&system).expect("solvable");
            std::hint::black_box(j);
            t0.elapsed()
        })
        .collect();
    times.sort();
    let j = solve_firing_jacobian(&system)?;
    let ops = (0..system.n_fires())
        .flat_map(|k| system.lower_row(k))
        .map(|&(l, _)| j.row(l).len())
        .sum();
    Ok((sim.record.len(), ops, times[2]))
}

fn main() -> fpsnn::Result<()> {
    let params = NeuronParams::new(1.0, 2.0, 1.0)?;
    let net = NetworkTopology::layered(params, &[2, 4, 2], |layer, from, to| {
        if layer == 0 {
            1.2 + 0.2 * ((from + to) % 3) as f64
        } else {
            1.2
        }
    })?;
    println!("|W| = {}", net.n_weights());
    let mut previous: Option<Duration> = None;
    for n_spikes in [50, 100, 200, 400] {
        // Same rate, longer train: the fire count grows linearly.
        let t_max = n_spikes as f64 * 0.5;
        let inputs: Vec<Vec<f64>> = (0..2)
            .map(|i| (0..n_spikes).map(|k| k as f64 * 0.5 + 0.2 * i as f64).collect())
            .collect();
        let (fires, ops, t) = median_solve(&net, &inputs, t_max)?;
        let ratio = previous.map_or(String::new(), |p| format!("  x{:.2}", t.as_secs_f64() / p.as_secs_f64()));
        println!("|F| = {fires:>5}  multiply-adds {ops:>10}  solve {t:>10.2?}{ratio}");
        previous = Some(t);
    }
    Ok(())
}
