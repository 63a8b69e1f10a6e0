//! Membrane potentials of a small two-layer network on a time grid, written
//! as CSV next to the event-driven fire times.
//!
//! `cargo run --release --example membrane_trace -- [out.csv]`

use std::fs::File;
use std::io::BufWriter;

use fpsnn::simulator::{membrane_trace, potential_before, write_trace_csv};
use fpsnn::{simulate, NetworkTopology, NeuronParams, SimOptions};

fn main() -> fpsnn::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "membrane_trace.csv".into());
    let params = NeuronParams::new(1.0, 2.0, 1.0)?;
    // inputs 0, 1 -> hidden 2, 3 -> output 4
    let net = NetworkTopology::layered(params, &[2, 2, 1], |layer, from, to| {
        if layer == 0 {
            2.0 + 0.5 * (from + to) as f64
        } else {
            0.8
        }
    })?;
    let inputs = vec![vec![0.1, 0.9], vec![0.4]];
    let sim = simulate(&net, &inputs, &SimOptions::new(5.0))?;

    for n in 2..net.n_neurons() {
        let fires = sim.record.times(n);
        let gap = fires
            .iter()
            .map(|&f| (potential_before(&net, &inputs, &sim.record, n, f) - params.theta).abs())
            .fold(0.0, f64::max);
        println!("neuron {n} fires {fires:.4?}, max |V(f-) - θ| = {gap:.1e}");
    }

    let times: Vec<f64> = (0..=500).map(|i| i as f64 * 0.01).collect();
    let trace = membrane_trace(&net, &inputs, &sim.record, &times);
    write_trace_csv(BufWriter::new(File::create(&out)?), &[2, 3, 4], &times, &trace)?;
    println!("wrote {} rows to {out}", times.len());
    Ok(())
}
