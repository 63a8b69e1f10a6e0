//! A three-neuron chain with injected fire times: the causal graph
//! and the sparsity of the firing-time Jacobian for a fixed firing pattern.
//!
//! Neuron 0 is the input, neurons 1 -> 2 -> 3 form the chain. The fire times
//! are injected directly instead of simulated.

use fpsnn::fpgrad::assemble_system;
use fpsnn::simulator::{build_causal_graph, SpikeSource};
use fpsnn::{FiringRecord, NetworkTopology, NeuronParams};

fn main() -> fpsnn::Result<()> {
    // Slow kernels peak at t ≈ 2.77, so every lag below is on the rising side
    // and every diagonal entry is positive.
    let params = NeuronParams::new(0.5, 0.25, 1.0)?;
    let net = NetworkTopology::new(params, 4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)], vec![0], vec![3])?;
    let inputs = vec![vec![0.5, 1.5, 2.5]];
    let record = FiringRecord::from_per_neuron(vec![vec![], vec![1.0, 2.0, 3.0], vec![1.5, 3.5], vec![4.0]])?;
    let graph = build_causal_graph(&net, &inputs, &record, None);

    let name = |k: usize| {
        let l = record.order()[k];
        format!("f{}_{}", l.neuron, l.index + 1)
    };
    for (k, node) in graph.nodes().iter().enumerate() {
        let feeds: Vec<String> = node
            .feeds
            .iter()
            .filter_map(|e| match e.source {
                SpikeSource::Fire(l) => Some(name(l)),
                SpikeSource::Input { .. } => None,
            })
            .collect();
        let resets: Vec<String> = node.resets.iter().map(|r| name(r.fire)).collect();
        println!(
            "{} = {:.1}  fed by {:?}  reset by {:?}",
            name(k),
            record.sorted_times()[k],
            feeds,
            resets
        );
    }

    // Rows are stored in time order; list them neuron by neuron instead.
    // Lower triangularity holds in both orders.
    let system = assemble_system(&record, &graph, &net)?;
    let dense = system.dense_l();
    let mut by_neuron: Vec<usize> = (0..record.len()).collect();
    by_neuron.sort_by_key(|&k| record.order()[k]);
    println!("\nJacobian of the threshold equations w.r.t. fire times:");
    println!("        {}", by_neuron.iter().map(|&k| name(k)).collect::<Vec<_>>().join(" "));
    for &r in &by_neuron {
        let marks: Vec<&str> = by_neuron
            .iter()
            .map(|&c| if dense[r][c] != 0.0 { "  x " } else { "  . " })
            .collect();
        println!("  {} {}", name(r), marks.join(" "));
    }
    Ok(())
}
