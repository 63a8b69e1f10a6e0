//! One neuron driven by one input spike, solved in closed form and by the
//! event-driven simulator.
//!
//! With α = 1, β = 2 the feed kernel is `e^{-t} - e^{-2t}`. Substituting
//! `u = e^{-t}` turns `V(t) = θ = 0.1875` into `u - u² = 0.1875`, whose larger
//! root `u = 0.75` gives the first crossing `t = ln(4/3)`.

use fpsnn::{simulate, NetworkTopology, NeuronParams, SimOptions};

fn main() -> fpsnn::Result<()> {
    let params = NeuronParams::new(1.0, 2.0, 0.1875)?;
    let net = NetworkTopology::new(params, 2, &[(0, 1, 1.0)], vec![0], vec![1])?;
    let sim = simulate(&net, &[vec![0.0]], &SimOptions::new(10.0))?;
    let fire = sim.record.times(1)[0];
    let expected = (4.0f64 / 3.0).ln();
    println!("simulated fire {fire:.12}");
    println!("closed form    {expected:.12}");
    println!("difference     {:.1e}", (fire - expected).abs());
    println!("causal feeds of that fire: {:?}", sim.graph.node(0).feeds);

    // A stronger synapse keeps the membrane above threshold after the reset,
    // so the same input produces a burst.
    let strong = net.with_weights(&[6.0])?;
    let burst = simulate(&strong, &[vec![0.0]], &SimOptions::new(10.0))?;
    println!("weight 6.0 fires at {:?}", burst.record.times(1));
    Ok(())
}
