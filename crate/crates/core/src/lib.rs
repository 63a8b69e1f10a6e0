//! Event-driven spiking neural networks with exact firing times and exact
//! gradients of firing-time losses with respect to synaptic weights.
//!
//! The forward pass ([`simulator::simulate`]) computes every spike in
//! continuous time together with the causal graph linking each fire to the
//! earlier spikes in its threshold equation. Differentiating those threshold
//! equations with respect to the fire times gives a lower-triangular system
//! once fires are sorted by time; [`fpgrad`] assembles and solves it by
//! forward substitution and chains the result into the loss gradient.

pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod fpgrad;
pub mod gradcheck;
pub mod kernels;
pub mod losses;
pub mod network;
pub mod optim;
pub mod simulator;
pub mod train;

pub use error::{Result, SnnError};
pub use kernels::{earliest_crossing, NeuronParams, SegmentState};
pub use network::NetworkTopology;
pub use simulator::{simulate, CausalGraph, FiringRecord, SimOptions, Simulation, SpikeLabel};
