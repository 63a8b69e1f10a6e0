//! Network topology: neurons, weighted directed edges, input and output sets.

use std::ops::Range;

use crate::error::{Result, SnnError};
use crate::kernels::NeuronParams;

/// A directed synapse `source -> target`. Its weight lives in
/// [`NetworkTopology::weights`] at the same index as the edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTopology {
    params: NeuronParams,
    n_neurons: usize,
    edges: Vec<Edge>,
    weights: Vec<f64>,
    inputs: Vec<usize>,
    outputs: Vec<usize>,
    in_edges: Vec<Vec<usize>>,
    out_edges: Vec<Vec<usize>>,
    input_slot: Vec<Option<usize>>,
}

impl NetworkTopology {
    /// Builds a network from `(source, target, weight)` triples.
    ///
    /// Input neurons are pure spike sources: they may not receive edges.
    /// Self loops and duplicate edges are rejected.
    pub fn new(
        params: NeuronParams,
        n_neurons: usize,
        edges: &[(usize, usize, f64)],
        inputs: Vec<usize>,
        outputs: Vec<usize>,
    ) -> Result<Self> {
        params.validate()?;
        let mut input_slot = vec![None; n_neurons];
        for (slot, &n) in inputs.iter().enumerate() {
            if n >= n_neurons {
                return Err(SnnError::invalid(format!("input neuron {n} out of range")));
            }
            if input_slot[n].replace(slot).is_some() {
                return Err(SnnError::invalid(format!("input neuron {n} listed twice")));
            }
        }
        for &n in &outputs {
            if n >= n_neurons {
                return Err(SnnError::invalid(format!("output neuron {n} out of range")));
            }
            if input_slot[n].is_some() {
                return Err(SnnError::invalid(format!("neuron {n} is both input and output")));
            }
        }

        let mut in_edges = vec![Vec::new(); n_neurons];
        let mut out_edges = vec![Vec::new(); n_neurons];
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        let mut list = Vec::with_capacity(edges.len());
        let mut weights = Vec::with_capacity(edges.len());
        for (k, &(source, target, weight)) in edges.iter().enumerate() {
            if source >= n_neurons || target >= n_neurons {
                return Err(SnnError::invalid(format!(
                    "edge {k} ({source} -> {target}) references a missing neuron"
                )));
            }
            if source == target {
                return Err(SnnError::invalid(format!("self loop on neuron {source}")));
            }
            if input_slot[target].is_some() {
                return Err(SnnError::invalid(format!(
                    "edge {k} targets input neuron {target}"
                )));
            }
            if !seen.insert((source, target)) {
                return Err(SnnError::invalid(format!(
                    "duplicate edge {source} -> {target}"
                )));
            }
            if !weight.is_finite() {
                return Err(SnnError::invalid(format!("edge {k} has non-finite weight")));
            }
            in_edges[target].push(k);
            out_edges[source].push(k);
            list.push(Edge { source, target });
            weights.push(weight);
        }

        Ok(NetworkTopology {
            params,
            n_neurons,
            edges: list,
            weights,
            inputs,
            outputs,
            in_edges,
            out_edges,
            input_slot,
        })
    }

    /// Fully connected feed-forward network. Neurons are numbered layer by
    /// layer; the first layer is the input layer and the last the output
    /// layer. Edges are ordered by connection, then target, then source, so
    /// that [`layered_weight_ranges`] gives each connection's weight block.
    pub fn layered(params: NeuronParams, sizes: &[usize], weight: impl FnMut(usize, usize, usize) -> f64) -> Result<Self> {
        let mut weight = weight;
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(SnnError::invalid(
                "a layered network needs at least two non-empty layers",
            ));
        }
        let offsets: Vec<usize> = sizes
            .iter()
            .scan(0, |acc, &n| {
                let start = *acc;
                *acc += n;
                Some(start)
            })
            .collect();
        let n_neurons = sizes.iter().sum();
        let mut edges = Vec::new();
        for layer in 0..sizes.len() - 1 {
            for t in 0..sizes[layer + 1] {
                for s in 0..sizes[layer] {
                    let source = offsets[layer] + s;
                    let target = offsets[layer + 1] + t;
                    edges.push((source, target, weight(layer, source, target)));
                }
            }
        }
        let inputs = (0..sizes[0]).collect();
        let last = sizes.len() - 1;
        let outputs = (offsets[last]..offsets[last] + sizes[last]).collect();
        NetworkTopology::new(params, n_neurons, &edges, inputs, outputs)
    }

    pub fn params(&self) -> &NeuronParams {
        &self.params
    }

    pub fn n_neurons(&self) -> usize {
        self.n_neurons
    }

    pub fn n_weights(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn set_weights(&mut self, weights: &[f64]) -> Result<()> {
        if weights.len() != self.weights.len() {
            return Err(SnnError::invalid(format!(
                "expected {} weights, got {}",
                self.weights.len(),
                weights.len()
            )));
        }
        self.weights.copy_from_slice(weights);
        Ok(())
    }

    pub fn with_weights(&self, weights: &[f64]) -> Result<Self> {
        let mut net = self.clone();
        net.set_weights(weights)?;
        Ok(net)
    }

    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    /// Position of `neuron` in the input list, if it is an input neuron.
    pub fn input_slot(&self, neuron: usize) -> Option<usize> {
        self.input_slot[neuron]
    }

    pub fn is_input(&self, neuron: usize) -> bool {
        self.input_slot[neuron].is_some()
    }

    /// Edge indices feeding `neuron`.
    pub fn incoming(&self, neuron: usize) -> &[usize] {
        &self.in_edges[neuron]
    }

    /// Edge indices leaving `neuron`.
    pub fn outgoing(&self, neuron: usize) -> &[usize] {
        &self.out_edges[neuron]
    }

    pub fn edge_index(&self, source: usize, target: usize) -> Option<usize> {
        self.in_edges[target]
            .iter()
            .copied()
            .find(|&e| self.edges[e].source == source)
    }

    /// Relabels neurons: neuron `n` becomes `perm[n]`. Edge order (and so
    /// weight order) is preserved.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n_neurons {
            return Err(SnnError::invalid("permutation length mismatch"));
        }
        let mut hit = vec![false; self.n_neurons];
        for &p in perm {
            if p >= self.n_neurons || std::mem::replace(&mut hit[p], true) {
                return Err(SnnError::invalid("not a permutation"));
            }
        }
        let edges: Vec<_> = self
            .edges
            .iter()
            .zip(&self.weights)
            .map(|(e, &w)| (perm[e.source], perm[e.target], w))
            .collect();
        NetworkTopology::new(
            self.params,
            self.n_neurons,
            &edges,
            self.inputs.iter().map(|&n| perm[n]).collect(),
            self.outputs.iter().map(|&n| perm[n]).collect(),
        )
    }
}

/// Weight-index ranges of each inter-layer connection of a
/// [`NetworkTopology::layered`] network.
pub fn layered_weight_ranges(sizes: &[usize]) -> Vec<Range<usize>> {
    let mut start = 0;
    sizes
        .windows(2)
        .map(|w| {
            let range = start..start + w[0] * w[1];
            start = range.end;
            range
        })
        .collect()
}
