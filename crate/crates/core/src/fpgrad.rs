//! Exact weight gradients of firing-time losses.
//!
//! Every fire `f` of neuron `i` satisfies `V_i(f) - θ = 0`. Differentiating
//! these equations gives `L·∂F/∂W = -∂V/∂W`, where `L = ∂V/∂F` is lower
//! triangular with a positive diagonal when fires are sorted by time: a
//! fire's equation only involves strictly earlier spikes. The system is
//! therefore solved row by row, forward in time, with no inversion.
//!
//! Both `L` and `∂V/∂W` are stored row-sparse. A row of `∂V/∂W` only touches
//! weights into the firing neuron, and a row of `L` only the spikes in the
//! fire's causal node.

use crate::error::{Result, SnnError};
use crate::network::NetworkTopology;
use crate::simulator::{self, CausalGraph, FiringRecord, InputSpikes, SimOptions, Simulation, SpikeLabel, SpikeSource};

pub type SparseRow = Vec<(usize, f64)>;

/// The linearized threshold equations of one firing configuration, rows in
/// global time order.
#[derive(Debug, Clone, PartialEq)]
pub struct FiringSystem {
    labels: Vec<SpikeLabel>,
    n_weights: usize,
    diag: Vec<f64>,
    lower: Vec<SparseRow>,
    dv_dw: Vec<SparseRow>,
}

fn compress(mut row: SparseRow) -> SparseRow {
    row.sort_by_key(|&(c, _)| c);
    let mut out: SparseRow = Vec::with_capacity(row.len());
    for (c, v) in row {
        match out.last_mut() {
            Some((last, acc)) if *last == c => *acc += v,
            _ => out.push((c, v)),
        }
    }
    out
}

impl FiringSystem {
    /// Builds a system from dense matrices. Entries of `l` above the
    /// diagonal must be zero.
    pub fn from_dense(l: &[Vec<f64>], dv_dw: &[Vec<f64>]) -> Result<Self> {
        let n = l.len();
        if dv_dw.len() != n {
            return Err(SnnError::invalid("L and dV/dW must have the same row count"));
        }
        let n_weights = dv_dw.first().map_or(0, Vec::len);
        let mut diag = Vec::with_capacity(n);
        let mut lower = Vec::with_capacity(n);
        let mut rows = Vec::with_capacity(n);
        for k in 0..n {
            if l[k].len() != n || dv_dw[k].len() != n_weights {
                return Err(SnnError::invalid(format!("row {k} has the wrong length")));
            }
            if l[k][k + 1..].iter().any(|&v| v != 0.0) {
                return Err(SnnError::invalid(format!("row {k} of L is not lower triangular")));
            }
            diag.push(l[k][k]);
            lower.push(
                l[k][..k]
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(c, &v)| (c, v))
                    .collect(),
            );
            rows.push(
                dv_dw[k]
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(c, &v)| (c, v))
                    .collect(),
            );
        }
        Ok(FiringSystem {
            labels: Vec::new(),
            n_weights,
            diag,
            lower,
            dv_dw: rows,
        })
    }

    pub fn n_fires(&self) -> usize {
        self.diag.len()
    }

    pub fn n_weights(&self) -> usize {
        self.n_weights
    }

    /// Fire label of each row (empty for systems built from dense matrices).
    pub fn labels(&self) -> &[SpikeLabel] {
        &self.labels
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Off-diagonal entries of row `k`, all in columns `< k`.
    pub fn lower_row(&self, k: usize) -> &[(usize, f64)] {
        &self.lower[k]
    }

    pub fn dv_dw_row(&self, k: usize) -> &[(usize, f64)] {
        &self.dv_dw[k]
    }

    /// Dense `L` in sorted fire order.
    pub fn dense_l(&self) -> Vec<Vec<f64>> {
        let n = self.n_fires();
        (0..n)
            .map(|k| {
                let mut row = vec![0.0; n];
                for &(c, v) in &self.lower[k] {
                    row[c] = v;
                }
                row[k] = self.diag[k];
                row
            })
            .collect()
    }

    pub fn dense_dv_dw(&self) -> Vec<Vec<f64>> {
        self.dv_dw
            .iter()
            .map(|r| {
                let mut row = vec![0.0; self.n_weights];
                for &(c, v) in r {
                    row[c] = v;
                }
                row
            })
            .collect()
    }
}

/// Differentiates each fire's threshold equation
/// `Σ_j W_ji Σ_{g<f} h(f-g) - θ Σ_{e<f} e^{-β(f-e)} - θ = 0`
/// with respect to every fire in it and every weight.
///
/// The diagonal is the left time-derivative of the membrane at the fire; a
/// non-positive value means the fire is tangential and the equations are
/// not invertible there.
pub fn assemble_system(record: &FiringRecord, graph: &CausalGraph, net: &NetworkTopology) -> Result<FiringSystem> {
    assemble_system_prefix(record, graph, net, record.len())
}

/// [`assemble_system`] restricted to the first `n_rows` fires. Each fire
/// depends only on earlier ones, so the prefix system is self-contained.
pub fn assemble_system_prefix(
    record: &FiringRecord,
    graph: &CausalGraph,
    net: &NetworkTopology,
    n_rows: usize,
) -> Result<FiringSystem> {
    if n_rows > record.len() {
        return Err(SnnError::invalid(format!("{n_rows} rows requested from {} fires", record.len())));
    }
    if graph.len() != record.len() {
        return Err(SnnError::invalid(format!(
            "causal graph has {} nodes but the record has {} fires",
            graph.len(),
            record.len()
        )));
    }
    let params = net.params();
    let theta = params.theta;
    let weights = net.weights();
    let n = n_rows;
    let mut diag = Vec::with_capacity(n);
    let mut lower = Vec::with_capacity(n);
    let mut dv_dw = Vec::with_capacity(n);

    for (k, node) in graph.nodes()[..n].iter().enumerate() {
        let mut d = 0.0;
        let mut row = Vec::with_capacity(node.feeds.len() + node.resets.len());
        let mut wrow = Vec::with_capacity(node.feeds.len());
        for edge in &node.feeds {
            let w = weights[edge.weight];
            let slope = params.feed_deriv_unchecked(edge.lag);
            d += w * slope;
            if let SpikeSource::Fire(l) = edge.source {
                row.push((l, -w * slope));
            }
            wrow.push((edge.weight, params.feed_kernel(edge.lag)));
        }
        for edge in &node.resets {
            // d/de of -θ·e^{-β(f-e)}
            let decay = params.beta * params.reset_kernel(edge.lag);
            d += theta * decay;
            row.push((edge.fire, -theta * decay));
        }
        if !(d > 0.0) {
            let label = record.order()[k];
            return Err(SnnError::DegenerateFire {
                row: k,
                neuron: label.neuron,
                time: record.sorted_times()[k],
                derivative: d,
            });
        }
        diag.push(d);
        lower.push(compress(row));
        dv_dw.push(compress(wrow));
    }

    Ok(FiringSystem {
        labels: record.order()[..n].to_vec(),
        n_weights: net.n_weights(),
        diag,
        lower,
        dv_dw,
    })
}

/// `∂F/∂W`, one sparse row per fire in sorted order, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct FiringJacobian {
    entries: Vec<(usize, f64)>,
    /// Row `k` is `entries[starts[k]..starts[k + 1]]`.
    starts: Vec<usize>,
    n_weights: usize,
}

impl FiringJacobian {
    pub fn n_fires(&self) -> usize {
        self.starts.len() - 1
    }

    pub fn n_weights(&self) -> usize {
        self.n_weights
    }

    pub fn row(&self, k: usize) -> &[(usize, f64)] {
        &self.entries[self.starts[k]..self.starts[k + 1]]
    }

    pub fn get(&self, fire: usize, weight: usize) -> f64 {
        let row = self.row(fire);
        row.binary_search_by_key(&weight, |&(c, _)| c)
            .map_or(0.0, |i| row[i].1)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n_fires())
            .map(|k| {
                let r = self.row(k);
                let mut row = vec![0.0; self.n_weights];
                for &(c, v) in r {
                    row[c] = v;
                }
                row
            })
            .collect()
    }
}

/// Solves `L·X = -∂V/∂W` by forward substitution.
///
/// Row `k` of `X` is `-(∂V/∂W[k] + Σ_{l<k} L[k][l]·X[l]) / L[k][k]`. With
/// dense rows this costs `O(|F|²·|W|)`; sparsity in `L` and `∂V/∂W` is
/// exploited automatically.
pub fn solve_firing_jacobian(system: &FiringSystem) -> Result<FiringJacobian> {
    let n_weights = system.n_weights;
    let mut acc = vec![0.0; n_weights];
    let mut touched: Vec<usize> = Vec::new();
    let mut mark = vec![false; n_weights];
    let mut entries: Vec<(usize, f64)> = Vec::new();
    let mut starts: Vec<usize> = Vec::with_capacity(system.n_fires() + 1);
    starts.push(0);

    for k in 0..system.n_fires() {
        let d = system.diag[k];
        if d == 0.0 || !d.is_finite() {
            return Err(SnnError::Singular { row: k });
        }
        let mut add = |w: usize, v: f64| {
            if !mark[w] {
                mark[w] = true;
                touched.push(w);
            }
            acc[w] += v;
        };
        for &(w, v) in &system.dv_dw[k] {
            add(w, -v);
        }
        for &(l, lkl) in &system.lower[k] {
            for &(w, x) in &entries[starts[l]..starts[l + 1]] {
                add(w, -lkl * x);
            }
        }
        touched.sort_unstable();
        for &w in &touched {
            entries.push((w, acc[w] / d));
            acc[w] = 0.0;
            mark[w] = false;
        }
        touched.clear();
        starts.push(entries.len());
    }
    Ok(FiringJacobian {
        entries,
        starts,
        n_weights,
    })
}

/// `∂L/∂W = (∂L/∂F)ᵀ·∂F/∂W + ∂L/∂W|direct`.
pub fn loss_weight_gradient(d_loss_d_fires: &[f64], dfdw: &FiringJacobian, direct: &[f64]) -> Result<Vec<f64>> {
    if d_loss_d_fires.len() != dfdw.n_fires() {
        return Err(SnnError::invalid(format!(
            "loss gradient has {} entries for {} fires",
            d_loss_d_fires.len(),
            dfdw.n_fires()
        )));
    }
    if direct.len() != dfdw.n_weights() {
        return Err(SnnError::invalid(format!(
            "direct gradient has {} entries for {} weights",
            direct.len(),
            dfdw.n_weights()
        )));
    }
    let mut grad = direct.to_vec();
    for (k, &g) in d_loss_d_fires.iter().enumerate() {
        if g != 0.0 {
            for &(w, x) in dfdw.row(k) {
                grad[w] += g * x;
            }
        }
    }
    Ok(grad)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightGradient {
    pub dfdw: FiringJacobian,
    pub dldw: Vec<f64>,
}

/// Assemble, solve and chain for one simulated sample of a loss that
/// depends on the weights only through the fire times.
///
/// Only fires up to the last one with a nonzero loss derivative are
/// differentiated, so `dfdw` may have fewer rows than the record.
pub fn exact_gradient(net: &NetworkTopology, sim: &Simulation, d_loss_d_fires: &[f64]) -> Result<WeightGradient> {
    if d_loss_d_fires.len() != sim.record.len() {
        return Err(SnnError::invalid(format!(
            "loss gradient has {} entries for {} fires",
            d_loss_d_fires.len(),
            sim.record.len()
        )));
    }
    let n_rows = d_loss_d_fires.iter().rposition(|&g| g != 0.0).map_or(0, |k| k + 1);
    let system = assemble_system_prefix(&sim.record, &sim.graph, net, n_rows)?;
    let dfdw = solve_firing_jacobian(&system)?;
    let dldw = loss_weight_gradient(&d_loss_d_fires[..n_rows], &dfdw, &vec![0.0; net.n_weights()])?;
    Ok(WeightGradient { dfdw, dldw })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDiffGradient {
    pub grad: Vec<f64>,
    /// `false` where perturbing the weight changed some neuron's spike
    /// count; the loss is discontinuous there and the entry is meaningless.
    pub stable: Vec<bool>,
    /// `false` where perturbing the weight changed the time order of spikes
    /// (a fire moved past another spike). `f(W)` has a kink there, so a
    /// finite difference that straddles it does not measure the derivative.
    pub order_stable: Vec<bool>,
}

/// Every spike of a run, inputs included, as `(neuron, index)` in time order.
pub fn spike_order(net: &NetworkTopology, inputs: &InputSpikes, record: &FiringRecord) -> Vec<(usize, usize)> {
    let mut all: Vec<(f64, usize, usize)> = Vec::new();
    for (slot, times) in inputs.iter().enumerate() {
        let neuron = net.inputs()[slot];
        all.extend(times.iter().enumerate().map(|(k, &t)| (t, neuron, k)));
    }
    all.extend(
        record
            .order()
            .iter()
            .zip(record.sorted_times())
            .map(|(l, &t)| (t, l.neuron, l.index)),
    );
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    all.into_iter().map(|(_, n, k)| (n, k)).collect()
}

/// Central finite differences `(L(W+h·e_k) - L(W-h·e_k)) / 2h`, each side a full
/// re-simulation. Weights whose perturbation changes any spike count, or the
/// time order of spikes, are flagged.
pub fn finite_diff_gradient<F>(
    net: &NetworkTopology,
    inputs: &InputSpikes,
    opts: &SimOptions,
    loss: F,
    h: f64,
) -> Result<FiniteDiffGradient>
where
    F: Fn(&FiringRecord) -> f64,
{
    if !(h > 0.0) {
        return Err(SnnError::invalid(format!("step must be positive, got {h}")));
    }
    let base_record = simulator::simulate(net, inputs, opts)?.record;
    let base = base_record.spike_counts();
    let base_order = spike_order(net, inputs, &base_record);
    let mut perturbed = net.clone();
    let mut grad = vec![0.0; net.n_weights()];
    let mut stable = vec![true; net.n_weights()];
    let mut order_stable = vec![true; net.n_weights()];
    for k in 0..net.n_weights() {
        let w0 = net.weights()[k];
        let mut side = |delta: f64| -> Result<(f64, bool, bool)> {
            perturbed.weights_mut()[k] = w0 + delta;
            let record = simulator::simulate(&perturbed, inputs, opts)?.record;
            let same_order = spike_order(&perturbed, inputs, &record) == base_order;
            Ok((loss(&record), record.spike_counts() == base, same_order))
        };
        let (plus, ok_plus, ord_plus) = side(h)?;
        let (minus, ok_minus, ord_minus) = side(-h)?;
        perturbed.weights_mut()[k] = w0;
        grad[k] = (plus - minus) / (2.0 * h);
        stable[k] = ok_plus && ok_minus;
        order_stable[k] = stable[k] && ord_plus && ord_minus;
    }
    Ok(FiniteDiffGradient {
        grad,
        stable,
        order_stable,
    })
}
