//! Random small networks and losses for checking exact gradients against
//! finite differences, and event-driven fire times against Euler integration.

use rand::Rng;

use crate::error::{Result, SnnError};
use crate::fpgrad::{assemble_system, finite_diff_gradient, loss_weight_gradient, solve_firing_jacobian};
use crate::kernels::NeuronParams;
use crate::network::NetworkTopology;
use crate::simulator::{euler_simulate, simulate, FiringRecord, SimOptions, SpikeLabel};

/// `ℓ(F) = Σ c·f + d·f²` over a few labelled fires.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomLoss {
    pub terms: Vec<(SpikeLabel, f64, f64)>,
}

impl RandomLoss {
    /// NaN when a labelled fire does not exist in `record`.
    pub fn value(&self, record: &FiringRecord) -> f64 {
        self.terms
            .iter()
            .map(|&(label, c, d)| match record.times(label.neuron).get(label.index) {
                Some(&f) => c * f + d * f * f,
                None => f64::NAN,
            })
            .sum()
    }

    /// `∂ℓ/∂F` in sorted fire order.
    pub fn gradient(&self, record: &FiringRecord) -> Vec<f64> {
        let mut g = vec![0.0; record.len()];
        for &(label, c, d) in &self.terms {
            let f = record.times(label.neuron)[label.index];
            g[record.position(label)] += c + 2.0 * d * f;
        }
        g
    }
}

#[derive(Debug, Clone)]
pub struct RandomCase {
    pub net: NetworkTopology,
    pub inputs: Vec<Vec<f64>>,
    pub opts: SimOptions,
    pub loss: RandomLoss,
}

/// Peak of the feed kernel, reached at `ln(α/β)/(α-β)`.
pub fn feed_kernel_peak(params: &NeuronParams) -> f64 {
    let t = (params.alpha / params.beta).ln() / (params.alpha - params.beta);
    params.feed_kernel(t)
}

/// Draws a layered network of at most 10 neurons in 2 or 3 layers with
/// positive weights, one to three input spikes per input neuron, and a loss
/// on up to four of its fires. Redraws until at least one neuron fires.
pub fn random_case<R: Rng>(rng: &mut R) -> Result<RandomCase> {
    loop {
        let alpha = rng.random_range(0.5..2.0);
        let beta = loop {
            let b: f64 = rng.random_range(0.5..2.0);
            if (b - alpha).abs() >= 0.1 {
                break b;
            }
        };
        let theta = rng.random_range(0.5..1.5);
        let params = NeuronParams::new(alpha, beta, theta)?;
        let mut sizes = vec![rng.random_range(1..=3)];
        if rng.random_bool(0.6) {
            sizes.push(rng.random_range(1..=4));
        }
        sizes.push(rng.random_range(1..=3));
        let scale = theta / feed_kernel_peak(&params);
        let net = NetworkTopology::layered(params, &sizes, |_, _, _| scale * rng.random_range(0.3..2.0))?;
        let inputs: Vec<Vec<f64>> = (0..sizes[0])
            .map(|_| {
                let n = rng.random_range(1..=3);
                let mut s: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..4.0)).collect();
                s.sort_by(f64::total_cmp);
                s
            })
            .collect();
        let opts = SimOptions::new(12.0);
        let record = simulate(&net, &inputs, &opts)?.record;
        if record.is_empty() {
            continue;
        }
        let n_terms = rng.random_range(1..=4.min(record.len()));
        let terms = (0..n_terms)
            .map(|_| {
                let label = record.order()[rng.random_range(0..record.len())];
                (label, rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            })
            .collect();
        return Ok(RandomCase {
            net,
            inputs,
            opts,
            loss: RandomLoss { terms },
        });
    }
}

/// Relative error with an absolute floor, so tiny gradients compare absolutely.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseReport {
    pub n_fires: usize,
    pub exact: Vec<f64>,
    pub finite_diff: Vec<f64>,
    pub stable: Vec<bool>,
    pub order_stable: Vec<bool>,
    /// Largest relative error over spike-count-stable weights.
    pub max_rel_err: f64,
    /// The same over weights whose perturbation also kept the spike order.
    pub max_rel_err_smooth: f64,
    /// Every lower entry of `L` references an earlier fire and every diagonal is positive.
    pub triangular: bool,
    pub min_diagonal: f64,
}

impl CaseReport {
    pub fn n_stable(&self) -> usize {
        self.stable.iter().filter(|&&s| s).count()
    }

    pub fn n_order_stable(&self) -> usize {
        self.order_stable.iter().filter(|&&s| s).count()
    }
}

pub fn check_case(case: &RandomCase, h: f64) -> Result<CaseReport> {
    let sim = simulate(&case.net, &case.inputs, &case.opts)?;
    let system = assemble_system(&sim.record, &sim.graph, &case.net)?;
    let triangular = (0..system.n_fires()).all(|k| system.lower_row(k).iter().all(|&(l, _)| l < k))
        && system.diagonal().iter().all(|&d| d > 0.0);
    let min_diagonal = system.diagonal().iter().copied().fold(f64::INFINITY, f64::min);
    let dfdw = solve_firing_jacobian(&system)?;
    let dldf = case.loss.gradient(&sim.record);
    let exact = loss_weight_gradient(&dldf, &dfdw, &vec![0.0; case.net.n_weights()])?;
    let fd = finite_diff_gradient(&case.net, &case.inputs, &case.opts, |r| case.loss.value(r), h)?;
    let worst = |mask: &[bool]| {
        exact
            .iter()
            .zip(&fd.grad)
            .zip(mask)
            .filter(|(_, &s)| s)
            .map(|((&a, &b), _)| relative_error(a, b))
            .fold(0.0, f64::max)
    };
    let max_rel_err = worst(&fd.stable);
    let max_rel_err_smooth = worst(&fd.order_stable);
    Ok(CaseReport {
        n_fires: sim.record.len(),
        exact,
        finite_diff: fd.grad,
        stable: fd.stable,
        order_stable: fd.order_stable,
        max_rel_err,
        max_rel_err_smooth,
        triangular,
        min_diagonal,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EulerReport {
    pub counts_equal: bool,
    /// Largest |event-driven − Euler| over matched fires.
    pub max_abs_diff: f64,
}

pub fn euler_check(case: &RandomCase, dt: f64) -> Result<EulerReport> {
    let exact = simulate(&case.net, &case.inputs, &case.opts)?.record;
    let euler = euler_simulate(&case.net, &case.inputs, case.opts.t_max, dt)?;
    if exact.n_neurons() != euler.n_neurons() {
        return Err(SnnError::invalid("records cover different neuron counts"));
    }
    let counts_equal = exact.spike_counts() == euler.spike_counts();
    let max_abs_diff = exact
        .per_neuron()
        .iter()
        .zip(euler.per_neuron())
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    Ok(EulerReport {
        counts_equal,
        max_abs_diff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_cases_are_small_and_fire() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let case = random_case(&mut rng).unwrap();
            assert!(case.net.n_neurons() <= 10);
            assert!(case.net.weights().iter().all(|&w| w > 0.0));
            let record = simulate(&case.net, &case.inputs, &case.opts).unwrap().record;
            assert!(!record.is_empty());
            assert!(case.loss.value(&record).is_finite());
        }
    }

    #[test]
    fn kernel_peak() {
        let p = NeuronParams::new(1.0, 2.0, 1.0).unwrap();
        assert!((feed_kernel_peak(&p) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn a_few_cases_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let case = random_case(&mut rng).unwrap();
            let report = check_case(&case, 1e-6).unwrap();
            assert!(report.triangular);
            assert!(report.max_rel_err <= 1e-4, "{report:?}");
        }
    }
}
