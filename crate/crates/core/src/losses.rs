//! Time-to-first-spike classification loss over the output neurons.

use crate::error::{Result, SnnError};
use crate::simulator::{FiringRecord, SpikeLabel};

/// Earliest fire of each output neuron. Silent neurons carry the sentinel
/// time `t_max` and are masked.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstSpikes {
    pub times: Vec<f64>,
    pub silent: Vec<bool>,
    /// Global record position of each output's first fire.
    pub positions: Vec<Option<usize>>,
    /// Number of fires in the record the spikes were taken from.
    pub n_fires: usize,
}

pub fn first_spikes(record: &FiringRecord, outputs: &[usize], t_max: f64) -> FirstSpikes {
    let mut times = Vec::with_capacity(outputs.len());
    let mut silent = Vec::with_capacity(outputs.len());
    let mut positions = Vec::with_capacity(outputs.len());
    for &o in outputs {
        match record.times(o).first() {
            Some(&t) => {
                times.push(t);
                silent.push(false);
                positions.push(Some(record.position(SpikeLabel { neuron: o, index: 0 })));
            }
            None => {
                times.push(t_max);
                silent.push(true);
                positions.push(None);
            }
        }
    }
    FirstSpikes {
        times,
        silent,
        positions,
        n_fires: record.len(),
    }
}

impl FirstSpikes {
    /// Predicted class: the earliest spiking output (lowest index on ties).
    /// `None` when every output is silent.
    pub fn prediction(&self) -> Option<usize> {
        self.times
            .iter()
            .zip(&self.silent)
            .enumerate()
            .filter(|(_, (_, &s))| !s)
            .min_by(|a, b| a.1 .0.total_cmp(b.1 .0).then(a.0.cmp(&b.0)))
            .map(|(i, _)| i)
    }

    pub fn n_silent(&self) -> usize {
        self.silent.iter().filter(|&&s| s).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TtfsLoss {
    /// Softmax temperature on the negated first-spike times.
    pub tau0: f64,
    /// Time constant of the label-neuron regularizer.
    pub tau1: f64,
    /// Regularizer weight.
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossResult {
    pub loss: f64,
    /// Gradient with respect to each output's first-spike time.
    pub d_first: Vec<f64>,
    /// The same gradient spread over all fires of the record (nonzero only at
    /// the first fire of each spiking output).
    pub d_fires: Vec<f64>,
}

impl TtfsLoss {
    pub fn new(tau0: f64, tau1: f64, gamma: f64) -> Result<Self> {
        if !(tau0 > 0.0 && tau1 > 0.0) || !(gamma >= 0.0) {
            return Err(SnnError::invalid(format!(
                "need tau0, tau1 > 0 and gamma >= 0 (got {tau0}, {tau1}, {gamma})"
            )));
        }
        Ok(TtfsLoss { tau0, tau1, gamma })
    }

    /// Per-sample loss
    /// `-log softmax(-f/τ0)[label] + γ·(e^{f_label/τ1} - 1)`
    /// and its gradient. Silent outputs take part in the softmax with their
    /// sentinel time but receive zero gradient.
    pub fn evaluate(&self, first: &FirstSpikes, label: usize) -> Result<LossResult> {
        let n = first.times.len();
        if label >= n {
            return Err(SnnError::invalid(format!("label {label} out of range for {n} outputs")));
        }
        let logits: Vec<f64> = first.times.iter().map(|t| -t / self.tau0).collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        let log_sum = max + sum.ln();

        let f_label = first.times[label];
        let growth = (f_label / self.tau1).exp();
        let loss = log_sum - logits[label] + self.gamma * (growth - 1.0);

        let mut d_first: Vec<f64> = exps
            .iter()
            .enumerate()
            .map(|(j, e)| {
                let indicator = if j == label { 1.0 } else { 0.0 };
                (indicator - e / sum) / self.tau0
            })
            .collect();
        d_first[label] += self.gamma / self.tau1 * growth;
        for (d, &s) in d_first.iter_mut().zip(&first.silent) {
            if s {
                *d = 0.0;
            }
        }

        let mut d_fires = vec![0.0; first.n_fires];
        for (d, pos) in d_first.iter().zip(&first.positions) {
            if let Some(k) = *pos {
                d_fires[k] = *d;
            }
        }
        Ok(LossResult { loss, d_first, d_fires })
    }
}

/// Free-function form of [`TtfsLoss::evaluate`].
pub fn ttfs_loss(first: &FirstSpikes, label: usize, tau0: f64, tau1: f64, gamma: f64) -> Result<LossResult> {
    TtfsLoss::new(tau0, tau1, gamma)?.evaluate(first, label)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spikes(times: &[f64]) -> FirstSpikes {
        FirstSpikes {
            times: times.to_vec(),
            silent: vec![false; times.len()],
            positions: (0..times.len()).map(Some).collect(),
            n_fires: times.len(),
        }
    }

    #[test]
    fn sentinel_for_silent_outputs() {
        let record = FiringRecord::empty(4);
        let first = first_spikes(&record, &[2, 3], 8.0);
        assert_eq!(first.times, vec![8.0, 8.0]);
        assert_eq!(first.silent, vec![true, true]);
        assert_eq!(first.prediction(), None);

        let record = FiringRecord::from_per_neuron(vec![vec![], vec![1.5, 3.5], vec![], vec![0.7]]).unwrap();
        let first = first_spikes(&record, &[1, 2, 3], 8.0);
        assert_eq!(first.times, vec![1.5, 8.0, 0.7]);
        assert_eq!(first.silent, vec![false, true, false]);
        assert_eq!(first.positions, vec![Some(1), None, Some(0)]);
        assert_eq!(first.prediction(), Some(2));
    }

    #[test]
    fn equal_spikes_give_log_three() {
        let r = ttfs_loss(&spikes(&[1.2, 1.2, 1.2]), 1, 0.2, 1.0, 0.0).unwrap();
        assert!((r.loss - 3f64.ln()).abs() < 1e-14);
        assert!((r.loss - 1.0986).abs() < 1e-4);
    }

    #[test]
    fn saturated_softmax() {
        let r = ttfs_loss(&spikes(&[0.0, 50.0, 60.0]), 0, 1.0, 1.0, 0.0).unwrap();
        assert!(r.loss < 1e-20);
    }

    #[test]
    fn invalid_label() {
        assert!(ttfs_loss(&spikes(&[1.0, 2.0]), 2, 1.0, 1.0, 0.0).is_err());
        assert!(ttfs_loss(&spikes(&[1.0, 2.0]), 0, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn silent_outputs_get_no_gradient() {
        let mut first = spikes(&[1.0, 2.0, 5.0]);
        first.silent[2] = true;
        first.positions[2] = None;
        let r = ttfs_loss(&first, 0, 1.0, 1.0, 0.1).unwrap();
        assert_eq!(r.d_first[2], 0.0);
        assert_eq!(r.d_fires[2], 0.0);
        assert_eq!(r.d_fires[0], r.d_first[0]);
    }
}
