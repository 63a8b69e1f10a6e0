//! Update rules: plain gradient descent and bias-corrected Adam.

use crate::error::{Result, SnnError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamHyper {
    pub eta: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            eta: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    /// One in-place Adam step.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], hyper: &AdamHyper) -> Result<()> {
        if params.len() != grads.len() || params.len() != self.m.len() {
            return Err(SnnError::invalid(format!(
                "shape mismatch: {} params, {} grads, state of {}",
                params.len(),
                grads.len(),
                self.m.len()
            )));
        }
        self.t += 1;
        let c1 = 1.0 - hyper.beta1.powi(self.t as i32);
        let c2 = 1.0 - hyper.beta2.powi(self.t as i32);
        for ((p, &g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = hyper.beta1 * *m + (1.0 - hyper.beta1) * g;
            *v = hyper.beta2 * *v + (1.0 - hyper.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= hyper.eta * m_hat / (v_hat.sqrt() + hyper.epsilon);
        }
        Ok(())
    }
}

/// Pure form of [`AdamState::step`].
pub fn adam_step(params: &[f64], grads: &[f64], state: &AdamState, hyper: &AdamHyper) -> Result<(Vec<f64>, AdamState)> {
    let mut params = params.to_vec();
    let mut state = state.clone();
    state.step(&mut params, grads, hyper)?;
    Ok((params, state))
}

pub fn sgd_step(params: &mut [f64], grads: &[f64], eta: f64) -> Result<()> {
    if params.len() != grads.len() {
        return Err(SnnError::invalid(format!(
            "shape mismatch: {} params, {} grads",
            params.len(),
            grads.len()
        )));
    }
    for (p, g) in params.iter_mut().zip(grads) {
        *p -= eta * g;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// Optimizer together with its running state.
#[derive(Debug, Clone, PartialEq)]
pub enum Optimizer {
    Sgd { eta: f64 },
    Adam { hyper: AdamHyper, state: AdamState },
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, hyper: AdamHyper, n: usize) -> Self {
        match kind {
            OptimizerKind::Sgd => Optimizer::Sgd { eta: hyper.eta },
            OptimizerKind::Adam => Optimizer::Adam {
                hyper,
                state: AdamState::new(n),
            },
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        match self {
            Optimizer::Sgd { eta } => sgd_step(params, grads, *eta),
            Optimizer::Adam { hyper, state } => state.step(params, grads, hyper),
        }
    }
}
