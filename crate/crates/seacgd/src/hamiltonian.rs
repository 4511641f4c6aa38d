//! Discrete Hamiltonian over a sliding window of recent step norms, plus
//! descent checks against the analytical per-step drop bounds.
//!
//! E_j = f(x^j) + (L / (2 sqrt(tau))) * sum_{i=j-tau}^{j-1} w_i ||x^{i+1} - x^i||^2
//!
//! with weights w = 1..tau from oldest to newest and zero padding for steps
//! before iteration 0, so E_0 = f(x^0).

use crate::error::{Error, Result};
use crate::hyperparams::{HyperParams, UserInputs};
use crate::util::Kahan;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HamiltonianWindow {
    tau: usize,
    /// Exactly `tau` squared step norms, oldest first.
    norms: VecDeque<f64>,
    current_f: f64,
    current_j: u64,
}

impl HamiltonianWindow {
    /// Fresh window at iteration 0: no history, energy equals f(x^0).
    pub fn new(tau: usize, f0: f64) -> Result<Self> {
        if tau < 1 {
            return Err(Error::Config("tau must be at least 1".into()));
        }
        Ok(HamiltonianWindow {
            tau,
            norms: std::iter::repeat(0.0).take(tau).collect(),
            current_f: f0,
            current_j: 0,
        })
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn current_f(&self) -> f64 {
        self.current_f
    }

    pub fn current_j(&self) -> u64 {
        self.current_j
    }

    /// Stored squared norms, oldest first.
    pub fn norms(&self) -> impl Iterator<Item = f64> + '_ {
        self.norms.iter().copied()
    }

    /// Advances the window by one global iteration.
    pub fn push_step(&mut self, new_f: f64, step_sq_norm: f64) -> Result<()> {
        if !(step_sq_norm >= 0.0) {
            return Err(Error::Contract(format!(
                "squared step norm must be nonnegative, got {step_sq_norm}"
            )));
        }
        self.norms.pop_front();
        self.norms.push_back(step_sq_norm);
        self.current_f = new_f;
        self.current_j += 1;
        Ok(())
    }

    /// Discards all history and restarts the window at the given value, as
    /// if iteration 0 happened here. Used when a perturbation resets the
    /// descent accounting.
    pub fn reset(&mut self, f: f64) {
        for n in &mut self.norms {
            *n = 0.0;
        }
        self.current_f = f;
        self.current_j = 0;
    }

    /// Current energy E_j.
    pub fn energy(&self, l: f64) -> f64 {
        let mut kinetic = Kahan::new();
        for (k, n) in self.norms.iter().enumerate() {
            kinetic.add((k + 1) as f64 * n);
        }
        self.current_f + l / (2.0 * (self.tau as f64).sqrt()) * kinetic.value()
    }
}

/// Outcome of checking one step's energy drop against the two analytical
/// lower bounds. Slack is drop minus bound; nonnegative slack means the
/// bound held.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescentReport {
    pub drop: f64,
    pub step_bound_met: bool,
    pub step_bound_slack: f64,
    pub rate_bound_met: bool,
    pub rate_bound_slack: f64,
}

/// Checks E_prev - E_next against L(1/(eta L) - sqrt(tau) - 1/2)||step||^2
/// and against the simplified rate (3/8)L||step||^2.
pub fn check_descent(
    e_prev: f64,
    e_next: f64,
    step_sq_norm: f64,
    hp: &HyperParams,
    inputs: &UserInputs,
) -> DescentReport {
    let l = inputs.l;
    let tau = inputs.tau as f64;
    let drop = e_prev - e_next;
    let step_bound = l * (1.0 / (hp.eta * l) - tau.sqrt() - 0.5) * step_sq_norm;
    let rate_bound = 0.375 * l * step_sq_norm;
    let tol = 1e-12 * (1.0 + e_prev.abs() + e_next.abs());
    DescentReport {
        drop,
        step_bound_met: drop - step_bound >= -tol,
        step_bound_slack: drop - step_bound,
        rate_bound_met: drop - rate_bound >= -tol,
        rate_bound_slack: drop - rate_bound,
    }
}
