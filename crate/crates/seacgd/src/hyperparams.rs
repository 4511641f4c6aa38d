//! Derivation of every run parameter from the user-supplied problem data,
//! including the exponent beta and the admissible step-size bound.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Everything the user supplies; all derived quantities come from here.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UserInputs {
    /// Target accuracy.
    pub eps: f64,
    /// Maximum bounded staleness, in global iterations.
    pub tau: usize,
    /// Gradient-Lipschitz constant.
    pub l: f64,
    /// Hessian-Lipschitz constant.
    pub rho: f64,
    /// Failure probability budget.
    pub delta: f64,
    /// Problem dimension.
    pub d: usize,
    /// Starting point.
    pub x0: Vec<f64>,
    /// Worker count.
    pub workers: usize,
    /// Slack multiplier on the log factor, >= 1.
    pub mu: f64,
    /// Global lower bound on f.
    pub fstar: f64,
    /// Initial suboptimality f(x0) - fstar; must be positive.
    pub delta_f: f64,
}

impl UserInputs {
    pub fn validate(&self) -> Result<()> {
        if self.tau < 1 {
            return Err(Error::Config("tau must be at least 1".into()));
        }
        if self.workers >= 1 && self.tau + 1 < self.workers {
            return Err(Error::Config(format!(
                "tau = {} cannot be smaller than workers - 1 = {}",
                self.tau,
                self.workers - 1
            )));
        }
        if self.workers == 0 {
            return Err(Error::Config("at least one worker is required".into()));
        }
        if !(self.eps > 0.0) || !(self.l > 0.0) || !(self.rho > 0.0) {
            return Err(Error::Config("eps, L, and rho must be strictly positive".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("delta must lie in (0,1), got {}", self.delta)));
        }
        if self.mu < 1.0 {
            return Err(Error::Config(format!("mu must be at least 1, got {}", self.mu)));
        }
        if self.x0.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: self.x0.len() });
        }
        let limit = self.l * self.l / self.rho;
        if self.eps > limit {
            return Err(Error::Regime { eps: self.eps, limit });
        }
        if !(self.delta_f > 0.0) {
            return Err(Error::DegenerateProblem { delta_f: self.delta_f });
        }
        Ok(())
    }
}

/// All derived run parameters; frozen at run start and embedded in trace
/// headers so experiments are self-describing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub sigma: f64,
    pub iota: f64,
    pub chi: f64,
    pub beta: f64,
    pub eta: f64,
    /// Perturbation magnitude parameter.
    pub r: f64,
    /// Gradient floor used by the saddle trigger.
    pub phi: f64,
    /// Per-window Hamiltonian drop threshold.
    pub f_threshold: f64,
    /// Per-episode failure probability.
    pub gamma: f64,
    /// Escape-episode length in global iterations.
    pub t: u64,
    /// Radius below which a perturbation certifies second-order stationarity.
    pub r0: f64,
    /// Bookkeeping quantity eta * eps; emitted but consumed by nothing.
    pub m: f64,
}

/// Largest beta <= 1/2 with (15/8)·tau^(1/2-beta) >= sqrt(tau) + 1/2.
///
/// The constraint's left side is decreasing in beta, so the solution is the
/// boundary: beta = 1/2 when (8/15)(sqrt(tau)+1/2) <= 1 (only tau = 1), else
/// beta = 1/2 - ln((8/15)(sqrt(tau)+1/2)) / ln(tau).
pub fn solve_beta(tau: usize) -> Result<f64> {
    if tau < 1 {
        return Err(Error::Config("tau must be at least 1".into()));
    }
    let t = tau as f64;
    let a = (8.0 / 15.0) * (t.sqrt() + 0.5);
    let beta = if a <= 1.0 { 0.5 } else { 0.5 - a.ln() / t.ln() };
    if beta <= 0.0 {
        // Unreachable for tau >= 1: a grows like (8/15)sqrt(tau), so
        // ln(a)/ln(tau) stays below 1/2. Guard kept defensively.
        return Err(Error::Config(format!("no positive beta exists for tau = {tau}")));
    }
    Ok(beta.min(0.5))
}

/// True iff `eta` lies in the admissible descent region
/// eta <= 1/(2·L·tau^(1/2-beta)·iota·chi) for the given inputs.
pub fn validate_step_size(eta: f64, inputs: &UserInputs, beta: f64) -> bool {
    let (sigma, iota, chi) = sigma_iota_chi(inputs);
    debug_assert!(sigma >= 8.0);
    let tpow = (inputs.tau as f64).powf(0.5 - beta);
    eta <= 1.0 / (2.0 * inputs.l * tpow * iota * chi)
}

fn sigma_iota_chi(inputs: &UserInputs) -> (f64, f64, f64) {
    let d = inputs.d as f64;
    let sigma = (1280.0 * d.sqrt() * inputs.delta_f * inputs.l * inputs.tau as f64
        / (PI.sqrt() * inputs.eps * inputs.eps * inputs.delta))
        .max(8.0);
    let iota = inputs.mu * sigma.log2();
    let chi = ((inputs.rho * inputs.eps).sqrt() / (inputs.l * inputs.l)).max(1.0);
    (sigma, iota, chi)
}

pub fn derive_params(inputs: &UserInputs) -> Result<HyperParams> {
    inputs.validate()?;
    let (sigma, iota, chi) = sigma_iota_chi(inputs);
    let beta = solve_beta(inputs.tau)?;
    let tau = inputs.tau as f64;
    let tpow = tau.powf(0.5 - beta);
    let l = inputs.l;
    let eps = inputs.eps;

    let eta = 1.0 / (2.0 * l * tpow * iota * chi);
    let r = eta * eps * l;
    let phi = 5.0 * eps / (4.0 * l * tpow * iota * chi);
    let f_threshold = l * (1.0 / (eta * l) - tau.sqrt() - 0.5) * eta * eta * eps * eps;
    let gamma = inputs.delta * f_threshold / inputs.delta_f;
    let sqrt_rho_eps = (inputs.rho * eps).sqrt();
    let t_real = ((sigma * iota * iota * chi * chi).log2() / (eta * sqrt_rho_eps)).ceil();
    let t = if t_real >= u64::MAX as f64 { u64::MAX } else { t_real as u64 };
    let r0 = r * gamma * PI.sqrt() / (2.0 * (inputs.d as f64).sqrt());
    let m = eta * eps;

    let hp = HyperParams { sigma, iota, chi, beta, eta, r, phi, f_threshold, gamma, t, r0, m };

    // Structural guarantees the rest of the crate leans on.
    debug_assert!(hp.sigma >= 8.0);
    debug_assert!(inputs.mu < 1.0 || hp.iota >= 3.0);
    debug_assert!(hp.eta * l <= 0.5 + 1e-12);
    debug_assert!(hp.f_threshold >= 0.375 * l * eta * eta * eps * eps * (1.0 - 1e-12));
    if !(hp.gamma > 0.0 && hp.gamma < 1.0) {
        return Err(Error::Config(format!(
            "derived per-episode failure probability gamma = {} is not in (0,1); \
             the problem is too easy or too hard for these inputs",
            hp.gamma
        )));
    }
    Ok(hp)
}

impl HyperParams {
    /// Upper bound on the total number of gradient iterations a full run can
    /// take: the energy must drop by at least `f_threshold` per monitored
    /// window, and it has at most `delta_f` of room.
    pub fn max_total_iters(&self, delta_f: f64) -> u64 {
        let episodes = (delta_f / self.f_threshold).ceil().max(1.0);
        let per = (self.t as f64).max(1.0);
        let total = episodes * per;
        if total >= u64::MAX as f64 {
            u64::MAX
        } else {
            total as u64
        }
    }
}
