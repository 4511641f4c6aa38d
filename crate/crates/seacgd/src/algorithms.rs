//! The three drivers: the large-gradient descent phase, the
//! perturb-and-descend phase, and the outer saddle-escaping loop with its
//! energy-threshold decision logic and global iteration cap.

use crate::error::Result;
use crate::hyperparams::{HyperParams, UserInputs};
use crate::objective::{classify_point, Objective, PointClass, PointTag};
use crate::runtime::AcgdExecutor;
use crate::trace::{Phase, PhaseDecision, PhaseRecord};
use crate::util::subseed;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Result of one standalone phase call.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseResult {
    pub final_iterate: Vec<f64>,
    pub final_energy: f64,
    pub energy_drop: f64,
    pub global_iters_used: u64,
    pub phase: Phase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    SecondOrderStationary,
    IterationCapReached,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TerminationReport {
    pub outcome: Outcome,
    pub certificate: PointClass,
    pub total_global_iters: u64,
    pub total_perturbations: u64,
    pub escapes: u64,
    pub final_iterate: Vec<f64>,
    pub final_f: f64,
    pub phases: Vec<PhaseRecord>,
}

/// Samples a point uniformly from the d-ball of the given radius around
/// `center`: normalized Gaussian direction, length radius * U^(1/d).
pub fn uniform_ball_sample(center: &[f64], radius: f64, rng: &mut impl Rng) -> Vec<f64> {
    let d = center.len();
    if radius == 0.0 || d == 0 {
        return center.to_vec();
    }
    let mut dir: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let mut norm = crate::util::l2_norm(&dir);
    while norm == 0.0 {
        // astronomically unlikely; redraw rather than divide by zero
        dir.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        norm = crate::util::l2_norm(&dir);
    }
    let u: f64 = rng.gen_range(0.0..1.0f64);
    let len = radius * u.powf(1.0 / d as f64);
    dir.iter_mut()
        .zip(center)
        .for_each(|(v, c)| *v = c + *v * (len / norm));
    dir
}

/// One large-gradient phase: exactly tau+1 applied global iterations, with
/// the energy drop measured across the whole window.
pub fn lg_acgd(exec: &mut dyn AcgdExecutor) -> Result<PhaseResult> {
    exec.set_phase(Phase::Lg);
    let entry = exec.energy();
    let iters = exec.tau() as u64 + 1;
    exec.run_iters(iters)?;
    let exit = exec.energy();
    Ok(PhaseResult {
        final_iterate: exec.iterate(),
        final_energy: exit,
        energy_drop: entry - exit,
        global_iters_used: iters,
        phase: Phase::Lg,
    })
}

/// One perturbation phase: adds a uniform-ball perturbation of radius
/// eta * r, restarts the energy window at the perturbed point, and runs T
/// iterations. The reported drop is f at entry minus the exit energy, both
/// anchored at the pre-perturbation iterate the caller may need back.
pub fn p_acgd(
    exec: &mut dyn AcgdExecutor,
    hp: &HyperParams,
    seed: u64,
    xi_override: Option<&[f64]>,
) -> Result<PhaseResult> {
    let entry_f = exec.current_f();
    let xi = match xi_override {
        Some(v) => v.to_vec(),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(subseed(seed, 0x70657274));
            uniform_ball_sample(&vec![0.0; exec.dim()], hp.eta * hp.r, &mut rng)
        }
    };
    // T counts full coordinate passes; block executors need W applied
    // iterations per pass.
    let episode = hp.t.saturating_mul(exec.block_iters_per_pass());
    exec.set_phase(Phase::Perturb);
    exec.perturb(&xi)?;
    exec.run_iters(episode)?;
    let exit = exec.energy();
    Ok(PhaseResult {
        final_iterate: exec.iterate(),
        final_energy: exit,
        energy_drop: entry_f - exit,
        global_iters_used: episode,
        phase: Phase::Perturb,
    })
}

/// Knobs for the outer loop that tests and experiments occasionally need.
#[derive(Debug, Clone, Default)]
pub struct SeOptions {
    /// Overrides the derived global iteration cap.
    pub max_total_iters: Option<u64>,
    /// Forces the first perturbation direction (test hook).
    pub xi_override: Option<Vec<f64>>,
    /// Power-iteration budget for the stopping certificate; 0 uses a default.
    pub classify_power_iters: usize,
}

/// The outer saddle-escaping loop. Runs large-gradient phases as long as
/// each full window drops the energy by at least the threshold; otherwise
/// perturbs and runs an escape episode of T iterations. Two consecutive
/// sub-threshold drops certify the pre-perturbation iterate as the answer.
pub fn se_acgd(
    exec: &mut dyn AcgdExecutor,
    objective: &dyn Objective,
    inputs: &UserInputs,
    hp: &HyperParams,
    seed: u64,
    opts: &SeOptions,
) -> Result<TerminationReport> {
    inputs.validate()?;
    // T (and the cap built from it) counts full coordinate passes; block
    // executors apply block_iters_per_pass() global iterations per pass.
    let pass = exec.block_iters_per_pass().max(1);
    let episode = hp.t.saturating_mul(pass);
    let cap = opts
        .max_total_iters
        .unwrap_or_else(|| hp.max_total_iters(inputs.delta_f).saturating_mul(pass));
    let power_iters = if opts.classify_power_iters == 0 { 600 } else { opts.classify_power_iters };
    let classify_seed = subseed(seed, 0x636c7366);
    let mut rng = ChaCha8Rng::seed_from_u64(subseed(seed, 0x70657274));
    let mut xi_override = opts.xi_override.clone();
    let tau = exec.tau() as u64;
    let mut phases = Vec::new();
    let mut total: u64 = 0;
    let mut perturbations: u64 = 0;
    let mut escapes: u64 = 0;

    let cap_report = |exec: &mut dyn AcgdExecutor,
                      phases: Vec<PhaseRecord>,
                      total,
                      perturbations,
                      escapes|
     -> Result<TerminationReport> {
        let x = exec.iterate();
        let f = exec.current_f();
        let certificate = classify_point(objective, &x, inputs.eps, power_iters, classify_seed)?;
        Ok(TerminationReport {
            outcome: Outcome::IterationCapReached,
            certificate,
            total_global_iters: total,
            total_perturbations: perturbations,
            escapes,
            final_iterate: x,
            final_f: f,
            phases,
        })
    };

    loop {
        // Large-gradient phase over a full window.
        if total + tau + 1 > cap {
            return cap_report(exec, phases, total, perturbations, escapes);
        }
        exec.set_phase(Phase::Lg);
        let entry_e = exec.energy();
        exec.run_iters(tau + 1)?;
        total += tau + 1;
        let exit_e = exec.energy();
        let lg_drop = entry_e - exit_e;
        let lg_ok = lg_drop >= hp.f_threshold;
        phases.push(PhaseRecord {
            phase: Phase::Lg,
            entry_e,
            exit_e,
            threshold_f: hp.f_threshold,
            iters: tau + 1,
            decision: if lg_ok { PhaseDecision::Continue } else { PhaseDecision::Perturb },
        });
        if lg_ok {
            continue;
        }

        // Stuck: remember the candidate, perturb, run an escape episode.
        if total + episode > cap {
            return cap_report(exec, phases, total, perturbations, escapes);
        }
        let x_s = exec.iterate();
        let f_s = exec.current_f();
        let xi = match xi_override.take() {
            Some(v) => v,
            None => uniform_ball_sample(&vec![0.0; exec.dim()], hp.eta * hp.r, &mut rng),
        };
        perturbations += 1;
        exec.set_phase(Phase::Perturb);
        exec.perturb(&xi)?;
        exec.run_iters(episode)?;
        total += episode;
        let exit_e = exec.energy();
        let p_drop = f_s - exit_e;
        let escaped = p_drop >= hp.f_threshold;
        phases.push(PhaseRecord {
            phase: Phase::Perturb,
            entry_e: f_s,
            exit_e,
            threshold_f: hp.f_threshold,
            iters: episode,
            decision: if escaped { PhaseDecision::Continue } else { PhaseDecision::Stop },
        });
        if escaped {
            escapes += 1;
            continue;
        }

        // Both drops sub-threshold: the pre-perturbation iterate is the
        // answer.
        exec.set_phase(Phase::Done);
        let certificate =
            classify_point(objective, &x_s, inputs.eps, power_iters, classify_seed)?;
        return Ok(TerminationReport {
            outcome: Outcome::SecondOrderStationary,
            certificate,
            total_global_iters: total,
            total_perturbations: perturbations,
            escapes,
            final_iterate: x_s,
            final_f: f_s,
            phases,
        });
    }
}

/// Convenience check used by callers reporting run quality.
pub fn certificate_is_second_order(c: &PointClass) -> bool {
    c.tag == PointTag::NearSecondOrderStationary
}
