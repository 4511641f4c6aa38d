//! Comparison algorithms: serial gradient descent, serial perturbed
//! gradient descent, and barrier-synchronous parallel perturbed gradient
//! descent. The PGD variants reuse the derived hyperparameters and the same
//! outer loop as the asynchronous solver, so comparisons isolate synchrony
//! versus asynchrony.

use crate::algorithms::{se_acgd, SeOptions, TerminationReport};
use crate::error::Result;
use crate::hyperparams::{HyperParams, UserInputs};
use crate::objective::Objective;
use crate::runtime::sync::{SyncConfig, SyncExecutor};
use crate::runtime::{AcgdExecutor, DelayModel};
use crate::trace::{Phase, RunHeader, RunTrace};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    SerialGd,
    SerialPgd,
    SyncParallelPgd,
}

impl BaselineKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BaselineKind::SerialGd => "serial_gd",
            BaselineKind::SerialPgd => "serial_pgd",
            BaselineKind::SyncParallelPgd => "sync_parallel_pgd",
        }
    }
}

/// Scalar knobs for a baseline run. SerialGd ignores the perturbation
/// fields; the PGD variants draw from the same uniform-ball sampler as the
/// asynchronous solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub kind: BaselineKind,
    pub eta: f64,
    pub perturb_radius: f64,
    pub perturb_interval_t: u64,
    pub threshold: f64,
    pub seed: u64,
    pub sample_every: u64,
    pub target_f: Option<f64>,
}

impl BaselineConfig {
    /// Mirrors the derived hyperparameters so the baseline's trigger logic
    /// matches the asynchronous solver's.
    pub fn from_derived(kind: BaselineKind, hp: &HyperParams, seed: u64) -> Self {
        BaselineConfig {
            kind,
            eta: hp.eta,
            perturb_radius: hp.eta * hp.r,
            perturb_interval_t: hp.t,
            threshold: hp.f_threshold,
            seed,
            sample_every: 1 << 20,
            target_f: None,
        }
    }
}

fn header(
    algorithm: &str,
    objective: &dyn Objective,
    workers: usize,
    tau: usize,
    seed: u64,
    delay: &DelayModel,
    eta: f64,
    hp: Option<HyperParams>,
    target_f: Option<f64>,
) -> RunHeader {
    RunHeader {
        algorithm: algorithm.to_string(),
        objective: "quartic".to_string(),
        dim: objective.spec().dim,
        workers,
        tau,
        mode: "simulated".to_string(),
        seed,
        expected_delay: delay.expected_delay,
        eta,
        hp,
        target_f,
    }
}

/// Plain full-gradient descent, no perturbations. One iteration costs one
/// virtual time unit.
pub fn run_serial_gd(
    objective: &dyn Objective,
    x0: &[f64],
    cfg: &BaselineConfig,
    max_iters: u64,
) -> Result<RunTrace> {
    let sync_cfg = SyncConfig {
        seed: cfg.seed,
        sample_every: cfg.sample_every,
        target_f: cfg.target_f,
        ..SyncConfig::new(cfg.eta, 1, 1)
    };
    let mut exec = SyncExecutor::new(objective, x0, sync_cfg)?;
    exec.run_iters(max_iters)?;
    exec.set_phase(Phase::Done);
    let hdr = header(
        BaselineKind::SerialGd.as_str(),
        objective,
        1,
        1,
        cfg.seed,
        &DelayModel::none(),
        cfg.eta,
        None,
        cfg.target_f,
    );
    Ok(RunTrace {
        header: hdr,
        samples: exec.take_samples(),
        phases: Vec::new(),
        final_f: exec.current_f(),
        total_iters: exec.global_j(),
        virtual_time: exec.virtual_time(),
        time_to_target: exec.time_to_target(),
    })
}

fn run_sync_pgd(
    objective: &dyn Objective,
    x0: &[f64],
    inputs: &UserInputs,
    hp: &HyperParams,
    kind: BaselineKind,
    workers: usize,
    delay: DelayModel,
    seed: u64,
    sample_every: u64,
    target_f: Option<f64>,
    opts: &SeOptions,
) -> Result<(TerminationReport, RunTrace)> {
    let sync_cfg = SyncConfig {
        delay,
        seed,
        sample_every,
        target_f,
        ..SyncConfig::new(hp.eta, inputs.tau, workers)
    };
    let mut exec = SyncExecutor::new(objective, x0, sync_cfg)?;
    let report = se_acgd(&mut exec, objective, inputs, hp, seed, opts)?;
    let hdr = header(
        kind.as_str(),
        objective,
        workers,
        inputs.tau,
        seed,
        &delay,
        hp.eta,
        Some(*hp),
        target_f,
    );
    let trace = RunTrace {
        header: hdr,
        samples: exec.take_samples(),
        phases: report.phases.clone(),
        final_f: report.final_f,
        total_iters: report.total_global_iters,
        virtual_time: exec.virtual_time(),
        time_to_target: exec.time_to_target(),
    };
    Ok((report, trace))
}

/// Serial perturbed gradient descent: full-gradient steps with the same
/// stuck-detection, perturbation, and stopping logic as the asynchronous
/// solver. This is exactly what the asynchronous algorithm degenerates to
/// at one worker.
pub fn run_serial_pgd(
    objective: &dyn Objective,
    x0: &[f64],
    inputs: &UserInputs,
    hp: &HyperParams,
    seed: u64,
    opts: &SeOptions,
) -> Result<(TerminationReport, RunTrace)> {
    let mut serial_inputs = inputs.clone();
    serial_inputs.workers = 1;
    run_sync_pgd(
        objective,
        x0,
        &serial_inputs,
        hp,
        BaselineKind::SerialPgd,
        1,
        DelayModel::none(),
        seed,
        1 << 20,
        None,
        opts,
    )
}

/// Barrier-synchronous parallel perturbed gradient descent: each iteration
/// every worker computes its block gradient on the same iterate and the
/// iteration lasts as long as the slowest worker.
#[allow(clippy::too_many_arguments)]
pub fn run_sync_parallel_pgd(
    objective: &dyn Objective,
    x0: &[f64],
    inputs: &UserInputs,
    hp: &HyperParams,
    workers: usize,
    delay: DelayModel,
    seed: u64,
    target_f: Option<f64>,
) -> Result<(TerminationReport, RunTrace)> {
    run_sync_pgd(
        objective,
        x0,
        inputs,
        hp,
        BaselineKind::SyncParallelPgd,
        workers,
        delay,
        seed,
        1 << 20,
        target_f,
        &SeOptions::default(),
    )
}
