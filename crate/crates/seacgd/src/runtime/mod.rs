//! Asynchronous execution fabric: delay injection, event records and sinks,
//! the single-worker update primitive, and the executor interface the phase
//! drivers run against.

pub mod audit;
pub mod parallel;
pub mod sim;
pub mod sync;

use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianWindow;
use crate::objective::{BlockGrad, Objective, ObjectiveState};
use crate::trace::{Phase, TraceSample};
use crate::util::{sq_norm, subseed};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;
use serde::{Deserialize, Serialize};
use std::ops::Range;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayKind {
    None,
    ExponentialOneWorker,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VictimPolicy {
    RoundRobin,
    FixedWorker(usize),
    RandomEachIter,
}

/// Latency injection: at most one worker per iteration cycle receives an
/// exponentially distributed extra delay with mean `expected_delay`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayModel {
    pub kind: DelayKind,
    pub expected_delay: f64,
    pub victim_policy: VictimPolicy,
    pub seed: u64,
}

impl Default for DelayModel {
    fn default() -> Self {
        DelayModel {
            kind: DelayKind::None,
            expected_delay: 0.0,
            victim_policy: VictimPolicy::RoundRobin,
            seed: 0,
        }
    }
}

impl DelayModel {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn exponential(expected_delay: f64, victim_policy: VictimPolicy, seed: u64) -> Self {
        DelayModel { kind: DelayKind::ExponentialOneWorker, expected_delay, victim_policy, seed }
    }

    pub fn sampler(&self, workers: usize) -> DelaySampler {
        DelaySampler {
            model: *self,
            workers,
            cycle: 0,
            exp_rng: ChaCha8Rng::seed_from_u64(subseed(self.seed, 0x64656c61)),
            victim_rng: ChaCha8Rng::seed_from_u64(subseed(self.seed, 0x76696374)),
        }
    }
}

/// Per-run stateful delay source. One cycle corresponds to one worker
/// fetch; the victim for cycle n is chosen by the policy, and only the
/// victim draws a latency.
pub struct DelaySampler {
    model: DelayModel,
    workers: usize,
    cycle: u64,
    exp_rng: ChaCha8Rng,
    victim_rng: ChaCha8Rng,
}

impl DelaySampler {
    pub fn next_delay(&mut self, worker: usize) -> f64 {
        let n = self.cycle;
        self.cycle += 1;
        if self.model.kind == DelayKind::None || self.model.expected_delay <= 0.0 {
            return 0.0;
        }
        let victim = match self.model.victim_policy {
            VictimPolicy::RoundRobin => (n % self.workers as u64) as usize,
            VictimPolicy::FixedWorker(k) => k % self.workers,
            VictimPolicy::RandomEachIter => self.victim_rng.gen_range(0..self.workers),
        };
        if worker != victim {
            return 0.0;
        }
        let exp = Exp::new(1.0 / self.model.expected_delay).expect("positive rate");
        exp.sample(&mut self.exp_rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkerEventKind {
    Fetch,
    GradientDone,
    ApplyUpdate,
}

/// One line of the event log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub t: f64,
    pub worker: usize,
    pub kind: WorkerEventKind,
    pub j: u64,
    pub block: usize,
    pub step_sq_norm: f64,
    pub f: f64,
    #[serde(rename = "E")]
    pub e: f64,
}

/// Receiver for the executor's event stream. `on_window_reset` fires when a
/// perturbation restarts the energy accounting, so monitors comparing
/// consecutive energies know not to span the jump.
pub trait EventSink: Send {
    fn on_event(&mut self, ev: &EventRecord);
    fn on_window_reset(&mut self) {}
    /// Sinks that discard events return false so executors can skip
    /// building the records at all; the energy field in particular costs a
    /// pass over the window.
    fn wants_events(&self) -> bool {
        true
    }
}

/// Discards everything.
#[derive(Default)]
pub struct NullSink;

impl EventSink for NullSink {
    fn on_event(&mut self, _ev: &EventRecord) {}

    fn wants_events(&self) -> bool {
        false
    }
}

/// Buffers every event in memory; for tests and small runs.
#[derive(Default)]
pub struct VecSink {
    pub events: Vec<EventRecord>,
    pub resets: usize,
}

impl EventSink for VecSink {
    fn on_event(&mut self, ev: &EventRecord) {
        self.events.push(ev.clone());
    }

    fn on_window_reset(&mut self) {
        self.resets += 1;
    }
}

/// Streams events as JSON lines to a writer, up to a cap.
pub struct JsonlSink<W: std::io::Write + Send> {
    out: W,
    limit: u64,
    written: u64,
}

impl<W: std::io::Write + Send> JsonlSink<W> {
    pub fn new(out: W, limit: u64) -> Self {
        JsonlSink { out, limit, written: 0 }
    }
}

impl<W: std::io::Write + Send> EventSink for JsonlSink<W> {
    fn on_event(&mut self, ev: &EventRecord) {
        if self.written >= self.limit {
            return;
        }
        if let Ok(line) = serde_json::to_string(ev) {
            let _ = writeln!(self.out, "{line}");
            self.written += 1;
        }
    }
}

/// The single-worker update: u = 0 except u_b = -eta * grad_b f(snapshot).
pub fn sw_acgd_step(
    snapshot: &[f64],
    objective: &dyn Objective,
    eta: f64,
    block: Range<usize>,
) -> Result<Vec<f64>> {
    let d = objective.spec().dim;
    let mut u = vec![0.0; d];
    objective.block_gradient_into(snapshot, block.clone(), &mut u[block])?;
    for ui in &mut u {
        *ui *= -eta;
    }
    Ok(u)
}

/// Applies a sparse update to the global iterate and advances the energy
/// window atomically with it.
pub fn apply_update(
    x: &mut [f64],
    update: &[f64],
    window: &mut HamiltonianWindow,
    objective: &dyn Objective,
) -> Result<()> {
    if x.len() != update.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: update.len() });
    }
    for (xi, ui) in x.iter_mut().zip(update) {
        *xi += ui;
    }
    let f = objective.eval(x)?;
    window.push_step(f, sq_norm(update))?;
    Ok(())
}

/// What the phase drivers need from an execution backend. One call to
/// `run_iters(n)` advances exactly n applied global iterations (fewer only
/// when a hard cap interrupts).
pub trait AcgdExecutor {
    fn dim(&self) -> usize;
    fn tau(&self) -> usize;
    /// How many applied global iterations make up one full coordinate pass.
    /// Block executors report their worker count; executors whose iteration
    /// already covers every coordinate report 1. Phase drivers scale their
    /// episode lengths by this so an episode covers the same number of
    /// passes regardless of the partitioning.
    fn block_iters_per_pass(&self) -> u64 {
        1
    }
    fn run_iters(&mut self, n: u64) -> Result<u64>;
    fn global_j(&self) -> u64;
    fn virtual_time(&self) -> f64;
    fn current_f(&self) -> f64;
    fn energy(&self) -> f64;
    fn grad_norm(&self) -> f64;
    fn iterate(&self) -> Vec<f64>;
    /// Adds the perturbation to the iterate and restarts the energy window.
    fn perturb(&mut self, xi: &[f64]) -> Result<()>;
    fn set_phase(&mut self, phase: Phase);
    fn time_to_target(&self) -> Option<f64>;
    /// Drains the samples collected so far.
    fn take_samples(&mut self) -> Vec<TraceSample>;
}

/// Bookkeeping shared by all executors: iterate state, energy window, clock,
/// sampling, and the time-to-target probe.
pub(crate) struct ServerCore<'a> {
    pub state: Box<dyn ObjectiveState + 'a>,
    pub window: HamiltonianWindow,
    pub l: f64,
    pub j: u64,
    pub clock: f64,
    pub phase: Phase,
    pub sample_every: u64,
    pub samples: Vec<TraceSample>,
    pub target_f: Option<f64>,
    pub time_to_target: Option<f64>,
}

impl<'a> ServerCore<'a> {
    pub fn new(
        state: Box<dyn ObjectiveState + 'a>,
        tau: usize,
        l: f64,
        sample_every: u64,
        target_f: Option<f64>,
    ) -> Result<Self> {
        let f0 = state.value();
        let window = HamiltonianWindow::new(tau, f0)?;
        let mut core = ServerCore {
            state,
            window,
            l,
            j: 0,
            clock: 0.0,
            phase: Phase::Lg,
            sample_every: sample_every.max(1),
            samples: Vec::new(),
            target_f,
            time_to_target: None,
        };
        core.probe_target(f0, 0.0);
        core.push_sample();
        Ok(core)
    }

    fn probe_target(&mut self, f: f64, t: f64) {
        if self.time_to_target.is_none() {
            if let Some(target) = self.target_f {
                if f <= target {
                    self.time_to_target = Some(t);
                }
            }
        }
    }

    pub fn push_sample(&mut self) {
        self.samples.push(TraceSample {
            t: self.clock,
            j: self.j,
            f: self.window.current_f(),
            e: self.window.energy(self.l),
            grad_norm: self.state.grad_norm(),
            phase: self.phase,
        });
    }

    /// Applies one block update at virtual time `t` and records it.
    pub fn apply(
        &mut self,
        t: f64,
        worker: usize,
        block_idx: usize,
        block: Range<usize>,
        grad: &BlockGrad,
        eta: f64,
        sink: &mut dyn EventSink,
    ) -> Result<()> {
        let ssn = eta * eta * grad.sq_norm();
        self.state.apply_scaled(block, grad, -eta);
        let f = self.state.value();
        self.window.push_step(f, ssn)?;
        self.j += 1;
        self.clock = t;
        self.probe_target(f, t);
        if self.j % self.sample_every == 0 {
            self.push_sample();
        }
        if sink.wants_events() {
            sink.on_event(&EventRecord {
                t,
                worker,
                kind: WorkerEventKind::ApplyUpdate,
                j: self.j,
                block: block_idx,
                step_sq_norm: ssn,
                f,
                e: self.window.energy(self.l),
            });
        }
        Ok(())
    }

    pub fn perturb(&mut self, xi: &[f64], sink: &mut dyn EventSink) -> Result<()> {
        if xi.len() != self.state.dim() {
            return Err(Error::DimensionMismatch { expected: self.state.dim(), got: xi.len() });
        }
        self.state.add_dense(xi);
        let f = self.state.value();
        self.window.reset(f);
        sink.on_window_reset();
        self.probe_target(f, self.clock);
        self.push_sample();
        Ok(())
    }
}
