//! Deterministic discrete-event executor.
//!
//! Workers cycle fetch -> compute -> submit over a virtual clock. Gradients
//! are evaluated at fetch time against the live iterate (equivalent to
//! copying the snapshot, since the snapshot is frozen at that instant) and
//! applied when the worker's compute interval, plus any injected delay,
//! elapses. The server admits submissions in arrival order subject to a
//! deadline rule that keeps every block's inter-update gap at most tau+1
//! iterations; that single rule also bounds every snapshot's per-block age
//! by tau, because a worker's own block going stale stalls the rest of the
//! system until the worker delivers.

use crate::error::{Error, Result};
use crate::objective::{BlockGrad, DenseState, Objective, ObjectiveState};
use crate::partition::{partition_blocks, BlockPartition};
use crate::runtime::{
    AcgdExecutor, DelayModel, DelaySampler, EventRecord, EventSink, NullSink, ServerCore,
    WorkerEventKind,
};
use crate::trace::{Phase, TraceSample};
use crate::util::subseed;
use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::ops::Range;

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub eta: f64,
    pub tau: usize,
    pub workers: usize,
    pub delay: DelayModel,
    /// Scheduler seed; combined with the delay model's own seed so one knob
    /// reseeds the whole run.
    pub seed: u64,
    pub sample_every: u64,
    pub target_f: Option<f64>,
    /// Skip the objective's fast incremental state even when available.
    /// Used for bit-exactness comparisons against the serial baselines.
    pub force_dense: bool,
}

impl SimConfig {
    pub fn new(eta: f64, tau: usize, workers: usize) -> Self {
        SimConfig {
            eta,
            tau,
            workers,
            delay: DelayModel::none(),
            seed: 0,
            sample_every: 1 << 20,
            target_f: None,
            force_dense: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Action {
    Fetch { worker: usize, epoch: u64 },
    Ready { worker: usize, epoch: u64 },
}

#[derive(Debug, Clone, Copy)]
struct HeapEvent {
    time: f64,
    seq: u64,
    action: Action,
}

impl PartialEq for HeapEvent {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq
    }
}
impl Eq for HeapEvent {}

impl Ord for HeapEvent {
    // Reversed so the BinaryHeap pops the earliest (time, seq) first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}
impl PartialOrd for HeapEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct WorkerSlot {
    block: Range<usize>,
    compute_time: f64,
    /// Applied-update counters per block, recorded at this worker's fetch.
    snap: Vec<u64>,
    grad: Option<BlockGrad>,
}

pub struct SimExecutor<'a, S: EventSink = NullSink> {
    cfg: SimConfig,
    partition: BlockPartition,
    core: ServerCore<'a>,
    sink: S,
    heap: BinaryHeap<HeapEvent>,
    seq: u64,
    epoch: u64,
    now: f64,
    slots: Vec<WorkerSlot>,
    /// Workers whose gradient has arrived but not been admitted yet, in
    /// arrival order.
    pending: VecDeque<usize>,
    /// Total applied updates per block since run start.
    applied: Vec<u64>,
    /// Iteration index of each block's most recent apply (-1 if none).
    last_applied: Vec<i64>,
    sampler: DelaySampler,
    scratch: Vec<i64>,
}

impl<'a> SimExecutor<'a, NullSink> {
    pub fn new(objective: &'a dyn Objective, x0: &[f64], cfg: SimConfig) -> Result<Self> {
        Self::with_sink(objective, x0, cfg, NullSink)
    }
}

impl<'a, S: EventSink> SimExecutor<'a, S> {
    pub fn with_sink(
        objective: &'a dyn Objective,
        x0: &[f64],
        cfg: SimConfig,
        sink: S,
    ) -> Result<Self> {
        let spec = objective.spec();
        if x0.len() != spec.dim {
            return Err(Error::DimensionMismatch { expected: spec.dim, got: x0.len() });
        }
        if !(cfg.eta > 0.0) {
            return Err(Error::Config(format!("eta must be positive, got {}", cfg.eta)));
        }
        if cfg.tau < 1 || cfg.tau + 1 < cfg.workers {
            return Err(Error::Config(format!(
                "tau = {} is incompatible with {} workers",
                cfg.tau, cfg.workers
            )));
        }
        let partition = partition_blocks(spec.dim, cfg.workers)?;
        let state: Box<dyn ObjectiveState + 'a> = if cfg.force_dense {
            Box::new(DenseState::new(objective, x0.to_vec())?)
        } else {
            match objective.fast_state(x0) {
                Some(s) => s,
                None => Box::new(DenseState::new(objective, x0.to_vec())?),
            }
        };
        let core =
            ServerCore::new(state, cfg.tau, spec.lipschitz_l, cfg.sample_every, cfg.target_f)?;
        let w = cfg.workers;
        let d = spec.dim as f64;
        let slots = (0..w)
            .map(|i| WorkerSlot {
                block: partition.block(i),
                compute_time: partition.block(i).len() as f64 / d,
                snap: vec![0; w],
                grad: None,
            })
            .collect();
        let mut sampler_seed = subseed(cfg.seed, 0x7363686564756c65);
        if cfg.delay.seed != 0 {
            sampler_seed = subseed(sampler_seed, cfg.delay.seed);
        }
        let sampler = DelayModel { seed: sampler_seed, ..cfg.delay }.sampler(w);
        let mut exec = SimExecutor {
            cfg,
            partition,
            core,
            sink,
            heap: BinaryHeap::new(),
            seq: 0,
            epoch: 0,
            now: 0.0,
            slots,
            pending: VecDeque::new(),
            applied: vec![0; w],
            last_applied: vec![-1; w],
            sampler,
            scratch: Vec::with_capacity(w),
        };
        for worker in 0..w {
            exec.schedule(0.0, Action::Fetch { worker, epoch: 0 });
        }
        Ok(exec)
    }

    pub fn sink(&self) -> &S {
        &self.sink
    }

    pub fn into_sink(self) -> S {
        self.sink
    }

    fn schedule(&mut self, time: f64, action: Action) {
        let seq = self.seq;
        self.seq += 1;
        self.heap.push(HeapEvent { time, seq, action });
    }

    /// Deadline of block p's next required apply, given its last apply.
    fn deadline(last: i64, tau: i64) -> i64 {
        last + tau + 1
    }

    /// True when applying worker w's block as iteration `m` leaves a
    /// schedule in which every block can still meet its coverage deadline.
    fn admissible(&mut self, w: usize) -> bool {
        let tau = self.cfg.tau as i64;
        let m = self.core.j as i64;
        let b = w; // worker w owns block w
        debug_assert!(m <= Self::deadline(self.last_applied[b], tau));
        self.scratch.clear();
        for p in 0..self.cfg.workers {
            let last = if p == b { m } else { self.last_applied[p] };
            self.scratch.push(Self::deadline(last, tau));
        }
        self.scratch.sort_unstable();
        self.scratch
            .iter()
            .enumerate()
            .all(|(k, &dl)| dl >= m + 1 + k as i64)
    }

    /// Applies the first admissible pending submission, if any.
    fn try_admit(&mut self) -> Result<bool> {
        let mut pick = None;
        for idx in 0..self.pending.len() {
            // A worker we skip stays queued; arrival order is preserved.
            let w = self.pending[idx];
            if self.admissible(w) {
                pick = Some(idx);
                break;
            }
        }
        let Some(idx) = pick else { return Ok(false) };
        let w = self.pending.remove(idx).expect("index from iteration");
        let grad = self.slots[w].grad.take().expect("pending worker has a gradient");

        // Bounded-staleness contract, checked inline on every apply.
        for p in 0..self.cfg.workers {
            let age = self.applied[p] - self.slots[w].snap[p];
            if age > self.cfg.tau as u64 {
                return Err(Error::Contract(format!(
                    "staleness violation: worker {w} sees block {p} aged {age} > tau {}",
                    self.cfg.tau
                )));
            }
        }

        let m = self.core.j as i64;
        let block = self.slots[w].block.clone();
        self.core
            .apply(self.now, w, w, block, &grad, self.cfg.eta, &mut self.sink)?;
        self.applied[w] += 1;
        self.last_applied[w] = m;
        // Refetch immediately: the worker's next snapshot is taken right
        // after its own apply, before any same-time submissions land.
        self.do_fetch(w, self.now);
        Ok(true)
    }

    fn do_fetch(&mut self, worker: usize, t: f64) {
        let slot = &mut self.slots[worker];
        slot.snap.copy_from_slice(&self.applied);
        slot.grad = Some(self.core.state.fetch_block_gradient(slot.block.clone()));
        if self.sink.wants_events() {
            self.sink.on_event(&EventRecord {
                t,
                worker,
                kind: WorkerEventKind::Fetch,
                j: self.core.j,
                block: worker,
                step_sq_norm: 0.0,
                f: self.core.window.current_f(),
                e: self.core.window.energy(self.core.l),
            });
        }
        let delay = self.sampler.next_delay(worker);
        let ready = t + self.slots[worker].compute_time + delay;
        self.schedule(ready, Action::Ready { worker, epoch: self.epoch });
    }

    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }
}

impl<S: EventSink> AcgdExecutor for SimExecutor<'_, S> {
    fn dim(&self) -> usize {
        self.core.state.dim()
    }

    fn tau(&self) -> usize {
        self.cfg.tau
    }

    fn block_iters_per_pass(&self) -> u64 {
        self.cfg.workers as u64
    }

    fn run_iters(&mut self, n: u64) -> Result<u64> {
        let goal = self.core.j + n;
        while self.core.j < goal {
            if self.try_admit()? {
                continue;
            }
            let ev = self
                .heap
                .pop()
                .ok_or_else(|| Error::Contract("simulator starved of events".into()))?;
            self.now = ev.time;
            match ev.action {
                Action::Fetch { worker, epoch } if epoch == self.epoch => {
                    self.do_fetch(worker, ev.time);
                }
                Action::Ready { worker, epoch } if epoch == self.epoch => {
                    if self.sink.wants_events() {
                        self.sink.on_event(&EventRecord {
                            t: ev.time,
                            worker,
                            kind: WorkerEventKind::GradientDone,
                            j: self.core.j,
                            block: worker,
                            step_sq_norm: 0.0,
                            f: self.core.window.current_f(),
                            e: self.core.window.energy(self.core.l),
                        });
                    }
                    self.pending.push_back(worker);
                }
                // Events from before a perturbation: the work was cancelled.
                _ => {}
            }
        }
        Ok(n)
    }

    fn global_j(&self) -> u64 {
        self.core.j
    }

    fn virtual_time(&self) -> f64 {
        self.core.clock
    }

    fn current_f(&self) -> f64 {
        self.core.window.current_f()
    }

    fn energy(&self) -> f64 {
        self.core.window.energy(self.core.l)
    }

    fn grad_norm(&self) -> f64 {
        self.core.state.grad_norm()
    }

    fn iterate(&self) -> Vec<f64> {
        self.core.state.materialize()
    }

    fn perturb(&mut self, xi: &[f64]) -> Result<()> {
        self.core.perturb(xi, &mut self.sink)?;
        // In-flight gradients predate the perturbation; cancel them so the
        // fresh phase starts with staleness zero, and have everyone refetch.
        self.epoch += 1;
        self.pending.clear();
        for worker in 0..self.cfg.workers {
            self.slots[worker].grad = None;
            self.schedule(self.now, Action::Fetch { worker, epoch: self.epoch });
        }
        Ok(())
    }

    fn set_phase(&mut self, phase: Phase) {
        self.core.phase = phase;
    }

    fn time_to_target(&self) -> Option<f64> {
        self.core.time_to_target
    }

    fn take_samples(&mut self) -> Vec<TraceSample> {
        std::mem::take(&mut self.core.samples)
    }
}
