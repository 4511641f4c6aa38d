//! Barrier-synchronous executor: every iteration, all workers compute their
//! block gradients against the same iterate, the iteration lasts as long as
//! the slowest worker, and the combined full-gradient step is applied once.

use crate::error::{Error, Result};
use crate::objective::{BlockGrad, DenseState, Objective, ObjectiveState};
use crate::partition::{partition_blocks, BlockPartition};
use crate::runtime::{
    AcgdExecutor, DelayModel, DelaySampler, EventRecord, EventSink, NullSink, ServerCore,
    WorkerEventKind,
};
use crate::trace::{Phase, TraceSample};
use crate::util::{subseed, Kahan};

#[derive(Debug, Clone)]
pub struct SyncConfig {
    pub eta: f64,
    /// Window length for the energy bookkeeping; synchrony itself does not
    /// need it, but keeping the same accounting makes runs comparable.
    pub tau: usize,
    pub workers: usize,
    pub delay: DelayModel,
    pub seed: u64,
    pub sample_every: u64,
    pub target_f: Option<f64>,
    pub force_dense: bool,
}

impl SyncConfig {
    pub fn new(eta: f64, tau: usize, workers: usize) -> Self {
        SyncConfig {
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

pub struct SyncExecutor<'a, S: EventSink = NullSink> {
    cfg: SyncConfig,
    partition: BlockPartition,
    core: ServerCore<'a>,
    sink: S,
    sampler: DelaySampler,
    grads: Vec<Option<BlockGrad>>,
}

impl<'a> SyncExecutor<'a, NullSink> {
    pub fn new(objective: &'a dyn Objective, x0: &[f64], cfg: SyncConfig) -> Result<Self> {
        Self::with_sink(objective, x0, cfg, NullSink)
    }
}

impl<'a, S: EventSink> SyncExecutor<'a, S> {
    pub fn with_sink(
        objective: &'a dyn Objective,
        x0: &[f64],
        cfg: SyncConfig,
        sink: S,
    ) -> Result<Self> {
        let spec = objective.spec();
        if x0.len() != spec.dim {
            return Err(Error::DimensionMismatch { expected: spec.dim, got: x0.len() });
        }
        if !(cfg.eta > 0.0) {
            return Err(Error::Config(format!("eta must be positive, got {}", cfg.eta)));
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
            ServerCore::new(state, cfg.tau.max(1), spec.lipschitz_l, cfg.sample_every, cfg.target_f)?;
        let sampler_seed = subseed(cfg.seed, 0x73796e63);
        let sampler = DelayModel { seed: sampler_seed, ..cfg.delay }.sampler(cfg.workers);
        let grads = (0..cfg.workers).map(|_| None).collect();
        Ok(SyncExecutor { cfg, partition, core, sink, sampler, grads })
    }

    pub fn sink(&self) -> &S {
        &self.sink
    }

    fn step(&mut self) -> Result<()> {
        let w = self.cfg.workers;
        let d = self.core.state.dim() as f64;
        // Barrier: everyone reads the same iterate before anyone writes.
        let mut duration: f64 = 0.0;
        for i in 0..w {
            let block = self.partition.block(i);
            self.grads[i] = Some(self.core.state.fetch_block_gradient(block.clone()));
            let delay = self.sampler.next_delay(i);
            duration = duration.max(block.len() as f64 / d + delay);
        }
        let mut ssn = Kahan::new();
        for i in 0..w {
            let grad = self.grads[i].take().expect("just fetched");
            ssn.add(grad.sq_norm());
            self.core
                .state
                .apply_scaled(self.partition.block(i), &grad, -self.cfg.eta);
        }
        let ssn = self.cfg.eta * self.cfg.eta * ssn.value();
        let f = self.core.state.value();
        self.core.window.push_step(f, ssn)?;
        self.core.j += 1;
        self.core.clock += duration;
        self.core.probe_target(f, self.core.clock);
        if self.core.j % self.core.sample_every == 0 {
            self.core.push_sample();
        }
        if self.sink.wants_events() {
            self.sink.on_event(&EventRecord {
                t: self.core.clock,
                worker: 0,
                kind: WorkerEventKind::ApplyUpdate,
                j: self.core.j,
                block: 0,
                step_sq_norm: ssn,
                f,
                e: self.core.window.energy(self.core.l),
            });
        }
        Ok(())
    }
}

impl<S: EventSink> AcgdExecutor for SyncExecutor<'_, S> {
    fn dim(&self) -> usize {
        self.core.state.dim()
    }

    fn tau(&self) -> usize {
        self.cfg.tau
    }

    fn run_iters(&mut self, n: u64) -> Result<u64> {
        for _ in 0..n {
            self.step()?;
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
        self.core.perturb(xi, &mut self.sink)
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quartic::QuarticSaddle;
    use crate::runtime::VictimPolicy;

    #[test]
    fn one_iteration_is_a_full_gradient_step() {
        let q = QuarticSaddle::new(2).unwrap();
        let x0 = vec![2.0, 0.0];
        let mut exec = SyncExecutor::new(&q, &x0, SyncConfig::new(0.01, 1, 2)).unwrap();
        exec.run_iters(1).unwrap();
        let x = exec.iterate();
        // grad at (2,0): r-part 4, s-part 4.
        assert!((x[0] - (2.0 - 0.04)).abs() < 1e-12);
        assert!((x[1] - (0.0 - 0.04)).abs() < 1e-12);
        assert!((exec.virtual_time() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn barrier_duration_dominated_by_victim_delay() {
        let q = QuarticSaddle::new(8).unwrap();
        let x0 = vec![0.1; 8];
        let cfg = SyncConfig {
            delay: DelayModel::exponential(0.5, VictimPolicy::RoundRobin, 1),
            ..SyncConfig::new(1e-3, 1, 4)
        };
        let mut exec = SyncExecutor::new(&q, &x0, cfg).unwrap();
        exec.run_iters(50).unwrap();
        // Each iteration costs at least the compute quantum 1/4; with a mean
        // 0.5 delay hitting one worker per cycle the total must far exceed
        // the delay-free cost of 12.5.
        assert!(exec.virtual_time() > 12.5);
    }

    #[test]
    fn w1_matches_async_w1_bitwise() {
        let q = QuarticSaddle::new(6).unwrap();
        let x0 = vec![0.9, -0.3, 1.4, -1.1, 0.2, -0.7];
        let eta = 2e-3;
        let mut sync = SyncExecutor::new(
            &q,
            &x0,
            SyncConfig { force_dense: true, ..SyncConfig::new(eta, 1, 1) },
        )
        .unwrap();
        let mut asim = crate::runtime::sim::SimExecutor::new(
            &q,
            &x0,
            crate::runtime::sim::SimConfig {
                force_dense: true,
                ..crate::runtime::sim::SimConfig::new(eta, 1, 1)
            },
        )
        .unwrap();
        sync.run_iters(200).unwrap();
        asim.run_iters(200).unwrap();
        let xs = sync.iterate();
        let xa = asim.iterate();
        for (a, b) in xs.iter().zip(&xa) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(sync.current_f().to_bits(), asim.current_f().to_bits());
    }
}
