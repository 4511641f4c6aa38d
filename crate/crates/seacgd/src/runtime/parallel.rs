//! Real multi-worker executor: the same protocol as the simulator, but with
//! OS threads, a single serialization point, and injected delays realized as
//! sleeps. Not bit-reproducible across runs; statistically comparable.

use crate::error::{Error, Result};
use crate::objective::{DenseState, Objective, ObjectiveState};
use crate::partition::{partition_blocks, BlockPartition};
use crate::runtime::{
    AcgdExecutor, DelayModel, DelaySampler, EventRecord, EventSink, ServerCore, WorkerEventKind,
};
use crate::trace::{Phase, TraceSample};
use crate::util::subseed;
use std::panic::AssertUnwindSafe;
use std::sync::{Condvar, Mutex, MutexGuard};
use std::time::{Duration, Instant};

#[derive(Debug, Clone)]
pub struct ParallelConfig {
    pub eta: f64,
    pub tau: usize,
    pub workers: usize,
    pub delay: DelayModel,
    pub seed: u64,
    pub sample_every: u64,
    pub target_f: Option<f64>,
    pub force_dense: bool,
    /// Wall seconds per virtual time unit when realizing compute time and
    /// injected delay as sleeps.
    pub time_scale: f64,
    /// Test hook: this worker panics on its first fetch.
    pub fault_injection: Option<usize>,
}

impl ParallelConfig {
    pub fn new(eta: f64, tau: usize, workers: usize) -> Self {
        ParallelConfig {
            eta,
            tau,
            workers,
            delay: DelayModel::none(),
            seed: 0,
            sample_every: 1 << 20,
            target_f: None,
            force_dense: false,
            time_scale: 1e-4,
            fault_injection: None,
        }
    }
}

struct PServer<'a, S: EventSink> {
    core: ServerCore<'a>,
    sink: S,
    sampler: DelaySampler,
    applied: Vec<u64>,
    last_applied: Vec<i64>,
    /// Updates the current `run_iters` call still allows.
    tickets: u64,
    epoch: u64,
    shutdown: bool,
    error: Option<Error>,
}

impl<S: EventSink> PServer<'_, S> {
    fn admissible(&self, b: usize, tau: i64) -> bool {
        let m = self.core.j as i64;
        let w = self.applied.len();
        let mut deadlines: Vec<i64> = (0..w)
            .map(|p| {
                let last = if p == b { m } else { self.last_applied[p] };
                last + tau + 1
            })
            .collect();
        deadlines.sort_unstable();
        deadlines
            .iter()
            .enumerate()
            .all(|(k, &dl)| dl >= m + 1 + k as i64)
    }
}

pub struct ParallelHandle<'env, 'a, S: EventSink> {
    server: &'env Mutex<PServer<'a, S>>,
    cvar: &'env Condvar,
    cfg: &'env ParallelConfig,
    started: Instant,
}

fn lock<'m, T>(m: &'m Mutex<T>) -> MutexGuard<'m, T> {
    m.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

impl<'env, 'a, S: EventSink> ParallelHandle<'env, 'a, S> {
    fn guard(&self) -> MutexGuard<'env, PServer<'a, S>> {
        lock(self.server)
    }
}

impl<S: EventSink> AcgdExecutor for ParallelHandle<'_, '_, S> {
    fn dim(&self) -> usize {
        self.guard().core.state.dim()
    }

    fn tau(&self) -> usize {
        self.cfg.tau
    }

    fn block_iters_per_pass(&self) -> u64 {
        self.cfg.workers as u64
    }

    fn run_iters(&mut self, n: u64) -> Result<u64> {
        let mut srv = self.guard();
        let goal = srv.core.j + n;
        srv.tickets += n;
        self.cvar.notify_all();
        while srv.core.j < goal {
            if let Some(err) = srv.error.take() {
                srv.shutdown = true;
                self.cvar.notify_all();
                return Err(err);
            }
            srv = self
                .cvar
                .wait_timeout(srv, Duration::from_millis(50))
                .unwrap_or_else(|poisoned| poisoned.into_inner())
                .0;
        }
        Ok(n)
    }

    fn global_j(&self) -> u64 {
        self.guard().core.j
    }

    fn virtual_time(&self) -> f64 {
        self.started.elapsed().as_secs_f64()
    }

    fn current_f(&self) -> f64 {
        self.guard().core.window.current_f()
    }

    fn energy(&self) -> f64 {
        let srv = self.guard();
        srv.core.window.energy(srv.core.l)
    }

    fn grad_norm(&self) -> f64 {
        self.guard().core.state.grad_norm()
    }

    fn iterate(&self) -> Vec<f64> {
        self.guard().core.state.materialize()
    }

    fn perturb(&mut self, xi: &[f64]) -> Result<()> {
        let mut srv = self.guard();
        debug_assert_eq!(srv.tickets, 0, "perturb only between phases");
        let PServer { core, sink, epoch, .. } = &mut *srv;
        core.perturb(xi, sink)?;
        // In-flight gradients predate the perturbation; their epoch check
        // makes the workers discard them and refetch.
        *epoch += 1;
        self.cvar.notify_all();
        Ok(())
    }

    fn set_phase(&mut self, phase: Phase) {
        self.guard().core.phase = phase;
    }

    fn time_to_target(&self) -> Option<f64> {
        self.guard().core.time_to_target
    }

    fn take_samples(&mut self) -> Vec<TraceSample> {
        std::mem::take(&mut self.guard().core.samples)
    }
}

struct WorkerCtx<'env, 'a, S: EventSink> {
    server: &'env Mutex<PServer<'a, S>>,
    cvar: &'env Condvar,
    cfg: &'env ParallelConfig,
    partition: &'env BlockPartition,
    started: Instant,
    id: usize,
}

fn worker_loop<S: EventSink>(ctx: &WorkerCtx<'_, '_, S>) -> Result<()> {
    let block = ctx.partition.block(ctx.id);
    let d = ctx.partition.dim() as f64;
    let compute = block.len() as f64 / d;
    let tau = ctx.cfg.tau as i64;
    if ctx.cfg.fault_injection == Some(ctx.id) {
        panic!("injected fault in worker {}", ctx.id);
    }
    loop {
        // Fetch under the serialization point.
        let (grad, snap, epoch, delay) = {
            let mut srv = lock(ctx.server);
            if srv.shutdown {
                return Ok(());
            }
            let t = ctx.started.elapsed().as_secs_f64();
            let grad = srv.core.state.fetch_block_gradient(block.clone());
            let snap = srv.applied.clone();
            let delay = srv.sampler.next_delay(ctx.id);
            if srv.sink.wants_events() {
                let f = srv.core.window.current_f();
                let e = srv.core.window.energy(srv.core.l);
                let j = srv.core.j;
                srv.sink.on_event(&EventRecord {
                    t,
                    worker: ctx.id,
                    kind: WorkerEventKind::Fetch,
                    j,
                    block: ctx.id,
                    step_sq_norm: 0.0,
                    f,
                    e,
                });
            }
            (grad, snap, srv.epoch, delay)
        };

        let sleep = (compute + delay) * ctx.cfg.time_scale;
        if sleep > 0.0 {
            std::thread::sleep(Duration::from_secs_f64(sleep));
        }

        // Submit: wait for a ticket and for the coverage rule to admit us.
        let mut srv = lock(ctx.server);
        loop {
            if srv.shutdown {
                return Ok(());
            }
            if srv.epoch != epoch {
                break; // stale work, refetch
            }
            if srv.tickets > 0 && srv.admissible(ctx.id, tau) {
                for p in 0..ctx.cfg.workers {
                    let age = srv.applied[p] - snap[p];
                    if age > ctx.cfg.tau as u64 {
                        return Err(Error::Contract(format!(
                            "staleness violation: worker {} sees block {p} aged {age}",
                            ctx.id
                        )));
                    }
                }
                let t = ctx.started.elapsed().as_secs_f64();
                let m = srv.core.j as i64;
                let PServer { core, sink, .. } = &mut *srv;
                core.apply(t, ctx.id, ctx.id, block.clone(), &grad, ctx.cfg.eta, sink)?;
                srv.applied[ctx.id] += 1;
                srv.last_applied[ctx.id] = m;
                srv.tickets -= 1;
                ctx.cvar.notify_all();
                break;
            }
            srv = ctx
                .cvar
                .wait_timeout(srv, Duration::from_millis(20))
                .unwrap_or_else(|poisoned| poisoned.into_inner())
                .0;
        }
    }
}

/// Runs `driver` against a live multi-threaded executor. Workers start
/// before the driver runs and stop when it returns; the sink comes back for
/// post-hoc inspection even when the run fails partway.
pub fn run_parallel<S, R>(
    objective: &dyn Objective,
    x0: &[f64],
    cfg: ParallelConfig,
    sink: S,
    driver: impl FnOnce(&mut ParallelHandle<'_, '_, S>) -> Result<R>,
) -> (Result<R>, S)
where
    S: EventSink,
{
    let spec = objective.spec();
    let setup = (|| -> Result<_> {
        if x0.len() != spec.dim {
            return Err(Error::DimensionMismatch { expected: spec.dim, got: x0.len() });
        }
        if cfg.tau < 1 || cfg.tau + 1 < cfg.workers {
            return Err(Error::Config(format!(
                "tau = {} is incompatible with {} workers",
                cfg.tau, cfg.workers
            )));
        }
        let partition = partition_blocks(spec.dim, cfg.workers)?;
        let state: Box<dyn ObjectiveState + '_> = if cfg.force_dense {
            Box::new(DenseState::new(objective, x0.to_vec())?)
        } else {
            match objective.fast_state(x0) {
                Some(s) => s,
                None => Box::new(DenseState::new(objective, x0.to_vec())?),
            }
        };
        let core =
            ServerCore::new(state, cfg.tau, spec.lipschitz_l, cfg.sample_every, cfg.target_f)?;
        Ok((partition, core))
    })();
    let (partition, core) = match setup {
        Ok(v) => v,
        Err(e) => return (Err(e), sink),
    };

    let sampler = DelayModel { seed: subseed(cfg.seed, 0x70617261), ..cfg.delay }
        .sampler(cfg.workers);
    let server = Mutex::new(PServer {
        core,
        sink,
        sampler,
        applied: vec![0; cfg.workers],
        last_applied: vec![-1; cfg.workers],
        tickets: 0,
        epoch: 0,
        shutdown: false,
        error: None,
    });
    let cvar = Condvar::new();
    let started = Instant::now();

    let result = std::thread::scope(|scope| {
        for id in 0..cfg.workers {
            let ctx = WorkerCtx {
                server: &server,
                cvar: &cvar,
                cfg: &cfg,
                partition: &partition,
                started,
                id,
            };
            scope.spawn(move || {
                let outcome = std::panic::catch_unwind(AssertUnwindSafe(|| worker_loop(&ctx)));
                let mut srv = lock(ctx.server);
                match outcome {
                    Ok(Ok(())) => {}
                    Ok(Err(e)) => {
                        srv.error.get_or_insert(e);
                        srv.shutdown = true;
                    }
                    Err(_) => {
                        srv.error.get_or_insert(Error::WorkerPanic { worker: ctx.id });
                        srv.shutdown = true;
                    }
                }
                ctx.cvar.notify_all();
            });
        }

        let mut handle = ParallelHandle { server: &server, cvar: &cvar, cfg: &cfg, started };
        let out = driver(&mut handle);
        {
            let mut srv = lock(&server);
            srv.shutdown = true;
            cvar.notify_all();
        }
        out
    });

    let srv = server.into_inner().unwrap_or_else(|poisoned| poisoned.into_inner());
    (result, srv.sink)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quartic::QuarticSaddle;
    use crate::runtime::audit::AuditSink;
    use crate::runtime::{NullSink, VictimPolicy};

    #[test]
    fn parallel_run_descends_and_passes_audit() {
        let q = QuarticSaddle::new(32).unwrap();
        let x0 = vec![0.5; 32];
        let f0 = q.eval(&x0).unwrap();
        let cfg = ParallelConfig {
            time_scale: 1e-5,
            ..ParallelConfig::new(5e-4, 6, 4)
        };
        let (res, audit) = run_parallel(&q, &x0, cfg, AuditSink::new(6, 4), |h| {
            h.run_iters(800)?;
            Ok((h.current_f(), h.global_j()))
        });
        let (f, j) = res.unwrap();
        assert_eq!(j, 800);
        assert!(f < f0);
        let report = audit.report();
        assert_eq!(report.applies, 800);
        assert!(report.staleness_ok);
        assert!(report.coverage_ok);
    }

    #[test]
    fn delayed_worker_completes_fewest_updates() {
        let q = QuarticSaddle::new(16).unwrap();
        let x0 = vec![0.3; 16];
        let cfg = ParallelConfig {
            delay: DelayModel::exponential(4.0, VictimPolicy::FixedWorker(2), 7),
            time_scale: 2e-4,
            ..ParallelConfig::new(1e-4, 8, 4)
        };
        let (res, sink) =
            run_parallel(&q, &x0, cfg, crate::runtime::VecSink::default(), |h| {
                h.run_iters(300)?;
                Ok(())
            });
        res.unwrap();
        let mut counts = [0u64; 4];
        for ev in &sink.events {
            if ev.kind == WorkerEventKind::ApplyUpdate {
                counts[ev.worker] += 1;
            }
        }
        let min = *counts.iter().min().unwrap();
        assert_eq!(counts[2], min, "counts={counts:?}");
    }

    #[test]
    fn worker_panic_aborts_with_error() {
        let q = QuarticSaddle::new(8).unwrap();
        let x0 = vec![0.5; 8];
        let cfg = ParallelConfig {
            fault_injection: Some(1),
            time_scale: 1e-5,
            ..ParallelConfig::new(1e-3, 3, 2)
        };
        let (res, _sink) = run_parallel(&q, &x0, cfg, NullSink, |h| {
            h.run_iters(100)?;
            Ok(())
        });
        match res {
            Err(Error::WorkerPanic { worker }) => assert_eq!(worker, 1),
            other => panic!("expected worker panic, got {other:?}"),
        }
    }
}
