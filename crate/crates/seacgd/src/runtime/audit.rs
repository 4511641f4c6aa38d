//! Independent post-hoc verification of the bounded-delay contract, driven
//! purely by the event stream so it cannot share bugs with the scheduler's
//! own bookkeeping.

use crate::runtime::{EventRecord, EventSink, WorkerEventKind};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditReport {
    pub applies: u64,
    pub max_age_seen: u64,
    /// Every applied snapshot had all block ages at most tau.
    pub staleness_ok: bool,
    /// Every complete window of tau+1 consecutive iterations contained an
    /// update to every block.
    pub coverage_ok: bool,
}

/// Rebuilds snapshot ages and block coverage from Fetch/ApplyUpdate events.
pub struct AuditSink {
    tau: u64,
    blocks: usize,
    /// Cumulative applies per block.
    applied: Vec<u64>,
    /// Per worker: applied counters at its latest fetch.
    snaps: Vec<Option<Vec<u64>>>,
    /// Iteration index of each block's latest apply, -1 if none.
    last_applied: Vec<i64>,
    next_iter: i64,
    max_age_seen: u64,
    staleness_ok: bool,
    coverage_ok: bool,
}

impl AuditSink {
    pub fn new(tau: usize, blocks: usize) -> Self {
        AuditSink {
            tau: tau as u64,
            blocks,
            applied: vec![0; blocks],
            snaps: vec![None; blocks],
            last_applied: vec![-1; blocks],
            next_iter: 0,
            max_age_seen: 0,
            staleness_ok: true,
            coverage_ok: true,
        }
    }

    pub fn report(&self) -> AuditReport {
        let mut coverage_ok = self.coverage_ok;
        // Trailing check: the final complete window must also cover every
        // block, so no block's last apply may be older than tau iterations.
        if self.next_iter > self.tau as i64 {
            for &last in &self.last_applied {
                if last < self.next_iter - 1 - self.tau as i64 {
                    coverage_ok = false;
                }
            }
        }
        AuditReport {
            applies: self.next_iter as u64,
            max_age_seen: self.max_age_seen,
            staleness_ok: self.staleness_ok,
            coverage_ok,
        }
    }
}

impl EventSink for AuditSink {
    fn on_event(&mut self, ev: &EventRecord) {
        match ev.kind {
            WorkerEventKind::Fetch => {
                if ev.worker < self.blocks {
                    self.snaps[ev.worker] = Some(self.applied.clone());
                }
            }
            WorkerEventKind::ApplyUpdate => {
                let b = ev.block;
                if b >= self.blocks {
                    return;
                }
                if let Some(snap) = &self.snaps[ev.worker] {
                    for p in 0..self.blocks {
                        let age = self.applied[p] - snap[p];
                        self.max_age_seen = self.max_age_seen.max(age);
                        if age > self.tau {
                            self.staleness_ok = false;
                        }
                    }
                }
                let m = self.next_iter;
                // Gap between consecutive applies of one block above tau+1
                // leaves a complete window without it; same for a first
                // apply later than iteration tau.
                if m - self.last_applied[b] > self.tau as i64 + 1 {
                    self.coverage_ok = false;
                }
                self.applied[b] += 1;
                self.last_applied[b] = m;
                self.next_iter += 1;
            }
            WorkerEventKind::GradientDone => {}
        }
    }

    fn on_window_reset(&mut self) {
        // A perturbation cancels in-flight work; pre-perturbation snapshots
        // can never be applied, so forget them.
        for s in &mut self.snaps {
            *s = None;
        }
    }
}
