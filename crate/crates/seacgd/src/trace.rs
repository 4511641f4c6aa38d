//! Run traces: sampled time series, phase records, and self-describing
//! headers, plus CSV emission for plotting.

use crate::error::Result;
use crate::hyperparams::HyperParams;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Phase {
    Lg,
    Perturb,
    Done,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Lg => "LG",
            Phase::Perturb => "PERTURB",
            Phase::Done => "DONE",
        }
    }
}

/// One sampled row of a run: virtual (or wall) time, applied-update count,
/// objective value, energy, gradient norm, and the phase label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub j: u64,
    pub f: f64,
    #[serde(rename = "E")]
    pub e: f64,
    pub grad_norm: f64,
    pub phase: Phase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseDecision {
    Continue,
    Perturb,
    Stop,
    CapReached,
}

/// Boundary record for one driver phase: the energies compared and what the
/// driver decided.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub phase: Phase,
    pub entry_e: f64,
    pub exit_e: f64,
    pub threshold_f: f64,
    pub iters: u64,
    pub decision: PhaseDecision,
}

/// Everything needed to re-run a trace, embedded in every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub algorithm: String,
    pub objective: String,
    pub dim: usize,
    pub workers: usize,
    pub tau: usize,
    pub mode: String,
    pub seed: u64,
    pub expected_delay: f64,
    pub eta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hp: Option<HyperParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_f: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub header: RunHeader,
    pub samples: Vec<TraceSample>,
    pub phases: Vec<PhaseRecord>,
    pub final_f: f64,
    pub total_iters: u64,
    pub virtual_time: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_to_target: Option<f64>,
}

impl RunTrace {
    /// Writes the trace as CSV. The header struct goes first as a single
    /// `#`-prefixed JSON line so the file stays self-describing while any
    /// CSV reader can skip it as a comment.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "# {}", serde_json::to_string(&self.header)?)?;
        writeln!(out, "time,j,f,E,grad_norm,phase")?;
        for s in &self.samples {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                s.t,
                s.j,
                s.f,
                s.e,
                s.grad_norm,
                s.phase.as_str()
            )?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Long-format CSV over several traces (run_id, time, j, f, E), one row per
/// sample; idempotent, suitable for any plotting tool.
pub fn emit_plot_data(traces: &[RunTrace], path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "run_id,time,j,f,E")?;
    for (id, tr) in traces.iter().enumerate() {
        for s in &tr.samples {
            writeln!(out, "{},{},{},{},{}", id, s.t, s.j, s.f, s.e)?;
        }
    }
    out.flush()?;
    Ok(())
}
