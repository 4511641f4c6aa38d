//! Experiment harness behind the `bench` binary: declarative configs, the
//! three experiment families (saddle evasion, delay sweep, scalability),
//! per-run trace and event emission, and a deterministic summary.

use crate::algorithms::{se_acgd, Outcome, SeOptions, TerminationReport};
use crate::baselines::{run_serial_gd, run_sync_parallel_pgd, BaselineConfig, BaselineKind};
use crate::error::{Error, Result};
use crate::hyperparams::{derive_params, HyperParams, UserInputs};
use crate::quartic::{quartic_hessian_rho, QuarticSaddle, QUARTIC_LIPSCHITZ_L};
use crate::runtime::parallel::{run_parallel, ParallelConfig};
use crate::runtime::sim::{SimConfig, SimExecutor};
use crate::runtime::{AcgdExecutor, DelayModel, JsonlSink, VictimPolicy};
use crate::trace::{emit_plot_data, RunHeader, RunTrace};
use serde::{Deserialize, Serialize};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    SaddleEvasion,
    DelaySweep,
    Scalability,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::SaddleEvasion => "saddle_evasion",
            Experiment::DelaySweep => "delay_sweep",
            Experiment::Scalability => "scalability",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Simulated,
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Algorithm {
    Seacgd,
    SerialGd,
    SyncParallelPgd,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Seacgd => "seacgd",
            Algorithm::SerialGd => "serial_gd",
            Algorithm::SyncParallelPgd => "sync_parallel_pgd",
        }
    }
}

fn default_objective() -> String {
    "paper_quartic".to_string()
}

fn default_jobs() -> usize {
    1
}

fn default_event_limit() -> u64 {
    10_000
}

fn default_sample_every() -> u64 {
    1024
}

fn default_serial_gd_iters() -> u64 {
    10_000
}

fn default_target_tol() -> f64 {
    1e-3
}

/// One declarative experiment: the cross-product of the axis lists is run
/// cell by cell. Empty axis lists are filled with per-experiment defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default = "default_objective")]
    pub objective: String,
    #[serde(default)]
    pub dims: Vec<usize>,
    #[serde(default)]
    pub workers: Vec<usize>,
    #[serde(default)]
    pub expected_delays: Vec<f64>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub algorithms: Vec<Algorithm>,
    pub output_dir: PathBuf,
    pub mode: Mode,
    /// Staleness bound; None picks W-1 (2W for delay sweeps).
    #[serde(default)]
    pub tau: Option<usize>,
    /// Relative tolerance for the time-to-target probe f <= -d/4 + tol*d.
    #[serde(default = "default_target_tol")]
    pub target_tol: f64,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    #[serde(default = "default_event_limit")]
    pub event_log_limit: u64,
    #[serde(default = "default_sample_every")]
    pub sample_every: u64,
    #[serde(default = "default_serial_gd_iters")]
    pub serial_gd_iters: u64,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment, output_dir: PathBuf, mode: Mode) -> Self {
        ExperimentConfig {
            experiment,
            objective: default_objective(),
            dims: Vec::new(),
            workers: Vec::new(),
            expected_delays: Vec::new(),
            seeds: Vec::new(),
            algorithms: Vec::new(),
            output_dir,
            mode,
            tau: None,
            target_tol: default_target_tol(),
            jobs: default_jobs(),
            event_log_limit: default_event_limit(),
            sample_every: default_sample_every(),
            serial_gd_iters: default_serial_gd_iters(),
        }
    }

    /// Fills empty axis lists with the experiment family's defaults.
    pub fn resolve(mut self) -> Self {
        match self.experiment {
            Experiment::SaddleEvasion => {
                if self.dims.is_empty() {
                    self.dims = vec![100, 10_000, 1_000_000];
                }
                if self.workers.is_empty() {
                    self.workers = vec![4];
                }
                if self.expected_delays.is_empty() {
                    self.expected_delays = vec![0.0];
                }
                if self.algorithms.is_empty() {
                    self.algorithms =
                        vec![Algorithm::Seacgd, Algorithm::SerialGd, Algorithm::SyncParallelPgd];
                }
            }
            Experiment::DelaySweep => {
                if self.dims.is_empty() {
                    self.dims = vec![10_000];
                }
                if self.workers.is_empty() {
                    self.workers = vec![8];
                }
                if self.expected_delays.is_empty() {
                    self.expected_delays = vec![0.0, 1e-2, 5e-2];
                }
                if self.algorithms.is_empty() {
                    self.algorithms = vec![Algorithm::Seacgd, Algorithm::SyncParallelPgd];
                }
            }
            Experiment::Scalability => {
                if self.dims.is_empty() {
                    self.dims = vec![1_000_000];
                }
                if self.workers.is_empty() {
                    self.workers = vec![2, 8];
                }
                if self.expected_delays.is_empty() {
                    self.expected_delays = vec![0.0];
                }
                if self.algorithms.is_empty() {
                    self.algorithms = vec![Algorithm::Seacgd];
                }
            }
        }
        if self.seeds.is_empty() {
            self.seeds = vec![0];
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.objective != "paper_quartic" && self.objective != "quartic" {
            return Err(Error::Config(format!("unknown objective {:?}", self.objective)));
        }
        if self.dims.is_empty()
            || self.workers.is_empty()
            || self.expected_delays.is_empty()
            || self.seeds.is_empty()
            || self.algorithms.is_empty()
        {
            return Err(Error::Config("every experiment axis needs at least one value".into()));
        }
        for &d in &self.dims {
            if d < 2 || d % 2 != 0 {
                return Err(Error::Config(format!("dim must be even and >= 2, got {d}")));
            }
        }
        for &w in &self.workers {
            if w == 0 {
                return Err(Error::Config("workers must be positive".into()));
            }
        }
        for &x in &self.expected_delays {
            if x < 0.0 {
                return Err(Error::Config(format!("expected_delay must be >= 0, got {x}")));
            }
        }
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be positive".into()));
        }
        Ok(())
    }

    fn tau_for(&self, workers: usize) -> usize {
        self.tau.unwrap_or(match self.experiment {
            Experiment::DelaySweep => 2 * workers,
            _ => workers.saturating_sub(1).max(1),
        })
    }
}

/// One axis combination to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub run_id: String,
    pub algorithm: Algorithm,
    pub dim: usize,
    pub workers: usize,
    pub tau: usize,
    pub expected_delay: f64,
    pub seed: u64,
}

/// Summary row for one finished run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    #[serde(flatten)]
    pub cell: Cell,
    pub final_f: f64,
    pub target_f: f64,
    pub time_to_target: Option<f64>,
    pub total_iters: u64,
    pub virtual_time: f64,
    pub escapes: u64,
    pub perturbations: u64,
    pub outcome: String,
    pub hp: Option<HyperParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub results: Vec<CellResult>,
}

/// The standard problem setup for one cell: saddle start, accuracy chosen
/// so sqrt(rho * eps) = 2, failure budget 0.1.
pub fn standard_inputs(dim: usize, tau: usize, workers: usize) -> Result<(QuarticSaddle, UserInputs)> {
    let q = QuarticSaddle::new(dim)?;
    let rho = quartic_hessian_rho(dim);
    let x0 = q.saddle();
    let inputs = UserInputs {
        eps: 4.0 / rho,
        tau,
        l: QUARTIC_LIPSCHITZ_L,
        rho,
        delta: 0.1,
        d: dim,
        x0,
        workers,
        mu: 1.0,
        fstar: -(dim as f64) / 4.0,
        delta_f: dim as f64 / 4.0,
    };
    inputs.validate()?;
    Ok((q, inputs))
}

pub fn cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for &dim in &cfg.dims {
        for &workers in &cfg.workers {
            for &delay in &cfg.expected_delays {
                for &seed in &cfg.seeds {
                    for &algorithm in &cfg.algorithms {
                        let tau = cfg.tau_for(workers);
                        let run_id = format!(
                            "{}_{}_d{}_w{}_delay{}_s{}",
                            cfg.experiment.as_str(),
                            algorithm.as_str(),
                            dim,
                            workers,
                            delay,
                            seed
                        );
                        out.push(Cell {
                            run_id,
                            algorithm,
                            dim,
                            workers,
                            tau,
                            expected_delay: delay,
                            seed,
                        });
                    }
                }
            }
        }
    }
    out
}

fn delay_model(expected_delay: f64, seed: u64) -> DelayModel {
    if expected_delay > 0.0 {
        DelayModel::exponential(expected_delay, VictimPolicy::RoundRobin, seed)
    } else {
        DelayModel::none()
    }
}

fn se_header(cell: &Cell, mode: Mode, hp: &HyperParams, target_f: f64) -> RunHeader {
    RunHeader {
        algorithm: Algorithm::Seacgd.as_str().to_string(),
        objective: "quartic".to_string(),
        dim: cell.dim,
        workers: cell.workers,
        tau: cell.tau,
        mode: match mode {
            Mode::Simulated => "simulated".to_string(),
            Mode::Parallel => "parallel".to_string(),
        },
        seed: cell.seed,
        expected_delay: cell.expected_delay,
        eta: hp.eta,
        hp: Some(*hp),
        target_f: Some(target_f),
    }
}

fn result_from_report(
    cell: &Cell,
    report: &TerminationReport,
    trace: &RunTrace,
    target_f: f64,
    hp: Option<HyperParams>,
) -> CellResult {
    CellResult {
        cell: cell.clone(),
        final_f: report.final_f,
        target_f,
        time_to_target: trace.time_to_target,
        total_iters: report.total_global_iters,
        virtual_time: trace.virtual_time,
        escapes: report.escapes,
        perturbations: report.total_perturbations,
        outcome: match report.outcome {
            Outcome::SecondOrderStationary => "second_order_stationary".to_string(),
            Outcome::IterationCapReached => "iteration_cap_reached".to_string(),
        },
        hp,
    }
}

/// Runs one cell and writes its trace CSV plus, for the asynchronous
/// algorithm, a JSON-lines event log.
pub fn run_cell(cfg: &ExperimentConfig, cell: &Cell) -> Result<(CellResult, RunTrace)> {
    let (q, inputs) = standard_inputs(cell.dim, cell.tau, cell.workers)?;
    let hp = derive_params(&inputs)?;
    let target_f = -(cell.dim as f64) / 4.0 + cfg.target_tol * cell.dim as f64;
    let delay = delay_model(cell.expected_delay, cell.seed);
    let events_path = cfg.output_dir.join(format!("{}.events.jsonl", cell.run_id));

    let (result, trace) = match cell.algorithm {
        Algorithm::Seacgd => {
            let header = se_header(cell, cfg.mode, &hp, target_f);
            let (report, samples, virtual_time, ttt) = match cfg.mode {
                Mode::Simulated => {
                    let sim_cfg = SimConfig {
                        delay,
                        seed: cell.seed,
                        sample_every: cfg.sample_every,
                        target_f: Some(target_f),
                        ..SimConfig::new(hp.eta, cell.tau, cell.workers)
                    };
                    let sink = JsonlSink::new(
                        BufWriter::new(std::fs::File::create(&events_path)?),
                        cfg.event_log_limit,
                    );
                    let mut exec = SimExecutor::with_sink(&q, &inputs.x0, sim_cfg, sink)?;
                    let report =
                        se_acgd(&mut exec, &q, &inputs, &hp, cell.seed, &SeOptions::default())?;
                    let samples = exec.take_samples();
                    (report, samples, exec.virtual_time(), exec.time_to_target())
                }
                Mode::Parallel => {
                    let par_cfg = ParallelConfig {
                        delay,
                        seed: cell.seed,
                        sample_every: cfg.sample_every,
                        target_f: Some(target_f),
                        ..ParallelConfig::new(hp.eta, cell.tau, cell.workers)
                    };
                    let sink = JsonlSink::new(
                        BufWriter::new(std::fs::File::create(&events_path)?),
                        cfg.event_log_limit,
                    );
                    let inputs_ref = &inputs;
                    let hp_ref = &hp;
                    let seed = cell.seed;
                    let (res, _sink) = run_parallel(&q, &inputs.x0, par_cfg, sink, |h| {
                        let report =
                            se_acgd(h, &q, inputs_ref, hp_ref, seed, &SeOptions::default())?;
                        let samples = h.take_samples();
                        Ok((report, samples, h.virtual_time(), h.time_to_target()))
                    });
                    res?
                }
            };
            let trace = RunTrace {
                header,
                samples,
                phases: report.phases.clone(),
                final_f: report.final_f,
                total_iters: report.total_global_iters,
                virtual_time,
                time_to_target: ttt,
            };
            (result_from_report(cell, &report, &trace, target_f, Some(hp)), trace)
        }
        Algorithm::SerialGd => {
            let mut bl = BaselineConfig::from_derived(BaselineKind::SerialGd, &hp, cell.seed);
            bl.sample_every = cfg.sample_every;
            bl.target_f = Some(target_f);
            let trace = run_serial_gd(&q, &inputs.x0, &bl, cfg.serial_gd_iters)?;
            let result = CellResult {
                cell: cell.clone(),
                final_f: trace.final_f,
                target_f,
                time_to_target: trace.time_to_target,
                total_iters: trace.total_iters,
                virtual_time: trace.virtual_time,
                escapes: 0,
                perturbations: 0,
                outcome: "budget_exhausted".to_string(),
                hp: None,
            };
            (result, trace)
        }
        Algorithm::SyncParallelPgd => {
            let (report, trace) = run_sync_parallel_pgd(
                &q,
                &inputs.x0,
                &inputs,
                &hp,
                cell.workers,
                delay,
                cell.seed,
                Some(target_f),
            )?;
            (result_from_report(cell, &report, &trace, target_f, Some(hp)), trace)
        }
    };

    trace.write_csv(&cfg.output_dir.join(format!("{}.csv", cell.run_id)))?;
    Ok((result, trace))
}

/// Runs the whole cross-product and writes summary.json and plot_data.csv.
/// Cells run on `jobs` threads; outputs are ordered by cell index, so the
/// summary is identical no matter how the work was scheduled.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let work = cells(cfg);
    let n = work.len();
    let mut slots: Vec<Option<Result<(CellResult, RunTrace)>>> = Vec::new();
    slots.resize_with(n, || None);

    if cfg.jobs <= 1 {
        for (i, cell) in work.iter().enumerate() {
            slots[i] = Some(run_cell(cfg, cell));
        }
    } else {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let slot_cells: Vec<std::sync::Mutex<&mut Option<Result<(CellResult, RunTrace)>>>> =
            slots.iter_mut().map(std::sync::Mutex::new).collect();
        std::thread::scope(|scope| {
            for _ in 0..cfg.jobs.min(n) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    if i >= n {
                        break;
                    }
                    let out = run_cell(cfg, &work[i]);
                    **slot_cells[i].lock().expect("slot lock") = Some(out);
                });
            }
        });
    }

    let mut results = Vec::with_capacity(n);
    let mut traces = Vec::with_capacity(n);
    for slot in slots {
        let (result, trace) = slot.expect("all cells ran")?;
        results.push(result);
        traces.push(trace);
    }

    emit_plot_data(&traces, &cfg.output_dir.join("plot_data.csv"))?;
    let report = ExperimentReport { config: cfg.clone(), results };
    let summary = serde_json::to_string_pretty(&report)?;
    std::fs::write(cfg.output_dir.join("summary.json"), summary + "\n")?;
    Ok(report)
}

/// Re-reads a config file, accepting either a bare config or a full report
/// (whose embedded config is reused).
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    if let Ok(cfg) = serde_json::from_str::<ExperimentConfig>(&text) {
        return Ok(cfg);
    }
    let report: ExperimentReport = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("unreadable config {}: {e}", path.display())))?;
    Ok(report.config)
}
