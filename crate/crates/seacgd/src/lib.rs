//! Saddle-escaping asynchronous coordinate gradient descent.
//!
//! The crate provides the quartic benchmark objective with a fast sparse
//! state, hyperparameter derivation, the discrete Hamiltonian energy window,
//! three execution backends (deterministic event simulator, synchronous
//! barrier loop, real threads), the phase drivers (large-gradient,
//! perturbation, and the combined saddle-escaping loop), serial and
//! synchronous baselines, and the benchmark experiment runner behind the
//! `bench` binary.

pub mod algorithms;
pub mod baselines;
pub mod bench;
pub mod error;
pub mod hamiltonian;
pub mod hyperparams;
pub mod objective;
pub mod partition;
pub mod quartic;
pub mod runtime;
pub mod trace;
pub mod util;

pub use algorithms::{
    lg_acgd, p_acgd, se_acgd, uniform_ball_sample, Outcome, PhaseResult, SeOptions,
    TerminationReport,
};
pub use baselines::{
    run_serial_gd, run_serial_pgd, run_sync_parallel_pgd, BaselineConfig, BaselineKind,
};
pub use bench::{run_experiment, Experiment, ExperimentConfig, ExperimentReport, Mode};
pub use error::{Error, Result};
pub use hamiltonian::{check_descent, DescentReport, HamiltonianWindow};
pub use hyperparams::{solve_beta, HyperParams, UserInputs};
pub use objective::{
    classify_point, BlockGrad, LandscapeParams, Objective, ObjectiveSpec, ObjectiveState,
    PointClass, PointTag,
};
pub use partition::{partition_blocks, BlockPartition};
pub use quartic::{quartic_hessian_rho, QuarticSaddle, QUARTIC_LIPSCHITZ_L};
pub use runtime::parallel::{run_parallel, ParallelConfig};
pub use runtime::sim::{SimConfig, SimExecutor};
pub use runtime::sync::{SyncConfig, SyncExecutor};
pub use runtime::{AcgdExecutor, DelayModel, EventSink, VictimPolicy};
pub use trace::{Phase, RunTrace, TraceSample};
