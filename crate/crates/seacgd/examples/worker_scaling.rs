//! Virtual time-to-target as the worker count grows: more workers apply
//! more block updates per unit of virtual time, so the asynchronous solver
//! gets faster without any step-size change.

use seacgd::algorithms::{se_acgd, SeOptions};
use seacgd::bench::standard_inputs;
use seacgd::hyperparams::derive_params;
use seacgd::runtime::sim::{SimConfig, SimExecutor};
use seacgd::AcgdExecutor;

fn main() {
    let d = 100_000;
    let target = -(d as f64) / 4.0 + 1e-3 * d as f64;
    println!("{:>8} {:>6} {:>16} {:>14}", "workers", "tau", "virtual t_target", "global iters");
    for workers in [1usize, 2, 4, 8] {
        let tau = workers.saturating_sub(1).max(1);
        let (q, inputs) = standard_inputs(d, tau, workers).expect("valid setup");
        let hp = derive_params(&inputs).expect("valid inputs");
        let cfg = SimConfig {
            seed: 3,
            target_f: Some(target),
            ..SimConfig::new(hp.eta, tau, workers)
        };
        let mut exec = SimExecutor::new(&q, &inputs.x0, cfg).expect("valid config");
        se_acgd(&mut exec, &q, &inputs, &hp, 3, &SeOptions::default()).expect("run completes");
        println!(
            "{workers:>8} {tau:>6} {:>16.1} {:>14}",
            exec.time_to_target().expect("target reached"),
            exec.global_j()
        );
    }
}
