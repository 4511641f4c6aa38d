//! Shows why asynchrony helps under stragglers: injects an exponential
//! delay on one worker and compares virtual time-to-target between the
//! asynchronous solver and the barrier-synchronous baseline.

use seacgd::algorithms::{se_acgd, SeOptions};
use seacgd::baselines::run_sync_parallel_pgd;
use seacgd::bench::standard_inputs;
use seacgd::hyperparams::derive_params;
use seacgd::runtime::sim::{SimConfig, SimExecutor};
use seacgd::{AcgdExecutor, DelayModel, VictimPolicy};

fn main() {
    let d = 10_000;
    let workers = 8;
    let tau = 2 * workers;
    let (q, inputs) = standard_inputs(d, tau, workers).expect("valid setup");
    let hp = derive_params(&inputs).expect("valid inputs");
    let target = -(d as f64) / 4.0 + 1e-3 * d as f64;

    println!("{:>14} {:>16} {:>16} {:>8}", "mean delay", "async t_target", "sync t_target", "ratio");
    for delay in [0.0, 1e-2, 5e-2] {
        let model = if delay > 0.0 {
            DelayModel::exponential(delay, VictimPolicy::RoundRobin, 1)
        } else {
            DelayModel::none()
        };

        let cfg = SimConfig {
            delay: model,
            seed: 1,
            target_f: Some(target),
            ..SimConfig::new(hp.eta, tau, workers)
        };
        let mut exec = SimExecutor::new(&q, &inputs.x0, cfg).expect("valid config");
        se_acgd(&mut exec, &q, &inputs, &hp, 1, &SeOptions::default()).expect("async run");
        let t_async = exec.time_to_target().expect("target reached");

        let (_, trace) =
            run_sync_parallel_pgd(&q, &inputs.x0, &inputs, &hp, workers, model, 1, Some(target))
                .expect("sync run");
        let t_sync = trace.time_to_target.expect("target reached");

        println!("{delay:>14} {t_async:>16.1} {t_sync:>16.1} {:>8.2}", t_sync / t_async);
    }
}
