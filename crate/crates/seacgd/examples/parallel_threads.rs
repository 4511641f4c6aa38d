//! Runs the solver on real OS threads instead of the deterministic
//! simulator, with a live staleness/coverage audit attached to the event
//! stream.

use seacgd::algorithms::{se_acgd, SeOptions};
use seacgd::bench::standard_inputs;
use seacgd::hyperparams::derive_params;
use seacgd::runtime::audit::AuditSink;
use seacgd::runtime::parallel::{run_parallel, ParallelConfig};
use seacgd::AcgdExecutor;

fn main() {
    let d = 1000;
    let workers = 4;
    let tau = 2 * workers;
    let (q, inputs) = standard_inputs(d, tau, workers).expect("valid setup");
    let hp = derive_params(&inputs).expect("valid inputs");

    let cfg = ParallelConfig {
        seed: 9,
        time_scale: 1e-6, // wall seconds per virtual unit; keep the demo quick
        ..ParallelConfig::new(hp.eta, tau, workers)
    };
    let audit = AuditSink::new(tau, workers);
    let (result, audit) = run_parallel(&q, &inputs.x0, cfg, audit, |h| {
        let report = se_acgd(h, &q, &inputs, &hp, 9, &SeOptions::default())?;
        Ok((report, h.virtual_time()))
    });
    let (report, wall) = result.expect("parallel run completes");

    println!("outcome        : {:?}", report.outcome);
    println!("final f        : {:.9} (local optimum is {})", report.final_f, -(d as f64) / 4.0);
    println!("escapes        : {}", report.escapes);
    println!("global iters   : {}", report.total_global_iters);
    println!("wall time      : {wall:.3}s across {workers} threads");
    let a = audit.report();
    println!(
        "audit          : applies={} max_age={} staleness_ok={} coverage_ok={}",
        a.applies, a.max_age_seen, a.staleness_ok, a.coverage_ok
    );
}
