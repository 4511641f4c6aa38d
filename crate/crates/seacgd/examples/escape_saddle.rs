//! Runs the full saddle-escaping loop on the quartic test function from its
//! exact saddle point and prints every phase decision.

use seacgd::algorithms::{se_acgd, SeOptions};
use seacgd::bench::standard_inputs;
use seacgd::hyperparams::derive_params;
use seacgd::runtime::sim::{SimConfig, SimExecutor};
use seacgd::AcgdExecutor;

fn main() {
    let d = 1000;
    let workers = 4;
    let tau = workers - 1;
    let (q, inputs) = standard_inputs(d, tau, workers).expect("valid setup");
    let hp = derive_params(&inputs).expect("valid inputs");

    let cfg = SimConfig {
        seed: 7,
        ..SimConfig::new(hp.eta, tau, workers)
    };
    let mut exec = SimExecutor::new(&q, &inputs.x0, cfg).expect("valid config");
    let report = se_acgd(&mut exec, &q, &inputs, &hp, 7, &SeOptions::default())
        .expect("run completes");

    println!("phases ({} total, threshold F = {:.3e}):", report.phases.len(), hp.f_threshold);
    let n = report.phases.len();
    for (i, p) in report.phases.iter().enumerate() {
        if n > 12 && i == 6 {
            println!("  ... {} more LG phases ...", n - 12);
        }
        if n > 12 && (6..n - 6).contains(&i) {
            continue;
        }
        println!(
            "  {:>3} {:<7} entry={:+.6e} exit={:+.6e} drop={:+.3e} iters={:<7} -> {:?}",
            i,
            p.phase.as_str(),
            p.entry_e,
            p.exit_e,
            p.entry_e - p.exit_e,
            p.iters,
            p.decision
        );
    }
    println!();
    println!("outcome          : {:?}", report.outcome);
    println!("escapes          : {}", report.escapes);
    println!("perturbations    : {}", report.total_perturbations);
    println!("global iterations: {}", report.total_global_iters);
    println!("virtual time     : {:.1}", exec.virtual_time());
    println!("final f          : {:.9} (local optimum is {})", report.final_f, -(d as f64) / 4.0);
    println!(
        "certificate      : {:?} (grad {:.3e}, min eig {:.3})",
        report.certificate.tag, report.certificate.grad_norm, report.certificate.min_eig_estimate
    );
}
