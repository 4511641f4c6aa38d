//! Derives the full hyperparameter ledger from user inputs and shows the
//! step-size validity boundary.

use seacgd::hyperparams::{derive_params, solve_beta, validate_step_size};
use seacgd::quartic::{quartic_hessian_rho, QuarticSaddle, QUARTIC_LIPSCHITZ_L};
use seacgd::UserInputs;

fn main() {
    let d = 1000;
    let tau = 16;
    let workers = 8;
    let q = QuarticSaddle::new(d).expect("even dimension");
    let rho = quartic_hessian_rho(d);
    let inputs = UserInputs {
        eps: 4.0 / rho,
        tau,
        l: QUARTIC_LIPSCHITZ_L,
        rho,
        delta: 0.1,
        d,
        x0: q.saddle(),
        workers,
        mu: 1.0,
        fstar: -(d as f64) / 4.0,
        delta_f: d as f64 / 4.0,
    };
    let hp = derive_params(&inputs).expect("valid inputs");

    println!("inputs: d={d} tau={tau} workers={workers} eps={:.4} L={} rho={rho:.4}", inputs.eps, inputs.l);
    println!();
    println!("beta        = {:.6}   (solve_beta({tau}))", solve_beta(tau).expect("tau >= 1"));
    println!("sigma       = {:.6e}", hp.sigma);
    println!("iota        = {:.4}", hp.iota);
    println!("chi         = {:.4}", hp.chi);
    println!("eta         = {:.6e}   (eta * L = {:.4})", hp.eta, hp.eta * inputs.l);
    println!("r           = {:.6e}   (perturbation radius eta*r = {:.6e})", hp.r, hp.eta * hp.r);
    println!("phi         = {:.6e}", hp.phi);
    println!("F threshold = {:.6e}", hp.f_threshold);
    println!("gamma       = {:.6e}", hp.gamma);
    println!("T           = {}", hp.t);
    println!("r0          = {:.6e}", hp.r0);
    println!("M           = {:.6e}", hp.m);
    println!("T_max       = {}", hp.max_total_iters(inputs.delta_f));
    println!();
    println!(
        "eta respects the descent bound:   {}",
        validate_step_size(hp.eta, &inputs, hp.beta)
    );
    println!(
        "2x eta violates the bound:        {}",
        !validate_step_size(2.0 * hp.eta, &inputs, hp.beta)
    );
}
