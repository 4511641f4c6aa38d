//! Classifies characteristic points of the quartic test function: large
//! gradient, saddle region, and near-second-order-stationary.

use seacgd::objective::classify_point;
use seacgd::quartic::{quartic_hessian_rho, QuarticSaddle};

fn main() {
    let d = 100;
    let q = QuarticSaddle::new(d).expect("even dimension");
    let rho = quartic_hessian_rho(d);
    let eps = 4.0 / rho; // sqrt(rho * eps) = 2, so the saddle's -4 curvature trips the test

    let points = [
        ("far from stationary (r=3, s=0)", q.point_at(3.0, 0.0)),
        ("exact saddle (r=1, s=-1)", q.saddle()),
        ("local minimum (r=1+1/sqrt2, s=-1)", q.point_at(1.0 + 0.5f64.sqrt(), -1.0)),
    ];

    println!("d={d}, eps={eps:.4}, sqrt(rho*eps)=2, curvature threshold -2");
    for (name, x) in &points {
        let class = classify_point(&q, x, eps, 2000, 42).expect("classification runs");
        println!(
            "{name:<36} -> {:?} (|grad| = {:.4e}, min eig ~ {:+.4})",
            class.tag, class.grad_norm, class.min_eig_estimate
        );
    }
}
