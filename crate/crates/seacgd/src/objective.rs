//! Objective-function contract: value, block gradients, Hessian-vector
//! products, and landscape classification.

use crate::error::{Error, Result};
use crate::util::{l2_norm, Kahan};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::ops::Range;

/// Smoothness data for an objective: dimension, gradient-Lipschitz constant,
/// Hessian-Lipschitz constant, and a global lower bound on f.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub dim: usize,
    pub lipschitz_l: f64,
    pub hessian_rho: f64,
    pub fstar: f64,
}

impl ObjectiveSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::Config(format!("dimension must be >= 2, got {}", self.dim)));
        }
        if !(self.lipschitz_l > 0.0) || !(self.hessian_rho > 0.0) {
            return Err(Error::Config(
                "smoothness constants must be strictly positive".into(),
            ));
        }
        Ok(())
    }
}

/// Strict-saddle triple: gradient floor, escape curvature, and the radius
/// around local optima. Kept as three distinct fields on purpose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandscapeParams {
    pub grad_floor_phi: f64,
    pub curvature_gamma: f64,
    pub optima_radius_zeta: f64,
}

impl LandscapeParams {
    pub fn validate(&self) -> Result<()> {
        if self.grad_floor_phi > 0.0 && self.curvature_gamma > 0.0 && self.optima_radius_zeta > 0.0
        {
            Ok(())
        } else {
            Err(Error::Config("landscape parameters must be strictly positive".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointTag {
    LargeGradient,
    SaddleRegion,
    NearSecondOrderStationary,
}

/// Result of classifying a point against an accuracy target eps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointClass {
    pub tag: PointTag,
    pub grad_norm: f64,
    pub min_eig_estimate: f64,
    /// Set when the power iteration did not converge within its budget;
    /// the tag is still assigned from the best available estimate.
    pub low_confidence: bool,
}

/// An objective with matrix-free access to value, block gradients, and
/// Hessian-vector products. All methods are pure in their inputs.
pub trait Objective: Send + Sync {
    fn spec(&self) -> ObjectiveSpec;

    fn eval(&self, x: &[f64]) -> Result<f64>;

    /// Writes the gradient coordinates of `block` into `out` (which has
    /// length `block.len()`); coordinates outside the block are untouched.
    fn block_gradient_into(&self, x: &[f64], block: Range<usize>, out: &mut [f64]) -> Result<()>;

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let d = self.spec().dim;
        let mut g = vec![0.0; d];
        self.block_gradient_into(x, 0..d, &mut g)?;
        Ok(g)
    }

    /// Hessian-vector product. The default uses central differences of the
    /// gradient; analytic objectives should override it.
    fn hessian_vector_product(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let d = self.spec().dim;
        if x.len() != d || v.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: x.len().max(v.len()) });
        }
        let vnorm = l2_norm(v);
        if vnorm == 0.0 {
            return Ok(vec![0.0; d]);
        }
        let h = 1e-5 * (1.0 + l2_norm(x)) / vnorm;
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        for i in 0..d {
            xp[i] += h * v[i];
            xm[i] -= h * v[i];
        }
        let gp = self.gradient(&xp)?;
        let gm = self.gradient(&xm)?;
        Ok(gp.iter().zip(&gm).map(|(p, m)| (p - m) / (2.0 * h)).collect())
    }

    /// Incremental evaluation state for simulators, when the objective
    /// supports faster-than-dense updates. `None` means callers should fall
    /// back to [`DenseState`].
    fn fast_state(&self, _x: &[f64]) -> Option<Box<dyn ObjectiveState>> {
        None
    }
}

/// A block gradient captured at fetch time. Structured objectives can return
/// a handful of constant segments instead of a dense slice, which keeps the
/// per-update cost independent of the block length.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockGrad {
    /// One value per coordinate of the block, in block order.
    Dense(Vec<f64>),
    /// Constant segments, disjoint and in increasing order, covering the
    /// block in absolute coordinates.
    Segments(Vec<(Range<usize>, f64)>),
}

impl BlockGrad {
    pub fn sq_norm(&self) -> f64 {
        match self {
            BlockGrad::Dense(g) => crate::util::sq_norm(g),
            BlockGrad::Segments(segs) => {
                let mut acc = Kahan::new();
                for (r, v) in segs {
                    acc.add(r.len() as f64 * v * v);
                }
                acc.value()
            }
        }
    }
}

/// Mutable iterate paired with cached objective quantities. The runtime
/// drives everything through this interface so that structured objectives
/// can answer in O(1) per update.
pub trait ObjectiveState: Send {
    fn dim(&self) -> usize;

    fn value(&self) -> f64;

    /// Gradient of the current iterate restricted to `block`.
    fn fetch_block_gradient(&self, block: Range<usize>) -> BlockGrad;

    /// Adds `scale * grad` to the coordinates of `block`. `grad` need not
    /// come from the current iterate (it is usually stale).
    fn apply_scaled(&mut self, block: Range<usize>, grad: &BlockGrad, scale: f64);

    /// Adds a dense vector to the whole iterate (perturbations).
    fn add_dense(&mut self, delta: &[f64]);

    fn materialize(&self) -> Vec<f64>;

    fn grad_norm(&self) -> f64;
}

/// Fallback state for generic objectives: stores the iterate densely and
/// re-evaluates through the [`Objective`] on every update.
pub struct DenseState<'a> {
    obj: &'a dyn Objective,
    x: Vec<f64>,
    f: f64,
}

impl<'a> DenseState<'a> {
    pub fn new(obj: &'a dyn Objective, x: Vec<f64>) -> Result<Self> {
        let f = obj.eval(&x)?;
        Ok(DenseState { obj, x, f })
    }
}

impl ObjectiveState for DenseState<'_> {
    fn dim(&self) -> usize {
        self.x.len()
    }

    fn value(&self) -> f64 {
        self.f
    }

    fn fetch_block_gradient(&self, block: Range<usize>) -> BlockGrad {
        let mut out = vec![0.0; block.len()];
        self.obj
            .block_gradient_into(&self.x, block, &mut out)
            .expect("state iterate has the objective's dimension");
        BlockGrad::Dense(out)
    }

    fn apply_scaled(&mut self, block: Range<usize>, grad: &BlockGrad, scale: f64) {
        match grad {
            BlockGrad::Dense(g) => {
                debug_assert_eq!(g.len(), block.len());
                for (xi, gi) in self.x[block].iter_mut().zip(g) {
                    *xi += scale * gi;
                }
            }
            BlockGrad::Segments(segs) => {
                for (r, v) in segs {
                    debug_assert!(r.start >= block.start && r.end <= block.end);
                    for xi in &mut self.x[r.clone()] {
                        *xi += scale * v;
                    }
                }
            }
        }
        self.f = self.obj.eval(&self.x).expect("dimension preserved");
    }

    fn add_dense(&mut self, delta: &[f64]) {
        for (xi, di) in self.x.iter_mut().zip(delta) {
            *xi += di;
        }
        self.f = self.obj.eval(&self.x).expect("dimension preserved");
    }

    fn materialize(&self) -> Vec<f64> {
        self.x.clone()
    }

    fn grad_norm(&self) -> f64 {
        let g = self.obj.gradient(&self.x).expect("dimension preserved");
        l2_norm(&g)
    }
}

/// Classifies `x` against accuracy `eps`: large gradient, saddle region, or
/// near-second-order stationary. The minimum Hessian eigenvalue is estimated
/// by power iteration on the shifted operator `L*I - H`, which is PSD under
/// the gradient-Lipschitz bound, so its top eigenvalue is `L - lambda_min(H)`.
pub fn classify_point(
    obj: &dyn Objective,
    x: &[f64],
    eps: f64,
    power_iters: usize,
    seed: u64,
) -> Result<PointClass> {
    let spec = obj.spec();
    let d = spec.dim;
    if x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.len() });
    }
    if !(eps > 0.0) {
        return Err(Error::Config(format!("eps must be positive, got {eps}")));
    }
    let limit = spec.lipschitz_l * spec.lipschitz_l / spec.hessian_rho;
    if eps > limit {
        return Err(Error::Regime { eps, limit });
    }

    let grad_norm = l2_norm(&obj.gradient(x)?);

    let c = spec.lipschitz_l;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() - 0.5).collect();
    normalize(&mut v);

    let mut lambda_shifted = 0.0;
    let mut residual = f64::INFINITY;
    for _ in 0..power_iters {
        let hv = obj.hessian_vector_product(x, &v)?;
        // b = c*v - H*v
        let b: Vec<f64> = v.iter().zip(&hv).map(|(vi, hvi)| c * vi - hvi).collect();
        let mut dot = Kahan::new();
        for (vi, bi) in v.iter().zip(&b) {
            dot.add(vi * bi);
        }
        lambda_shifted = dot.value();
        let mut res_sq = Kahan::new();
        for (vi, bi) in v.iter().zip(&b) {
            let r = bi - lambda_shifted * vi;
            res_sq.add(r * r);
        }
        residual = res_sq.value().max(0.0).sqrt();
        let bnorm = l2_norm(&b);
        if bnorm == 0.0 {
            // H*v = c*v exactly; lambda_min estimate collapses to 0 shift.
            lambda_shifted = 0.0;
            residual = 0.0;
            break;
        }
        v = b;
        let inv = 1.0 / bnorm;
        for vi in &mut v {
            *vi *= inv;
        }
        if residual <= 1e-9 * c.max(1.0) {
            break;
        }
    }

    let min_eig_estimate = c - lambda_shifted;
    let low_confidence = residual > 1e-4 * c.max(1.0);

    let tag = if grad_norm > eps {
        PointTag::LargeGradient
    } else if min_eig_estimate < -(spec.hessian_rho * eps).sqrt() {
        PointTag::SaddleRegion
    } else {
        PointTag::NearSecondOrderStationary
    };

    Ok(PointClass { tag, grad_norm, min_eig_estimate, low_confidence })
}

fn normalize(v: &mut [f64]) {
    let n = l2_norm(v);
    if n > 0.0 {
        for vi in v.iter_mut() {
            *vi /= n;
        }
    } else if let Some(first) = v.first_mut() {
        *first = 1.0;
    }
}
