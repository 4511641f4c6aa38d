//! Built-in strict-saddle test function.
//!
//! f(x) = ft(r, s) with r = (2/d)·sum of the first d/2 coordinates,
//! s = (2/d)·sum of the last d/2 coordinates, and
//! ft(r, s) = d[(r-1)^4 - (r-1)^2 + (s+1)^2].
//!
//! The function has a saddle at (r, s) = (1, -1) with value 0 and two global
//! minima at r = 1 ± 1/sqrt(2), s = -1 with value -d/4. Because f depends on
//! x only through the two averages, its gradient is constant on each half of
//! the coordinates, which [`QuarticState`] exploits to serve updates in O(1).

use crate::error::{Error, Result};
use crate::objective::{BlockGrad, Objective, ObjectiveSpec, ObjectiveState};
use crate::util::Kahan;
use std::ops::Range;

/// Gradient-Lipschitz constant over the box [-3, 3]^d. The nonzero Hessian
/// eigenvalues are 24(r-1)^2 - 4 and 4 with r in [-3, 3]; the extreme is at
/// r = -3.
pub const QUARTIC_LIPSCHITZ_L: f64 = 380.0;

/// Hessian-Lipschitz constant over the same box: the r-eigenvalue has slope
/// 48(r-1), at most 192 in magnitude, and |r(x) - r(y)| <= sqrt(2/d)·|x - y|.
pub fn quartic_hessian_rho(d: usize) -> f64 {
    192.0 * (2.0 / d as f64).sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct QuarticSaddle {
    d: usize,
}

impl QuarticSaddle {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 || d % 2 != 0 {
            return Err(Error::Config(format!(
                "the quartic test function needs an even dimension >= 2, got {d}"
            )));
        }
        Ok(QuarticSaddle { d })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len == self.d {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.d, got: len })
        }
    }

    /// The two averages (r, s) at a point.
    pub fn averages(&self, x: &[f64]) -> (f64, f64) {
        let h = self.d / 2;
        let mut sr = Kahan::new();
        for &xi in &x[..h] {
            sr.add(xi);
        }
        let mut ss = Kahan::new();
        for &xi in &x[h..] {
            ss.add(xi);
        }
        // Divide last: when the half-sum is exactly d/2 (the saddle), the
        // quotient is exactly 1 and the gradient vanishes bit-exactly.
        let d = self.d as f64;
        (2.0 * sr.value() / d, 2.0 * ss.value() / d)
    }

    fn scalar_value(&self, r: f64, s: f64) -> f64 {
        let u = r - 1.0;
        let w = s + 1.0;
        self.d as f64 * (u * u * u * u - u * u + w * w)
    }

    /// Gradient value shared by every coordinate in the first half.
    pub fn grad_r(r: f64) -> f64 {
        let u = r - 1.0;
        8.0 * u * u * u - 4.0 * u
    }

    /// Gradient value shared by every coordinate in the second half.
    pub fn grad_s(s: f64) -> f64 {
        4.0 * (s + 1.0)
    }

    /// A point with the given averages, spread uniformly: every coordinate of
    /// a half carries the same value.
    pub fn point_at(&self, r: f64, s: f64) -> Vec<f64> {
        let h = self.d / 2;
        let mut x = vec![r; self.d];
        x[h..].fill(s);
        x
    }

    /// The saddle point in coordinates.
    pub fn saddle(&self) -> Vec<f64> {
        self.point_at(1.0, -1.0)
    }
}

impl Objective for QuarticSaddle {
    fn spec(&self) -> ObjectiveSpec {
        ObjectiveSpec {
            dim: self.d,
            lipschitz_l: QUARTIC_LIPSCHITZ_L,
            hessian_rho: quartic_hessian_rho(self.d),
            fstar: -(self.d as f64) / 4.0,
        }
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        let (r, s) = self.averages(x);
        Ok(self.scalar_value(r, s))
    }

    fn block_gradient_into(&self, x: &[f64], block: Range<usize>, out: &mut [f64]) -> Result<()> {
        self.check_dim(x.len())?;
        if block.is_empty() || block.end > self.d {
            return Err(Error::Contract(format!(
                "block {block:?} is not a nonempty sub-range of 0..{}",
                self.d
            )));
        }
        if out.len() != block.len() {
            return Err(Error::DimensionMismatch { expected: block.len(), got: out.len() });
        }
        let h = self.d / 2;
        let (r, s) = self.averages(x);
        let gr = Self::grad_r(r);
        let gs = Self::grad_s(s);
        for (slot, i) in out.iter_mut().zip(block) {
            *slot = if i < h { gr } else { gs };
        }
        Ok(())
    }

    fn hessian_vector_product(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        self.check_dim(v.len())?;
        let h = self.d / 2;
        let (r, _) = self.averages(x);
        let mut vr = Kahan::new();
        for &vi in &v[..h] {
            vr.add(vi);
        }
        let mut vs = Kahan::new();
        for &vi in &v[h..] {
            vs.add(vi);
        }
        let d = self.d as f64;
        let u = r - 1.0;
        let cr = (4.0 / d) * (12.0 * u * u - 2.0) * vr.value();
        let cs = (8.0 / d) * vs.value();
        let mut out = vec![cr; self.d];
        out[h..].fill(cs);
        Ok(out)
    }

    fn fast_state(&self, x: &[f64]) -> Option<Box<dyn ObjectiveState>> {
        if x.len() != self.d {
            return None;
        }
        Some(Box::new(QuarticState::new(*self, x.to_vec())))
    }
}

/// Incremental iterate for [`QuarticSaddle`].
///
/// Gradient updates arrive as constant segments (one value per half of a
/// worker's block), so the state keeps the dense base vector untouched and
/// accumulates one shift per distinct segment, plus compensated running sums
/// of the two halves. Value, gradients, and gradient norms then cost O(1)
/// regardless of dimension; the dense vector is only rebuilt on
/// perturbations and at materialization.
pub struct QuarticState {
    obj: QuarticSaddle,
    base: Vec<f64>,
    /// Accumulated additive shift per distinct applied segment. Blocks are
    /// fixed for a run, so only a handful of segments ever appear; a linear
    /// scan beats hashing at that size.
    shifts: Vec<(usize, usize, f64)>,
    sum_r: Kahan,
    sum_s: Kahan,
}

impl QuarticState {
    pub fn new(obj: QuarticSaddle, x: Vec<f64>) -> Self {
        let mut st = QuarticState {
            obj,
            base: x,
            shifts: Vec::new(),
            sum_r: Kahan::new(),
            sum_s: Kahan::new(),
        };
        st.recompute_sums();
        st
    }

    fn recompute_sums(&mut self) {
        let h = self.obj.d / 2;
        self.sum_r.reset();
        for &xi in &self.base[..h] {
            self.sum_r.add(xi);
        }
        self.sum_s.reset();
        for &xi in &self.base[h..] {
            self.sum_s.add(xi);
        }
    }

    fn averages(&self) -> (f64, f64) {
        let d = self.obj.d as f64;
        (2.0 * self.sum_r.value() / d, 2.0 * self.sum_s.value() / d)
    }

    /// Folds all accumulated segment shifts into the dense base.
    fn flatten(&mut self) {
        for &(start, end, shift) in &self.shifts {
            for xi in &mut self.base[start..end] {
                *xi += shift;
            }
        }
        self.shifts.clear();
        self.recompute_sums();
    }

    fn add_segment(&mut self, seg: Range<usize>, delta: f64) {
        if seg.is_empty() || delta == 0.0 {
            return;
        }
        let h = self.obj.d / 2;
        debug_assert!(
            seg.end <= h || seg.start >= h,
            "segments never straddle the two halves"
        );
        match self.shifts.iter_mut().find(|(s, e, _)| *s == seg.start && *e == seg.end) {
            Some(entry) => entry.2 += delta,
            None => self.shifts.push((seg.start, seg.end, delta)),
        }
        let mass = delta * seg.len() as f64;
        if seg.start < h {
            self.sum_r.add(mass);
        } else {
            self.sum_s.add(mass);
        }
    }
}

impl ObjectiveState for QuarticState {
    fn dim(&self) -> usize {
        self.obj.d
    }

    fn value(&self) -> f64 {
        let (r, s) = self.averages();
        self.obj.scalar_value(r, s)
    }

    fn fetch_block_gradient(&self, block: Range<usize>) -> BlockGrad {
        let h = self.obj.d / 2;
        let (r, s) = self.averages();
        let mut segs = Vec::with_capacity(2);
        if block.start < h {
            segs.push((block.start..block.end.min(h), QuarticSaddle::grad_r(r)));
        }
        if block.end > h {
            segs.push((block.start.max(h)..block.end, QuarticSaddle::grad_s(s)));
        }
        BlockGrad::Segments(segs)
    }

    fn apply_scaled(&mut self, block: Range<usize>, grad: &BlockGrad, scale: f64) {
        match grad {
            BlockGrad::Segments(segs) => {
                for (seg, v) in segs {
                    debug_assert!(seg.start >= block.start && seg.end <= block.end);
                    self.add_segment(seg.clone(), scale * v);
                }
            }
            BlockGrad::Dense(g) => {
                // Arbitrary per-coordinate updates break the segment
                // structure; fold pending shifts first.
                debug_assert_eq!(g.len(), block.len());
                self.flatten();
                for (xi, gi) in self.base[block].iter_mut().zip(g) {
                    *xi += scale * gi;
                }
                self.recompute_sums();
            }
        }
    }

    fn add_dense(&mut self, delta: &[f64]) {
        debug_assert_eq!(delta.len(), self.obj.d);
        self.flatten();
        for (xi, di) in self.base.iter_mut().zip(delta) {
            *xi += di;
        }
        self.recompute_sums();
    }

    fn materialize(&self) -> Vec<f64> {
        let mut x = self.base.clone();
        for &(start, end, shift) in &self.shifts {
            for xi in &mut x[start..end] {
                *xi += shift;
            }
        }
        x
    }

    fn grad_norm(&self) -> f64 {
        let h = self.obj.d / 2;
        let (r, s) = self.averages();
        let gr = QuarticSaddle::grad_r(r);
        let gs = QuarticSaddle::grad_s(s);
        (h as f64 * gr * gr + (self.obj.d - h) as f64 * gs * gs).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{classify_point, DenseState, PointTag};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn eval_known_points() {
        let q = QuarticSaddle::new(2).unwrap();
        assert_eq!(q.eval(&[1.0, -1.0]).unwrap(), 0.0);
        let fmin = q.eval(&[1.0 + SQRT_HALF, -1.0]).unwrap();
        assert!((fmin - (-0.5)).abs() < 1e-12);
        assert!((q.eval(&[2.0, 0.0]).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn minimum_value_scales_with_dimension() {
        for d in [2usize, 10, 100, 1000] {
            let q = QuarticSaddle::new(d).unwrap();
            let x = q.point_at(1.0 - SQRT_HALF, -1.0);
            let f = q.eval(&x).unwrap();
            assert!((f - (-(d as f64) / 4.0)).abs() <= 1e-12 * d as f64);
        }
    }

    #[test]
    fn gradient_known_points() {
        let q = QuarticSaddle::new(2).unwrap();
        let g = q.gradient(&[1.0, -1.0]).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);

        let mut out = [0.0];
        q.block_gradient_into(&[2.0, 0.0], 0..1, &mut out).unwrap();
        assert!((out[0] - 4.0).abs() < 1e-12);

        let q4 = QuarticSaddle::new(4).unwrap();
        let mut out = [0.0, 0.0];
        q4.block_gradient_into(&[2.0, 2.0, 0.0, 0.0], 2..4, &mut out).unwrap();
        assert!((out[0] - 4.0).abs() < 1e-12);
        assert!((out[1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for d in [2usize, 10, 100] {
            let q = QuarticSaddle::new(d).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(17 + d as u64);
            for _ in 0..20 {
                let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let g = q.gradient(&x).unwrap();
                for i in 0..d {
                    let h = 1e-6 * (1.0 + x[i].abs());
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[i] += h;
                    xm[i] -= h;
                    let fd = (q.eval(&xp).unwrap() - q.eval(&xm).unwrap()) / (2.0 * h);
                    assert!(
                        (fd - g[i]).abs() <= 1e-6 * g[i].abs().max(1.0),
                        "d={d} i={i}: fd={fd} analytic={}",
                        g[i]
                    );
                }
            }
        }
    }

    #[test]
    fn hvp_known_vectors() {
        let q = QuarticSaddle::new(2).unwrap();
        let x = [1.0, -1.0];
        let hv = q.hessian_vector_product(&x, &[1.0, 0.0]).unwrap();
        assert!((hv[0] - (-4.0)).abs() < 1e-12 && hv[1].abs() < 1e-12);
        let hv = q.hessian_vector_product(&x, &[0.0, 1.0]).unwrap();
        assert!(hv[0].abs() < 1e-12 && (hv[1] - 4.0).abs() < 1e-12);
        let hv = q.hessian_vector_product(&[0.3, 2.0], &[0.0, 0.0]).unwrap();
        assert_eq!(hv, vec![0.0, 0.0]);
    }

    #[test]
    fn hvp_is_symmetric_and_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in [2usize, 10, 64] {
            let q = QuarticSaddle::new(d).unwrap();
            for _ in 0..10 {
                let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let hv = q.hessian_vector_product(&x, &v).unwrap();
                let hw = q.hessian_vector_product(&x, &w).unwrap();
                let hvw: f64 = hv.iter().zip(&w).map(|(a, b)| a * b).sum();
                let vhw: f64 = v.iter().zip(&hw).map(|(a, b)| a * b).sum();
                assert!((hvw - vhw).abs() < 1e-10 * (1.0 + hvw.abs()));

                // Cross-check the analytic product against the generic
                // finite-difference fallback.
                #[derive(Clone, Copy)]
                struct NoHvp(QuarticSaddle);
                impl Objective for NoHvp {
                    fn spec(&self) -> ObjectiveSpec {
                        self.0.spec()
                    }
                    fn eval(&self, x: &[f64]) -> crate::error::Result<f64> {
                        self.0.eval(x)
                    }
                    fn block_gradient_into(
                        &self,
                        x: &[f64],
                        block: std::ops::Range<usize>,
                        out: &mut [f64],
                    ) -> crate::error::Result<()> {
                        self.0.block_gradient_into(x, block, out)
                    }
                }
                let fd = NoHvp(q).hessian_vector_product(&x, &v).unwrap();
                for (a, b) in hv.iter().zip(&fd) {
                    assert!((a - b).abs() <= 1e-4 * (1.0 + a.abs()), "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn saddle_eigenvalue_is_minus_four() {
        for d in [2usize, 10, 100, 10_000] {
            let q = QuarticSaddle::new(d).unwrap();
            let cls = classify_point(&q, &q.saddle(), 0.05, 4000, 7).unwrap();
            assert!(
                (cls.min_eig_estimate - (-4.0)).abs() <= 1e-3,
                "d={d}: got {}",
                cls.min_eig_estimate
            );
            assert!(!cls.low_confidence, "d={d}");
            assert_eq!(cls.tag, PointTag::SaddleRegion, "d={d}");
        }
    }

    #[test]
    fn classification_tags() {
        let q = QuarticSaddle::new(2).unwrap();
        let cls = classify_point(&q, &[1.0 + SQRT_HALF, -1.0], 0.05, 4000, 7).unwrap();
        assert_eq!(cls.tag, PointTag::NearSecondOrderStationary);
        assert!(cls.min_eig_estimate > -1e-6);

        let cls = classify_point(&q, &[3.0, 0.0], 0.05, 4000, 7).unwrap();
        assert_eq!(cls.tag, PointTag::LargeGradient);
        let expected = (56.0f64 * 56.0 + 4.0 * 4.0).sqrt();
        assert!((cls.grad_norm - expected).abs() < 1e-9);
    }

    #[test]
    fn regime_bound_is_enforced() {
        let q = QuarticSaddle::new(2).unwrap();
        let limit = QUARTIC_LIPSCHITZ_L * QUARTIC_LIPSCHITZ_L / quartic_hessian_rho(2);
        assert!(classify_point(&q, &[1.0, -1.0], limit * 1.01, 100, 0).is_err());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let q = QuarticSaddle::new(4).unwrap();
        assert!(q.eval(&[0.0; 3]).is_err());
        assert!(q.hessian_vector_product(&[0.0; 4], &[0.0; 3]).is_err());
        assert!(QuarticSaddle::new(3).is_err());
    }

    #[test]
    fn fast_state_tracks_dense_state() {
        let d = 16;
        let q = QuarticSaddle::new(d).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let x0: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let mut fast = q.fast_state(&x0).unwrap();
        let mut dense = DenseState::new(&q, x0).unwrap();

        let blocks = [0..5usize, 5..11, 11..16];
        for step in 0..500 {
            let b = blocks[step % blocks.len()].clone();
            let g = fast.fetch_block_gradient(b.clone());
            let gd = dense.fetch_block_gradient(b.clone());
            assert!((g.sq_norm() - gd.sq_norm()).abs() <= 1e-9 * (1.0 + gd.sq_norm()));
            fast.apply_scaled(b.clone(), &g, -1e-3);
            dense.apply_scaled(b, &gd, -1e-3);
            assert!(
                (fast.value() - dense.value()).abs() <= 1e-9 * (1.0 + dense.value().abs())
            );
            assert!((fast.grad_norm() - dense.grad_norm()).abs() <= 1e-9);
        }

        // A perturbation forces the fast state back to dense bookkeeping.
        let delta: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.01..0.01)).collect();
        fast.add_dense(&delta);
        dense.add_dense(&delta);
        let xf = fast.materialize();
        let xd = dense.materialize();
        for (a, b) in xf.iter().zip(&xd) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}
