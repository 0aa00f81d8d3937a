//! Self-concordant barrier oracles, the omega conjugate pair, local norms and
//! analytic centers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Hessian of a barrier, stored diagonally when the barrier is a product of
/// 1-D barriers.
#[derive(Debug, Clone)]
pub enum Hessian {
    Diagonal(DVector<f64>),
    Dense(DMatrix<f64>),
}

impl Hessian {
    /// u' H u
    pub fn quad(&self, u: &DVector<f64>) -> f64 {
        match self {
            Hessian::Diagonal(d) => u.iter().zip(d.iter()).map(|(ui, di)| ui * ui * di).sum(),
            Hessian::Dense(h) => (u.transpose() * h * u)[(0, 0)],
        }
    }

    /// H^{-1} rhs
    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        match self {
            Hessian::Diagonal(d) => {
                DVector::from_iterator(d.len(), rhs.iter().zip(d.iter()).map(|(r, di)| r / di))
            }
            Hessian::Dense(h) => match h.clone().cholesky() {
                Some(chol) => chol.solve(rhs),
                // barrier Hessians are PD on the interior; LU covers marginal cases
                None => h.clone().lu().solve(rhs).unwrap_or_else(|| rhs.clone()),
            },
        }
    }

    /// u' H^{-1} u
    pub fn inv_quad(&self, u: &DVector<f64>) -> f64 {
        u.dot(&self.solve(u))
    }
}

/// A self-concordant barrier for a bounded convex set, normalized so that the
/// value vanishes at the analytic center.
pub trait Barrier: Send + Sync {
    fn dim(&self) -> usize;

    /// Barrier parameter nu.
    fn nu(&self) -> f64;

    fn value(&self, x: &DVector<f64>) -> f64;

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;

    fn hessian(&self, x: &DVector<f64>) -> Hessian;

    /// Strict interior membership.
    fn is_interior(&self, x: &DVector<f64>) -> bool;

    /// Analytic center in closed form, when the geometry provides one.
    fn closed_form_center(&self) -> Option<DVector<f64>> {
        None
    }

    /// A strictly interior point usable to seed Newton iterations.
    fn interior_point(&self) -> DVector<f64>;
}

/// omega(t) = t - ln(1 + t) for t >= 0.
pub fn omega(t: f64) -> f64 {
    assert!(t >= 0.0, "omega domain is t >= 0, got {t}");
    t - (1.0 + t).ln()
}

/// omega_*(t) = -t - ln(1 - t) for t in [0, 1).
pub fn omega_star(t: f64) -> f64 {
    assert!(
        (0.0..1.0).contains(&t),
        "omega_star domain is [0, 1), got {t}"
    );
    -t - (1.0 - t).ln()
}

/// Local norm |u|_x = sqrt(u' F''(x) u).
pub fn local_norm(barrier: &dyn Barrier, x: &DVector<f64>, u: &DVector<f64>) -> Result<f64> {
    if !barrier.is_interior(x) {
        return Err(Error::NotInterior);
    }
    Ok(barrier.hessian(x).quad(u).max(0.0).sqrt())
}

/// Dual local norm |u|*_x = sqrt(u' F''(x)^{-1} u).
pub fn dual_local_norm(barrier: &dyn Barrier, x: &DVector<f64>, u: &DVector<f64>) -> Result<f64> {
    if !barrier.is_interior(x) {
        return Err(Error::NotInterior);
    }
    Ok(barrier.hessian(x).inv_quad(u).max(0.0).sqrt())
}

const CENTER_MAX_ITER: usize = 200;

/// Minimizer of the barrier over the interior of its domain.
///
/// Box geometries return their midpoint without iterating; anything else runs
/// damped Newton (step 1/(1+decrement)) until the Newton decrement drops
/// below `tol`.
pub fn analytic_center(barrier: &dyn Barrier, tol: f64) -> Result<DVector<f64>> {
    if let Some(c) = barrier.closed_form_center() {
        return Ok(c);
    }
    let mut x = barrier.interior_point();
    let mut decrement = f64::INFINITY;
    for _ in 0..CENTER_MAX_ITER {
        let g = barrier.gradient(&x);
        let h = barrier.hessian(&x);
        let dir = -h.solve(&g);
        decrement = (-g.dot(&dir)).max(0.0).sqrt();
        if decrement <= tol {
            return Ok(x);
        }
        let mut step = 1.0 / (1.0 + decrement);
        let mut next = &x + step * &dir;
        // the damped step stays in the Dikin ellipsoid, but guard against
        // floating-point edge cases anyway
        while !barrier.is_interior(&next) {
            step *= 0.5;
            if step < 1e-18 {
                return Err(Error::CenterNonConvergence {
                    max_iter: CENTER_MAX_ITER,
                    decrement,
                });
            }
            next = &x + step * &dir;
        }
        x = next;
    }
    Err(Error::CenterNonConvergence {
        max_iter: CENTER_MAX_ITER,
        decrement,
    })
}

/// The 2-self-concordant barrier of an interval (l, u):
/// F(x) = -ln(x - l) - ln(u - x) + 2 ln((u - l)/2).
///
/// The constant term normalizes the value to zero at the midpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxBarrier {
    pub lower: f64,
    pub upper: f64,
}

impl BoxBarrier {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
            return Err(Error::InvalidProblem(format!(
                "box bounds must satisfy l < u, got [{lower}, {upper}]"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn value_scalar(&self, x: f64) -> f64 {
        -(x - self.lower).ln() - (self.upper - x).ln() + 2.0 * (0.5 * (self.upper - self.lower)).ln()
    }

    pub fn gradient_scalar(&self, x: f64) -> f64 {
        -1.0 / (x - self.lower) + 1.0 / (self.upper - x)
    }

    pub fn hessian_scalar(&self, x: f64) -> f64 {
        let a = x - self.lower;
        let b = self.upper - x;
        1.0 / (a * a) + 1.0 / (b * b)
    }

    pub fn contains_scalar(&self, x: f64) -> bool {
        x > self.lower && x < self.upper
    }
}

impl Barrier for BoxBarrier {
    fn dim(&self) -> usize {
        1
    }

    fn nu(&self) -> f64 {
        2.0
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        self.value_scalar(x[0])
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, self.gradient_scalar(x[0]))
    }

    fn hessian(&self, x: &DVector<f64>) -> Hessian {
        Hessian::Diagonal(DVector::from_element(1, self.hessian_scalar(x[0])))
    }

    fn is_interior(&self, x: &DVector<f64>) -> bool {
        self.contains_scalar(x[0])
    }

    fn closed_form_center(&self) -> Option<DVector<f64>> {
        Some(DVector::from_element(1, self.center()))
    }

    fn interior_point(&self) -> DVector<f64> {
        DVector::from_element(1, self.center())
    }
}

/// Product of 1-D box barriers; nu = 2 n, diagonal Hessian.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxProduct {
    boxes: Vec<BoxBarrier>,
}

impl BoxProduct {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::InvalidProblem(
                "box bound vectors must have equal length".into(),
            ));
        }
        let boxes = lower
            .into_iter()
            .zip(upper)
            .map(|(l, u)| BoxBarrier::new(l, u))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { boxes })
    }

    pub fn uniform(n: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; n], vec![upper; n])
    }

    pub fn boxes(&self) -> &[BoxBarrier] {
        &self.boxes
    }

    pub fn lower(&self) -> Vec<f64> {
        self.boxes.iter().map(|b| b.lower).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.boxes.iter().map(|b| b.upper).collect()
    }
}

impl Barrier for BoxProduct {
    fn dim(&self) -> usize {
        self.boxes.len()
    }

    fn nu(&self) -> f64 {
        2.0 * self.boxes.len() as f64
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        self.boxes
            .iter()
            .zip(x.iter())
            .map(|(b, &xi)| b.value_scalar(xi))
            .sum()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.boxes.len(),
            self.boxes
                .iter()
                .zip(x.iter())
                .map(|(b, &xi)| b.gradient_scalar(xi)),
        )
    }

    fn hessian(&self, x: &DVector<f64>) -> Hessian {
        Hessian::Diagonal(DVector::from_iterator(
            self.boxes.len(),
            self.boxes
                .iter()
                .zip(x.iter())
                .map(|(b, &xi)| b.hessian_scalar(xi)),
        ))
    }

    fn is_interior(&self, x: &DVector<f64>) -> bool {
        self.boxes
            .iter()
            .zip(x.iter())
            .all(|(b, &xi)| b.contains_scalar(xi))
    }

    fn closed_form_center(&self) -> Option<DVector<f64>> {
        Some(DVector::from_iterator(
            self.boxes.len(),
            self.boxes.iter().map(|b| b.center()),
        ))
    }

    fn interior_point(&self) -> DVector<f64> {
        self.closed_form_center().unwrap()
    }
}

/// Logarithmic barrier of a bounded polyhedron { x : C x <= d }:
/// F(x) = -sum_j ln(d_j - c_j' x), nu = number of rows.
///
/// The constructor needs a strictly feasible seed; it locates the analytic
/// center there and normalizes the value at construction.
#[derive(Debug, Clone)]
pub struct LogBarrier {
    c: DMatrix<f64>,
    d: DVector<f64>,
    seed: DVector<f64>,
    offset: f64,
}

impl LogBarrier {
    pub fn new(c: DMatrix<f64>, d: DVector<f64>, seed: DVector<f64>) -> Result<Self> {
        if c.nrows() != d.len() || c.ncols() != seed.len() {
            return Err(Error::InvalidProblem(
                "log barrier dimensions are inconsistent".into(),
            ));
        }
        let mut barrier = Self {
            c,
            d,
            seed,
            offset: 0.0,
        };
        if !barrier.is_interior(&barrier.seed.clone()) {
            return Err(Error::NotInterior);
        }
        let center = analytic_center(&barrier, 1e-10)?;
        barrier.offset = barrier.raw_value(&center);
        Ok(barrier)
    }

    fn slacks(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.d - &self.c * x
    }

    fn raw_value(&self, x: &DVector<f64>) -> f64 {
        -self.slacks(x).iter().map(|s| s.ln()).sum::<f64>()
    }
}

impl Barrier for LogBarrier {
    fn dim(&self) -> usize {
        self.c.ncols()
    }

    fn nu(&self) -> f64 {
        self.c.nrows() as f64
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        self.raw_value(x) - self.offset
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let s = self.slacks(x);
        let weights = DVector::from_iterator(s.len(), s.iter().map(|si| 1.0 / si));
        self.c.transpose() * weights
    }

    fn hessian(&self, x: &DVector<f64>) -> Hessian {
        let s = self.slacks(x);
        let mut h = DMatrix::zeros(self.dim(), self.dim());
        for j in 0..self.c.nrows() {
            let row = self.c.row(j);
            let w = 1.0 / (s[j] * s[j]);
            for a in 0..self.dim() {
                for b in 0..self.dim() {
                    h[(a, b)] += w * row[a] * row[b];
                }
            }
        }
        Hessian::Dense(h)
    }

    fn is_interior(&self, x: &DVector<f64>) -> bool {
        self.slacks(x).iter().all(|&s| s > 0.0)
    }

    fn interior_point(&self) -> DVector<f64> {
        self.seed.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn omega_values() {
        assert_eq!(omega(0.0), 0.0);
        assert_relative_eq!(omega(1.0), 1.0 - 2.0_f64.ln(), max_relative = 1e-15);
        assert_eq!(omega_star(0.0), 0.0);
        assert_relative_eq!(omega_star(0.5), -0.5 - 0.5_f64.ln(), max_relative = 1e-15);
    }

    #[test]
    fn omega_monotone_convex() {
        let mut prev = omega(0.0);
        let mut prev_slope = f64::NEG_INFINITY;
        for i in 1..=100 {
            let t = i as f64 * 0.05;
            let v = omega(t);
            assert!(v > prev);
            let slope = (v - prev) / 0.05;
            assert!(slope >= prev_slope);
            prev = v;
            prev_slope = slope;
        }
        let mut prev = omega_star(0.0);
        for i in 1..=99 {
            let t = i as f64 * 0.01;
            let v = omega_star(t);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    #[should_panic]
    fn omega_rejects_negative() {
        omega(-0.1);
    }

    #[test]
    #[should_panic]
    fn omega_star_rejects_one() {
        omega_star(1.0);
    }

    #[test]
    fn box_barrier_basics() {
        let b = BoxBarrier::new(-3.0, 3.0).unwrap();
        assert_eq!(b.nu(), 2.0);
        assert_eq!(b.center(), 0.0);
        assert_eq!(b.value_scalar(0.0), 0.0);
        assert_eq!(b.gradient_scalar(0.0), 0.0);
        // -ln(1) - ln(5) + 2 ln(3) at x = -2
        assert_relative_eq!(
            b.value_scalar(-2.0),
            -(1.0_f64).ln() - 5.0_f64.ln() + 2.0 * 3.0_f64.ln(),
            max_relative = 1e-15
        );
        assert!(!b.contains_scalar(3.0));
        assert!(!b.contains_scalar(-3.1));
    }

    #[test]
    fn box_barrier_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let l = rng.gen_range(-5.0..0.0);
            let u = l + rng.gen_range(0.5..6.0);
            let b = BoxBarrier::new(l, u).unwrap();
            // keep clear of the boundary so the FD stencil stays accurate
            let x = l + (u - l) * rng.gen_range(0.1..0.9);
            let h = 1e-5 * (u - l);
            let fd_grad = (b.value_scalar(x + h) - b.value_scalar(x - h)) / (2.0 * h);
            let fd_hess = (b.gradient_scalar(x + h) - b.gradient_scalar(x - h)) / (2.0 * h);
            assert_relative_eq!(b.gradient_scalar(x), fd_grad, max_relative = 1e-6);
            assert_relative_eq!(b.hessian_scalar(x), fd_hess, max_relative = 1e-6);
        }
    }

    #[test]
    fn distance_growth_and_norm_bound() {
        // value(x) >= omega(|x - xc|_{xc}) and |x - xc|_{xc} <= nu + 2 sqrt(nu)
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let l = rng.gen_range(-4.0..0.0);
            let u = l + rng.gen_range(0.5..8.0);
            let b = BoxBarrier::new(l, u).unwrap();
            let c = b.center();
            let x = l + (u - l) * rng.gen_range(1e-6..1.0 - 1e-6);
            let dist = ((x - c).powi(2) * b.hessian_scalar(c)).sqrt();
            assert!(b.value_scalar(x) + 1e-12 >= omega(dist));
            let bound = b.nu() + 2.0 * b.nu().sqrt();
            assert!(dist <= bound + 1e-12, "dist {dist} exceeds {bound}");
        }
    }

    #[test]
    fn local_norms_unit_box() {
        let b = BoxBarrier::new(-1.0, 1.0).unwrap();
        let x = DVector::from_element(1, 0.0);
        let u = DVector::from_element(1, 1.0);
        assert_relative_eq!(
            local_norm(&b, &x, &u).unwrap(),
            2.0_f64.sqrt(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            dual_local_norm(&b, &x, &u).unwrap(),
            1.0 / 2.0_f64.sqrt(),
            max_relative = 1e-15
        );
        let outside = DVector::from_element(1, 1.0);
        assert!(matches!(
            local_norm(&b, &outside, &u),
            Err(Error::NotInterior)
        ));
    }

    fn triangle_barrier() -> LogBarrier {
        // x >= 0, y >= 0, x + y <= 1
        let c = DMatrix::from_row_slice(3, 2, &[-1.0, 0.0, 0.0, -1.0, 1.0, 1.0]);
        let d = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        LogBarrier::new(c, d, DVector::from_vec(vec![0.2, 0.2])).unwrap()
    }

    #[test]
    fn cauchy_schwarz_local_norms() {
        let b = triangle_barrier();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let x = loop {
                let cand = DVector::from_vec(vec![rng.gen_range(0.01..0.99), rng.gen_range(0.01..0.99)]);
                if b.is_interior(&cand) {
                    break cand;
                }
            };
            let u = DVector::from_vec(vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
            let v = DVector::from_vec(vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
            let lhs = u.dot(&v);
            let rhs = local_norm(&b, &x, &u).unwrap() * dual_local_norm(&b, &x, &v).unwrap();
            assert!(lhs <= rhs + 1e-10);
            // generalized Cauchy-Schwarz sanity: |u|_x |u|*_x >= |u|_2^2
            let prod = local_norm(&b, &x, &u).unwrap() * dual_local_norm(&b, &x, &u).unwrap();
            assert!(prod + 1e-10 >= u.norm_squared());
        }
    }

    #[test]
    fn analytic_center_box_is_midpoint() {
        let b = BoxBarrier::new(-3.0, 3.0).unwrap();
        assert_eq!(analytic_center(&b, 1e-10).unwrap()[0], 0.0);
        let b = BoxBarrier::new(0.0, 4.0).unwrap();
        assert_eq!(analytic_center(&b, 1e-10).unwrap()[0], 2.0);
        let p = BoxProduct::new(vec![-1.0, 0.0], vec![1.0, 8.0]).unwrap();
        let c = analytic_center(&p, 1e-10).unwrap();
        assert_eq!(c[0], 0.0);
        assert_eq!(c[1], 4.0);
    }

    // Zooming grid search over the triangle interior; independent of the
    // Newton path used by `analytic_center`.
    fn grid_min_triangle(b: &LogBarrier) -> DVector<f64> {
        let mut lo = [0.0_f64, 0.0];
        let mut hi = [1.0_f64, 1.0];
        let mut best = DVector::from_vec(vec![0.2, 0.2]);
        for _ in 0..4 {
            let mut best_val = f64::INFINITY;
            let steps = 400;
            for i in 0..=steps {
                for j in 0..=steps {
                    let x = lo[0] + (hi[0] - lo[0]) * i as f64 / steps as f64;
                    let y = lo[1] + (hi[1] - lo[1]) * j as f64 / steps as f64;
                    let p = DVector::from_vec(vec![x, y]);
                    if b.is_interior(&p) {
                        let v = b.value(&p);
                        if v < best_val {
                            best_val = v;
                            best = p;
                        }
                    }
                }
            }
            let span0 = (hi[0] - lo[0]) / steps as f64 * 2.0;
            let span1 = (hi[1] - lo[1]) / steps as f64 * 2.0;
            lo = [best[0] - span0, best[1] - span1];
            hi = [best[0] + span0, best[1] + span1];
        }
        best
    }

    #[test]
    fn analytic_center_triangle_matches_grid() {
        let b = triangle_barrier();
        let newton = analytic_center(&b, 1e-12).unwrap();
        let grid = grid_min_triangle(&b);
        assert!((newton[0] - grid[0]).abs() <= 1e-6);
        assert!((newton[1] - grid[1]).abs() <= 1e-6);
        // the exact center of this triangle is (1/3, 1/3)
        assert_relative_eq!(newton[0], 1.0 / 3.0, epsilon = 1e-9);
        assert_relative_eq!(newton[1], 1.0 / 3.0, epsilon = 1e-9);
        // normalization fixed the value at zero there
        assert_relative_eq!(b.value(&newton), 0.0, epsilon = 1e-12);
        assert!(b.gradient(&newton).norm() <= 1e-9);
    }

    #[test]
    fn log_barrier_gradient_matches_finite_differences() {
        let b = triangle_barrier();
        let x = DVector::from_vec(vec![0.25, 0.4]);
        let h = 1e-6;
        for k in 0..2 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            let fd = (b.value(&xp) - b.value(&xm)) / (2.0 * h);
            assert_relative_eq!(b.gradient(&x)[k], fd, max_relative = 1e-6);
        }
    }
}
