//! Separable white-box convex terms: values, proximal maps, and
//! subdifferential distances.
//!
//! A term is a sum over coordinates of `H_i(t) = I_[l,u](t) + λ|t| + (q/2)t²`
//! where each piece may be absent. This covers every nonsmooth term used by
//! the benchmark problems (boxes, soft thresholding, ridge weights) while
//! keeping both the prox and the distance to the subdifferential closed-form.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Absolute slack used for domain-membership checks, absorbing float drift
/// from projections.
const DOM_TOL: f64 = 1e-12;

/// One coordinate's convex term.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateTerm<F> {
    /// Box indicator `[l, u]`; `None` means the whole line.
    pub bounds: Option<(F, F)>,
    /// Weight of `|t|`.
    pub l1: F,
    /// Weight `q` of `(q/2) t²`.
    pub quad: F,
}

impl<F: Scalar> Default for CoordinateTerm<F> {
    fn default() -> Self {
        CoordinateTerm {
            bounds: None,
            l1: F::zero(),
            quad: F::zero(),
        }
    }
}

impl<F: Scalar> CoordinateTerm<F> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn boxed(lower: F, upper: F) -> Self {
        CoordinateTerm {
            bounds: Some((lower, upper)),
            ..Self::default()
        }
    }

    pub fn abs(weight: F) -> Self {
        CoordinateTerm {
            l1: weight,
            ..Self::default()
        }
    }

    pub fn quadratic(weight: F) -> Self {
        CoordinateTerm {
            quad: weight,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if let Some((l, u)) = self.bounds {
            if l > u {
                return Err(Error::invalid(format!("empty box [{l}, {u}]")));
            }
        }
        if self.l1 < F::zero() || self.quad < F::zero() {
            return Err(Error::invalid("negative term weight"));
        }
        Ok(())
    }

    fn contains(&self, t: F) -> bool {
        match self.bounds {
            Some((l, u)) => t >= l - F::of(DOM_TOL) && t <= u + F::of(DOM_TOL),
            None => true,
        }
    }

    fn value(&self, t: F) -> F {
        if !self.contains(t) {
            return F::infinity();
        }
        self.l1 * t.abs() + self.quad / F::of(2.0) * t * t
    }

    /// `argmin_t (w/2)(t - v)² + H_i(t)` in closed form.
    fn prox(&self, v: F, w: F) -> Result<F> {
        self.validate()?;
        if !(w > F::zero()) {
            return Err(Error::invalid("prox weight must be positive"));
        }
        let denom = w + self.quad;
        let s = w * v / denom;
        let thr = self.l1 / denom;
        let mut t = if s.abs() <= thr {
            F::zero()
        } else {
            s - thr * s.signum()
        };
        if let Some((l, u)) = self.bounds {
            t = t.max(l).min(u);
        }
        Ok(t)
    }

    /// Subdifferential `∂H_i(t)` as an interval `[lo, hi]`.
    fn subdiff(&self, t: F) -> (F, F) {
        let tol = F::of(DOM_TOL);
        let base = self.quad * t;
        let (mut lo, mut hi) = if self.l1 > F::zero() {
            if t > tol {
                (base + self.l1, base + self.l1)
            } else if t < -tol {
                (base - self.l1, base - self.l1)
            } else {
                (base - self.l1, base + self.l1)
            }
        } else {
            (base, base)
        };
        if let Some((l, u)) = self.bounds {
            if t <= l + tol {
                lo = F::neg_infinity();
            }
            if t >= u - tol {
                hi = F::infinity();
            }
        }
        (lo, hi)
    }
}

/// Coordinate-separable closed convex term `H(x) = Σ_i H_i(x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableConvexTerm<F> {
    terms: Vec<CoordinateTerm<F>>,
}

impl<F: Scalar> SeparableConvexTerm<F> {
    pub fn new(terms: Vec<CoordinateTerm<F>>) -> Result<Self> {
        for t in &terms {
            t.validate()?;
        }
        Ok(SeparableConvexTerm { terms })
    }

    /// The zero term in `d` variables (prox is the identity).
    pub fn zero(d: usize) -> Self {
        SeparableConvexTerm {
            terms: vec![CoordinateTerm::zero(); d],
        }
    }

    /// Box `[lower, upper]^d`.
    pub fn uniform_box(d: usize, lower: F, upper: F) -> Self {
        SeparableConvexTerm {
            terms: vec![CoordinateTerm::boxed(lower, upper); d],
        }
    }

    pub fn dim(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[CoordinateTerm<F>] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| {
            t.bounds.is_none() && t.l1 == F::zero() && t.quad == F::zero()
        })
    }

    fn check_dim(&self, x: &[F]) -> Result<()> {
        if x.len() != self.terms.len() {
            return Err(Error::DimensionMismatch {
                expected: self.terms.len(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `H(x)`; `+∞` outside the domain.
    pub fn value(&self, x: &[F]) -> Result<F> {
        self.check_dim(x)?;
        Ok(x.iter().zip(&self.terms).map(|(&t, c)| c.value(t)).sum())
    }

    pub fn contains(&self, x: &[F]) -> Result<bool> {
        self.check_dim(x)?;
        Ok(x.iter().zip(&self.terms).all(|(&t, c)| c.contains(t)))
    }

    /// Clips `x` onto the domain (no-op for coordinates without bounds).
    pub fn project(&self, x: &mut [F]) {
        for (t, c) in x.iter_mut().zip(&self.terms) {
            if let Some((l, u)) = c.bounds {
                *t = (*t).max(l).min(u);
            }
        }
    }

    /// One-dimensional prox of coordinate `i`: `argmin_t (w/2)(t-v)² + H_i(t)`.
    pub fn prox_coordinate(&self, i: usize, v: F, w: F) -> Result<F> {
        if i >= self.terms.len() {
            return Err(Error::invalid(format!("coordinate {i} out of range")));
        }
        self.terms[i].prox(v, w)
    }

    /// Coordinate-wise prox of the whole vector.
    pub fn prox_full(&self, v: &[F], w: F) -> Result<Vec<F>> {
        self.check_dim(v)?;
        v.iter()
            .zip(&self.terms)
            .map(|(&vi, c)| c.prox(vi, w))
            .collect()
    }

    /// `dist(0, g + ∂H(x)) = sqrt(Σ_i dist(-g_i, ∂H_i(x_i))²)`.
    pub fn subdiff_distance(&self, x: &[F], g: &[F]) -> Result<F> {
        self.check_dim(x)?;
        self.check_dim(g)?;
        if !self.contains(x)? {
            return Err(Error::invalid(
                "subdifferential distance requested outside the domain",
            ));
        }
        let mut acc = F::zero();
        for i in 0..x.len() {
            let (lo, hi) = self.terms[i].subdiff(x[i]);
            let target = -g[i];
            let d = if target < lo {
                lo - target
            } else if target > hi {
                target - hi
            } else {
                F::zero()
            };
            acc += d * d;
        }
        Ok(acc.sqrt())
    }

    /// Euclidean diameter of the domain; `None` when unbounded.
    pub fn diameter(&self) -> Option<F> {
        let mut acc = F::zero();
        for c in &self.terms {
            let (l, u) = c.bounds?;
            acc += (u - l) * (u - l);
        }
        Some(acc.sqrt())
    }

    /// Per-coordinate domain diameters; `None` when some coordinate is
    /// unbounded.
    pub fn coordinate_diameters(&self) -> Option<Vec<F>> {
        self.terms
            .iter()
            .map(|c| c.bounds.map(|(l, u)| u - l))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_scan(c: &CoordinateTerm<f64>, v: f64, w: f64, lo: f64, hi: f64, steps: usize) -> f64 {
        let mut best_t = lo;
        let mut best_val = f64::INFINITY;
        for k in 0..=steps {
            let t = lo + (hi - lo) * k as f64 / steps as f64;
            let val = 0.5 * w * (t - v) * (t - v) + c.value(t);
            if val < best_val {
                best_val = val;
                best_t = t;
            }
        }
        best_t
    }

    fn grid_argmin(c: &CoordinateTerm<f64>, v: f64, w: f64) -> f64 {
        // brute-force oracle independent of the closed form: coarse scan,
        // then refine around the coarse minimizer to ~1e-9 resolution
        let (lo, hi) = match c.bounds {
            Some((l, u)) => (l, u),
            None => (v.abs().max(1.0) * -3.0, v.abs().max(1.0) * 3.0),
        };
        let steps = 100_000usize;
        let coarse = grid_scan(c, v, w, lo, hi, steps);
        let pad = 2.0 * (hi - lo) / steps as f64;
        grid_scan(c, v, w, (coarse - pad).max(lo), (coarse + pad).min(hi), steps)
    }

    #[test]
    fn prox_zero_term_is_identity() {
        let h = SeparableConvexTerm::zero(1);
        assert_eq!(h.prox_coordinate(0, 3.0, 5.0).unwrap(), 3.0);
    }

    #[test]
    fn prox_box_clips() {
        let h = SeparableConvexTerm::uniform_box(1, -5.0f64, 5.0);
        assert_eq!(h.prox_coordinate(0, 7.0, 1.0).unwrap(), 5.0);
        assert_eq!(h.prox_coordinate(0, -9.0, 1.0).unwrap(), -5.0);
        assert_eq!(h.prox_coordinate(0, 1.5, 1.0).unwrap(), 1.5);
    }

    #[test]
    fn prox_soft_threshold() {
        let h = SeparableConvexTerm::new(vec![CoordinateTerm::abs(1.0f64)]).unwrap();
        assert_eq!(h.prox_coordinate(0, 0.4, 1.0).unwrap(), 0.0);
        assert!((h.prox_coordinate(0, 1.4, 1.0).unwrap() - 0.4).abs() < 1e-15);
        assert!((h.prox_coordinate(0, -1.4, 1.0).unwrap() + 0.4).abs() < 1e-15);
    }

    #[test]
    fn prox_quadratic_shrinks() {
        let h = SeparableConvexTerm::new(vec![CoordinateTerm::quadratic(3.0f64)]).unwrap();
        // v w / (w + λ)
        assert!((h.prox_coordinate(0, 2.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn prox_empty_box_is_error() {
        let h = SeparableConvexTerm::new(vec![CoordinateTerm::boxed(2.0, 1.0)]);
        assert!(h.is_err());
    }

    #[test]
    fn prox_matches_grid_oracle() {
        let cases = vec![
            CoordinateTerm::zero(),
            CoordinateTerm::boxed(-5.0, 5.0),
            CoordinateTerm::abs(1.3),
            CoordinateTerm::quadratic(0.7),
            CoordinateTerm {
                bounds: Some((-1.0, 2.0)),
                l1: 0.5,
                quad: 0.25,
            },
        ];
        for c in &cases {
            for &(v, w) in &[(0.4, 1.0), (-2.5, 0.3), (7.0, 2.0), (0.0, 5.0)] {
                let exact = c.prox(v, w).unwrap();
                let grid = grid_argmin(c, v, w);
                assert!(
                    (exact - grid).abs() < 1e-6,
                    "prox mismatch for {c:?} at v={v}, w={w}: {exact} vs {grid}"
                );
            }
        }
    }

    #[test]
    fn prox_optimality_via_subdiff_distance() {
        // w (prox - v) must lie in -∂H(prox)
        let cases = vec![
            CoordinateTerm::boxed(-5.0, 5.0),
            CoordinateTerm::abs(1.0),
            CoordinateTerm::quadratic(2.0),
            CoordinateTerm {
                bounds: Some((0.0, 1.0)),
                l1: 0.2,
                quad: 1.5,
            },
        ];
        for c in cases {
            let h = SeparableConvexTerm::new(vec![c]).unwrap();
            for &(v, w) in &[(0.4, 1.0), (-6.0, 0.7), (9.0, 3.0), (0.05, 10.0)] {
                let p = h.prox_coordinate(0, v, w).unwrap();
                let residual = h.subdiff_distance(&[p], &[w * (p - v)]).unwrap();
                assert!(residual <= 1e-10, "optimality violated: {residual}");
            }
        }
    }

    #[test]
    fn subdiff_distance_zero_term_is_gradient_norm() {
        let h = SeparableConvexTerm::<f64>::zero(2);
        let d = h.subdiff_distance(&[0.3, -0.4], &[3.0, 4.0]).unwrap();
        assert!((d - 5.0).abs() < 1e-15);
    }

    #[test]
    fn subdiff_distance_box_interior_and_boundary() {
        let h = SeparableConvexTerm::uniform_box(1, -5.0f64, 5.0);
        // stationary interior point
        assert_eq!(h.subdiff_distance(&[1.0], &[0.0]).unwrap(), 0.0);
        // at the upper face, -g in the normal cone [0, ∞)
        assert_eq!(h.subdiff_distance(&[5.0], &[-2.0]).unwrap(), 0.0);
        // pointing inward from the upper face: positive distance
        assert!((h.subdiff_distance(&[5.0], &[2.0]).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn subdiff_distance_outside_domain_errors() {
        let h = SeparableConvexTerm::uniform_box(1, 0.0, 1.0);
        assert!(h.subdiff_distance(&[2.0], &[0.0]).is_err());
    }

    #[test]
    fn prox_full_is_nonexpansive() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let h = SeparableConvexTerm::new(vec![
            CoordinateTerm::boxed(-1.0, 1.0),
            CoordinateTerm::abs(0.8),
            CoordinateTerm::quadratic(0.4),
            CoordinateTerm::zero(),
        ])
        .unwrap();
        for _ in 0..200 {
            let a: Vec<f64> = (0..4).map(|_| rng.random_range(-4.0..4.0)).collect();
            let b: Vec<f64> = (0..4).map(|_| rng.random_range(-4.0..4.0)).collect();
            let pa = h.prox_full(&a, 1.7).unwrap();
            let pb = h.prox_full(&b, 1.7).unwrap();
            let d_in: f64 = crate::vecops::dist(&a, &b);
            let d_out: f64 = crate::vecops::dist(&pa, &pb);
            assert!(d_out <= d_in + 1e-12);
        }
    }

    #[test]
    fn diameters() {
        let h = SeparableConvexTerm::uniform_box(2, -5.0, 5.0);
        assert!((h.diameter().unwrap() - (200.0f64).sqrt()).abs() < 1e-12);
        assert_eq!(h.coordinate_diameters().unwrap(), vec![10.0, 10.0]);
        assert!(SeparableConvexTerm::<f64>::zero(2).diameter().is_none());
    }
}
