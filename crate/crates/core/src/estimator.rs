//! Zeroth-order gradient estimators.
//!
//! The workhorse is the multi-point coordinate stencil: under coordinate
//! `j`-smoothness, `p = max{2(j-1), 2}` symmetric function queries per
//! coordinate give an estimate whose error is `O(a^j)` in the sampling radius
//! `a`. The stencil weights solve an odd-power Vandermonde system so that all
//! odd Taylor terms up to order `2m-1` cancel.
//!
//! The classical random-direction estimators (two-point and mini-batched
//! multi-point) are provided for the baseline solvers.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::oracle::BlackBoxOracle;
use crate::scalar::Scalar;
use crate::vecops;

/// A `p`-point coordinate gradient estimator.
///
/// `coefficients[q-1]` is the weight `C_q` applied to
/// `f(x + q·a·e_i) - f(x - q·a·e_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilSpec<F> {
    j: u32,
    a: F,
    coefficients: Vec<F>,
    /// Coordinate `j`-smoothness constant; drives the error bound.
    m_j: F,
}

impl<F: Scalar> StencilSpec<F> {
    /// Smoothness order the stencil was built for.
    pub fn order(&self) -> u32 {
        self.j
    }

    /// Sampling radius.
    pub fn radius(&self) -> F {
        self.a
    }

    /// Number of function queries per coordinate estimate.
    pub fn points(&self) -> usize {
        2 * self.coefficients.len()
    }

    pub fn coefficients(&self) -> &[F] {
        &self.coefficients
    }

    pub fn smoothness(&self) -> F {
        self.m_j
    }

    /// Sets the coordinate smoothness constant `M_j`.
    pub fn with_smoothness(mut self, m_j: F) -> Self {
        self.m_j = m_j;
        self
    }

    /// Maximum relative residual of the defining linear system
    /// `Σ_q q^(2r-1) C_q = 1/(2a) [r=1], 0 [r≥2]`.
    pub fn system_residual(&self) -> F {
        let m = self.coefficients.len();
        let scale = F::one() / (F::of(2.0) * self.a);
        let mut worst = F::zero();
        for r in 1..=m {
            let mut lhs = F::zero();
            for (q, &c) in self.coefficients.iter().enumerate() {
                lhs += F::of(((q + 1) as f64).powi(2 * r as i32 - 1)) * c;
            }
            let rhs = if r == 1 { scale } else { F::zero() };
            worst = worst.max((lhs - rhs).abs() / scale);
        }
        worst
    }
}

/// Builds the stencil for smoothness order `j` and sampling radius `a`.
///
/// For `j ∈ {1, 2}` this is the central difference with `C_1 = 1/(2a)`.
pub fn stencil_coefficients<F: Scalar>(j: u32, a: F) -> Result<StencilSpec<F>> {
    if j < 1 {
        return Err(Error::invalid("smoothness order must be at least 1"));
    }
    if !(a > F::zero()) || !a.is_finite() {
        return Err(Error::invalid(format!("sampling radius must be positive, got {a}")));
    }
    let m = ((j as usize).saturating_sub(1)).max(1);
    let coefficients = if m == 1 {
        vec![F::one() / (F::of(2.0) * a)]
    } else {
        // rows r = 1..m of Σ_q q^(2r-1) C_q; dense solve, m stays tiny
        let mut mat = vec![vec![F::zero(); m]; m];
        let mut rhs = vec![F::zero(); m];
        rhs[0] = F::one() / (F::of(2.0) * a);
        for (r, row) in mat.iter_mut().enumerate() {
            for (q, entry) in row.iter_mut().enumerate() {
                *entry = F::of(((q + 1) as f64).powi(2 * r as i32 + 1));
            }
        }
        solve_dense(&mut mat, &mut rhs)?
    };
    Ok(StencilSpec {
        j,
        a,
        coefficients,
        m_j: F::zero(),
    })
}

/// Gaussian elimination with partial pivoting; `m ≤ 4` in practice.
fn solve_dense<F: Scalar>(mat: &mut [Vec<F>], rhs: &mut [F]) -> Result<Vec<F>> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &k| {
                mat[i][col]
                    .abs()
                    .partial_cmp(&mat[k][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if mat[pivot][col].abs() <= F::epsilon() {
            return Err(Error::NonFinite {
                context: "singular stencil system",
            });
        }
        mat.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..n {
            let factor = mat[row][col] / mat[col][col];
            for k in col..n {
                let v = mat[col][k];
                mat[row][k] = mat[row][k] - factor * v;
            }
            let r = rhs[col];
            rhs[row] = rhs[row] - factor * r;
        }
    }
    let mut x = vec![F::zero(); n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in row + 1..n {
            acc = acc - mat[row][k] * x[k];
        }
        x[row] = acc / mat[row][row];
    }
    Ok(x)
}

/// Estimates `∂f/∂x_i` at `x` with `p` queries:
/// `Σ_q C_q [f(x + q·a·e_i) - f(x - q·a·e_i)]`.
pub fn estimate_coordinate_gradient<F: Scalar>(
    oracle: &BlackBoxOracle<'_, F>,
    x: &[F],
    i: usize,
    spec: &StencilSpec<F>,
) -> Result<F> {
    if i >= x.len() {
        return Err(Error::invalid(format!("coordinate {i} out of range")));
    }
    let mut probe = x.to_vec();
    let mut acc = F::zero();
    for (q, &c) in spec.coefficients.iter().enumerate() {
        let offset = F::of((q + 1) as f64) * spec.a;
        probe[i] = x[i] + offset;
        let plus = oracle.eval(&probe)?;
        probe[i] = x[i] - offset;
        let minus = oracle.eval(&probe)?;
        acc += c * (plus - minus);
    }
    Ok(acc)
}

/// Full gradient estimate, one coordinate stencil per entry (`p·d` queries).
pub fn estimate_full_gradient<F: Scalar>(
    oracle: &BlackBoxOracle<'_, F>,
    x: &[F],
    spec: &StencilSpec<F>,
) -> Result<Vec<F>> {
    (0..x.len())
        .map(|i| estimate_coordinate_gradient(oracle, x, i, spec))
        .collect()
}

/// Per-coordinate estimation error bound of the stencil:
/// `E_i = 2 Σ_q |C_q| · M_j · (q a)^(j+1) / (j+1)!`.
///
/// For the central difference this is `M_1 a / 2` (order 1) and `M_2 a² / 6`
/// (order 2).
pub fn error_bound<F: Scalar>(spec: &StencilSpec<F>) -> F {
    let j = spec.j;
    let mut factorial = F::one();
    for k in 2..=(j as u64 + 1) {
        factorial *= F::of(k as f64);
    }
    let mut acc = F::zero();
    for (q, &c) in spec.coefficients.iter().enumerate() {
        let qa = F::of((q + 1) as f64) * spec.a;
        acc += c.abs() * spec.m_j * qa.powi(j as i32 + 1) / factorial;
    }
    F::of(2.0) * acc
}

/// Per-coordinate error bounds and their Euclidean aggregate.
#[derive(Debug, Clone)]
pub struct ErrorBudget<F> {
    per_coordinate: Vec<F>,
    euclidean: F,
}

impl<F: Scalar> ErrorBudget<F> {
    pub fn new(per_coordinate: Vec<F>) -> Result<Self> {
        if per_coordinate.iter().any(|&e| e < F::zero() || !e.is_finite()) {
            return Err(Error::invalid("error bounds must be finite and nonnegative"));
        }
        let euclidean = per_coordinate.iter().map(|&e| e * e).sum::<F>().sqrt();
        Ok(ErrorBudget {
            per_coordinate,
            euclidean,
        })
    }

    /// Identical bound on every coordinate (single smoothness constant).
    pub fn uniform(e_i: F, d: usize) -> Result<Self> {
        Self::new(vec![e_i; d])
    }

    pub fn per_coordinate(&self) -> &[F] {
        &self.per_coordinate
    }

    pub fn euclidean(&self) -> F {
        self.euclidean
    }
}

/// How the sampling radius is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiusMode<F> {
    /// Largest radius on a halving grid from 1 that meets the accuracy
    /// conditions tying the error budget to the target tolerance.
    Grid,
    /// Use the given constant (the practical setting).
    Fixed(F),
}

/// Accuracy data for grid-based radius selection.
#[derive(Debug, Clone)]
pub struct RadiusRequest<F> {
    pub epsilon: F,
    pub mu: F,
    pub l_smooth: F,
    /// Domain diameter `D`.
    pub diameter: F,
    /// Per-coordinate domain diameters `D_i`.
    pub coordinate_diameters: Vec<F>,
    pub j: u32,
    pub m_j: F,
}

const RADIUS_GRID_STEPS: u32 = 60;

/// Selects the sampling radius.
///
/// Grid mode returns the largest `a ∈ {1, 1/2, 1/4, …}` such that, with
/// `E_i = error_bound(a)` and `E = √d · E_i`, both
/// `2L√(2ED/μ) + E ≤ ε/4` and `E·D + Σ E_i·D_i ≤ ε̄/2` hold, where
/// `ε̄ = με²/(512L²)`.
pub fn select_radius<F: Scalar>(req: &RadiusRequest<F>, mode: RadiusMode<F>) -> Result<F> {
    if let RadiusMode::Fixed(a) = mode {
        if !(a > F::zero()) {
            return Err(Error::invalid("fixed radius must be positive"));
        }
        return Ok(a);
    }
    if !(req.epsilon > F::zero() && req.mu > F::zero() && req.l_smooth > F::zero()) {
        return Err(Error::invalid("tolerance and curvature constants must be positive"));
    }
    let d = req.coordinate_diameters.len();
    let eps_bar = req.mu / (F::of(512.0) * req.l_smooth * req.l_smooth) * req.epsilon * req.epsilon;
    let mut a = F::one();
    for _ in 0..RADIUS_GRID_STEPS {
        let spec = stencil_coefficients(req.j, a)?.with_smoothness(req.m_j);
        let e_i = error_bound(&spec);
        let e = e_i * F::of(d as f64).sqrt();
        let cond_stationarity = F::of(2.0) * req.l_smooth
            * (F::of(2.0) * e * req.diameter / req.mu).sqrt()
            + e
            <= req.epsilon / F::of(4.0);
        let weighted: F = req
            .coordinate_diameters
            .iter()
            .map(|&di| e_i * di)
            .sum();
        let cond_objective = e * req.diameter + weighted <= eps_bar / F::of(2.0);
        if cond_stationarity && cond_objective {
            return Ok(a);
        }
        a = a / F::of(2.0);
    }
    Err(Error::InfeasibleTolerance {
        j: req.j,
        floor: a.to_f64_lossy(),
    })
}

/// Direction distribution for the random estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionDistribution {
    /// Standard normal per coordinate; dimension factor φ(d) = 1.
    Gaussian,
    /// Uniform on the unit sphere; dimension factor φ(d) = d.
    UnitSphere,
}

impl DirectionDistribution {
    fn factor<F: Scalar>(self, d: usize) -> F {
        match self {
            DirectionDistribution::Gaussian => F::one(),
            DirectionDistribution::UnitSphere => F::of(d as f64),
        }
    }

    fn sample<F: Scalar, R: Rng>(self, d: usize, rng: &mut R) -> Vec<F> {
        let mut u: Vec<F> = (0..d)
            .map(|_| F::of(rng.sample::<f64, _>(StandardNormal)))
            .collect();
        if self == DirectionDistribution::UnitSphere {
            let n = vecops::norm(&u);
            if n > F::zero() {
                for v in &mut u {
                    *v /= n;
                }
            }
        }
        u
    }
}

/// Two-point random estimator `(φ(d)/a)·(f(x + a·u) - f(x))·u`; 2 queries.
pub fn random_two_point<F: Scalar, R: Rng>(
    oracle: &BlackBoxOracle<'_, F>,
    x: &[F],
    a: F,
    distribution: DirectionDistribution,
    rng: &mut R,
) -> Result<Vec<F>> {
    random_multi_point(oracle, x, a, 1, distribution, rng)
}

/// Mini-batched random estimator, `b+1` queries:
/// `(φ(d)/(a·b)) Σ_i (f(x + a·u_i) - f(x))·u_i` with `f(x)` evaluated once.
pub fn random_multi_point<F: Scalar, R: Rng>(
    oracle: &BlackBoxOracle<'_, F>,
    x: &[F],
    a: F,
    b: usize,
    distribution: DirectionDistribution,
    rng: &mut R,
) -> Result<Vec<F>> {
    if b < 1 {
        return Err(Error::invalid("batch size must be at least 1"));
    }
    if !(a > F::zero()) {
        return Err(Error::invalid("sampling radius must be positive"));
    }
    let d = x.len();
    let base = oracle.eval(x)?;
    let mut grad = vec![F::zero(); d];
    let mut probe = vec![F::zero(); d];
    for _ in 0..b {
        let u = distribution.sample::<F, R>(d, rng);
        vecops::add_scaled(x, a, &u, &mut probe);
        let shifted = oracle.eval(&probe)?;
        let delta = shifted - base;
        for (g, &ui) in grad.iter_mut().zip(&u) {
            *g += delta * ui;
        }
    }
    let scale = distribution.factor::<F>(d) / (a * F::of(b as f64));
    for g in &mut grad {
        *g *= scale;
    }
    Ok(grad)
}
