//! Inexact augmented Lagrangian loop for nonconvex problems with black-box
//! functional equality constraints
//! `min g(x) + h(x)  s.t.  c(x) = 0`.
//!
//! Outer iteration `k` builds the augmented Lagrangian
//! `L_β(x, y) = g(x) + yᵀc(x) + (β/2)‖c(x)‖²` with penalty `β_k = β₀σᵏ`,
//! solves its smooth part as a weakly-convex composite problem (by the
//! proximal point subroutine, or a baseline solver for comparisons), then
//! takes a normalized dual ascent step `y ← y + w_k·c(x)` with
//! `w_k = M(k+1)^q / ‖c(x)‖`. The loop certifies and returns as soon as both
//! KKT residuals fall below the tolerance.
//!
//! Inequality constraints fit this form through the usual slack
//! reformulation: `t(x) ≤ 0` becomes `t(x) + s = 0` with a box term `[0, s̄]`
//! on the slack coordinate in `h`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::apcu::ApcuConfig;
use crate::baselines::{run_adamm, run_prox_sgd, BaselineConfig, BaselineMethod};
use crate::error::{Error, Result};
use crate::estimator::{estimate_full_gradient, StencilSpec};
use crate::ippm::{run_ippm, IppmConfig};
use crate::oracle::{BlackBoxOracle, LedgerHandle};
use crate::prox::SeparableConvexTerm;
use crate::scalar::Scalar;
use crate::trace::{RecordKind, SolveStatus, SolverTrace, TraceRecord};
use crate::vecops;

/// Smoothness / weak-convexity / boundedness data of one constraint.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConstraintConstants<F> {
    /// Weak convexity ρᵢ of cᵢ.
    pub rho: F,
    /// Smoothness Lᵢ of cᵢ.
    pub l_smooth: F,
    /// Bound Bᵢ on |cᵢ| and ‖∇cᵢ‖ over dom(h).
    pub bound: F,
}

/// Analytic constants of a constrained problem, with the derived aggregates
/// kept consistent by construction.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ProblemConstants<F> {
    /// Weak convexity ρ₀ of the objective's smooth part.
    pub rho0: F,
    /// Smoothness L₀ of the objective's smooth part.
    pub l0: F,
    /// Bound B₀ on |f₀| and ‖∇g‖ over dom(h).
    pub b0: F,
    /// Bound B_c on the constraint Jacobian norm over dom(h).
    pub b_c: F,
    pub per_constraint: Vec<ConstraintConstants<F>>,
    /// L̄ = sqrt(Σ Lᵢ²)
    pub l_bar: F,
    /// B̄_c = sqrt(Σ Bᵢ²)
    pub b_bar: F,
    /// ρ_c = Σ Bᵢ ρᵢ
    pub rho_c: F,
    /// L_c = Σ (Bᵢ Lᵢ + Bᵢ²)
    pub l_c: F,
    /// Coordinate smoothness data of the estimator.
    pub m_j: F,
    pub j: u32,
}

impl<F: Scalar> ProblemConstants<F> {
    pub fn new(
        rho0: F,
        l0: F,
        b0: F,
        b_c: F,
        per_constraint: Vec<ConstraintConstants<F>>,
        m_j: F,
        j: u32,
    ) -> Self {
        let (l_bar, b_bar, rho_c, l_c) = Self::aggregates(&per_constraint);
        ProblemConstants {
            rho0,
            l0,
            b0,
            b_c,
            per_constraint,
            l_bar,
            b_bar,
            rho_c,
            l_c,
            m_j,
            j,
        }
    }

    fn aggregates(per: &[ConstraintConstants<F>]) -> (F, F, F, F) {
        let l_bar = per
            .iter()
            .map(|c| c.l_smooth * c.l_smooth)
            .sum::<F>()
            .sqrt();
        let b_bar = per.iter().map(|c| c.bound * c.bound).sum::<F>().sqrt();
        let rho_c = per.iter().map(|c| c.bound * c.rho).sum();
        let l_c = per
            .iter()
            .map(|c| c.bound * c.l_smooth + c.bound * c.bound)
            .sum();
        (l_bar, b_bar, rho_c, l_c)
    }

    /// Recomputes the aggregates and checks them against the stored fields
    /// (relative residual at most 1e-12).
    pub fn validate(&self) -> Result<()> {
        let all_nonneg = self.rho0 >= F::zero()
            && self.l0 >= F::zero()
            && self
                .per_constraint
                .iter()
                .all(|c| c.rho >= F::zero() && c.l_smooth >= F::zero() && c.bound >= F::zero());
        if !all_nonneg {
            return Err(Error::invalid("problem constants must be nonnegative"));
        }
        let (l_bar, b_bar, rho_c, l_c) = Self::aggregates(&self.per_constraint);
        let tol = F::of(1e-12);
        let close = |a: F, b: F| (a - b).abs() <= tol * F::one().max(a.abs().max(b.abs()));
        if !(close(l_bar, self.l_bar)
            && close(b_bar, self.b_bar)
            && close(rho_c, self.rho_c)
            && close(l_c, self.l_c))
        {
            return Err(Error::invalid("derived constants inconsistent with sums"));
        }
        Ok(())
    }
}

/// A constrained problem: black-box objective part, separable nonsmooth
/// term, black-box constraints, and their analytic constants. All oracles
/// share one ledger.
pub struct ConstrainedProblem<'a, F: Scalar> {
    pub g: BlackBoxOracle<'a, F>,
    pub h: SeparableConvexTerm<F>,
    pub c: Vec<BlackBoxOracle<'a, F>>,
    pub constants: ProblemConstants<F>,
}

impl<'a, F: Scalar> ConstrainedProblem<'a, F> {
    pub fn new(
        g: BlackBoxOracle<'a, F>,
        h: SeparableConvexTerm<F>,
        c: Vec<BlackBoxOracle<'a, F>>,
        constants: ProblemConstants<F>,
    ) -> Result<Self> {
        let d = g.dim();
        if h.dim() != d || c.iter().any(|ci| ci.dim() != d) {
            return Err(Error::invalid("oracles disagree on the dimension"));
        }
        if c.iter().any(|ci| !std::rc::Rc::ptr_eq(ci.ledger(), g.ledger())) {
            return Err(Error::invalid("all oracles of a problem must share one ledger"));
        }
        if constants.per_constraint.len() != c.len() {
            return Err(Error::invalid("one constants entry per constraint required"));
        }
        Ok(ConstrainedProblem { g, h, c, constants })
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn num_constraints(&self) -> usize {
        self.c.len()
    }

    pub fn ledger(&self) -> &LedgerHandle {
        self.g.ledger()
    }

    /// Evaluates all constraints at `x` (costs `l` queries).
    pub fn constraint_values(&self, x: &[F]) -> Result<Vec<F>> {
        self.c.iter().map(|ci| ci.eval(x)).collect()
    }
}

/// Smooth part of the augmented Lagrangian at multiplier `y` and penalty
/// `beta`: `g(x) + yᵀc(x) + (β/2)‖c(x)‖²`. One query costs `1 + l` base
/// queries. The verifier composes the wrapped verifiers when they all exist,
/// with its own constraint evaluations charged to verification.
pub fn al_smooth_part<'p, F: Scalar>(
    problem: &'p ConstrainedProblem<'_, F>,
    y: &[F],
    beta: F,
) -> Result<BlackBoxOracle<'p, F>> {
    if y.len() != problem.num_constraints() {
        return Err(Error::DimensionMismatch {
            expected: problem.num_constraints(),
            got: y.len(),
        });
    }
    if !(beta > F::zero()) {
        return Err(Error::invalid("penalty must be positive"));
    }
    let d = problem.dim();
    let y_val = y.to_vec();
    let g = &problem.g;
    let c = &problem.c;
    let mut oracle = BlackBoxOracle::with_ledger(
        d,
        move |x: &[F]| {
            let mut total = match g.eval(x) {
                Ok(v) => v,
                Err(_) => return F::nan(),
            };
            for (ci, &yi) in c.iter().zip(&y_val) {
                match ci.eval(x) {
                    Ok(v) => total += yi * v + beta / F::of(2.0) * v * v,
                    Err(_) => return F::nan(),
                }
            }
            total
        },
        problem.ledger().clone(),
    )
    .composite();

    let all_verified =
        problem.g.has_verifier() && problem.c.iter().all(|ci| ci.has_verifier());
    if all_verified {
        let y_grad = y.to_vec();
        let ledger = problem.ledger().clone();
        oracle = oracle.with_verifier(move |x: &[F]| {
            ledger.verified(|| {
                let mut grad = match g.true_gradient(x) {
                    Ok(v) => v,
                    Err(_) => return vec![F::nan(); d],
                };
                for (ci, &yi) in c.iter().zip(&y_grad) {
                    let (val, jac) = match (ci.eval(x), ci.true_gradient(x)) {
                        (Ok(v), Ok(j)) => (v, j),
                        _ => return vec![F::nan(); d],
                    };
                    let w = yi + beta * val;
                    for (gi, ji) in grad.iter_mut().zip(jac) {
                        *gi += w * ji;
                    }
                }
                grad
            })
        });
    }
    Ok(oracle)
}

/// Curvature constants `(ρ̂_k, L̂_k)` of the AL smooth part at multiplier
/// norm `‖y‖` and penalty `β_k`:
/// `ρ̂ = ρ₀ + L̄‖y‖ + β ρ_c`, `L̂ = L₀ + L̄‖y‖ + β L_c`.
pub fn subproblem_constants<F: Scalar>(
    constants: &ProblemConstants<F>,
    y: &[F],
    beta: F,
) -> (F, F) {
    let y_norm = vecops::norm(y);
    let rho_hat = constants.rho0 + constants.l_bar * y_norm + beta * constants.rho_c;
    let l_hat = constants.l0 + constants.l_bar * y_norm + beta * constants.l_c;
    (rho_hat, l_hat)
}

/// Normalized dual ascent `y + w_k·c` with `w_k = M(k+1)^q / ‖c‖`; a
/// feasible iterate (`‖c‖ ≤ 1e-14`) leaves the multiplier unchanged.
pub fn dual_step<F: Scalar>(y: &[F], c_val: &[F], k: u64, m: F, q: u32) -> Vec<F> {
    let norm = vecops::norm(c_val);
    if norm <= F::of(1e-14) {
        return y.to_vec();
    }
    let w = m * F::of(((k + 1) as f64).powi(q as i32)) / norm;
    y.iter().zip(c_val).map(|(&yi, &ci)| yi + w * ci).collect()
}

/// How the subproblem curvature constants are produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurvatureModel<F> {
    /// `subproblem_constants` applied to the problem's analytic constants.
    FromConstants,
    /// Hand-tuned affine laws `ρ̂ = a + b·β`, `L̂ = c + d·β`.
    Affine {
        rho_const: F,
        rho_beta: F,
        l_const: F,
        l_beta: F,
    },
}

impl<F: Scalar> CurvatureModel<F> {
    fn apply(&self, constants: &ProblemConstants<F>, y: &[F], beta: F) -> (F, F) {
        match *self {
            CurvatureModel::FromConstants => subproblem_constants(constants, y, beta),
            CurvatureModel::Affine {
                rho_const,
                rho_beta,
                l_const,
                l_beta,
            } => (rho_const + rho_beta * beta, l_const + l_beta * beta),
        }
    }
}

/// Which solver handles each AL subproblem.
#[derive(Debug, Clone)]
pub enum Subsolver<F> {
    /// The proximal point subroutine (the method this crate is built around).
    Ippm,
    /// A baseline solver with a fixed query budget per subproblem; its
    /// `l_smooth` is overwritten with `L̂_k`.
    Baseline {
        config: BaselineConfig<F>,
        budget_per_subproblem: u64,
    },
}

/// Configuration of the augmented Lagrangian loop.
#[derive(Debug, Clone)]
pub struct IalmConfig<F> {
    pub beta0: F,
    pub sigma: F,
    /// KKT tolerance for both residuals.
    pub epsilon: F,
    /// Dual step law constants `M` and `q`.
    pub dual_m: F,
    pub dual_q: u32,
    pub max_outer: u64,
    /// Global solver-query ceiling; 0 means unlimited.
    pub max_queries: u64,
    /// Freeze the multiplier at zero (pure quadratic penalty), for
    /// comparisons only.
    pub penalty_only: bool,
    pub curvature: CurvatureModel<F>,
    /// Lower bound on ρ̂_k; keeps each proximal subproblem strongly convex
    /// when the AL smooth part turns out convex (ρ̂ = 0).
    pub rho_floor: F,
    /// Cap on proximal point steps per subproblem; 0 means unlimited.
    pub ippm_max_outer: u64,
    /// Template for the coordinate solver (stencil, epoch length,
    /// implementation, seed); curvature and tolerance fields are derived.
    pub inner: ApcuConfig<F>,
    pub subsolver: Subsolver<F>,
}

impl<F: Scalar> IalmConfig<F> {
    pub fn new(beta0: F, sigma: F, epsilon: F, inner: ApcuConfig<F>) -> Self {
        IalmConfig {
            beta0,
            sigma,
            epsilon,
            dual_m: F::one(),
            dual_q: 0,
            max_outer: 30,
            max_queries: 0,
            penalty_only: false,
            curvature: CurvatureModel::FromConstants,
            rho_floor: F::of(1e-6),
            ippm_max_outer: 0,
            inner,
            subsolver: Subsolver::Ippm,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.beta0 > F::zero()) {
            return Err(Error::invalid("beta0 must be positive"));
        }
        if !(self.sigma > F::one()) {
            return Err(Error::invalid("sigma must exceed 1"));
        }
        if !(self.epsilon > F::zero()) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        if !(self.dual_m > F::zero()) {
            return Err(Error::invalid("dual step constant M must be positive"));
        }
        Ok(())
    }
}

/// Result of an augmented Lagrangian run.
#[derive(Debug)]
pub struct IalmResult<F> {
    pub x: Vec<F>,
    /// Running multiplier `y^k`.
    pub y: Vec<F>,
    /// KKT witness `y^k + β_k c(x^{k+1})` used for the dual residual.
    pub y_report: Vec<F>,
    pub status: SolveStatus,
    pub outer_iterations: u64,
    pub pres: F,
    pub dres: F,
    /// `‖y^k‖` at the start of each outer iteration, plus the final one.
    pub dual_norms: Vec<F>,
    pub trace: SolverTrace,
}

/// KKT residuals at `(x, y_report)`:
/// `pres = ‖c(x)‖` and `dres = dist(0, ∇̃g(x) + J̃_c(x)ᵀ y + ∂h(x))` with all
/// gradients estimated by the stencil. Charged to the verification budget.
pub fn kkt_residuals<F: Scalar>(
    problem: &ConstrainedProblem<'_, F>,
    x: &[F],
    y_report: &[F],
    stencil: &StencilSpec<F>,
) -> Result<(F, F)> {
    if y_report.len() != problem.num_constraints() {
        return Err(Error::DimensionMismatch {
            expected: problem.num_constraints(),
            got: y_report.len(),
        });
    }
    problem.ledger().verified(|| {
        let c_val = problem.constraint_values(x)?;
        let pres = vecops::norm(&c_val);
        let mut grad = estimate_full_gradient(&problem.g, x, stencil)?;
        for (ci, &yi) in problem.c.iter().zip(y_report) {
            let jac_row = estimate_full_gradient(ci, x, stencil)?;
            for (gi, ji) in grad.iter_mut().zip(jac_row) {
                *gi += yi * ji;
            }
        }
        let dres = problem.h.subdiff_distance(x, &grad)?;
        Ok((pres, dres))
    })
}

/// Runs the augmented Lagrangian loop from `x0 ∈ dom(h)`.
pub fn zo_ialm<F: Scalar>(
    problem: &ConstrainedProblem<'_, F>,
    x0: &[F],
    config: &IalmConfig<F>,
) -> Result<IalmResult<F>> {
    config.validate()?;
    if !problem.h.contains(x0)? {
        return Err(Error::invalid("initial point outside dom(h)"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.inner.seed);
    let mut trace = SolverTrace::new();
    let ledger = problem.ledger().clone();
    let l_cons = problem.num_constraints();

    let mut x = x0.to_vec();
    let mut y = vec![F::zero(); l_cons];
    let mut y_report = y.clone();
    let mut dual_norms = vec![F::zero()];
    let mut pres = F::infinity();
    let mut dres = F::infinity();
    let mut status = SolveStatus::IterationCap;

    let mut k = 0u64;
    while k < config.max_outer {
        if config.max_queries > 0 && ledger.solver_queries() >= config.max_queries {
            status = SolveStatus::BudgetExceeded;
            break;
        }
        let beta = config.beta0 * config.sigma.powi(k as i32);
        let (rho_hat, l_hat) = config.curvature.apply(&problem.constants, &y, beta);
        let rho_hat = rho_hat.max(config.rho_floor);
        let l_hat = l_hat.max(rho_hat);
        let phi = al_smooth_part(problem, &y, beta)?;

        match &config.subsolver {
            Subsolver::Ippm => {
                let ippm_cfg = IppmConfig {
                    rho: rho_hat,
                    l_phi: l_hat,
                    epsilon: config.epsilon,
                    max_outer: config.ippm_max_outer,
                };
                let mut inner = config.inner.clone();
                if config.max_queries > 0 {
                    inner.max_queries = if inner.max_queries == 0 {
                        config.max_queries
                    } else {
                        inner.max_queries.min(config.max_queries)
                    };
                }
                let out = run_ippm(
                    &phi,
                    &problem.h,
                    &x,
                    &ippm_cfg,
                    &inner,
                    &mut rng,
                    &mut trace,
                )?;
                x = out.x;
            }
            Subsolver::Baseline {
                config: base,
                budget_per_subproblem,
            } => {
                let mut sub = base.clone();
                sub.l_smooth = l_hat;
                sub.epsilon = config.epsilon;
                sub.seed = rng.next_u64();
                let mut ceiling = if *budget_per_subproblem > 0 {
                    ledger.solver_queries() + budget_per_subproblem
                } else {
                    0
                };
                if config.max_queries > 0 {
                    ceiling = if ceiling == 0 {
                        config.max_queries
                    } else {
                        ceiling.min(config.max_queries)
                    };
                }
                sub.max_queries = ceiling;
                let mut sub_rng = ChaCha8Rng::seed_from_u64(sub.seed);
                let out = match sub.method {
                    BaselineMethod::ProxSgd => {
                        run_prox_sgd(&phi, &problem.h, &x, &sub, &mut sub_rng, &mut trace)?
                    }
                    BaselineMethod::Adamm => {
                        run_adamm(&phi, &problem.h, &x, &sub, &mut sub_rng, &mut trace)?
                    }
                    BaselineMethod::Ars => {
                        return Err(Error::Unsupported(
                            "accelerated random search cannot handle AL subproblems with a nonsmooth term",
                        ))
                    }
                };
                x = out.x;
            }
        }

        // constraint values at the new primal iterate; counted against the
        // solver (the dual step is part of the algorithm)
        let c_val = problem.constraint_values(&x)?;
        y_report = y
            .iter()
            .zip(&c_val)
            .map(|(&yi, &ci)| yi + beta * ci)
            .collect();
        if !config.penalty_only {
            y = dual_step(&y, &c_val, k, config.dual_m, config.dual_q);
        }
        dual_norms.push(vecops::norm(&y));

        let (p, d) = kkt_residuals(problem, &x, &y_report, &config.inner.stencil)?;
        pres = p;
        dres = d;
        let objective = ledger.verified(|| -> Result<F> {
            Ok(problem.g.eval(&x)? + problem.h.value(&x)?)
        })?;
        trace.push(TraceRecord {
            kind: RecordKind::Outer,
            index: k,
            solver_queries: ledger.solver_queries(),
            verification_queries: ledger.verification_queries(),
            objective: objective.to_f64_lossy(),
            pres: pres.to_f64_lossy(),
            dres: dres.to_f64_lossy(),
            beta: beta.to_f64_lossy(),
            wall_ms: trace.elapsed_ms(),
        });
        k += 1;

        if pres <= config.epsilon && dres <= config.epsilon {
            status = SolveStatus::Converged;
            break;
        }
    }

    Ok(IalmResult {
        x,
        y,
        y_report,
        status,
        outer_iterations: k,
        pres,
        dres,
        dual_norms,
        trace,
    })
}

use rand::RngCore;
