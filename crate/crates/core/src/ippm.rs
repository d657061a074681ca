//! Inexact proximal point method for weakly-convex composite problems
//! `min Φ(x) = φ(x) + ψ(x)` with a black-box `ρ`-weakly-convex `φ`.
//!
//! Each outer step adds the white-box quadratic `ρ‖x - xᵗ‖²` to `φ`, which
//! makes the shifted problem `ρ`-strongly convex and `L_φ + 2ρ`-smooth, and
//! solves it with the coordinate solver to inner tolerance `ε/4`. The loop
//! stops as soon as the proximal centers stall: `2ρ‖xᵗ⁺¹ - xᵗ‖ ≤ ε/2`, which
//! certifies `dist(0, ∂Φ(xᵗ⁺¹)) ≤ ε`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::apcu::{run_apcu, ApcuConfig};
use crate::error::{Error, Result};
use crate::oracle::BlackBoxOracle;
use crate::prox::SeparableConvexTerm;
use crate::scalar::Scalar;
use crate::trace::{RecordKind, SolveStatus, SolverTrace, TraceRecord};
use crate::vecops;

/// Configuration of the proximal point loop.
#[derive(Debug, Clone)]
pub struct IppmConfig<F> {
    /// Weak convexity of the smooth part (also the proximal weight).
    pub rho: F,
    /// Smoothness of the smooth part.
    pub l_phi: F,
    /// Stationarity target for the composite problem.
    pub epsilon: F,
    /// Cap on proximal steps; 0 means unlimited.
    pub max_outer: u64,
}

impl<F: Scalar> IppmConfig<F> {
    fn validate(&self) -> Result<()> {
        if !(self.rho > F::zero()) {
            return Err(Error::invalid("weak convexity must be positive"));
        }
        if self.l_phi < self.rho {
            return Err(Error::invalid(
                "a ρ-weakly-convex L-smooth function has ρ ≤ L",
            ));
        }
        if !(self.epsilon > F::zero()) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        Ok(())
    }
}

/// Outcome of a proximal point run.
#[derive(Debug)]
pub struct IppmResult<F> {
    pub x: Vec<F>,
    pub status: SolveStatus,
    pub outer_iterations: u64,
    /// Proximal centers `x⁰, x¹, …`; lets callers audit the per-step descent.
    pub proximal_path: Vec<Vec<F>>,
    pub trace: SolverTrace,
}

/// `φ(·) + ρ‖· - center‖²` as a composite oracle on `φ`'s ledger.
pub(crate) fn shifted_oracle<'p, F: Scalar>(
    phi: &'p BlackBoxOracle<'_, F>,
    center: &[F],
    rho: F,
) -> BlackBoxOracle<'p, F> {
    let d = phi.dim();
    let c_val = center.to_vec();
    let c_grad = center.to_vec();
    let mut oracle = BlackBoxOracle::with_ledger(
        d,
        move |x: &[F]| {
            let shift: F = x
                .iter()
                .zip(&c_val)
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum();
            match phi.eval(x) {
                Ok(v) => v + rho * shift,
                Err(_) => F::nan(),
            }
        },
        phi.ledger().clone(),
    )
    .composite();
    if phi.has_verifier() {
        oracle = oracle.with_verifier(move |x: &[F]| {
            let mut g = phi
                .true_gradient(x)
                .unwrap_or_else(|_| vec![F::nan(); d]);
            for i in 0..d {
                g[i] += F::of(2.0) * rho * (x[i] - c_grad[i]);
            }
            g
        });
    }
    oracle
}

/// Drives the proximal point loop from `x0 ∈ dom(ψ)`.
///
/// `inner` supplies the coordinate-solver settings (stencil, epoch length,
/// budget, implementation); its curvature and tolerance fields are replaced
/// by the derived per-step values `(ρ, L_φ + 2ρ, ε/4)`.
pub fn zo_ippm<F: Scalar>(
    phi: &BlackBoxOracle<'_, F>,
    psi: &SeparableConvexTerm<F>,
    x0: &[F],
    config: &IppmConfig<F>,
    inner: &ApcuConfig<F>,
) -> Result<IppmResult<F>> {
    let mut rng = ChaCha8Rng::seed_from_u64(inner.seed);
    let mut trace = SolverTrace::new();
    run_ippm(phi, psi, x0, config, inner, &mut rng, &mut trace).map(|out| IppmResult {
        x: out.x,
        status: out.status,
        outer_iterations: out.outer_iterations,
        proximal_path: out.proximal_path,
        trace,
    })
}

pub(crate) struct IppmOutcome<F> {
    pub x: Vec<F>,
    pub status: SolveStatus,
    pub outer_iterations: u64,
    pub proximal_path: Vec<Vec<F>>,
}

pub(crate) fn run_ippm<F: Scalar>(
    phi: &BlackBoxOracle<'_, F>,
    psi: &SeparableConvexTerm<F>,
    x0: &[F],
    config: &IppmConfig<F>,
    inner: &ApcuConfig<F>,
    rng: &mut ChaCha8Rng,
    trace: &mut SolverTrace,
) -> Result<IppmOutcome<F>> {
    config.validate()?;
    if !psi.contains(x0)? {
        return Err(Error::invalid("initial point outside dom(ψ)"));
    }
    let mut x_t = x0.to_vec();
    let mut path = vec![x_t.clone()];
    let mut t = 0u64;
    loop {
        if config.max_outer > 0 && t >= config.max_outer {
            return Ok(IppmOutcome {
                x: x_t,
                status: SolveStatus::IterationCap,
                outer_iterations: t,
                proximal_path: path,
            });
        }
        let shifted = shifted_oracle(phi, &x_t, config.rho);
        let mut step_cfg = inner.clone();
        step_cfg.mu = config.rho;
        step_cfg.l_smooth = config.l_phi + F::of(2.0) * config.rho;
        step_cfg.epsilon = config.epsilon / F::of(4.0);
        let out = run_apcu(&shifted, psi, &x_t, &step_cfg, rng, trace)?;
        let x_next = out.x;
        let moved = F::of(2.0) * config.rho * vecops::dist(&x_next, &x_t);
        let ledger = phi.ledger();
        let objective = ledger.verified(|| -> Result<F> {
            Ok(phi.eval(&x_next)? + psi.value(&x_next)?)
        })?;
        trace.push(TraceRecord {
            kind: RecordKind::Inner,
            index: t,
            solver_queries: ledger.solver_queries(),
            verification_queries: ledger.verification_queries(),
            objective: objective.to_f64_lossy(),
            pres: f64::NAN,
            dres: moved.to_f64_lossy(),
            beta: f64::NAN,
            wall_ms: trace.elapsed_ms(),
        });
        path.push(x_next.clone());
        x_t = x_next;
        t += 1;
        if out.status == SolveStatus::BudgetExceeded {
            return Ok(IppmOutcome {
                x: x_t,
                status: SolveStatus::BudgetExceeded,
                outer_iterations: t,
                proximal_path: path,
            });
        }
        if moved <= config.epsilon / F::of(2.0) {
            return Ok(IppmOutcome {
                x: x_t,
                status: SolveStatus::Converged,
                outer_iterations: t,
                proximal_path: path,
            });
        }
    }
}
