//! Accelerated proximal coordinate updates for strongly-convex composite
//! problems `min_x F(x) = G(x) + H(x)` with a black-box `G` and a separable
//! white-box `H`.
//!
//! Each iteration samples one coordinate uniformly, estimates that partial
//! derivative of `G` with the coordinate stencil, and performs a
//! momentum-coupled proximal coordinate step. Every `epoch_length` iterations
//! the solver runs a full proximal-gradient postprocess step and stops once
//! the estimated stationarity `dist(0, ∇̃G(x̂) + ∂H(x̂))` falls below `3ε/4`.
//!
//! Two mathematically equivalent state representations are provided: the
//! `Reference` form keeps the `(x, y, z)` triple explicitly, while the
//! `Efficient` form tracks `(u, v)` with `x = ρᵏu + v`, `y = ρᵏ⁺¹u + v`,
//! `z = -ρᵏu + v` and touches a single coordinate of the state per step. The
//! powers of `ρ` are folded into `u` at every epoch boundary so that long
//! runs never underflow.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::estimator::{estimate_coordinate_gradient, estimate_full_gradient, StencilSpec};
use crate::oracle::BlackBoxOracle;
use crate::prox::SeparableConvexTerm;
use crate::scalar::Scalar;
use crate::trace::{RecordKind, SolveStatus, SolverTrace, TraceRecord};
use crate::vecops;

/// State representation to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Implementation {
    /// Full-vector `(x, y, z)` updates; exists for clarity and testing.
    Reference,
    /// Single-coordinate `(u, v)` updates with per-epoch rescaling.
    #[default]
    Efficient,
}

/// Configuration of one coordinate-solver run.
#[derive(Debug, Clone)]
pub struct ApcuConfig<F> {
    /// Strong convexity of `G`.
    pub mu: F,
    /// Smoothness of `G`; must be at least `mu`.
    pub l_smooth: F,
    /// Target stationarity tolerance; the run stops at an estimated
    /// stationarity of `3ε/4`. Zero disables the stationarity stop.
    pub epsilon: F,
    /// Iterations between postprocess/stop checks; 0 means the dimension.
    pub epoch_length: usize,
    /// Solver-query ceiling on the oracle's ledger; 0 means unlimited.
    pub max_queries: u64,
    /// Iteration cap; 0 means unlimited.
    pub max_iterations: u64,
    pub implementation: Implementation,
    pub stencil: StencilSpec<F>,
    pub seed: u64,
    /// Record `x^{k+1}` after every iteration (diagnostics).
    pub log_iterates: bool,
    /// Run the postprocess/stop check once before the first iteration, so a
    /// warm start that is already stationary returns immediately.
    pub check_at_start: bool,
}

impl<F: Scalar> ApcuConfig<F> {
    pub fn new(mu: F, l_smooth: F, epsilon: F, stencil: StencilSpec<F>) -> Self {
        ApcuConfig {
            mu,
            l_smooth,
            epsilon,
            epoch_length: 0,
            max_queries: 0,
            max_iterations: 0,
            implementation: Implementation::default(),
            stencil,
            seed: 0,
            log_iterates: false,
            check_at_start: false,
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        if !(self.mu > F::zero()) {
            return Err(Error::invalid("strong convexity must be positive"));
        }
        if self.l_smooth < self.mu {
            return Err(Error::invalid(
                "smoothness must be at least the strong convexity",
            ));
        }
        if self.epsilon < F::zero() {
            return Err(Error::invalid("tolerance must be nonnegative"));
        }
        if d == 0 {
            return Err(Error::invalid("empty problem"));
        }
        Ok(())
    }
}

/// Outcome of a coordinate-solver run.
#[derive(Debug)]
pub struct ApcuResult<F> {
    /// Postprocessed point; always in `dom(H)`.
    pub x: Vec<F>,
    pub status: SolveStatus,
    /// Estimated stationarity at `x`.
    pub stationarity: F,
    pub iterations: u64,
    pub trace: SolverTrace,
    pub iterate_log: Option<Vec<Vec<F>>>,
}

/// Proximal-gradient postprocess: `prox_{H,L}(x - ∇̃G(x)/L)`, the minimizer
/// of `⟨∇̃G(x), x'-x⟩ + (L/2)‖x'-x‖² + H(x')`. Costs `p·d` queries.
pub fn postprocess_prox_step<F: Scalar>(
    g: &BlackBoxOracle<'_, F>,
    x: &[F],
    l_smooth: F,
    h: &SeparableConvexTerm<F>,
    stencil: &StencilSpec<F>,
) -> Result<Vec<F>> {
    let grad = estimate_full_gradient(g, x, stencil)?;
    let mut v = x.to_vec();
    for i in 0..v.len() {
        v[i] = v[i] - grad[i] / l_smooth;
    }
    h.prox_full(&v, l_smooth)
}

/// Solves `min G + H` from `x0`. `G` must be `mu`-strongly convex and
/// `l_smooth`-smooth (caller-asserted); `x0` must lie in `dom(H)`.
pub fn zo_apcu<F: Scalar>(
    g: &BlackBoxOracle<'_, F>,
    h: &SeparableConvexTerm<F>,
    x0: &[F],
    config: &ApcuConfig<F>,
) -> Result<ApcuResult<F>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trace = SolverTrace::new();
    run_apcu(g, h, x0, config, &mut rng, &mut trace).map(|out| ApcuResult {
        x: out.x,
        status: out.status,
        stationarity: out.stationarity,
        iterations: out.iterations,
        trace,
        iterate_log: out.iterate_log,
    })
}

pub(crate) struct ApcuOutcome<F> {
    pub x: Vec<F>,
    pub status: SolveStatus,
    pub stationarity: F,
    pub iterations: u64,
    pub iterate_log: Option<Vec<Vec<F>>>,
}

struct EpochCheck<F> {
    x_hat: Vec<F>,
    stationarity: F,
    converged: bool,
}

/// Shared loop driver; the caller owns rng and trace so nested solvers can
/// share one stream and one record log.
pub(crate) fn run_apcu<F: Scalar>(
    g: &BlackBoxOracle<'_, F>,
    h: &SeparableConvexTerm<F>,
    x0: &[F],
    config: &ApcuConfig<F>,
    rng: &mut ChaCha8Rng,
    trace: &mut SolverTrace,
) -> Result<ApcuOutcome<F>> {
    let d = x0.len();
    config.validate(d)?;
    if g.dim() != d || h.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: d,
        });
    }
    if !h.contains(x0)? {
        return Err(Error::invalid("initial point outside dom(H)"));
    }

    let alpha = F::of(1.0 / d as f64) * (config.mu / config.l_smooth).sqrt();
    let epoch_len = if config.epoch_length == 0 {
        d
    } else {
        config.epoch_length
    };
    let w_step = F::of(d as f64) * config.l_smooth * alpha;
    let stop_level = F::of(0.75) * config.epsilon;

    let mut iterate_log = config.log_iterates.then(Vec::new);
    let mut best: Option<(Vec<F>, F)> = None;
    let mut epoch_idx = 0u64;
    let mut k = 0u64;

    // reference state
    let mut x = x0.to_vec();
    let mut z = x0.to_vec();
    // efficient state: u scaled so that x^k = ρ^e·u + v with e reset per epoch
    let mut u = vec![F::zero(); d];
    let mut v = x0.to_vec();
    let rho = (F::one() - alpha) / (F::one() + alpha);
    let mut rho_e1 = rho; // ρ^{e+1}

    let mut y = vec![F::zero(); d];
    let mut scratch = vec![F::zero(); d];

    let budget_hit = |ledger: &crate::oracle::QueryLedger| {
        config.max_queries > 0 && ledger.solver_queries() >= config.max_queries
    };
    let mut pending_start_check = config.check_at_start;

    let epoch_check = |x_now: &[F], epoch_idx: u64, trace: &mut SolverTrace| -> Result<EpochCheck<F>> {
        if !vecops::all_finite(x_now) {
            return Err(Error::NonFinite {
                context: "coordinate solver iterate",
            });
        }
        let x_hat = postprocess_prox_step(g, x_now, config.l_smooth, h, &config.stencil)?;
        let grad_hat = estimate_full_gradient(g, &x_hat, &config.stencil)?;
        let stationarity = h.subdiff_distance(&x_hat, &grad_hat)?;
        let ledger = g.ledger();
        let objective =
            ledger.verified(|| -> Result<F> { Ok(g.eval(&x_hat)? + h.value(&x_hat)?) })?;
        trace.push(TraceRecord {
            kind: RecordKind::Epoch,
            index: epoch_idx,
            solver_queries: ledger.solver_queries(),
            verification_queries: ledger.verification_queries(),
            objective: objective.to_f64_lossy(),
            pres: f64::NAN,
            dres: stationarity.to_f64_lossy(),
            beta: f64::NAN,
            wall_ms: trace.elapsed_ms(),
        });
        let converged = config.epsilon > F::zero() && stationarity <= stop_level;
        Ok(EpochCheck {
            x_hat,
            stationarity,
            converged,
        })
    };

    loop {
        let out_of_iterations = config.max_iterations > 0 && k >= config.max_iterations;
        if budget_hit(g.ledger()) || out_of_iterations {
            let status = if out_of_iterations {
                SolveStatus::IterationCap
            } else {
                SolveStatus::BudgetExceeded
            };
            // make sure the returned point went through the prox step
            let (x_best, stat) = match best {
                Some(pair) => pair,
                None => {
                    let x_now = match config.implementation {
                        Implementation::Reference => x.clone(),
                        Implementation::Efficient => {
                            let scale = if rho > F::zero() { rho_e1 / rho } else { F::zero() };
                            vecops::add_scaled(&v, scale, &u, &mut scratch);
                            scratch.clone()
                        }
                    };
                    let check = epoch_check(&x_now, epoch_idx, trace)?;
                    (check.x_hat, check.stationarity)
                }
            };
            return Ok(ApcuOutcome {
                x: x_best,
                status,
                stationarity: stat,
                iterations: k,
                iterate_log,
            });
        }

        if pending_start_check {
            pending_start_check = false;
            let check = epoch_check(x0, epoch_idx, trace)?;
            epoch_idx += 1;
            best = Some((check.x_hat.clone(), check.stationarity));
            if check.converged {
                return Ok(ApcuOutcome {
                    x: check.x_hat,
                    status: SolveStatus::Converged,
                    stationarity: check.stationarity,
                    iterations: k,
                    iterate_log,
                });
            }
        }

        let i = rng.random_range(0..d);
        match config.implementation {
            Implementation::Reference => {
                for j in 0..d {
                    y[j] = (x[j] + alpha * z[j]) / (F::one() + alpha);
                }
                let grad_i = estimate_coordinate_gradient(g, &y, i, &config.stencil)?;
                // non-sampled coordinates drift toward y; the sampled one
                // takes the proximal step
                for j in 0..d {
                    scratch[j] = (F::one() - alpha) * z[j] + alpha * y[j];
                }
                let center = scratch[i];
                scratch[i] = h.prox_coordinate(i, center - grad_i / w_step, w_step)?;
                let d_alpha = F::of(d as f64) * alpha;
                for j in 0..d {
                    x[j] = y[j] + d_alpha * (scratch[j] - z[j]) + d_alpha * alpha * (z[j] - y[j]);
                }
                std::mem::swap(&mut z, &mut scratch);
            }
            Implementation::Efficient => {
                vecops::add_scaled(&v, rho_e1, &u, &mut y);
                let grad_i = estimate_coordinate_gradient(g, &y, i, &config.stencil)?;
                let center = -rho_e1 * u[i] + v[i];
                let target = h.prox_coordinate(i, center - grad_i / w_step, w_step)?;
                let step = target - center;
                let d_alpha = F::of(d as f64) * alpha;
                // μ = L in one dimension gives ρ = 0; the u-component carries
                // weight (1 - dα) = 0 there, so the ratio is taken as zero
                if rho_e1 > F::zero() {
                    u[i] = u[i] - (F::one() - d_alpha) / (F::of(2.0) * rho_e1) * step;
                }
                v[i] = v[i] + (F::one() + d_alpha) / F::of(2.0) * step;
            }
        }
        k += 1;

        if let Some(log) = iterate_log.as_mut() {
            let snapshot = match config.implementation {
                Implementation::Reference => x.clone(),
                Implementation::Efficient => {
                    vecops::add_scaled(&v, rho_e1, &u, &mut scratch);
                    scratch.clone()
                }
            };
            log.push(snapshot);
        }

        if k % epoch_len as u64 == 0 {
            let x_now = match config.implementation {
                Implementation::Reference => x.clone(),
                Implementation::Efficient => {
                    vecops::add_scaled(&v, rho_e1, &u, &mut scratch);
                    scratch.clone()
                }
            };
            let check = epoch_check(&x_now, epoch_idx, trace)?;
            epoch_idx += 1;
            let better = best
                .as_ref()
                .map(|(_, s)| check.stationarity < *s)
                .unwrap_or(true);
            if better {
                best = Some((check.x_hat.clone(), check.stationarity));
            }
            if check.converged {
                return Ok(ApcuOutcome {
                    x: check.x_hat,
                    status: SolveStatus::Converged,
                    stationarity: check.stationarity,
                    iterations: k,
                    iterate_log,
                });
            }
            if config.implementation == Implementation::Efficient {
                // fold ρ^{e+1} into u so powers never underflow
                for ui in &mut u {
                    *ui *= rho_e1;
                }
                rho_e1 = rho;
            }
        } else if config.implementation == Implementation::Efficient {
            rho_e1 *= rho;
        }
    }
}
