//! Comparison solvers sharing the `(oracle, H, x0, config) -> (x, trace)`
//! contract, so any of them can replace the proximal point subroutine inside
//! the augmented Lagrangian loop.
//!
//! These methods come from the broader zeroth-order literature; the exact
//! update rules implemented here are frozen below.
//!
//! * `zo_prox_sgd`: `x ← prox_{ηH}(x - η·∇̃f(x))` with a fixed step `η`
//!   (default `1/(dL)`).
//! * `zo_adamm`: first/second-moment EMAs of the estimated gradient,
//!   `m ← β₁m + (1-β₁)ĝ`, `v ← β₂v + (1-β₂)ĝ²` (`v` initialized to the first
//!   `ĝ²`), `v̂ ← max(v̂, v)`, then a per-coordinate proximal step with metric
//!   weight `(√v̂_i + δ)/α`.
//! * `zo_ars`: accelerated random search for smooth unconstrained problems
//!   with the parameterization `θ = 1/(16L(n+4)²)`, `h = 1/(4L(n+4))`,
//!   `α = √(Lθ)`, using the two-point Gaussian estimator:
//!   `y = (x + αv)/(1+α)`, `x⁺ = y - h·ĝ(y)`,
//!   `v⁺ = (1-α)v + αy - (h/α)·ĝ(y)`.
//!
//! Stationarity checks run every `check_every` iterations on a coordinate
//! stencil and are charged to the solver budget, mirroring how the main
//! coordinate solver certifies its own stops.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::estimator::{
    estimate_full_gradient, random_multi_point, stencil_coefficients, DirectionDistribution,
    StencilSpec,
};
use crate::oracle::BlackBoxOracle;
use crate::prox::SeparableConvexTerm;
use crate::scalar::Scalar;
use crate::trace::{RecordKind, SolveStatus, SolverTrace, TraceRecord};

/// Which baseline to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineMethod {
    ProxSgd,
    Adamm,
    Ars,
}

/// Gradient estimator the baseline consumes per iteration.
#[derive(Debug, Clone)]
pub enum GradientEstimator<F> {
    /// Coordinate stencil (`p·d` queries per estimate).
    Stencil(StencilSpec<F>),
    /// Mini-batched random-direction estimator (`batch+1` queries).
    Random {
        radius: F,
        batch: usize,
        distribution: DirectionDistribution,
    },
}

impl<F: Scalar> GradientEstimator<F> {
    fn radius(&self) -> F {
        match self {
            GradientEstimator::Stencil(s) => s.radius(),
            GradientEstimator::Random { radius, .. } => *radius,
        }
    }
}

/// Shared baseline configuration; method-specific fields are ignored by the
/// other methods.
#[derive(Debug, Clone)]
pub struct BaselineConfig<F> {
    pub method: BaselineMethod,
    /// Fixed step for `zo_prox_sgd`; `None` means `1/(d·l_smooth)`.
    pub step: Option<F>,
    /// `zo_adamm` step scale α and moment decays β₁, β₂.
    pub alpha: F,
    pub beta1: F,
    pub beta2: F,
    /// `zo_adamm` denominator offset.
    pub delta: F,
    /// Strong convexity knowledge used by `zo_ars`.
    pub mu: F,
    /// Smoothness constant used for default steps and `zo_ars` parameters.
    pub l_smooth: F,
    /// Stationarity tolerance for the periodic check; 0 disables the stop.
    pub epsilon: F,
    pub estimator: GradientEstimator<F>,
    /// Iterations between stationarity checks; 0 means the dimension.
    pub check_every: usize,
    /// Solver-query ceiling on the oracle ledger; 0 means unlimited.
    pub max_queries: u64,
    pub max_iterations: u64,
    pub seed: u64,
}

impl<F: Scalar> BaselineConfig<F> {
    pub fn new(method: BaselineMethod, l_smooth: F, estimator: GradientEstimator<F>) -> Self {
        BaselineConfig {
            method,
            step: None,
            alpha: F::one(),
            beta1: F::of(0.75),
            beta2: F::one(),
            delta: F::of(1e-8),
            mu: F::one(),
            l_smooth,
            epsilon: F::zero(),
            estimator,
            check_every: 0,
            max_queries: 0,
            max_iterations: 0,
            seed: 0,
        }
    }
}

/// Result of a baseline run.
#[derive(Debug)]
pub struct BaselineResult<F> {
    pub x: Vec<F>,
    pub status: SolveStatus,
    /// Estimated stationarity at the last check; infinity if never checked.
    pub stationarity: F,
    pub iterations: u64,
    pub trace: SolverTrace,
}

fn estimate<F: Scalar>(
    oracle: &BlackBoxOracle<'_, F>,
    x: &[F],
    estimator: &GradientEstimator<F>,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<F>> {
    match estimator {
        GradientEstimator::Stencil(spec) => estimate_full_gradient(oracle, x, spec),
        GradientEstimator::Random {
            radius,
            batch,
            distribution,
        } => random_multi_point(oracle, x, *radius, *batch, *distribution, rng),
    }
}

struct Loop<'c, F: Scalar> {
    cfg: &'c BaselineConfig<F>,
    check_spec: StencilSpec<F>,
    check_every: u64,
    iterations: u64,
    checks: u64,
    stationarity: F,
}

impl<'c, F: Scalar> Loop<'c, F> {
    fn new(cfg: &'c BaselineConfig<F>, d: usize) -> Result<Self> {
        let check_spec = match &cfg.estimator {
            GradientEstimator::Stencil(s) => s.clone(),
            GradientEstimator::Random { .. } => stencil_coefficients(2, cfg.estimator.radius())?,
        };
        Ok(Loop {
            cfg,
            check_spec,
            check_every: if cfg.check_every == 0 {
                d as u64
            } else {
                cfg.check_every as u64
            },
            iterations: 0,
            checks: 0,
            stationarity: F::infinity(),
        })
    }

    fn exhausted(&self, oracle: &BlackBoxOracle<'_, F>) -> Option<SolveStatus> {
        if self.cfg.max_queries > 0 && oracle.ledger().solver_queries() >= self.cfg.max_queries {
            return Some(SolveStatus::BudgetExceeded);
        }
        if self.cfg.max_iterations > 0 && self.iterations >= self.cfg.max_iterations {
            return Some(SolveStatus::IterationCap);
        }
        None
    }

    /// Runs the periodic stationarity check if due; true means converged.
    fn check(
        &mut self,
        oracle: &BlackBoxOracle<'_, F>,
        h: &SeparableConvexTerm<F>,
        x: &[F],
        trace: &mut SolverTrace,
    ) -> Result<bool> {
        if self.iterations % self.check_every != 0 {
            return Ok(false);
        }
        let grad = estimate_full_gradient(oracle, x, &self.check_spec)?;
        self.stationarity = h.subdiff_distance(x, &grad)?;
        let ledger = oracle.ledger();
        let objective =
            ledger.verified(|| -> Result<F> { Ok(oracle.eval(x)? + h.value(x)?) })?;
        trace.push(TraceRecord {
            kind: RecordKind::Epoch,
            index: self.checks,
            solver_queries: ledger.solver_queries(),
            verification_queries: ledger.verification_queries(),
            objective: objective.to_f64_lossy(),
            pres: f64::NAN,
            dres: self.stationarity.to_f64_lossy(),
            beta: f64::NAN,
            wall_ms: trace.elapsed_ms(),
        });
        self.checks += 1;
        Ok(self.cfg.epsilon > F::zero() && self.stationarity <= self.cfg.epsilon)
    }
}

/// Proximal stochastic gradient with a fixed step.
pub fn zo_prox_sgd<F: Scalar>(
    oracle: &BlackBoxOracle<'_, F>,
    h: &SeparableConvexTerm<F>,
    x0: &[F],
    config: &BaselineConfig<F>,
) -> Result<BaselineResult<F>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trace = SolverTrace::new();
    run_prox_sgd(oracle, h, x0, config, &mut rng, &mut trace).map(|o| o.into_result(trace))
}

/// Adaptive-moment updates on estimated gradients with a proximal metric
/// step.
pub fn zo_adamm<F: Scalar>(
    oracle: &BlackBoxOracle<'_, F>,
    h: &SeparableConvexTerm<F>,
    x0: &[F],
    config: &BaselineConfig<F>,
) -> Result<BaselineResult<F>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trace = SolverTrace::new();
    run_adamm(oracle, h, x0, config, &mut rng, &mut trace).map(|o| o.into_result(trace))
}

/// Accelerated random search; smooth unconstrained objectives only.
pub fn zo_ars<F: Scalar>(
    oracle: &BlackBoxOracle<'_, F>,
    x0: &[F],
    config: &BaselineConfig<F>,
) -> Result<BaselineResult<F>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trace = SolverTrace::new();
    run_ars(oracle, x0, config, &mut rng, &mut trace).map(|o| o.into_result(trace))
}

pub(crate) struct BaselineOutcome<F> {
    pub x: Vec<F>,
    pub status: SolveStatus,
    pub stationarity: F,
    pub iterations: u64,
}

impl<F: Scalar> BaselineOutcome<F> {
    fn into_result(self, trace: SolverTrace) -> BaselineResult<F> {
        BaselineResult {
            x: self.x,
            status: self.status,
            stationarity: self.stationarity,
            iterations: self.iterations,
            trace,
        }
    }
}

pub(crate) fn run_prox_sgd<F: Scalar>(
    oracle: &BlackBoxOracle<'_, F>,
    h: &SeparableConvexTerm<F>,
    x0: &[F],
    config: &BaselineConfig<F>,
    rng: &mut ChaCha8Rng,
    trace: &mut SolverTrace,
) -> Result<BaselineOutcome<F>> {
    let d = x0.len();
    if !h.contains(x0)? {
        return Err(Error::invalid("initial point outside dom(H)"));
    }
    let eta = match config.step {
        Some(s) if s > F::zero() => s,
        Some(_) => return Err(Error::invalid("step size must be positive")),
        None => F::one() / (F::of(d as f64) * config.l_smooth),
    };
    let mut state = Loop::new(config, d)?;
    let mut x = x0.to_vec();
    loop {
        if let Some(status) = state.exhausted(oracle) {
            return Ok(BaselineOutcome {
                x,
                status,
                stationarity: state.stationarity,
                iterations: state.iterations,
            });
        }
        if state.check(oracle, h, &x, trace)? {
            return Ok(BaselineOutcome {
                x,
                status: SolveStatus::Converged,
                stationarity: state.stationarity,
                iterations: state.iterations,
            });
        }
        let grad = estimate(oracle, &x, &config.estimator, rng)?;
        for i in 0..d {
            x[i] = x[i] - eta * grad[i];
        }
        x = h.prox_full(&x, F::one() / eta)?;
        state.iterations += 1;
    }
}

pub(crate) fn run_adamm<F: Scalar>(
    oracle: &BlackBoxOracle<'_, F>,
    h: &SeparableConvexTerm<F>,
    x0: &[F],
    config: &BaselineConfig<F>,
    rng: &mut ChaCha8Rng,
    trace: &mut SolverTrace,
) -> Result<BaselineOutcome<F>> {
    let d = x0.len();
    if !h.contains(x0)? {
        return Err(Error::invalid("initial point outside dom(H)"));
    }
    let mut state = Loop::new(config, d)?;
    let mut x = x0.to_vec();
    let mut m = vec![F::zero(); d];
    let mut v: Option<Vec<F>> = None;
    let mut v_hat = vec![F::zero(); d];
    loop {
        if let Some(status) = state.exhausted(oracle) {
            return Ok(BaselineOutcome {
                x,
                status,
                stationarity: state.stationarity,
                iterations: state.iterations,
            });
        }
        if state.check(oracle, h, &x, trace)? {
            return Ok(BaselineOutcome {
                x,
                status: SolveStatus::Converged,
                stationarity: state.stationarity,
                iterations: state.iterations,
            });
        }
        let grad = estimate(oracle, &x, &config.estimator, rng)?;
        for i in 0..d {
            m[i] = config.beta1 * m[i] + (F::one() - config.beta1) * grad[i];
        }
        match v.as_mut() {
            None => v = Some(grad.iter().map(|&g| g * g).collect()),
            Some(v) => {
                for i in 0..d {
                    v[i] = config.beta2 * v[i] + (F::one() - config.beta2) * grad[i] * grad[i];
                }
            }
        }
        for i in 0..d {
            v_hat[i] = v_hat[i].max(v.as_ref().unwrap()[i]);
        }
        for i in 0..d {
            let weight = (v_hat[i].sqrt() + config.delta) / config.alpha;
            x[i] = h.prox_coordinate(i, x[i] - m[i] / weight, weight)?;
        }
        state.iterations += 1;
    }
}

pub(crate) fn run_ars<F: Scalar>(
    oracle: &BlackBoxOracle<'_, F>,
    x0: &[F],
    config: &BaselineConfig<F>,
    rng: &mut ChaCha8Rng,
    trace: &mut SolverTrace,
) -> Result<BaselineOutcome<F>> {
    let d = x0.len();
    let h = SeparableConvexTerm::zero(d);
    let n4 = F::of((d + 4) as f64);
    let l = config.l_smooth;
    if !(l > F::zero()) {
        return Err(Error::invalid("smoothness constant required"));
    }
    let theta = F::one() / (F::of(16.0) * l * n4 * n4);
    let h_step = F::one() / (F::of(4.0) * l * n4);
    let alpha = (l * theta).sqrt();
    let radius = config.estimator.radius();

    let mut state = Loop::new(config, d)?;
    let mut x = x0.to_vec();
    let mut v = x0.to_vec();
    let mut y = vec![F::zero(); d];
    loop {
        if let Some(status) = state.exhausted(oracle) {
            return Ok(BaselineOutcome {
                x,
                status,
                stationarity: state.stationarity,
                iterations: state.iterations,
            });
        }
        if state.check(oracle, &h, &x, trace)? {
            return Ok(BaselineOutcome {
                x,
                status: SolveStatus::Converged,
                stationarity: state.stationarity,
                iterations: state.iterations,
            });
        }
        for i in 0..d {
            y[i] = (x[i] + alpha * v[i]) / (F::one() + alpha);
        }
        let grad = random_multi_point(
            oracle,
            &y,
            radius,
            1,
            DirectionDistribution::Gaussian,
            rng,
        )?;
        for i in 0..d {
            x[i] = y[i] - h_step * grad[i];
            v[i] = (F::one() - alpha) * v[i] + alpha * y[i] - theta / alpha * grad[i];
        }
        state.iterations += 1;
    }
}

/// Dispatches on `config.method`; `zo_ars` rejects a nonzero `H`.
pub fn run_baseline<F: Scalar>(
    oracle: &BlackBoxOracle<'_, F>,
    h: &SeparableConvexTerm<F>,
    x0: &[F],
    config: &BaselineConfig<F>,
) -> Result<BaselineResult<F>> {
    match config.method {
        BaselineMethod::ProxSgd => zo_prox_sgd(oracle, h, x0, config),
        BaselineMethod::Adamm => zo_adamm(oracle, h, x0, config),
        BaselineMethod::Ars => {
            if !h.is_zero() {
                return Err(Error::Unsupported(
                    "accelerated random search requires an unconstrained smooth objective",
                ));
            }
            zo_ars(oracle, x0, config)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic_1d(target: f64) -> BlackBoxOracle<'static, f64> {
        BlackBoxOracle::new(1, move |x: &[f64]| 0.5 * (x[0] - target) * (x[0] - target))
            .with_verifier(move |x| vec![x[0] - target])
    }

    fn stencil_estimator(a: f64) -> GradientEstimator<f64> {
        GradientEstimator::Stencil(stencil_coefficients(2, a).unwrap())
    }

    #[test]
    fn prox_sgd_converges_on_quadratic() {
        let oracle = quadratic_1d(2.0);
        let h = SeparableConvexTerm::zero(1);
        let mut cfg = BaselineConfig::new(BaselineMethod::ProxSgd, 1.0, stencil_estimator(1e-6));
        cfg.step = Some(1.0);
        cfg.epsilon = 1e-8;
        cfg.max_iterations = 100;
        let res = zo_prox_sgd(&oracle, &h, &[0.0], &cfg).unwrap();
        assert_eq!(res.status, SolveStatus::Converged);
        assert!((res.x[0] - 2.0).abs() < 1e-7);
    }

    #[test]
    fn prox_sgd_stays_in_box() {
        // minimizer at 6 sits outside the box; every iterate must be clipped
        let oracle = quadratic_1d(6.0);
        let h = SeparableConvexTerm::uniform_box(1, -1.0, 1.0);
        let mut cfg = BaselineConfig::new(BaselineMethod::ProxSgd, 1.0, stencil_estimator(1e-6));
        cfg.step = Some(0.5);
        cfg.max_iterations = 50;
        let res = zo_prox_sgd(&oracle, &h, &[0.0], &cfg).unwrap();
        assert!(res.x[0] <= 1.0 + 1e-12);
        assert!((res.x[0] - 1.0).abs() < 1e-6, "should end on the face");
    }

    #[test]
    fn adamm_stationary_at_minimizer() {
        let oracle = quadratic_1d(0.0);
        let h = SeparableConvexTerm::zero(1);
        let mut cfg = BaselineConfig::new(BaselineMethod::Adamm, 1.0, stencil_estimator(1e-6));
        cfg.max_iterations = 20;
        let res = zo_adamm(&oracle, &h, &[0.0], &cfg).unwrap();
        assert!(res.x[0].abs() < 1e-9, "moved away from the minimizer");
    }

    #[test]
    fn adamm_moves_against_constant_gradient() {
        // f(x) = 3x has constant gradient 3; iterates must decrease
        let oracle = BlackBoxOracle::new(1, |x: &[f64]| 3.0 * x[0]);
        let h = SeparableConvexTerm::uniform_box(1, -100.0, 100.0);
        let mut cfg = BaselineConfig::new(BaselineMethod::Adamm, 1.0, stencil_estimator(1e-6));
        cfg.max_iterations = 30;
        let res = zo_adamm(&oracle, &h, &[0.0], &cfg).unwrap();
        assert!(res.x[0] < -1.0, "expected monotone movement, got {}", res.x[0]);
    }

    #[test]
    fn ars_converges_on_quadratic() {
        let oracle = quadratic_1d(1.5);
        let mut cfg = BaselineConfig::new(BaselineMethod::Ars, 1.0, stencil_estimator(1e-6));
        cfg.mu = 1.0;
        cfg.epsilon = 1e-4;
        cfg.max_queries = 200_000;
        cfg.check_every = 50;
        let res = zo_ars(&oracle, &[0.0], &cfg).unwrap();
        assert_eq!(res.status, SolveStatus::Converged);
        assert!((res.x[0] - 1.5).abs() < 1e-3, "got {}", res.x[0]);
    }

    #[test]
    fn ars_rejects_nonzero_term_via_dispatch() {
        let oracle = quadratic_1d(0.0);
        let h = SeparableConvexTerm::uniform_box(1, -1.0, 1.0);
        let cfg = BaselineConfig::new(BaselineMethod::Ars, 1.0, stencil_estimator(1e-6));
        assert!(matches!(
            run_baseline(&oracle, &h, &[0.0], &cfg),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn seeded_runs_are_reproducible() {
        let run = || {
            let oracle = quadratic_1d(1.0);
            let mut cfg = BaselineConfig::new(
                BaselineMethod::ProxSgd,
                1.0,
                GradientEstimator::Random {
                    radius: 1e-4,
                    batch: 4,
                    distribution: DirectionDistribution::Gaussian,
                },
            );
            cfg.seed = 123;
            cfg.max_iterations = 200;
            cfg.step = Some(0.05);
            let res = zo_prox_sgd(&oracle, &SeparableConvexTerm::zero(1), &[3.0], &cfg).unwrap();
            (res.x, oracle.ledger().solver_queries())
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn budget_is_respected() {
        let oracle = quadratic_1d(5.0);
        let h = SeparableConvexTerm::zero(1);
        let mut cfg = BaselineConfig::new(BaselineMethod::ProxSgd, 1.0, stencil_estimator(1e-6));
        cfg.max_queries = 30;
        cfg.step = Some(0.1);
        let res = zo_prox_sgd(&oracle, &h, &[0.0], &cfg).unwrap();
        assert_eq!(res.status, SolveStatus::BudgetExceeded);
        // soft ceiling: at most one iteration + check of overshoot
        assert!(oracle.ledger().solver_queries() < 40);
    }
}
