//! Derivative-free optimization built around coordinate-wise finite
//! differences.
//!
//! The crate solves three nested problem classes, each reusing the layer
//! below it:
//!
//! * [`apcu`] — an accelerated proximal coordinate update method for
//!   strongly-convex composite problems `min G(x) + H(x)` where `G` is only
//!   available through function values and `H` is a separable white-box term.
//! * [`ippm`] — an inexact proximal point wrapper that repeatedly convexifies
//!   a weakly-convex composite problem and solves each shifted problem with
//!   the coordinate solver.
//! * [`ialm`] — an inexact augmented Lagrangian loop for nonconvex problems
//!   with black-box functional constraints, with a geometric penalty schedule
//!   and normalized dual ascent.
//!
//! Supporting pieces: [`oracle`] wraps black-box functions with honest query
//! accounting, [`estimator`] provides multi-point coordinate stencils and the
//! classical random-direction estimators, [`prox`] implements separable
//! proximal maps and subdifferential distances, [`baselines`] ships ZO
//! comparison solvers, and [`problems`] generates the reproducible benchmark
//! instances.
//!
//! All numeric kernels are generic over the scalar type through the
//! [`Scalar`] trait; `f64` is the type the problem generators and benchmark
//! harness use, with aliases at the crate root.

pub mod apcu;
pub mod baselines;
pub mod error;
pub mod estimator;
pub mod ialm;
pub mod ippm;
pub mod oracle;
pub mod problems;
pub mod prox;
pub mod scalar;
pub mod trace;
pub(crate) mod vecops;

pub use error::{Error, Result};
pub use oracle::{BlackBoxOracle, LedgerHandle, QueryLedger};
pub use scalar::Scalar;
pub use trace::{RecordKind, SolveStatus, SolverTrace, TraceRecord};

/// `f64` stencil specification, the instantiation used by the benchmarks.
pub type Stencil64 = estimator::StencilSpec<f64>;
/// `f64` separable nonsmooth term.
pub type Term64 = prox::SeparableConvexTerm<f64>;
/// `f64` black-box oracle owning its data.
pub type Oracle64 = oracle::BlackBoxOracle<'static, f64>;
/// `f64` constrained problem owning its data.
pub type Problem64 = ialm::ConstrainedProblem<'static, f64>;

/// Euclidean norm helper shared by benchmarks and tests.
pub fn vec_norm<F: Scalar>(v: &[F]) -> F {
    vecops::norm(v)
}
