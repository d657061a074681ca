//! Black-box function abstraction with honest query accounting.
//!
//! Every solver in this crate sees objectives and constraints only through
//! [`BlackBoxOracle::eval`]. Oracles share a per-run [`QueryLedger`] that
//! separates queries spent by the solver from queries spent on diagnostics
//! (residual reporting, ground-truth checks), so reported query counts never
//! include verification work.
//!
//! Composite oracles (an augmented Lagrangian built from an objective and
//! constraint oracles, or a proximally shifted objective) record nothing
//! themselves: the wrapped leaf oracles do the counting, which makes the
//! ledger cost of a composite query exactly the number of base function
//! evaluations it triggers.

use std::cell::Cell;
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vecops;

/// Per-run query accounting, shared by all oracles of a run.
#[derive(Debug, Default)]
pub struct QueryLedger {
    solver: Cell<u64>,
    verification: Cell<u64>,
    verify_mode: Cell<bool>,
}

/// Shared handle to a run's ledger.
pub type LedgerHandle = Rc<QueryLedger>;

impl QueryLedger {
    pub fn new_handle() -> LedgerHandle {
        Rc::new(QueryLedger::default())
    }

    fn record(&self, n: u64) {
        if self.verify_mode.get() {
            self.verification.set(self.verification.get() + n);
        } else {
            self.solver.set(self.solver.get() + n);
        }
    }

    /// Queries consumed by the solver itself.
    pub fn solver_queries(&self) -> u64 {
        self.solver.get()
    }

    /// Queries consumed by diagnostics and residual reporting.
    pub fn verification_queries(&self) -> u64 {
        self.verification.get()
    }

    pub fn total(&self) -> u64 {
        self.solver.get() + self.verification.get()
    }

    /// Runs `f` with all oracle queries routed to the verification counter.
    pub fn verified<R>(&self, f: impl FnOnce() -> R) -> R {
        let prev = self.verify_mode.get();
        self.verify_mode.set(true);
        let out = f();
        self.verify_mode.set(prev);
        out
    }
}

/// A scalar function of a vector, accessible only through value queries.
///
/// The optional verifier returns the exact gradient and is never consulted by
/// solvers; its queries land on the verification counter.
pub struct BlackBoxOracle<'a, F: Scalar> {
    dim: usize,
    f: Box<dyn Fn(&[F]) -> F + 'a>,
    verifier: Option<Box<dyn Fn(&[F]) -> Vec<F> + 'a>>,
    ledger: LedgerHandle,
    /// Base queries recorded per `eval`. Leaves record 1; composites record 0
    /// and let the oracles they wrap do the counting.
    charge: u64,
}

impl<'a, F: Scalar> BlackBoxOracle<'a, F> {
    /// Wraps a plain function as a unit-cost oracle with a fresh ledger.
    pub fn new(dim: usize, f: impl Fn(&[F]) -> F + 'a) -> Self {
        Self::with_ledger(dim, f, QueryLedger::new_handle())
    }

    /// Wraps a plain function as a unit-cost oracle on an existing ledger.
    pub fn with_ledger(dim: usize, f: impl Fn(&[F]) -> F + 'a, ledger: LedgerHandle) -> Self {
        BlackBoxOracle {
            dim,
            f: Box::new(f),
            verifier: None,
            ledger,
            charge: 1,
        }
    }

    /// Marks this oracle as a composite whose queries are counted by the
    /// oracles it wraps.
    pub fn composite(mut self) -> Self {
        self.charge = 0;
        self
    }

    /// Attaches a hidden exact-gradient verifier.
    pub fn with_verifier(mut self, g: impl Fn(&[F]) -> Vec<F> + 'a) -> Self {
        self.verifier = Some(Box::new(g));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ledger(&self) -> &LedgerHandle {
        &self.ledger
    }

    pub fn has_verifier(&self) -> bool {
        self.verifier.is_some()
    }

    /// Evaluates the function at `x`, recording the query.
    pub fn eval(&self, x: &[F]) -> Result<F> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if !vecops::all_finite(x) {
            return Err(Error::NonFinite {
                context: "oracle input",
            });
        }
        self.ledger.record(self.charge);
        let v = (self.f)(x);
        if !v.is_finite() {
            return Err(Error::NonFinite {
                context: "oracle value",
            });
        }
        Ok(v)
    }

    /// Exact gradient from the hidden verifier; diagnostics only.
    pub fn true_gradient(&self, x: &[F]) -> Result<Vec<F>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        match &self.verifier {
            Some(g) => {
                self.ledger.verification.set(self.ledger.verification.get() + 1);
                Ok(g(x))
            }
            None => Err(Error::Unsupported("oracle has no verifier")),
        }
    }
}
