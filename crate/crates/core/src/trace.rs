//! Time-stamped solver traces and their CSV form.

use std::io::Write;
use std::time::Instant;

use crate::error::Result;

/// What a trace row describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordKind {
    /// Augmented Lagrangian outer iteration.
    Outer,
    /// Proximal point step inside one outer iteration.
    Inner,
    /// Coordinate-solver epoch boundary (postprocess + stationarity check).
    Epoch,
}

impl RecordKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordKind::Outer => "outer",
            RecordKind::Inner => "inner",
            RecordKind::Epoch => "epoch",
        }
    }
}

/// How a solver run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Stationarity / KKT target certified at the requested tolerance.
    Converged,
    /// Query budget exhausted; the result carries the best iterate seen.
    BudgetExceeded,
    /// Iteration cap reached before certification.
    IterationCap,
}

impl SolveStatus {
    pub fn is_certified(self) -> bool {
        matches!(self, SolveStatus::Converged)
    }
}

/// One trace row. Residual-style columns are `NaN` when not applicable to
/// the record kind (e.g. `pres` for an unconstrained run).
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub kind: RecordKind,
    /// Ordinal of this record within its kind (outer k, inner t, epoch index).
    pub index: u64,
    pub solver_queries: u64,
    pub verification_queries: u64,
    pub objective: f64,
    /// Primal residual `‖c(x)‖`.
    pub pres: f64,
    /// Dual residual or gradient-norm surrogate, depending on the run.
    pub dres: f64,
    /// Penalty parameter at this outer iteration.
    pub beta: f64,
    pub wall_ms: f64,
}

/// Ordered record log for one solver run.
#[derive(Debug)]
pub struct SolverTrace {
    records: Vec<TraceRecord>,
    started: Instant,
}

impl Default for SolverTrace {
    fn default() -> Self {
        Self::new()
    }
}

impl SolverTrace {
    pub fn new() -> Self {
        SolverTrace {
            records: Vec::new(),
            started: Instant::now(),
        }
    }

    /// Milliseconds since the trace was created.
    pub fn elapsed_ms(&self) -> f64 {
        self.started.elapsed().as_secs_f64() * 1e3
    }

    pub fn push(&mut self, record: TraceRecord) {
        self.records.push(record);
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn last_of(&self, kind: RecordKind) -> Option<&TraceRecord> {
        self.records.iter().rev().find(|r| r.kind == kind)
    }

    /// Appends every record of `other`, renumbering nothing; used to merge
    /// sub-solver traces into the caller's trace.
    pub fn absorb(&mut self, other: SolverTrace) {
        self.records.extend(other.records);
    }

    /// CSV header matching [`write_csv`](Self::write_csv).
    pub fn csv_header(run_id: &str) -> String {
        let _ = run_id;
        "run_id,kind,index,solver_queries,verification_queries,objective,pres,dres,beta,wall_ms"
            .to_string()
    }

    /// Writes the trace as CSV (UTF-8, LF line endings) with a header row.
    pub fn write_csv<W: Write>(&self, run_id: &str, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::csv_header(run_id))?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                run_id,
                r.kind.as_str(),
                r.index,
                r.solver_queries,
                r.verification_queries,
                r.objective,
                r.pres,
                r.dres,
                r.beta,
                r.wall_ms
            )?;
        }
        Ok(())
    }
}
