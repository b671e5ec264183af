//! Solver-agnostic MILP plumbing for the FCR scheduler.
//!
//! The crate holds the canonical [`MilpModel`], writers for fixed/free MPS
//! and LP text, an adapter that drives an external solver binary through
//! files and a subprocess, and a small exact branch-and-bound solver backed
//! by a dense simplex for tiny instances and tests.

pub mod export;
pub mod external;
pub mod micro;
pub mod model;
pub mod simplex;

use std::time::Duration;

pub use export::{export_model, ExportFormat, ExportedModel, NameMap};
pub use external::{solve_external, ExternalSolver};
pub use micro::{solve_micro, MicroCaps};
pub use model::{
    Constraint, FamilyViolation, MilpModel, ObjSense, Objective, RowId, Sense, VarId, VarKind,
    Variable, ViolationReport,
};

#[derive(Debug, thiserror::Error)]
pub enum MilpError {
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("invalid bounds for `{name}`: [{lower}, {upper}]")]
    InvalidBounds { name: String, lower: f64, upper: f64 },
    #[error("row `{row}` references unknown column {col}")]
    UnknownColumn { row: String, col: usize },
    #[error("non-finite coefficient or rhs in `{0}`")]
    NonFinite(String),
    #[error("model inconsistent: {0}")]
    Inconsistent(String),
    #[error("solution length {got} does not match {expected} columns")]
    LengthMismatch { expected: usize, got: usize },
    #[error("unsupported export format `{0}`")]
    UnsupportedFormat(String),
    #[error("model too large for the micro solver: {binaries} integer columns (cap {max_binaries}), {continuous} continuous (cap {max_continuous})")]
    TooLarge {
        binaries: usize,
        continuous: usize,
        max_binaries: usize,
        max_continuous: usize,
    },
    #[error("problem is unbounded")]
    Unbounded,
    #[error("solver backend failed: {0}")]
    Backend(String),
    #[error("could not parse solver output: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    TimeLimit,
    BackendError,
}

/// Outcome of one solve. `solution` is empty unless a feasible point is known.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub objective: f64,
    pub solution: Vec<f64>,
    pub gap: f64,
    pub wall_time: Duration,
    pub message: Option<String>,
}

impl SolveResult {
    pub fn has_solution(&self) -> bool {
        !self.solution.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub time: Duration,
    /// Relative MIP gap.
    pub gap: f64,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            time: Duration::from_secs(600),
            gap: 1e-6,
        }
    }
}

/// Backend selection used by higher layers.
#[derive(Debug, Clone)]
pub enum Backend {
    Micro(MicroCaps),
    External(ExternalSolver),
}

impl Backend {
    pub fn solve(&self, model: &MilpModel, limits: Limits) -> Result<SolveResult, MilpError> {
        match self {
            Backend::Micro(caps) => solve_micro(model, limits, caps),
            Backend::External(cmd) => solve_external(model, cmd, limits),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Backend::Micro(_) => "micro",
            Backend::External(_) => "external",
        }
    }
}
