//! Schedule producers for the charging model: an exhaustive search over a time
//! grid for small instances and an adapter for external MILP solvers.

mod exact;
mod external;

pub use exact::{solve_exact, solve_exact_small, ExactOutcome};
pub use external::{solve_via_export, solve_via_export_with, ExternalOptions};

use std::io;

use thiserror::Error;

use crate::milp::{ModelError, MpsError, SolutionError};
use crate::validator::{ValidationError, ViolationReport};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchLimits {
    pub max_nodes: u64,
    /// Wall-clock budget in seconds.
    pub time_limit_s: f64,
    /// Spacing of candidate start times and durations.
    pub grid_step_s: f64,
    /// Explore subtrees on the rayon pool.
    pub parallel: bool,
}

impl Default for SearchLimits {
    fn default() -> Self {
        Self {
            max_nodes: 50_000_000,
            time_limit_s: 60.0,
            grid_step_s: 300.0,
            parallel: false,
        }
    }
}

impl SearchLimits {
    pub fn check(&self) -> Result<(), SolverError> {
        let ok = self.max_nodes > 0
            && self.time_limit_s > 0.0
            && self.grid_step_s > 0.0
            && self.grid_step_s.is_finite();
        if ok {
            Ok(())
        } else {
            Err(SolverError::InvalidLimits(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("search limits must be positive: {0}")]
    InvalidLimits(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Mps(#[from] MpsError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("solver command template: {0}")]
    Template(String),
    #[error("solver command `{command}` failed ({status}): {stderr}")]
    Adapter {
        command: String,
        status: String,
        stderr: String,
    },
    #[error("unreadable solver output: {error}; stderr: {stderr}")]
    Solution {
        error: SolutionError,
        stderr: String,
    },
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("solver returned a schedule that fails validation: {}", summarize(.0))]
    Inconsistent(Box<ViolationReport>),
}

fn summarize(report: &ViolationReport) -> String {
    report
        .counts()
        .iter()
        .map(|(f, n)| format!("{f} x{n}"))
        .collect::<Vec<_>>()
        .join(", ")
}
