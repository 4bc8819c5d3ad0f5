//! Brute-force verifiers for the planner and the solver.
//!
//! Nothing here calls into the planner's model building: the grid oracle
//! writes its own LP, the tiny-instance oracle enumerates plans and prices
//! them with `model`, and the theorem checks only consume the sub-domain
//! list they are handed.

mod grid;
mod suites;
mod theorems;
mod tiny;
mod vertex;

use std::io::Write;

use thiserror::Error;

pub use grid::{breakpoints, default_grid_step, rho_grid_oracle, solve_fixed_deadlines, GridOptimum};
pub use suites::{
    grid_suite_instances, kappa_sets, run_grid_suite, run_theorem1_suite, run_theorem2_suite,
    run_tiny_suite, tiny_suite_instances, KappaSet, PROFIT_TOL,
};
pub use theorems::{
    check_tenant_response, check_theorem1, check_theorem1_on, check_theorem2, check_theorem2_with,
};
pub use tiny::{tiny_instance_oracle, TinyOptimum, TINY_STATE_LIMIT};
pub use vertex::lp_vertex_oracle;

use crate::model::ModelError;
use crate::planner::PlannerError;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error("LP solver failed: {0}")]
    Lp(String),
    #[error("instance too large for brute force: {0}")]
    TooLarge(String),
    #[error("invalid oracle input: {0}")]
    InvalidInput(String),
}

impl From<upmr_lp::LpError> for OracleError {
    fn from(e: upmr_lp::LpError) -> Self {
        OracleError::Lp(e.to_string())
    }
}

/// One comparison between an oracle and the code under test.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub case: String,
    pub oracle: f64,
    pub artifact: f64,
    pub abs_gap: f64,
    pub rel_gap: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// First counterexample or other context; not part of the CSV.
    pub note: Option<String>,
}

impl OracleReport {
    /// Two-sided comparison: passes when the gap relative to `|oracle|`
    /// (or the absolute gap, for a zero oracle) is within `tolerance`.
    pub fn compare(case: impl Into<String>, oracle: f64, artifact: f64, tolerance: f64) -> Self {
        let abs_gap = (artifact - oracle).abs();
        let rel_gap = if oracle == 0.0 { abs_gap } else { abs_gap / oracle.abs() };
        Self {
            case: case.into(),
            oracle,
            artifact,
            abs_gap,
            rel_gap,
            tolerance,
            pass: rel_gap <= tolerance,
            note: None,
        }
    }

    /// Counts violations; passes only at zero.
    pub fn count(case: impl Into<String>, violations: usize, note: Option<String>) -> Self {
        let v = violations as f64;
        Self {
            case: case.into(),
            oracle: 0.0,
            artifact: v,
            abs_gap: v,
            rel_gap: v,
            tolerance: 0.0,
            pass: violations == 0,
            note,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Writes reports as `case,oracle,artifact,abs_gap,rel_gap,pass`.
pub fn write_reports<W: Write>(writer: W, reports: &[OracleReport]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["case", "oracle", "artifact", "abs_gap", "rel_gap", "pass"])?;
    for r in reports {
        w.write_record([
            r.case.clone(),
            format!("{:.12e}", r.oracle),
            format!("{:.12e}", r.artifact),
            format!("{:.3e}", r.abs_gap),
            format!("{:.3e}", r.rel_gap),
            r.pass.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
