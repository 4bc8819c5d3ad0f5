//! A minimal linear-programming kit: a sparse program representation and a
//! dense bounded-variable primal simplex that solves it.
//!
//! ```
//! use upmr_lp::{solve_lp, Comparator, LinearProgram, LpStatus};
//!
//! let mut lp = LinearProgram::new();
//! let x = lp.add_var("x", 0.0, f64::INFINITY, 1.0);
//! lp.add_row("cap", [(x, 1.0)], Comparator::Le, 3.0);
//! let sol = solve_lp(&lp).unwrap();
//! assert_eq!(sol.status, LpStatus::Optimal);
//! assert!((sol.objective - 3.0).abs() < 1e-9);
//! ```

mod error;
mod problem;
mod simplex;

pub use error::LpError;
pub use problem::{Comparator, Constraint, LinearProgram, RowId, VarId, Variable};
pub use simplex::{solve_lp, solve_lp_with, LpSolution, LpStatus, SolverOptions};

/// Primal feasibility tolerance promised for optimal solutions.
pub const FEASIBILITY_TOL: f64 = 1e-7;
/// Smallest tableau entry accepted as a pivot.
pub const PIVOT_TOL: f64 = 1e-9;
