//! Dense linear and mixed-integer programming.
//!
//! [`solve_lp`] is a two-phase primal simplex on a dense tableau with Bland's
//! pivoting rule. It reports row duals as shadow prices (the derivative of the
//! optimal objective with respect to each right-hand side, in the problem's own
//! objective sense) and an improving extreme ray on unboundedness.
//! [`solve_mip`] is best-first branch-and-bound over LP relaxations.

mod mip;
mod problem;
mod simplex;

pub use mip::{solve_mip, solve_mip_with, MipOptions};
pub use problem::{extract_duals, extract_ray, LpProblem, LpSolution, ObjectiveSense, RowSense, Status};
pub use simplex::{solve_lp, solve_lp_with, SimplexOptions};
