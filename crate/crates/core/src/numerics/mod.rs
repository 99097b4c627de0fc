//! Dense numerical kernel: matrices, rank, right inverse and an embedded
//! revised simplex solver.

mod linalg;
mod simplex;

pub use linalg::{invert, matrix_rank, matrix_rank_with_tol, right_inverse, Matrix};
pub use simplex::{
    solve_lp, solve_lp_with, LpSolution, LpStatus, PivotRule, SimplexOptions, StandardLp,
};
