//! Linear programming and basis pursuit.

pub mod bp;
pub mod simplex;

pub use bp::{
    basis_pursuit_denoise, basis_pursuit_exact, basis_pursuit_lp, exact_recovery, BpResult,
    BpStatus,
};
pub use simplex::{solve_lp, LowerBound, LpProblem, LpSolution, LpStatus};
