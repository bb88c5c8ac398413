//! Independent reference solutions.
//!
//! Monte Carlo estimators for problems with a linear representation and
//! finite-difference solvers for radially symmetric or low-dimensional
//! problems. None of these share code with the deep splitting solver.

mod grid;
mod monte_carlo;
mod radial;
mod tridiagonal;

pub use grid::{grid_fd_reference, grid_fd_solution, GridSettings, GridSolution};
pub use monte_carlo::{
    cole_hopf_reference, hjb_reference, linear_gbm_reference, linearized_bs_reference, Estimate,
    MIN_SAMPLES,
};
pub use radial::{radial_fd_reference, RadialSettings, BOUNDARY_TOLERANCE};
pub use tridiagonal::solve_tridiagonal;
