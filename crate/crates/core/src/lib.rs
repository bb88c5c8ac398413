//! Deep splitting solver for semilinear parabolic PDEs.
//!
//! The crate is organized along the pipeline:
//!
//! * [`sde`]: time grids and Euler-Maruyama path batches,
//! * [`network`]: batch-normalized feedforward approximators with analytic gradients,
//! * [`training`]: the per-time-step regression, optimizers and the outer recursion,
//! * [`problems`]: the PDE data model and benchmark presets,
//! * [`oracles`]: independent reference solvers,
//! * [`harness`]: experiment orchestration, reports and the CLI.

pub mod error;
pub mod harness;
pub mod network;
pub mod oracles;
pub mod problems;
pub mod rng;
pub mod sde;
pub mod training;

pub use error::{Error, Result};
