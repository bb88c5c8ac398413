//! Time grids and Euler-Maruyama simulation of the auxiliary diffusion.

mod grid;
mod paths;

pub use grid::{Spacing, TimeGrid};
pub use paths::{simulate_paths, PathBatch};
