use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Spacing {
    Uniform,
    /// Explicit `t_0, ..., t_N`.
    Explicit(Vec<f64>),
}

/// Forward times `0 = t_0 < ... < t_N = T` and reversed times `tau_n = T - t_{N-n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    forward: Vec<f64>,
    reversed: Vec<f64>,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize, spacing: Spacing) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidGrid(format!("horizon must be positive, got {horizon}")));
        }
        if steps == 0 {
            return Err(Error::InvalidGrid("need at least one time step".into()));
        }
        let forward = match spacing {
            Spacing::Uniform => {
                let mut t: Vec<f64> =
                    (0..=steps).map(|n| n as f64 * horizon / steps as f64).collect();
                t[steps] = horizon;
                t
            }
            Spacing::Explicit(t) => {
                if t.len() != steps + 1 {
                    return Err(Error::InvalidGrid(format!(
                        "expected {} grid points, got {}",
                        steps + 1,
                        t.len()
                    )));
                }
                if t[0] != 0.0 || t[steps] != horizon {
                    return Err(Error::InvalidGrid(format!(
                        "grid must start at 0 and end at {horizon}"
                    )));
                }
                if !t.windows(2).all(|w| w[0] < w[1]) {
                    return Err(Error::InvalidGrid("grid must be strictly increasing".into()));
                }
                t
            }
        };
        let reversed = (0..=steps).map(|n| horizon - forward[steps - n]).collect();
        Ok(TimeGrid { horizon, forward, reversed })
    }

    pub fn uniform(horizon: f64, steps: usize) -> Result<Self> {
        Self::new(horizon, steps, Spacing::Uniform)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of steps `N`.
    pub fn steps(&self) -> usize {
        self.forward.len() - 1
    }

    pub fn forward_times(&self) -> &[f64] {
        &self.forward
    }

    pub fn reversed_times(&self) -> &[f64] {
        &self.reversed
    }

    /// `t_n - t_{n-1}` for `n >= 1`.
    pub fn forward_step(&self, n: usize) -> f64 {
        self.forward[n] - self.forward[n - 1]
    }

    /// `tau_{k+1} - tau_k`.
    pub fn reversed_step(&self, k: usize) -> f64 {
        self.reversed[k + 1] - self.reversed[k]
    }
}
