use crate::error::{Error, Result};
use crate::problems::PdeProblem;

use super::tridiagonal::solve_tridiagonal;

const BLOW_UP: f64 = 1e8;

/// Discretization of the tensor grid solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSettings {
    /// Half width of the box around the evaluation point; `None` picks eight
    /// standard deviations of the noise at the evaluation point plus one.
    pub half_width: Option<f64>,
    /// Intervals per axis (rounded up to even so the center is a node).
    pub intervals: usize,
    pub time_steps: usize,
}

impl Default for GridSettings {
    fn default() -> Self {
        GridSettings { half_width: None, intervals: 800, time_steps: 4000 }
    }
}

/// Solution on the box at the final time.
#[derive(Debug, Clone)]
pub struct GridSolution {
    pub dim: usize,
    pub lower: Vec<f64>,
    pub spacing: f64,
    pub nodes: usize,
    pub values: Vec<f64>,
}

impl GridSolution {
    /// Multilinear interpolation; `None` outside the box.
    pub fn value_at(&self, x: &[f64]) -> Option<f64> {
        if x.len() != self.dim {
            return None;
        }
        let mut base = [0usize; 2];
        let mut frac = [0.0; 2];
        for a in 0..self.dim {
            let s = (x[a] - self.lower[a]) / self.spacing;
            if !(s >= 0.0 && s <= (self.nodes - 1) as f64) {
                return None;
            }
            let i = (s.floor() as usize).min(self.nodes - 2);
            base[a] = i;
            frac[a] = s - i as f64;
        }
        let mut total = 0.0;
        for corner in 0..(1usize << self.dim) {
            let mut weight = 1.0;
            let mut idx = 0;
            for a in 0..self.dim {
                let bit = (corner >> a) & 1;
                weight *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
                idx += (base[a] + bit) * self.nodes.pow(a as u32);
            }
            total += weight * self.values[idx];
        }
        Some(total)
    }
}

/// Finite differences for `d <= 2` on a box centered at `x`: diagonal
/// diffusion implicit, one axis at a time; drift, mixed second derivatives
/// and `f` explicit. Boundary nodes are held at `phi`.
pub fn grid_fd_reference(problem: &PdeProblem, horizon: f64, x: &[f64], settings: GridSettings) -> Result<f64> {
    let sol = grid_fd_solution(problem, horizon, x, settings)?;
    sol.value_at(x).ok_or_else(|| Error::Oracle("evaluation point outside the grid".into()))
}

pub fn grid_fd_solution(problem: &PdeProblem, horizon: f64, x: &[f64], settings: GridSettings) -> Result<GridSolution> {
    let d = problem.dim;
    if !(1..=2).contains(&d) {
        return Err(Error::InvalidArgument(format!("grid solver needs d <= 2, got {d}")));
    }
    if x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.len() });
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon {horizon}")));
    }
    if settings.intervals < 4 || settings.time_steps == 0 {
        return Err(Error::InvalidArgument("grid too coarse".into()));
    }
    let intervals = settings.intervals + settings.intervals % 2;
    let half_width = settings.half_width.unwrap_or_else(|| {
        let a = problem.diffusion.covariance(x);
        let var = (0..d).map(|i| a[i * d + i]).fold(0.0, f64::max);
        8.0 * (var * horizon).sqrt() + 1.0
    });
    let nodes = intervals + 1;
    let h = 2.0 * half_width / intervals as f64;
    let lower: Vec<f64> = x.iter().map(|c| c - half_width).collect();
    let total = nodes.pow(d as u32);
    let stride = |a: usize| nodes.pow(a as u32);
    let coords = |idx: usize, out: &mut [f64]| {
        for a in 0..d {
            out[a] = lower[a] + ((idx / stride(a)) % nodes) as f64 * h;
        }
    };
    let interior = |idx: usize| (0..d).all(|a| {
        let i = (idx / stride(a)) % nodes;
        i > 0 && i < nodes - 1
    });

    let mut point = vec![0.0; d];
    let mut u: Vec<f64> = (0..total)
        .map(|idx| {
            coords(idx, &mut point);
            problem.phi(&point)
        })
        .collect();
    let mut sol = GridSolution { dim: d, lower: lower.clone(), spacing: h, nodes, values: Vec::new() };
    if horizon == 0.0 {
        sol.values = u;
        return Ok(sol);
    }
    let dt = horizon / settings.time_steps as f64;

    // coefficients are frozen in time; tabulate drift and covariance
    let mut drift = vec![0.0; total * d];
    let mut cov = vec![0.0; total * d * d];
    let mut cfl: f64 = 0.0;
    for idx in 0..total {
        coords(idx, &mut point);
        problem.drift.apply(&point, &mut drift[idx * d..(idx + 1) * d]);
        cov[idx * d * d..(idx + 1) * d * d].copy_from_slice(&problem.diffusion.covariance(&point));
        if interior(idx) {
            let adv: f64 = drift[idx * d..(idx + 1) * d].iter().map(|m| m.abs()).sum::<f64>() / h;
            let mixed = if d == 2 { cov[idx * 4 + 1].abs() / (h * h) } else { 0.0 };
            cfl = cfl.max(dt * (adv + 2.0 * mixed));
        }
    }
    if cfl > 1.0 {
        return Err(Error::Oracle(format!("explicit terms violate the CFL bound ({cfl:.3})")));
    }

    let mut next = u.clone();
    let mut grad = vec![0.0; d];
    let mut line = vec![0.0; nodes - 2];
    let (mut lo, mut di, mut up) = (vec![0.0; nodes - 2], vec![0.0; nodes - 2], vec![0.0; nodes - 2]);
    let mut scratch = Vec::new();
    for step in 0..settings.time_steps {
        for idx in 0..total {
            if !interior(idx) {
                continue;
            }
            coords(idx, &mut point);
            for a in 0..d {
                grad[a] = (u[idx + stride(a)] - u[idx - stride(a)]) / (2.0 * h);
            }
            let mut rate = problem.nonlinearity.eval(&point, u[idx], &grad);
            for a in 0..d {
                rate += drift[idx * d + a] * grad[a];
            }
            if d == 2 {
                let (s0, s1) = (stride(0), stride(1));
                let cross = (u[idx + s0 + s1] - u[idx + s0 - s1] - u[idx - s0 + s1] + u[idx - s0 - s1]) / (4.0 * h * h);
                // 1/2 (a_01 + a_10) u_01
                rate += cov[idx * 4 + 1] * cross;
            }
            next[idx] = u[idx] + dt * rate;
        }
        std::mem::swap(&mut u, &mut next);
        for a in 0..d {
            let s = stride(a);
            // lines along axis a through interior nodes of the other axis
            let starts: Vec<usize> =
                if d == 1 { vec![0] } else { (1..nodes - 1).map(|o| o * stride(1 - a)).collect() };
            for start in starts {
                for k in 1..nodes - 1 {
                    let idx = start + k * s;
                    let c = 0.5 * cov[idx * d * d + a * d + a] * dt / (h * h);
                    lo[k - 1] = -c;
                    di[k - 1] = 1.0 + 2.0 * c;
                    up[k - 1] = -c;
                    line[k - 1] = u[idx];
                }
                line[0] -= lo[0] * u[start];
                line[nodes - 3] -= up[nodes - 3] * u[start + (nodes - 1) * s];
                solve_tridiagonal(&lo, &di, &up, &mut line, &mut scratch);
                for k in 1..nodes - 1 {
                    u[start + k * s] = line[k - 1];
                }
            }
        }
        next.copy_from_slice(&u);
        if u.iter().any(|v| !v.is_finite() || v.abs() > BLOW_UP) {
            return Err(Error::Oracle(format!("grid solution blew up at step {}", step + 1)));
        }
    }
    sol.values = u;
    Ok(sol)
}
