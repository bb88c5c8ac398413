use crate::error::{Error, Result};
use crate::problems::PdeProblem;

use super::tridiagonal::solve_tridiagonal;

const BLOW_UP: f64 = 1e8;
/// Doubling `r_max` may move the answer by at most this much.
pub const BOUNDARY_TOLERANCE: f64 = 1e-5;

/// Discretization of the radial solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialSettings {
    /// Outer radius; `None` picks eight standard deviations of `|sigma W_T|`.
    pub r_max: Option<f64>,
    pub radial_points: usize,
    pub time_steps: usize,
    /// Re-solve on `[0, 2 r_max]` and fail if the value moves.
    pub check_boundary: bool,
}

impl Default for RadialSettings {
    fn default() -> Self {
        RadialSettings { r_max: None, radial_points: 4000, time_steps: 2000, check_boundary: true }
    }
}

/// Value at the origin of a radially symmetric problem,
/// `w_t = (s^2/2)(w_rr + (d-1) w_r / r) + f(w)`, `w(0, r) = phi(r)`.
///
/// Crank-Nicolson diffusion (a few backward Euler start-up steps) with
/// Strang-split explicit midpoint reaction half steps; `w(t, r_max)` is held
/// at `phi(r_max)`.
pub fn radial_fd_reference(problem: &PdeProblem, horizon: f64, settings: RadialSettings) -> Result<f64> {
    let s = problem.radial_diffusion_scale().ok_or_else(|| {
        Error::Oracle(format!("problem '{}' is not radially reducible", problem.label))
    })?;
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon {horizon}")));
    }
    if settings.radial_points < 4 || settings.time_steps == 0 {
        return Err(Error::InvalidArgument("radial grid too coarse".into()));
    }
    let d = problem.dim;
    let spread = (s * s * horizon * d as f64).sqrt().max(s * horizon.sqrt());
    let r_max = settings.r_max.unwrap_or(8.0 * spread + 1.0);
    if !(r_max > 0.0) {
        return Err(Error::InvalidArgument(format!("r_max {r_max}")));
    }
    let value = solve(problem, s, horizon, r_max, settings.radial_points, settings.time_steps)?;
    if settings.check_boundary {
        let wide = solve(problem, s, horizon, 2.0 * r_max, 2 * settings.radial_points, settings.time_steps)?;
        if (wide - value).abs() > BOUNDARY_TOLERANCE {
            return Err(Error::Oracle(format!(
                "boundary sensitivity {:.3e} exceeds {BOUNDARY_TOLERANCE:e} at r_max = {r_max}",
                (wide - value).abs()
            )));
        }
    }
    Ok(value)
}

fn solve(problem: &PdeProblem, s: f64, horizon: f64, r_max: f64, points: usize, steps: usize) -> Result<f64> {
    let d = problem.dim;
    let dr = r_max / points as f64;
    let c = 0.5 * s * s;
    let mut point = vec![0.0; d];
    let mut phi_at = |r: f64| {
        point[0] = r;
        problem.phi(&point)
    };
    // unknowns at r_i, i < points; r_points is the Dirichlet node
    let mut w: Vec<f64> = (0..points).map(|i| phi_at(i as f64 * dr)).collect();
    let boundary = phi_at(r_max);
    if horizon == 0.0 {
        return Ok(w[0]);
    }
    let dt = horizon / steps as f64;

    // L w_i = lo_i w_{i-1} + di_i w_i + up_i w_{i+1}
    let mut lo = vec![0.0; points];
    let mut di = vec![0.0; points];
    let mut up = vec![0.0; points];
    di[0] = -2.0 * d as f64 * c / (dr * dr);
    up[0] = 2.0 * d as f64 * c / (dr * dr);
    for i in 1..points {
        let adv = (d as f64 - 1.0) / (i as f64 * dr) / (2.0 * dr);
        lo[i] = c * (1.0 / (dr * dr) - adv);
        di[i] = -2.0 * c / (dr * dr);
        up[i] = c * (1.0 / (dr * dr) + adv);
    }

    let zero = vec![0.0; d];
    let f = |y: f64| problem.nonlinearity.eval(&zero, y, &zero);
    let react = |w: &mut [f64], h: f64| {
        for v in w.iter_mut() {
            let mid = *v + 0.5 * h * f(*v);
            *v += h * f(mid);
        }
    };

    let startup = 4.min(steps);
    let mut a_lo = vec![0.0; points];
    let mut a_di = vec![0.0; points];
    let mut a_up = vec![0.0; points];
    let mut rhs = vec![0.0; points];
    let mut scratch = Vec::new();
    for step in 0..steps {
        react(&mut w, 0.5 * dt);
        // theta = 1 for start-up steps, 1/2 afterwards
        let theta = if step < startup { 1.0 } else { 0.5 };
        let explicit = (1.0 - theta) * dt;
        for i in 0..points {
            let left = if i > 0 { w[i - 1] } else { 0.0 };
            let right = if i + 1 < points { w[i + 1] } else { boundary };
            rhs[i] = w[i] + explicit * (lo[i] * left + di[i] * w[i] + up[i] * right);
            a_lo[i] = -theta * dt * lo[i];
            a_di[i] = 1.0 - theta * dt * di[i];
            a_up[i] = -theta * dt * up[i];
        }
        rhs[points - 1] += theta * dt * up[points - 1] * boundary;
        solve_tridiagonal(&a_lo, &a_di, &a_up, &mut rhs, &mut scratch);
        w.copy_from_slice(&rhs);
        react(&mut w, 0.5 * dt);
        if w.iter().any(|v| !v.is_finite() || v.abs() > BLOW_UP) {
            return Err(Error::Oracle(format!("radial solution blew up at step {}", step + 1)));
        }
    }
    Ok(w[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{preset_constant, preset_heat_moment, preset_semilinear_heat};

    #[test]
    fn zero_horizon_returns_phi() {
        let p = preset_semilinear_heat(10, 1).problem;
        let v = radial_fd_reference(&p, 0.0, RadialSettings::default()).unwrap();
        assert_eq!(v, 0.5);
    }

    #[test]
    fn constant_data_stays_constant() {
        let p = preset_constant(7, 0.8).problem;
        let v = radial_fd_reference(&p, 0.3, RadialSettings { radial_points: 400, time_steps: 100, ..Default::default() })
            .unwrap();
        assert!((v - 0.8).abs() < 1e-12);
    }

    #[test]
    fn quadratic_moment() {
        // u(T, 0) = 2 d T; the discrete operator is exact on r^2.
        for d in [1, 3, 10] {
            let p = preset_heat_moment(d, 0.25, 1).problem;
            let v = radial_fd_reference(&p, 0.25, RadialSettings { radial_points: 800, time_steps: 200, check_boundary: false, r_max: Some(40.0) })
                .unwrap();
            assert!((v - 2.0 * d as f64 * 0.25).abs() < 1e-4, "d={d}: {v}");
        }
    }

    #[test]
    fn pure_reaction_in_one_point() {
        // phi constant: w solves the ODE w' = 1 - w.
        let mut p = preset_constant(3, 0.0).problem;
        p.nonlinearity = crate::problems::Nonlinearity::of_value(|y| 1.0 - y);
        let v = radial_fd_reference(&p, 0.5, RadialSettings { radial_points: 50, time_steps: 500, check_boundary: false, r_max: Some(5.0) })
            .unwrap();
        assert!((v - (1.0 - (-0.5f64).exp())).abs() < 1e-6);
    }

    #[test]
    fn rejects_non_radial_problems() {
        let p = crate::problems::preset_allen_cahn(2).problem;
        assert!(radial_fd_reference(&p, 0.3, RadialSettings::default()).is_err());
    }

    #[test]
    fn detects_blow_up() {
        let mut p = preset_constant(2, 1.0).problem;
        p.nonlinearity = crate::problems::Nonlinearity::of_value(|y| y * y * y);
        let s = RadialSettings { radial_points: 20, time_steps: 200, check_boundary: false, r_max: Some(3.0) };
        assert!(radial_fd_reference(&p, 1.0, s).is_err());
    }
}
