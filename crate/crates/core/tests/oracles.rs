use deep_splitting::oracles::{
    cole_hopf_reference, grid_fd_reference, hjb_reference, linear_gbm_reference, linearized_bs_reference,
    radial_fd_reference, GridSettings, RadialSettings,
};
use deep_splitting::problems::{
    preset_allen_cahn, preset_heat_moment, preset_semilinear_heat, preset_sine_gordon, BlackScholesParams, PresetId,
    preset_by_id,
};
use deep_splitting::rng::Stream;

const PUBLISHED_TOLERANCE: f64 = 5e-4;

#[test]
fn heat_d100_matches_published_value() {
    let v = radial_fd_reference(&preset_semilinear_heat(100, 20).problem, 0.3, RadialSettings::default()).unwrap();
    assert!((v - 0.31674).abs() < PUBLISHED_TOLERANCE, "{v}");
}

#[test]
fn sine_gordon_d10_matches_published_value() {
    let v = radial_fd_reference(&preset_sine_gordon(10).problem, 0.3, RadialSettings::default()).unwrap();
    assert!((v - 0.3229470).abs() < PUBLISHED_TOLERANCE, "{v}");
}

#[test]
fn radial_and_grid_solvers_agree_in_one_dimension() {
    for id in [PresetId::Heat, PresetId::SineGordon, PresetId::HeatMoment] {
        let problem = preset_by_id(id, 1).problem;
        let radial = radial_fd_reference(&problem, 0.3, RadialSettings::default()).unwrap();
        let grid = grid_fd_reference(&problem, 0.3, &[0.0], GridSettings::default()).unwrap();
        assert!((radial - grid).abs() < 1e-3, "{id}: radial {radial}, grid {grid}");
    }
}

#[test]
fn radial_solver_converges_at_second_order() {
    let problem = preset_semilinear_heat(10, 20).problem;
    let solve = |points, steps| {
        let s = RadialSettings { r_max: Some(12.0), radial_points: points, time_steps: steps, check_boundary: false };
        radial_fd_reference(&problem, 0.3, s).unwrap()
    };
    let (a, b, c) = (solve(250, 125), solve(500, 250), solve(1000, 500));
    let ratio = (a - b).abs() / (b - c).abs();
    assert!(ratio >= 2.0, "Richardson ratio {ratio}: {a} {b} {c}");
}

#[test]
fn short_horizon_limit() {
    // u(t, 0) = phi(0) + t (Lap phi(0) + f(phi(0))) + O(t^2) with
    // phi = 5 / (10 + 2 r^2) = 1/2 - r^2 / 10 + ..., so Lap phi(0) = -d / 5.
    let d = 4;
    let problem = preset_semilinear_heat(d, 1).problem;
    let t = 1e-3;
    let v = radial_fd_reference(&problem, t, RadialSettings::default()).unwrap();
    let lap = -(d as f64) / 5.0;
    let f0 = (1.0 - 0.25) / (1.0 + 0.25);
    let expected = 0.5 + t * (lap + f0);
    assert!((v - expected).abs() < 1e-5, "{v} vs {expected}");
    assert_eq!(radial_fd_reference(&problem, 0.0, RadialSettings::default()).unwrap(), 0.5);
}

#[test]
fn heat_moment_closed_form() {
    for d in [1, 5, 10] {
        let problem = preset_heat_moment(d, 0.3, 4).problem;
        let v = radial_fd_reference(&problem, 0.3, RadialSettings::default()).unwrap();
        assert!((v - 0.6 * d as f64).abs() < 1e-4 * d as f64, "d={d}: {v}");
    }
}

#[test]
fn cole_hopf_linear_payoff() {
    // phi(x) = a . x: u(T, x) = a . x - |a|^2 T
    let a = [0.5, -1.0, 0.25];
    let phi = |y: &[f64]| y.iter().zip(&a).map(|(u, v)| u * v).sum::<f64>();
    let x = [1.0, 2.0, -1.0];
    let t = 0.4;
    let est = cole_hopf_reference(&phi, t, &x, 400_000, Stream::root(2)).unwrap();
    let a2: f64 = a.iter().map(|v| v * v).sum();
    let exact = phi(&x) - a2 * t;
    assert!((est.value - exact).abs() < 5.0 * est.std_error, "{} vs {exact} (se {})", est.value, est.std_error);
}

#[test]
fn cole_hopf_quadratic_payoff() {
    // phi(x) = |x|^2: u(T, x) = (d/2) ln(1 + 4T) + |x|^2 / (1 + 4T)
    let phi = |y: &[f64]| y.iter().map(|v| v * v).sum::<f64>();
    let x = [0.3, -0.2];
    let t = 0.25;
    let est = cole_hopf_reference(&phi, t, &x, 400_000, Stream::root(3)).unwrap();
    let exact = (1.0 + 4.0 * t).ln() + phi(&x) / (1.0 + 4.0 * t);
    assert!((est.value - exact).abs() < 5.0 * est.std_error, "{} vs {exact}", est.value);
}

#[test]
fn cole_hopf_is_deterministic() {
    let a = hjb_reference(0.5, &[0.0; 3], 70_000, Stream::root(4)).unwrap();
    let b = hjb_reference(0.5, &[0.0; 3], 70_000, Stream::root(4)).unwrap();
    assert_eq!(a, b);
    assert!(hjb_reference(0.5, &[0.0; 3], 999, Stream::root(4)).is_err());
}

#[test]
fn hjb_reference_matches_published_value() {
    let est = hjb_reference(1.0 / 3.0, &[0.0; 10], 2_000_000, Stream::root(5)).unwrap();
    assert!((est.value - 1.56006).abs() < 5.0 * est.std_error + 1e-4, "{} (se {})", est.value, est.std_error);
}

#[test]
fn one_dimensional_black_scholes_closed_form() {
    // d = 1: exp(-rate T) x exp(mu T)
    let p = BlackScholesParams::default();
    let (gamma, t, x) = (0.2, 1.0 / 3.0, 50.0);
    let est = linearized_bs_reference(&p, gamma, t, &[x], 500_000, Stream::root(6)).unwrap();
    let exact = (-p.linear_rate(gamma) * t).exp() * x * (p.mu_bar * t).exp();
    assert!((est.value - exact).abs() < 5.0 * est.std_error, "{} vs {exact}", est.value);
}

#[test]
fn gbm_second_moment() {
    // E[X_T^2] = x^2 exp((2 mu + sigma^2) T), discounted
    let p = BlackScholesParams::default();
    let (gamma, t, x) = (0.1, 0.5, 2.0);
    let est = linear_gbm_reference(&p, gamma, t, &[x], 500_000, Stream::root(7), |y| y[0] * y[0]).unwrap();
    let exact = (-p.linear_rate(gamma) * t).exp() * x * x * ((2.0 * p.mu_bar + p.sigma_bar * p.sigma_bar) * t).exp();
    assert!((est.value - exact).abs() < 5.0 * est.std_error, "{} vs {exact}", est.value);
}

#[test]
fn allen_cahn_in_one_dimension_stays_at_zero() {
    // phi = arctan(x) is odd and f is odd, so u(t, 0) = 0.
    let v = grid_fd_reference(&preset_allen_cahn(1).problem, 0.3, &[0.0], GridSettings::default()).unwrap();
    assert!(v.abs() < 1e-10, "{v}");
}

#[test]
fn allen_cahn_in_two_dimensions_is_positive_and_bounded() {
    let settings = GridSettings { half_width: None, intervals: 200, time_steps: 1000 };
    let v = grid_fd_reference(&preset_allen_cahn(2).problem, 0.3, &[0.0, 0.0], settings).unwrap();
    // max of two symmetric coordinates has positive mean; |u| < 1 by comparison
    assert!(v > 0.0 && v < 1.0, "{v}");
}

#[test]
fn oracles_reject_unsuitable_problems() {
    assert!(radial_fd_reference(&preset_allen_cahn(3).problem, 0.3, RadialSettings::default()).is_err());
    assert!(grid_fd_reference(&preset_allen_cahn(3).problem, 0.3, &[0.0; 3], GridSettings::default()).is_err());
}
