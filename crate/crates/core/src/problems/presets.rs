use std::f64::consts::SQRT_2;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{norm, Diffusion, Drift, Nonlinearity, PdeProblem, StartDistribution};
use crate::error::{Error, Result};
use crate::network::NetworkArchitecture;
use crate::training::{Optimizer, PiecewiseRate, TrainingSchedule};

pub const BATCH_SIZE: usize = 256;
/// Number of affine maps: input -> two hidden layers -> output.
pub const DEPTH: usize = 3;
/// Cap on `|grad phi|` for the HJB initial condition near the origin.
pub const HJB_GRAD_CLAMP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PresetId {
    Hjb,
    BlackScholes,
    BlackScholesLinear,
    AllenCahn,
    Heat,
    SineGordon,
    /// `f = 0`, `phi = c`: the solution is the constant `c`.
    Constant,
    /// `f = 0`, `phi = |x|^2`: `u(t, x) = |x|^2 + 2 d t`.
    HeatMoment,
}

impl PresetId {
    pub const ALL: [PresetId; 8] = [
        PresetId::Hjb,
        PresetId::BlackScholes,
        PresetId::BlackScholesLinear,
        PresetId::AllenCahn,
        PresetId::Heat,
        PresetId::SineGordon,
        PresetId::Constant,
        PresetId::HeatMoment,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetId::Hjb => "hjb",
            PresetId::BlackScholes => "bs",
            PresetId::BlackScholesLinear => "bs-linear",
            PresetId::AllenCahn => "allen-cahn",
            PresetId::Heat => "heat",
            PresetId::SineGordon => "sine-gordon",
            PresetId::Constant => "constant",
            PresetId::HeatMoment => "heat-moment",
        }
    }
}

impl TryFrom<String> for PresetId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PresetId> for String {
    fn from(id: PresetId) -> String {
        id.as_str().to_string()
    }
}

impl fmt::Display for PresetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PresetId::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset '{s}'")))
    }
}

/// A problem with the time grid, training schedule and network used for it.
#[derive(Debug, Clone)]
pub struct BenchmarkPreset {
    pub id: PresetId,
    pub problem: PdeProblem,
    pub horizon: f64,
    pub time_steps: usize,
    pub rate: PiecewiseRate,
    pub schedule: TrainingSchedule,
    pub architecture: NetworkArchitecture,
    pub reference: Option<f64>,
}

impl BenchmarkPreset {
    fn assemble(
        id: PresetId,
        problem: PdeProblem,
        horizon: f64,
        time_steps: usize,
        rate: Vec<(usize, f64)>,
        width: usize,
    ) -> Self {
        let rate = PiecewiseRate::new(rate).expect("preset schedules are valid");
        let schedule = TrainingSchedule::piecewise(&rate, BATCH_SIZE, Optimizer::adam());
        let architecture = NetworkArchitecture::standard(problem.dim, DEPTH, width);
        let reference = paper_reference(id, problem.dim, horizon);
        BenchmarkPreset { id, problem, horizon, time_steps, rate, schedule, architecture, reference }
    }

    /// Replaces the step count, rescaling the learning-rate breakpoints.
    pub fn with_steps(mut self, steps: usize) -> Self {
        self.set_rate(self.rate.rescaled(steps));
        self
    }

    pub fn set_rate(&mut self, rate: PiecewiseRate) {
        let opt = self.schedule.optimizer;
        let init = self.schedule.init_policy;
        let full = self.schedule.full_paths;
        let recal = self.schedule.bn_recalibration;
        let batch = self.schedule.batch_sizes.first().copied().unwrap_or(BATCH_SIZE);
        self.schedule = TrainingSchedule::piecewise(&rate, batch, opt);
        self.schedule.init_policy = init;
        self.schedule.full_paths = full;
        self.schedule.bn_recalibration = recal;
        self.rate = rate;
    }

    pub fn set_batch_size(&mut self, batch: usize) {
        self.schedule.batch_sizes.fill(batch);
    }

    pub fn start_point(&self) -> &[f64] {
        self.problem.start.center()
    }
}

fn standard_rate() -> Vec<(usize, f64)> {
    vec![(300, 1e-1), (400, 1e-2), (500, 1e-3)]
}

fn brownian(label: &str, d: usize, f: Nonlinearity, phi: super::ScalarField, grad: super::VectorMap, radial: bool) -> PdeProblem {
    PdeProblem {
        label: label.to_string(),
        dim: d,
        drift: Drift::Zero,
        diffusion: Diffusion::ScaledIdentity(SQRT_2),
        nonlinearity: f,
        initial: phi,
        initial_grad: grad,
        start: StartDistribution::Point(vec![0.0; d]),
        radial_initial: radial,
    }
}

/// Index of the first minimal (or maximal) coordinate.
fn arg_extreme(x: &[f64], max: bool) -> usize {
    let mut best = 0;
    for (i, &v) in x.iter().enumerate().skip(1) {
        if (max && v > x[best]) || (!max && v < x[best]) {
            best = i;
        }
    }
    best
}

/// `du/dt = Lap u - |grad u|^2`, `phi(x) = |x|^{1/2}`.
pub fn preset_hjb(d: usize, horizon: f64, time_steps: usize) -> BenchmarkPreset {
    let f = Nonlinearity::new(|_, _, z| -z.iter().map(|v| v * v).sum::<f64>(), false, true);
    let phi = Arc::new(|x: &[f64]| norm(x).sqrt());
    let grad = Arc::new(|x: &[f64], out: &mut [f64]| {
        let r = norm(x);
        if r == 0.0 {
            out.fill(0.0);
            return;
        }
        // |grad phi| = 1 / (2 sqrt(r))
        let scale = (1.0 / (2.0 * r.powf(1.5))).min(HJB_GRAD_CLAMP / r);
        for (o, &xi) in out.iter_mut().zip(x) {
            *o = scale * xi;
        }
    });
    let problem = brownian("hjb", d, f, phi, grad, true);
    let (steps_total, rate) = if d == 10_000 {
        (600, vec![(400, 1e-1), (500, 1e-2), (600, 1e-3)])
    } else {
        (500, standard_rate())
    };
    debug_assert_eq!(rate.last().unwrap().0, steps_total);
    BenchmarkPreset::assemble(PresetId::Hjb, problem, horizon, time_steps, rate, d + 10)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlackScholesParams {
    pub delta: f64,
    pub rate: f64,
    pub gamma_high: f64,
    pub gamma_low: f64,
    pub v_high: f64,
    pub v_low: f64,
    pub mu_bar: f64,
    pub sigma_bar: f64,
}

impl Default for BlackScholesParams {
    fn default() -> Self {
        BlackScholesParams {
            delta: 2.0 / 3.0,
            rate: 0.02,
            gamma_high: 0.2,
            gamma_low: 0.02,
            v_high: 50.0,
            v_low: 70.0,
            mu_bar: 0.02,
            sigma_bar: 0.2,
        }
    }
}

impl BlackScholesParams {
    /// Default-risk intensity as a function of the price `y`.
    pub fn intensity(&self, y: f64) -> f64 {
        let slope = if self.gamma_high == self.gamma_low {
            0.0
        } else {
            (self.gamma_high - self.gamma_low) / (self.v_high - self.v_low)
        };
        self.gamma_high.min(self.gamma_low.max(slope * (y - self.v_high) + self.gamma_high))
    }

    pub fn nonlinearity(&self, y: f64) -> f64 {
        -(1.0 - self.delta) * self.intensity(y) * y - self.rate * y
    }

    /// Discount rate when the intensity is the constant `gamma`.
    pub fn linear_rate(&self, gamma: f64) -> f64 {
        (1.0 - self.delta) * gamma + self.rate
    }
}

fn black_scholes_problem(label: &str, d: usize, params: BlackScholesParams) -> PdeProblem {
    let f = Nonlinearity::of_value(move |y| params.nonlinearity(y));
    PdeProblem {
        label: label.to_string(),
        dim: d,
        drift: Drift::Linear(params.mu_bar),
        diffusion: Diffusion::Geometric(params.sigma_bar),
        nonlinearity: f,
        initial: Arc::new(|x: &[f64]| x.iter().copied().fold(f64::INFINITY, f64::min)),
        initial_grad: Arc::new(|x: &[f64], out: &mut [f64]| {
            out.fill(0.0);
            out[arg_extreme(x, false)] = 1.0;
        }),
        start: StartDistribution::Point(vec![50.0; d]),
        radial_initial: false,
    }
}

fn black_scholes_preset(id: PresetId, problem: PdeProblem) -> BenchmarkPreset {
    let d = problem.dim;
    let rate = if d <= 100 {
        vec![(2500, 1e-1), (2750, 1e-2), (3000, 1e-3)]
    } else {
        vec![(1500, 1e-1), (1750, 1e-2), (2000, 1e-3)]
    };
    let width = d + 10 + if d <= 100 { 40 } else { 0 };
    BenchmarkPreset::assemble(id, problem, 1.0 / 3.0, 96, rate, width)
}

/// Pricing with default risk: geometric Brownian motion, `phi(x) = min_i x_i`.
pub fn preset_black_scholes(d: usize) -> BenchmarkPreset {
    black_scholes_preset(PresetId::BlackScholes, black_scholes_problem("bs", d, BlackScholesParams::default()))
}

/// Black-Scholes preset with constant intensity `gamma`, which makes `f` linear.
pub fn preset_black_scholes_linearized(d: usize, gamma: f64) -> BenchmarkPreset {
    let params = BlackScholesParams { gamma_high: gamma, gamma_low: gamma, ..Default::default() };
    let mut preset = black_scholes_preset(
        PresetId::BlackScholesLinear,
        black_scholes_problem("bs-linear", d, params),
    );
    preset.reference = None;
    preset
}

/// `du/dt = Lap u + u - u^3`, `phi(x) = arctan(max_i x_i)`.
pub fn preset_allen_cahn(d: usize) -> BenchmarkPreset {
    let f = Nonlinearity::of_value(|y| y - y * y * y);
    let phi = Arc::new(|x: &[f64]| x.iter().copied().fold(f64::NEG_INFINITY, f64::max).atan());
    let grad = Arc::new(|x: &[f64], out: &mut [f64]| {
        out.fill(0.0);
        let i = arg_extreme(x, true);
        out[i] = 1.0 / (1.0 + x[i] * x[i]);
    });
    let problem = brownian("allen-cahn", d, f, phi, grad, false);
    BenchmarkPreset::assemble(PresetId::AllenCahn, problem, 0.3, 10, standard_rate(), d + 10)
}

fn bump_phi(x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    5.0 / (10.0 + 2.0 * r2)
}

fn bump_grad(x: &[f64], out: &mut [f64]) {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let denom = (10.0 + 2.0 * r2) * (10.0 + 2.0 * r2);
    for (o, &xi) in out.iter_mut().zip(x) {
        *o = -20.0 * xi / denom;
    }
}

/// `du/dt = Lap u + (1 - u^2)/(1 + u^2)`, `phi(x) = 5/(10 + 2|x|^2)`.
pub fn preset_semilinear_heat(d: usize, time_steps: usize) -> BenchmarkPreset {
    let f = Nonlinearity::of_value(|y| (1.0 - y * y) / (1.0 + y * y));
    let problem = brownian("heat", d, f, Arc::new(bump_phi), Arc::new(bump_grad), true);
    BenchmarkPreset::assemble(PresetId::Heat, problem, 0.3, time_steps, standard_rate(), d + 10)
}

/// `du/dt = Lap u + sin(u)`, same initial condition as the heat preset.
pub fn preset_sine_gordon(d: usize) -> BenchmarkPreset {
    let f = Nonlinearity::of_value(f64::sin);
    let problem = brownian("sine-gordon", d, f, Arc::new(bump_phi), Arc::new(bump_grad), true);
    let rate = vec![(250, 1e-1), (500, 1e-2), (750, 1e-3), (1000, 1e-4)];
    BenchmarkPreset::assemble(PresetId::SineGordon, problem, 0.3, 20, rate, d + 50)
}

/// Sanity problem whose exact solution is the constant `c`.
pub fn preset_constant(d: usize, c: f64) -> BenchmarkPreset {
    let problem = brownian(
        "constant",
        d,
        Nonlinearity::zero(),
        Arc::new(move |_: &[f64]| c),
        Arc::new(|_: &[f64], out: &mut [f64]| out.fill(0.0)),
        true,
    );
    let mut preset = BenchmarkPreset::assemble(
        PresetId::Constant,
        problem,
        0.3,
        2,
        vec![(150, 1e-1), (200, 1e-2)],
        d + 10,
    );
    preset.reference = Some(c);
    preset
}

/// Linear heat equation with `phi(x) = |x|^2`; `u(T, 0) = 2 d T`.
pub fn preset_heat_moment(d: usize, horizon: f64, time_steps: usize) -> BenchmarkPreset {
    let problem = brownian(
        "heat-moment",
        d,
        Nonlinearity::zero(),
        Arc::new(|x: &[f64]| x.iter().map(|v| v * v).sum()),
        Arc::new(|x: &[f64], out: &mut [f64]| {
            for (o, &xi) in out.iter_mut().zip(x) {
                *o = 2.0 * xi;
            }
        }),
        true,
    );
    let mut preset = BenchmarkPreset::assemble(
        PresetId::HeatMoment,
        problem,
        horizon,
        time_steps,
        standard_rate(),
        d + 10,
    );
    preset.reference = Some(2.0 * d as f64 * horizon);
    preset
}

/// Builds a preset from its id with the benchmark defaults for `d`.
pub fn preset_by_id(id: PresetId, d: usize) -> BenchmarkPreset {
    match id {
        PresetId::Hjb => preset_hjb(d, 1.0 / 3.0, 8),
        PresetId::BlackScholes => preset_black_scholes(d),
        PresetId::BlackScholesLinear => preset_black_scholes_linearized(d, 0.2),
        PresetId::AllenCahn => preset_allen_cahn(d),
        PresetId::Heat => preset_semilinear_heat(d, 20),
        PresetId::SineGordon => preset_sine_gordon(d),
        PresetId::Constant => preset_constant(d, 1.0),
        PresetId::HeatMoment => preset_heat_moment(d, 0.3, 4),
    }
}

const HJB_TABLE: &[(usize, [f64; 3])] = &[
    (10, [1.56006, 1.85150, 2.04629]),
    (50, [2.38654, 2.83647, 3.13788]),
    (100, [2.84696, 3.38450, 3.74471]),
    (200, [3.39129, 4.03217, 4.46172]),
    (300, [3.75530, 4.46514, 4.94105]),
    (500, [4.26900, 5.07618, 5.61735]),
    (1000, [5.07876, 6.03933, 6.68335]),
    (5000, [7.59733, 9.03466, 9.99835]),
    (10000, [9.03535, 10.74478, 11.89099]),
];

const BS_TABLE: &[(usize, f64)] = &[
    (10, 40.7611353),
    (50, 37.5217732),
    (100, 36.4084035),
    (200, 35.4127342),
    (300, 34.8747946),
    (500, 34.2357988),
    (1000, 33.4358163),
    (5000, 31.7906594),
    (10000, 31.1569116),
];

const AC_TABLE: &[(usize, f64)] = &[
    (10, 0.89060),
    (50, 1.01830),
    (100, 1.04510),
    (200, 1.06220),
    (300, 1.07217),
    (500, 1.08124),
    (1000, 1.09100),
    (5000, 1.10691),
    (10000, 1.11402),
];

const HEAT_TABLE: &[(usize, f64)] = &[
    (10, 0.47006),
    (50, 0.34425),
    (100, 0.31674),
    (200, 0.30091),
    (300, 0.29534),
    (500, 0.29095),
    (1000, 0.28753),
    (5000, 0.28469),
    (10000, 0.28433),
];

const SG_TABLE: &[(usize, f64)] = &[
    (10, 0.3229470),
    (50, 0.0993633),
    (100, 0.0528368),
    (200, 0.0272410),
    (300, 0.0183617),
    (500, 0.0111071),
    (1000, 0.0055896),
    (5000, 0.0011231),
    (10000, 0.0005621),
];

/// Published reference value of `u(T, start point)` for a benchmark, if tabulated.
pub fn paper_reference(id: PresetId, d: usize, horizon: f64) -> Option<f64> {
    let same = |a: f64, b: f64| (a - b).abs() < 1e-9;
    let lookup = |table: &[(usize, f64)], t: f64| {
        if same(horizon, t) {
            table.iter().find(|r| r.0 == d).map(|r| r.1)
        } else {
            None
        }
    };
    match id {
        PresetId::Hjb => {
            let column = [1.0 / 3.0, 2.0 / 3.0, 1.0].iter().position(|&t| same(t, horizon))?;
            HJB_TABLE.iter().find(|r| r.0 == d).map(|r| r.1[column])
        }
        PresetId::BlackScholes => lookup(BS_TABLE, 1.0 / 3.0),
        PresetId::AllenCahn => lookup(AC_TABLE, 0.3),
        PresetId::Heat => lookup(HEAT_TABLE, 0.3),
        PresetId::SineGordon => lookup(SG_TABLE, 0.3),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f0(p: &PdeProblem, y: f64, z: &[f64]) -> f64 {
        p.nonlinearity.eval(&vec![0.0; p.dim], y, z)
    }

    #[test]
    fn hjb_definitions() {
        let p = preset_hjb(10, 1.0 / 3.0, 8);
        assert_eq!(p.problem.phi(&[0.0; 10]), 0.0);
        let mut z = vec![0.0; 10];
        z[0] = 1.0;
        assert_eq!(f0(&p.problem, 0.0, &z), -1.0);
        assert_eq!(p.reference, Some(1.56006));
        assert_eq!(p.architecture.hidden_width, 20);
        assert_eq!(p.schedule.steps(), 500);
        let mut g = vec![1.0; 10];
        p.problem.grad_phi(&[0.0; 10], &mut g);
        assert!(g.iter().all(|&v| v == 0.0));
        let mut tiny = vec![0.0; 10];
        tiny[3] = 1e-30;
        p.problem.grad_phi(&tiny, &mut g);
        assert!((norm(&g) - HJB_GRAD_CLAMP).abs() < 1e-6 * HJB_GRAD_CLAMP);
        assert_eq!(preset_hjb(10_000, 1.0, 24).schedule.steps(), 600);
        assert_eq!(preset_hjb(10, 1.0, 24).reference, Some(2.04629));
        assert_eq!(preset_hjb(100, 1.0, 24).reference, Some(3.74471));
    }

    #[test]
    fn black_scholes_definitions() {
        let p = preset_black_scholes(10);
        assert_eq!(p.problem.phi(&[50.0; 10]), 50.0);
        // intensity at y = 50 is capped at gamma_high = 0.2
        let expected = -(1.0 / 3.0) * 0.2 * 50.0 - 0.02 * 50.0;
        assert!((f0(&p.problem, 50.0, &[0.0; 10]) - expected).abs() < 1e-12);
        assert!((expected + 13.0 / 3.0).abs() < 1e-12);
        assert_eq!(p.reference, Some(40.7611353));
        assert_eq!(p.architecture.hidden_width, 60);
        assert_eq!(p.schedule.steps(), 3000);
        assert_eq!(p.time_steps, 96);
        assert_eq!(preset_black_scholes(200).architecture.hidden_width, 210);
        assert_eq!(preset_black_scholes(200).schedule.steps(), 2000);
        let mut g = vec![0.0; 3];
        p.problem.grad_phi(&[2.0, 1.0, 1.0], &mut g);
        assert_eq!(g, vec![0.0, 1.0, 0.0]);
        let params = BlackScholesParams::default();
        assert_eq!(params.intensity(80.0), 0.02);
        assert!((params.intensity(60.0) - 0.11).abs() < 1e-12);
    }

    #[test]
    fn allen_cahn_definitions() {
        let p = preset_allen_cahn(10);
        assert_eq!(f0(&p.problem, 2.0, &[0.0; 10]), -6.0);
        assert_eq!(p.problem.phi(&[0.0; 10]), 0.0);
        let mut g = vec![0.0; 10];
        p.problem.grad_phi(&[0.0; 10], &mut g);
        assert_eq!(g[0], 1.0);
        assert!(g[1..].iter().all(|&v| v == 0.0));
        for y in [1.5, -1.5, 3.0, -7.0] {
            assert!(y * f0(&p.problem, y, &[0.0; 10]) < 0.0);
        }
        assert_eq!(p.reference, Some(0.89060));
        assert_eq!(p.time_steps, 10);
    }

    #[test]
    fn heat_and_sine_gordon_definitions() {
        let p = preset_semilinear_heat(100, 20);
        assert_eq!(p.problem.phi(&[0.0; 100]), 0.5);
        assert_eq!(f0(&p.problem, 0.0, &[]), 1.0);
        assert_eq!(f0(&p.problem, 1.0, &[]), 0.0);
        assert_eq!(f0(&p.problem, 0.7, &[]), f0(&p.problem, -0.7, &[]));
        assert_eq!(p.reference, Some(0.31674));
        assert_eq!(preset_semilinear_heat(10, 20).reference, Some(0.47006));
        let s = preset_sine_gordon(10);
        assert_eq!(f0(&s.problem, 0.0, &[]), 0.0);
        assert_eq!(s.reference, Some(0.3229470));
        assert_eq!(preset_sine_gordon(100).reference, Some(0.0528368));
        assert_eq!(s.architecture.hidden_width, 60);
        assert_eq!(s.schedule.steps(), 1000);
        assert_eq!(s.schedule.learning_rates[999], 1e-4);
        assert_eq!(s.schedule.learning_rates[250], 1e-1);
        assert_eq!(s.schedule.learning_rates[251], 1e-2);
    }

    #[test]
    fn ids_parse() {
        for id in PresetId::ALL {
            assert_eq!(id.as_str().parse::<PresetId>().unwrap(), id);
        }
        assert!("unknown".parse::<PresetId>().is_err());
    }
}
