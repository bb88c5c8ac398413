use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::network::{Mode, Network, NetworkArchitecture, ParameterVector, Snapshot};
use crate::oracles::{grid_fd_reference, radial_fd_reference, GridSettings, RadialSettings};
use crate::problems::{preset_constant, preset_semilinear_heat};
use crate::rng::{tag, Stream};
use crate::sde::TimeGrid;
use crate::training::{adam_step, solve, AdamState, TrainingSchedule};

/// Outcome of one quick check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CheckOutcome {
    pub fn line(&self) -> String {
        format!(
            "{} {} ({}; {:.2}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.seconds
        )
    }
}

type Check = fn() -> Result<(bool, String)>;

const CHECKS: &[(&str, Check)] = &[
    ("parameter gradient vs finite differences", gradient_check),
    ("Adam first-step identity", adam_check),
    ("batch-norm normalization", batch_norm_check),
    ("reversed grid identity", grid_check),
    ("solve determinism", determinism_check),
    ("snapshot round-trip", snapshot_check),
    ("radial vs grid oracle at d=1", oracle_check),
];

/// Runs the fast property tier. Errors inside a check count as failures.
pub fn run_quick_checks() -> Vec<CheckOutcome> {
    CHECKS
        .iter()
        .map(|&(name, check)| {
            let start = Instant::now();
            let (passed, detail) = match check() {
                Ok(r) => r,
                Err(e) => (false, format!("error: {e}")),
            };
            CheckOutcome { name, passed, detail, seconds: start.elapsed().as_secs_f64() }
        })
        .collect()
}

fn normal_matrix(rows: usize, cols: usize, stream: Stream) -> Array2<f64> {
    let mut rng = stream.rng();
    Array2::from_shape_fn((rows, cols), |_| rng.sample(StandardNormal))
}

/// Central differences of the train-mode loss `sum_j c_j V(x_j)` against the
/// analytic gradient, with logistic activations so every point is kink-free.
fn gradient_check() -> Result<(bool, String)> {
    let arch = NetworkArchitecture::standard(4, 3, 6).with_activation(crate::network::Activation::Logistic);
    let net = Network::new(arch)?;
    let root = Stream::root(11).child(tag::TEST);
    let params = net.init_params(root.child(0));
    let x = normal_matrix(8, 4, root.child(1));
    let weights: Array1<f64> = normal_matrix(8, 1, root.child(2)).column(0).to_owned();
    let bn = net.fresh_batch_norm();
    let objective = |p: &ParameterVector| -> Result<f64> {
        Ok(net.forward(p, &bn, x.view(), Mode::Train)?.values.dot(&weights))
    };
    let out = net.forward(&params, &bn, x.view(), Mode::Train)?;
    let grad = net.grad_params(&params, &out.cache, weights.view())?;
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for i in 0..params.len() {
        let mut plus = params.clone();
        plus.as_mut_slice()[i] += h;
        let mut minus = params.clone();
        minus.as_mut_slice()[i] -= h;
        let fd = (objective(&plus)? - objective(&minus)?) / (2.0 * h);
        worst = worst.max((fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-2));
    }
    Ok((worst <= 1e-5, format!("max relative deviation {worst:.2e}")))
}

fn adam_check() -> Result<(bool, String)> {
    let g = [0.37, -2.5, 1e-3];
    let rate = 0.1;
    let mut state = AdamState::new(3);
    let mut p = ParameterVector::zeros(3);
    adam_step(&mut state, &mut p, &g, rate, 0.9, 0.999, 1e-8);
    let worst = p
        .as_slice()
        .iter()
        .zip(g)
        .map(|(&v, gi)| (v + rate * gi / (gi.abs() + 1e-8)).abs())
        .fold(0.0, f64::max);
    Ok((worst <= 1e-12, format!("max deviation {worst:.2e}")))
}

/// Input normalization in train mode yields per-feature mean 0 and variance 1.
fn batch_norm_check() -> Result<(bool, String)> {
    let arch = NetworkArchitecture::standard(3, 2, 4);
    let net = Network::new(arch)?;
    let mut params = ParameterVector::zeros(net.layout().len);
    // identity-like first layer: weight 1 on feature 0, output weight 1
    let layout = net.layout().clone();
    {
        let p = params.as_mut_slice();
        for block in &layout.batch_norm {
            p[block.scale()].fill(1.0);
        }
        p[layout.affine[0].weights()][0] = 1.0;
        p[layout.affine[1].weights()][0] = 1.0;
    }
    let mut x = normal_matrix(64, 3, Stream::root(5).child(tag::TEST));
    x.column_mut(0).mapv_inplace(|v| 3.0 * v + 7.0);
    let out = net.forward(&params, &net.fresh_batch_norm(), x.view(), Mode::Train)?;
    let (mean, std) = crate::harness::report::mean_std(out.values.as_slice().expect("contiguous"));
    let ok = mean.abs() < 1e-10 && (std - 1.0).abs() < 1e-10;
    Ok((ok, format!("output mean {mean:.1e}, std {std:.12}")))
}

fn grid_check() -> Result<(bool, String)> {
    let grid = TimeGrid::uniform(0.3, 7)?;
    let t = grid.forward_times();
    let worst = (0..=7)
        .map(|n| (grid.reversed_times()[n] - (0.3 - t[7 - n])).abs())
        .fold(0.0, f64::max);
    let ends = grid.reversed_times()[0] == 0.0 && grid.reversed_times()[7] == 0.3;
    Ok((worst == 0.0 && ends, format!("max deviation {worst:.1e}")))
}

fn tiny_solve(seed: u64) -> Result<Vec<u8>> {
    let preset = preset_semilinear_heat(3, 3);
    let mut schedule = TrainingSchedule::constant(20, 32, 0.01, crate::training::Optimizer::adam());
    schedule.bn_recalibration = 4;
    let arch = NetworkArchitecture::standard(3, 3, 8);
    let grid = TimeGrid::uniform(preset.horizon, preset.time_steps)?;
    let res = solve(&preset.problem, &grid, &arch, &schedule, Stream::root(seed))?;
    Ok(res.snapshots.iter().flat_map(|s| s.to_bytes()).collect())
}

fn determinism_check() -> Result<(bool, String)> {
    let a = tiny_solve(3)?;
    let b = tiny_solve(3)?;
    let c = tiny_solve(4)?;
    Ok((a == b && a != c, format!("{} snapshot bytes compared", a.len())))
}

fn snapshot_check() -> Result<(bool, String)> {
    let preset = preset_constant(4, 0.5);
    let net = Network::new(preset.architecture.clone())?;
    let params = net.init_params(Stream::root(8));
    let x = normal_matrix(16, 4, Stream::root(9));
    let mut bn = net.fresh_batch_norm();
    for _ in 0..3 {
        bn = net.forward(&params, &bn, x.view(), Mode::Train)?.bn;
    }
    let snap = Snapshot::new(net, params, bn)?;
    let back = Snapshot::from_bytes(&snap.to_bytes())?;
    let same = snap.predict(x.view())? == back.predict(x.view())?;
    Ok((same && back.to_bytes() == snap.to_bytes(), "bit-exact".into()))
}

fn oracle_check() -> Result<(bool, String)> {
    let p = preset_semilinear_heat(1, 1).problem;
    let radial = radial_fd_reference(&p, 0.3, RadialSettings { radial_points: 1000, time_steps: 400, ..Default::default() })?;
    let grid = grid_fd_reference(&p, 0.3, &[0.0], GridSettings { intervals: 400, time_steps: 1000, half_width: None })?;
    let gap = (radial - grid).abs();
    Ok((gap <= 1e-3, format!("radial {radial:.6}, grid {grid:.6}, gap {gap:.1e}")))
}
