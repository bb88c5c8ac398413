use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::optim::{adam_step, sgd_step, AdamState};
use super::schedule::{InitPolicy, Optimizer, TrainingSchedule};
use crate::error::{Error, Result};
use crate::network::{BatchNormState, Mode, Network, NetworkArchitecture, ParameterVector, Snapshot};
use crate::problems::PdeProblem;
use crate::rng::{tag, Stream};
use crate::sde::{simulate_paths, PathBatch, TimeGrid};

/// Losses above this abort training.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

/// The approximation of `v(t_{n-1}, .)` that step `n` regresses against.
#[derive(Debug, Clone, Copy)]
pub enum Previous<'a> {
    /// `n = 1`: the initial condition and its weak gradient.
    Initial,
    /// A frozen trained network, evaluated in inference mode.
    Network(&'a Snapshot),
}

/// Pairwise summation in index order.
pub(crate) fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// `V_{n-1}(x) + dt f(x, V_{n-1}(x), grad V_{n-1}(x))` for every row `x`.
pub fn regression_targets(
    problem: &PdeProblem,
    prev: Previous<'_>,
    x: ArrayView2<f64>,
    dt: f64,
) -> Result<Array1<f64>> {
    let f = &problem.nonlinearity;
    let rows = x.nrows();
    let (values, grads): (Array1<f64>, Option<Array2<f64>>) = match prev {
        Previous::Initial => {
            let values = x.rows().into_iter().map(|r| problem.phi(r.as_slice().expect("row"))).collect();
            let grads = f.uses_z.then(|| {
                let mut g = Array2::zeros((rows, problem.dim));
                for (xr, mut gr) in x.rows().into_iter().zip(g.rows_mut()) {
                    problem.grad_phi(xr.as_slice().expect("row"), gr.as_slice_mut().expect("row"));
                }
                g
            });
            (values, grads)
        }
        Previous::Network(snap) => {
            if f.uses_z {
                let (v, g) = snap.network().value_and_grad_x(&snap.params, &snap.bn, x)?;
                (v, Some(g))
            } else {
                (snap.predict(x)?, None)
            }
        }
    };
    let zeros = vec![0.0; problem.dim];
    let targets = (0..rows)
        .map(|j| {
            let xj = x.row(j);
            let z = grads.as_ref().map(|g| g.row(j));
            let z = z.as_ref().map_or(zeros.as_slice(), |z| z.as_slice().expect("row"));
            values[j] + dt * f.eval(xj.as_slice().expect("row"), values[j], z)
        })
        .collect();
    Ok(targets)
}

#[derive(Debug, Clone)]
pub struct LossAndGrad {
    pub loss: f64,
    pub grad: Vec<f64>,
    pub bn: BatchNormState,
}

/// Mean squared residual of the train-mode network against fixed targets,
/// and its parameter gradient.
pub fn regression_loss_and_grad(
    net: &Network,
    params: &ParameterVector,
    bn: &BatchNormState,
    inputs: ArrayView2<f64>,
    targets: &Array1<f64>,
) -> Result<LossAndGrad> {
    let out = net.forward(params, bn, inputs, Mode::Train)?;
    let residual = &out.values - targets;
    if let Some(path) = residual.iter().position(|r| !r.is_finite()) {
        return Err(Error::NonFiniteLoss { n: 0, m: 0, path });
    }
    let batch = residual.len() as f64;
    let squares: Vec<f64> = residual.iter().map(|r| r * r).collect();
    let loss = pairwise_sum(&squares) / batch;
    let upstream = residual.mapv(|r| 2.0 * r / batch);
    let grad = net.grad_params(params, &out.cache, upstream.view())?;
    Ok(LossAndGrad { loss, grad, bn: out.bn })
}

/// Loss of time step `n` on one path batch: regress `V_n` at `Y_{N-n}` onto
/// the targets built from `prev` at `Y_{N-n+1}`.
#[allow(clippy::too_many_arguments)]
pub fn loss_and_grad(
    n: usize,
    net: &Network,
    params: &ParameterVector,
    bn: &BatchNormState,
    prev: Previous<'_>,
    paths: &PathBatch,
    grid: &TimeGrid,
    problem: &PdeProblem,
) -> Result<LossAndGrad> {
    let steps = grid.steps();
    if n == 0 || n > steps {
        return Err(Error::InvalidArgument(format!("time step {n} outside 1..={steps}")));
    }
    let inputs = paths.marginal(steps - n);
    let next = paths.marginal(steps - n + 1);
    let targets = regression_targets(problem, prev, next.view(), grid.forward_step(n))?;
    regression_loss_and_grad(net, params, bn, inputs.view(), &targets).map_err(|e| match e {
        Error::NonFiniteLoss { path, .. } => Error::NonFiniteLoss { n, m: 0, path },
        e => e,
    })
}

#[derive(Debug, Clone)]
pub struct TimestepOutput {
    pub snapshot: Snapshot,
    pub loss_trace: Vec<f64>,
}

/// Trains `V_n` for `M` gradient steps, each on a freshly simulated batch.
pub fn train_timestep(
    n: usize,
    problem: &PdeProblem,
    grid: &TimeGrid,
    net: &Network,
    schedule: &TrainingSchedule,
    prev: Previous<'_>,
    root: Stream,
) -> Result<TimestepOutput> {
    let steps = grid.steps();
    let mut params = match (schedule.init_policy, prev) {
        (InitPolicy::WarmStart, Previous::Network(snap)) => snap.params.clone(),
        _ => net.init_params(root.path(&[tag::INIT, n as u64])),
    };
    let mut bn = net.fresh_batch_norm();
    let mut adam = AdamState::new(params.len());
    let last_index = if schedule.full_paths { None } else { Some(steps - n + 1) };
    let mut trace = Vec::with_capacity(schedule.steps());

    for m in 0..schedule.steps() {
        let stream = root.path(&[tag::TRAIN_PATHS, n as u64, m as u64]);
        let paths = simulate_paths(problem, grid, schedule.batch_sizes[m], stream, last_index)?;
        let step = loss_and_grad(n, net, &params, &bn, prev, &paths, grid, problem).map_err(|e| match e {
            Error::NonFiniteLoss { path, .. } => Error::NonFiniteLoss { n, m, path },
            e => e,
        })?;
        if step.loss > DIVERGENCE_THRESHOLD {
            return Err(Error::Diverged { n, m, loss: step.loss });
        }
        trace.push(step.loss);
        bn = step.bn;
        let rate = schedule.learning_rates[m];
        match schedule.optimizer {
            Optimizer::Sgd => sgd_step(&mut params, &step.grad, rate),
            Optimizer::Adam { beta1, beta2, epsilon } => {
                adam_step(&mut adam, &mut params, &step.grad, rate, beta1, beta2, epsilon)
            }
        }
    }
    if schedule.steps() > 0 && schedule.bn_recalibration > 0 && !bn.is_empty() {
        let batch = schedule.batch_sizes.last().copied().unwrap_or(2);
        bn = recalibrate_batch_norm(n, problem, grid, net, &params, batch, schedule.bn_recalibration, root)?;
    }
    Ok(TimestepOutput { snapshot: Snapshot::new(net.clone(), params, bn)?, loss_trace: trace })
}

/// Re-estimates the batch-norm statistics of `V_n` at fixed parameters from
/// `batches` fresh batches of its inputs `Y_{N-n}`.
///
/// The running averages collected during training mix statistics of
/// earlier parameter values; starting from a fresh state, the bias-corrected
/// read-out averages over the recalibration batches only.
#[allow(clippy::too_many_arguments)]
pub fn recalibrate_batch_norm(
    n: usize,
    problem: &PdeProblem,
    grid: &TimeGrid,
    net: &Network,
    params: &ParameterVector,
    batch: usize,
    batches: usize,
    root: Stream,
) -> Result<BatchNormState> {
    let index = grid.steps() - n;
    let mut bn = net.fresh_batch_norm();
    for b in 0..batches {
        let stream = root.path(&[tag::BN_RECALIBRATION, n as u64, b as u64]);
        let paths = simulate_paths(problem, grid, batch, stream, Some(index))?;
        let inputs = paths.marginal(index);
        bn = net.forward(params, &bn, inputs.view(), Mode::Train)?.bn;
    }
    Ok(bn)
}

/// Trained approximations `V_1, ..., V_N` of `u(t_1, .), ..., u(t_N, .)`.
#[derive(Debug, Clone)]
pub struct SolverResult {
    pub problem: PdeProblem,
    pub grid: TimeGrid,
    pub snapshots: Vec<Snapshot>,
    pub loss_traces: Vec<Vec<f64>>,
    pub root: Stream,
}

impl SolverResult {
    /// Approximation of `u(t_n, x)` at the rows of `x`; `n = 0` is `phi` itself.
    pub fn evaluate(&self, n: usize, x: ArrayView2<f64>) -> Result<Array1<f64>> {
        if x.ncols() != self.problem.dim {
            return Err(Error::DimensionMismatch { expected: self.problem.dim, got: x.ncols() });
        }
        match n {
            0 => Ok(x
                .axis_iter(Axis(0))
                .map(|r| self.problem.phi(&r.to_vec()))
                .collect()),
            n if n <= self.snapshots.len() => self.snapshots[n - 1].predict(x),
            n => Err(Error::InvalidArgument(format!(
                "time step {n} beyond the {} trained steps",
                self.snapshots.len()
            ))),
        }
    }

    /// Approximation of `u(T, x)` at a single point.
    pub fn evaluate_final_at(&self, x: &[f64]) -> Result<f64> {
        let row = ArrayView2::from_shape((1, x.len()), x)
            .map_err(|_| Error::DimensionMismatch { expected: self.problem.dim, got: x.len() })?;
        Ok(self.evaluate(self.snapshots.len(), row)?[0])
    }

    /// Writes `loss_<n>.csv`-style rows `(step, loss)` for time step `n`.
    pub fn loss_trace_csv(&self, n: usize) -> String {
        let mut out = String::from("step,loss\n");
        for (m, l) in self.loss_traces[n - 1].iter().enumerate() {
            out.push_str(&format!("{m},{l}\n"));
        }
        out
    }
}

/// Runs the full recursion `n = 1, ..., N`.
pub fn solve(
    problem: &PdeProblem,
    grid: &TimeGrid,
    architecture: &NetworkArchitecture,
    schedule: &TrainingSchedule,
    root: Stream,
) -> Result<SolverResult> {
    schedule.validate()?;
    if architecture.input_dim != problem.dim {
        return Err(Error::DimensionMismatch { expected: problem.dim, got: architecture.input_dim });
    }
    let net = Network::new(architecture.clone())?;
    let mut snapshots: Vec<Snapshot> = Vec::with_capacity(grid.steps());
    let mut loss_traces = Vec::with_capacity(grid.steps());
    for n in 1..=grid.steps() {
        let prev = snapshots.last().map_or(Previous::Initial, Previous::Network);
        let out = train_timestep(n, problem, grid, &net, schedule, prev, root)
            .map_err(|e| Error::AtStep { n, source: Box::new(e) })?;
        snapshots.push(out.snapshot);
        loss_traces.push(out.loss_trace);
    }
    Ok(SolverResult { problem: problem.clone(), grid: grid.clone(), snapshots, loss_traces, root })
}
