use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::TimeGrid;
use crate::error::{Error, Result};
use crate::problems::{Diffusion, PdeProblem};
use crate::rng::Stream;

/// Euler-Maruyama paths of `dY = mu(Y) dt + sigma(Y) dB` on the reversed grid.
///
/// `states` is stored path-major: path `j`, grid index `k`, coordinate `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBatch {
    dim: usize,
    batch: usize,
    last_index: usize,
    states: Vec<f64>,
    stream_id: u64,
}

impl PathBatch {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn batch_size(&self) -> usize {
        self.batch
    }

    /// Largest simulated grid index.
    pub fn last_index(&self) -> usize {
        self.last_index
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn state(&self, path: usize, k: usize) -> &[f64] {
        let start = (path * (self.last_index + 1) + k) * self.dim;
        &self.states[start..start + self.dim]
    }

    /// `J x d` matrix of all paths at grid index `k`.
    pub fn marginal(&self, k: usize) -> Array2<f64> {
        assert!(k <= self.last_index, "grid index {k} not simulated");
        let mut out = Array2::zeros((self.batch, self.dim));
        for (j, mut row) in out.rows_mut().into_iter().enumerate() {
            row.as_slice_mut().expect("standard layout").copy_from_slice(self.state(j, k));
        }
        out
    }
}

/// Simulates `batch` independent paths on indices `0..=last_index` of the
/// reversed grid (`None` means the whole grid). Path `j` draws its start
/// point and all of its increments, in grid order, from `stream.child(j)`, so
/// a truncated simulation reproduces the prefix of a full one exactly.
pub fn simulate_paths(
    problem: &PdeProblem,
    grid: &TimeGrid,
    batch: usize,
    stream: Stream,
    last_index: Option<usize>,
) -> Result<PathBatch> {
    let dim = problem.dim;
    let last = last_index.unwrap_or(grid.steps());
    if batch == 0 {
        return Err(Error::InvalidArgument("path batch must be nonempty".into()));
    }
    if last > grid.steps() {
        return Err(Error::InvalidArgument(format!(
            "grid index {last} beyond the {} grid steps",
            grid.steps()
        )));
    }
    let per_path = (last + 1) * dim;
    let mut states = vec![0.0; batch * per_path];
    let steps: Vec<(f64, f64)> = (0..last)
        .map(|k| {
            let dt = grid.reversed_step(k);
            (dt, dt.sqrt())
        })
        .collect();

    let outcomes: Vec<Result<()>> = states
        .par_chunks_mut(per_path)
        .enumerate()
        .map(|(j, path)| simulate_one(problem, &steps, stream.child(j as u64), path, j))
        .collect();
    outcomes.into_iter().collect::<Result<Vec<()>>>()?;
    Ok(PathBatch { dim, batch, last_index: last, states, stream_id: stream.id() })
}

fn simulate_one(
    problem: &PdeProblem,
    steps: &[(f64, f64)],
    stream: Stream,
    path: &mut [f64],
    j: usize,
) -> Result<()> {
    let dim = problem.dim;
    let mut rng = stream.rng();
    problem.start.sample(&mut rng, &mut path[..dim]);
    if !path[..dim].iter().all(|v| v.is_finite()) {
        return Err(Error::NonFiniteState { path: j, step: 0 });
    }
    let mut noise = vec![0.0; dim];
    let mut drift = vec![0.0; dim];
    let mut shock = vec![0.0; dim];
    for (k, &(dt, sqrt_dt)) in steps.iter().enumerate() {
        let (head, tail) = path.split_at_mut((k + 1) * dim);
        let y = &head[k * dim..];
        let next = &mut tail[..dim];
        for w in noise.iter_mut() {
            *w = sqrt_dt * rng.sample::<f64, _>(StandardNormal);
        }
        match &problem.diffusion {
            Diffusion::ScaledIdentity(s) if problem.drift.is_zero() => {
                for ((o, &yi), &w) in next.iter_mut().zip(y).zip(&noise) {
                    *o = yi + s * w;
                }
            }
            diffusion => {
                problem.drift.apply(y, &mut drift);
                diffusion.apply(y, &noise, &mut shock);
                for i in 0..dim {
                    next[i] = y[i] + drift[i] * dt + shock[i];
                }
            }
        }
        if !next.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteState { path: j, step: k + 1 });
        }
    }
    Ok(())
}
