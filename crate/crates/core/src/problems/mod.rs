//! Semilinear parabolic problems
//!
//! `du/dt = f(x, u, grad u) + <mu(x), grad u> + 1/2 Tr(sigma sigma^T Hess u)`,
//! `u(0, x) = phi(x)`, together with the benchmark presets.

mod presets;

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::Uniform;

pub use presets::{
    paper_reference, preset_allen_cahn, preset_black_scholes, preset_black_scholes_linearized,
    preset_by_id, preset_constant, preset_heat_moment, preset_hjb, preset_semilinear_heat,
    preset_sine_gordon, BenchmarkPreset, BlackScholesParams, PresetId,
};

pub type VectorMap = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
pub type ScalarField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Drift `mu`.
#[derive(Clone)]
pub enum Drift {
    Zero,
    /// `mu(x) = a x`.
    Linear(f64),
    Custom(VectorMap),
}

impl Drift {
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Drift::Zero => out.fill(0.0),
            Drift::Linear(a) => {
                for (o, &xi) in out.iter_mut().zip(x) {
                    *o = a * xi;
                }
            }
            Drift::Custom(f) => f(x, out),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Drift::Zero)
    }
}

/// Diffusion given as its action `(x, w) -> sigma(x) w`.
#[derive(Clone)]
pub enum Diffusion {
    /// `sigma(x) = s Id`.
    ScaledIdentity(f64),
    /// `sigma(x) = s diag(x)`.
    Geometric(f64),
    Custom(Arc<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>),
}

impl Diffusion {
    pub fn apply(&self, x: &[f64], w: &[f64], out: &mut [f64]) {
        match self {
            Diffusion::ScaledIdentity(s) => {
                for (o, &wi) in out.iter_mut().zip(w) {
                    *o = s * wi;
                }
            }
            Diffusion::Geometric(s) => {
                for ((o, &xi), &wi) in out.iter_mut().zip(x).zip(w) {
                    *o = s * xi * wi;
                }
            }
            Diffusion::Custom(f) => f(x, w, out),
        }
    }

    /// `sigma(x) sigma(x)^T`, row-major `d x d`, assembled from the action on unit vectors.
    pub fn covariance(&self, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        let mut cols = vec![0.0; d * d];
        let mut e = vec![0.0; d];
        for k in 0..d {
            e[k] = 1.0;
            self.apply(x, &e, &mut cols[k * d..(k + 1) * d]);
            e[k] = 0.0;
        }
        let mut a = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                a[i * d + j] = (0..d).map(|k| cols[k * d + i] * cols[k * d + j]).sum();
            }
        }
        a
    }
}

/// Nonlinearity `f(x, y, z)` with flags describing which arguments it reads.
#[derive(Clone)]
pub struct Nonlinearity {
    func: Arc<dyn Fn(&[f64], f64, &[f64]) -> f64 + Send + Sync>,
    pub uses_x: bool,
    pub uses_z: bool,
}

impl Nonlinearity {
    pub fn new(
        func: impl Fn(&[f64], f64, &[f64]) -> f64 + Send + Sync + 'static,
        uses_x: bool,
        uses_z: bool,
    ) -> Self {
        Nonlinearity { func: Arc::new(func), uses_x, uses_z }
    }

    /// Depends on `u` only.
    pub fn of_value(func: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(move |_, y, _| func(y), false, false)
    }

    pub fn zero() -> Self {
        Self::of_value(|_| 0.0)
    }

    #[inline]
    pub fn eval(&self, x: &[f64], y: f64, z: &[f64]) -> f64 {
        (self.func)(x, y, z)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StartDistribution {
    Point(Vec<f64>),
    /// Uniform on the box `center +- half_width` in every coordinate.
    UniformBox { center: Vec<f64>, half_width: f64 },
}

impl StartDistribution {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            StartDistribution::Point(p) => out.copy_from_slice(p),
            StartDistribution::UniformBox { center, half_width } => {
                let u = Uniform::new_inclusive(-half_width, *half_width).expect("finite width");
                for (o, c) in out.iter_mut().zip(center) {
                    *o = c + rng.sample(u);
                }
            }
        }
    }

    /// Point used for evaluating solutions: the atom or the box center.
    pub fn center(&self) -> &[f64] {
        match self {
            StartDistribution::Point(p) => p,
            StartDistribution::UniformBox { center, .. } => center,
        }
    }

    pub fn consumes_randomness(&self) -> bool {
        !matches!(self, StartDistribution::Point(_))
    }
}

#[derive(Clone)]
pub struct PdeProblem {
    pub label: String,
    pub dim: usize,
    pub drift: Drift,
    pub diffusion: Diffusion,
    pub nonlinearity: Nonlinearity,
    pub initial: ScalarField,
    pub initial_grad: VectorMap,
    pub start: StartDistribution,
    /// `phi(x)` depends on `|x|` only.
    pub radial_initial: bool,
}

impl fmt::Debug for PdeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PdeProblem")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("start", &self.start)
            .finish_non_exhaustive()
    }
}

impl PdeProblem {
    pub fn phi(&self, x: &[f64]) -> f64 {
        (self.initial)(x)
    }

    pub fn grad_phi(&self, x: &[f64], out: &mut [f64]) {
        (self.initial_grad)(x, out)
    }

    /// Scale `s` when `sigma = s Id`, zero drift, radial `phi` and a
    /// nonlinearity of `u` alone: the conditions for the radial reduction.
    pub fn radial_diffusion_scale(&self) -> Option<f64> {
        match (&self.drift, &self.diffusion) {
            (Drift::Zero, Diffusion::ScaledIdentity(s))
                if self.radial_initial && !self.nonlinearity.uses_x && !self.nonlinearity.uses_z =>
            {
                Some(*s)
            }
            _ => None,
        }
    }
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariance_of_geometric_diffusion() {
        let a = Diffusion::Geometric(0.2).covariance(&[1.0, 3.0]);
        let expected = [0.04, 0.0, 0.0, 0.36];
        for (x, y) in a.iter().zip(expected) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn start_point_is_copied() {
        let mut out = [0.0; 2];
        let mut rng = crate::rng::Stream::root(0).rng();
        StartDistribution::Point(vec![50.0, 50.0]).sample(&mut rng, &mut out);
        assert_eq!(out, [50.0, 50.0]);
        let b = StartDistribution::UniformBox { center: vec![1.0, 2.0], half_width: 0.5 };
        b.sample(&mut rng, &mut out);
        assert!((out[0] - 1.0).abs() <= 0.5 && (out[1] - 2.0).abs() <= 0.5);
    }
}
