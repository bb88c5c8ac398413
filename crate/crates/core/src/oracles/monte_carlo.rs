use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::problems::BlackScholesParams;
use crate::rng::Stream;

/// Samples per independently seeded chunk.
const CHUNK: usize = 1 << 15;
pub const MIN_SAMPLES: usize = 1000;

/// Monte Carlo value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < MIN_SAMPLES {
        return Err(Error::Oracle(format!(
            "need at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    Ok(())
}

fn chunk_sizes(samples: usize) -> Vec<usize> {
    let full = samples / CHUNK;
    let mut sizes = vec![CHUNK; full];
    if samples % CHUNK != 0 {
        sizes.push(samples % CHUNK);
    }
    sizes
}

/// Shifted moments of `exp(a_i)`: `(shift, sum exp(a - shift), sum exp(2(a - shift)))`.
#[derive(Debug, Clone, Copy)]
struct ExpMoments {
    shift: f64,
    s1: f64,
    s2: f64,
}

impl ExpMoments {
    fn empty() -> Self {
        ExpMoments { shift: f64::NEG_INFINITY, s1: 0.0, s2: 0.0 }
    }

    fn merge(self, other: Self) -> Self {
        if other.shift == f64::NEG_INFINITY {
            return self;
        }
        if self.shift == f64::NEG_INFINITY {
            return other;
        }
        let shift = self.shift.max(other.shift);
        let (a, b) = ((self.shift - shift).exp(), (other.shift - shift).exp());
        ExpMoments { shift, s1: self.s1 * a + other.s1 * b, s2: self.s2 * a * a + other.s2 * b * b }
    }

    fn from_exponents(a: &[f64]) -> Self {
        let shift = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (mut s1, mut s2) = (0.0, 0.0);
        for &v in a {
            let e = (v - shift).exp();
            s1 += e;
            s2 += e * e;
        }
        ExpMoments { shift, s1, s2 }
    }
}

/// `-ln E[exp(-phi(x + sqrt(2T) Z))]`, the solution at `(T, x)` of
/// `du/dt = Lap u - |grad u|^2` with `u(0, .) = phi`, by the logarithmic
/// transformation to the heat equation.
pub fn cole_hopf_reference(
    phi: &(dyn Fn(&[f64]) -> f64 + Sync),
    horizon: f64,
    x: &[f64],
    samples: usize,
    stream: Stream,
) -> Result<Estimate> {
    check_samples(samples)?;
    let d = x.len();
    let scale = (2.0 * horizon).sqrt();
    let chunks: Vec<ExpMoments> = chunk_sizes(samples)
        .into_par_iter()
        .enumerate()
        .map(|(c, size)| {
            let mut rng = stream.child(c as u64).rng();
            let mut point = vec![0.0; d];
            let exponents: Vec<f64> = (0..size)
                .map(|_| {
                    for (p, &xi) in point.iter_mut().zip(x) {
                        *p = xi + scale * rng.sample::<f64, _>(StandardNormal);
                    }
                    -phi(&point)
                })
                .collect();
            ExpMoments::from_exponents(&exponents)
        })
        .collect();
    let total = chunks.into_iter().fold(ExpMoments::empty(), ExpMoments::merge);
    let n = samples as f64;
    let mean = total.s1 / n;
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(Error::Oracle("degenerate exponential mean".into()));
    }
    let var = (total.s2 / n - mean * mean).max(0.0);
    // delta method: se(ln m) = se(m) / m
    let std_error = (var / n).sqrt() / mean;
    Ok(Estimate { value: -(total.shift + mean.ln()), std_error, samples })
}

/// Reference for the HJB benchmark with `phi(x) = |x|^{1/2}`.
pub fn hjb_reference(horizon: f64, x: &[f64], samples: usize, stream: Stream) -> Result<Estimate> {
    let phi = |y: &[f64]| y.iter().map(|v| v * v).sum::<f64>().sqrt().sqrt();
    cole_hopf_reference(&phi, horizon, x, samples, stream)
}

/// Price of the Black-Scholes benchmark with constant default intensity
/// `gamma`: `exp(-((1 - delta) gamma + R) T) E[min_i X^i_T]` with exact
/// geometric Brownian motion samples.
pub fn linearized_bs_reference(
    params: &BlackScholesParams,
    gamma: f64,
    horizon: f64,
    x: &[f64],
    samples: usize,
    stream: Stream,
) -> Result<Estimate> {
    linear_gbm_reference(params, gamma, horizon, x, samples, stream, |y| {
        y.iter().copied().fold(f64::INFINITY, f64::min)
    })
}

/// As [`linearized_bs_reference`] with an arbitrary payoff.
pub fn linear_gbm_reference(
    params: &BlackScholesParams,
    gamma: f64,
    horizon: f64,
    x: &[f64],
    samples: usize,
    stream: Stream,
    payoff: impl Fn(&[f64]) -> f64 + Sync,
) -> Result<Estimate> {
    check_samples(samples)?;
    let d = x.len();
    let drift = (params.mu_bar - 0.5 * params.sigma_bar * params.sigma_bar) * horizon;
    let vol = params.sigma_bar * horizon.sqrt();
    let sums: Vec<(f64, f64)> = chunk_sizes(samples)
        .into_par_iter()
        .enumerate()
        .map(|(c, size)| {
            let mut rng = stream.child(c as u64).rng();
            let mut point = vec![0.0; d];
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..size {
                for (p, &xi) in point.iter_mut().zip(x) {
                    *p = xi * (drift + vol * rng.sample::<f64, _>(StandardNormal)).exp();
                }
                let v = payoff(&point);
                s1 += v;
                s2 += v * v;
            }
            (s1, s2)
        })
        .collect();
    let (s1, s2) = sums.into_iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = samples as f64;
    let mean = s1 / n;
    let var = (s2 / n - mean * mean).max(0.0);
    let discount = (-params.linear_rate(gamma) * horizon).exp();
    Ok(Estimate { value: discount * mean, std_error: discount * (var / n).sqrt(), samples })
}
