use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use rand_distr::Uniform;

use super::Network;
use crate::rng::Stream;

static NEXT_GENERATION: AtomicU64 = AtomicU64::new(1);

fn next_generation() -> u64 {
    NEXT_GENERATION.fetch_add(1, Ordering::Relaxed)
}

/// Flat parameter vector. Every mutation gets a fresh generation number so
/// forward caches can detect that they were computed for other parameters.
#[derive(Debug, Clone)]
pub struct ParameterVector {
    data: Vec<f64>,
    generation: u64,
}

impl PartialEq for ParameterVector {
    fn eq(&self, other: &Self) -> bool {
        self.data == other.data
    }
}

impl ParameterVector {
    pub fn from_vec(data: Vec<f64>) -> Self {
        ParameterVector { data, generation: next_generation() }
    }

    pub fn zeros(len: usize) -> Self {
        Self::from_vec(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    /// Mutable access; invalidates outstanding forward caches.
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        self.generation = next_generation();
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}

impl Network {
    /// Xavier-uniform weights, zero biases, unit batch-norm scales and zero shifts.
    pub fn init_params(&self, stream: Stream) -> ParameterVector {
        let layout = self.layout();
        let mut data = vec![0.0; layout.len];
        let mut rng = stream.rng();
        for block in &layout.affine {
            let bound = (6.0 / (block.fan_in + block.fan_out) as f64).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
            for w in &mut data[block.weights()] {
                *w = rng.sample(dist);
            }
        }
        for block in &layout.batch_norm {
            data[block.scale()].fill(1.0);
        }
        ParameterVector::from_vec(data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NetworkArchitecture;

    #[test]
    fn init_conventions() {
        let net = Network::new(NetworkArchitecture::standard(6, 3, 8)).unwrap();
        let p = net.init_params(Stream::root(3));
        let layout = net.layout();
        for b in &layout.affine {
            assert!(p.as_slice()[b.bias()].iter().all(|&v| v == 0.0));
            let bound = (6.0 / (b.fan_in + b.fan_out) as f64).sqrt();
            assert!(p.as_slice()[b.weights()].iter().all(|&v| v.abs() <= bound));
        }
        for b in &layout.batch_norm {
            assert!(p.as_slice()[b.scale()].iter().all(|&v| v == 1.0));
            assert!(p.as_slice()[b.shift()].iter().all(|&v| v == 0.0));
        }
        assert_eq!(p, net.init_params(Stream::root(3)));
        assert_ne!(p, net.init_params(Stream::root(4)));
    }

    #[test]
    fn mutation_bumps_generation() {
        let mut p = ParameterVector::zeros(3);
        let g = p.generation();
        p.as_mut_slice()[0] = 1.0;
        assert_ne!(g, p.generation());
    }
}
