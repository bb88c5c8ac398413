use crate::error::{Error, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimizer {
    Sgd,
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
}

impl Optimizer {
    pub fn adam() -> Self {
        Optimizer::Adam { beta1: ADAM_BETA1, beta2: ADAM_BETA2, epsilon: ADAM_EPSILON }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitPolicy {
    /// Xavier initialization from a per-time-step stream.
    FreshXavier,
    /// Start step `n` from the trained parameters of step `n - 1`
    /// (step 1 still starts fresh).
    WarmStart,
}

/// Learning rate that is constant on the intervals `[0, b_0]`, `(b_0, b_1]`, ...
/// given as `(b_i, rate_i)`; the step count is the last bound.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseRate {
    pub bounds: Vec<(usize, f64)>,
}

impl PiecewiseRate {
    pub fn new(bounds: Vec<(usize, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidArgument("empty learning-rate schedule".into()));
        }
        if !bounds.windows(2).all(|w| w[0].0 < w[1].0) {
            return Err(Error::InvalidArgument("schedule bounds must increase".into()));
        }
        if bounds.iter().any(|&(_, r)| !(r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidArgument("learning rates must be positive".into()));
        }
        Ok(PiecewiseRate { bounds })
    }

    pub fn steps(&self) -> usize {
        self.bounds.last().map_or(0, |b| b.0)
    }

    pub fn rate(&self, m: usize) -> f64 {
        self.bounds
            .iter()
            .find(|&&(b, _)| m <= b)
            .or(self.bounds.last())
            .map(|&(_, r)| r)
            .expect("nonempty")
    }

    pub fn rates(&self) -> Vec<f64> {
        (0..self.steps()).map(|m| self.rate(m)).collect()
    }

    /// Same shape with every bound scaled to a total of `steps`.
    pub fn rescaled(&self, steps: usize) -> Self {
        let total = self.steps().max(1) as f64;
        let mut bounds: Vec<(usize, f64)> = self
            .bounds
            .iter()
            .map(|&(b, r)| (((b as f64) * steps as f64 / total).round() as usize, r))
            .collect();
        if let Some(last) = bounds.last_mut() {
            last.0 = steps;
        }
        bounds.dedup_by_key(|b| b.0);
        PiecewiseRate { bounds }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSchedule {
    pub batch_sizes: Vec<usize>,
    pub learning_rates: Vec<f64>,
    pub optimizer: Optimizer,
    pub init_policy: InitPolicy,
    /// Simulate every path over the whole reversed grid at every step.
    /// When false, simulation stops at the last grid index the loss reads;
    /// the consumed values are identical either way.
    pub full_paths: bool,
    /// Batches used after the last step to re-estimate the batch-norm
    /// statistics at the final parameters; 0 keeps the running averages
    /// accumulated during training.
    pub bn_recalibration: usize,
}

/// Default number of recalibration batches.
pub const BN_RECALIBRATION_BATCHES: usize = 50;

impl TrainingSchedule {
    pub fn constant(steps: usize, batch: usize, rate: f64, optimizer: Optimizer) -> Self {
        TrainingSchedule {
            batch_sizes: vec![batch; steps],
            learning_rates: vec![rate; steps],
            optimizer,
            init_policy: InitPolicy::FreshXavier,
            full_paths: true,
            bn_recalibration: BN_RECALIBRATION_BATCHES,
        }
    }

    pub fn piecewise(rate: &PiecewiseRate, batch: usize, optimizer: Optimizer) -> Self {
        let learning_rates = rate.rates();
        TrainingSchedule {
            batch_sizes: vec![batch; learning_rates.len()],
            learning_rates,
            optimizer,
            init_policy: InitPolicy::FreshXavier,
            full_paths: true,
            bn_recalibration: BN_RECALIBRATION_BATCHES,
        }
    }

    pub fn steps(&self) -> usize {
        self.learning_rates.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_sizes.len() != self.learning_rates.len() {
            return Err(Error::InvalidArgument(format!(
                "{} batch sizes for {} learning rates",
                self.batch_sizes.len(),
                self.learning_rates.len()
            )));
        }
        if self.batch_sizes.iter().any(|&j| j == 0) {
            return Err(Error::InvalidArgument("batch sizes must be positive".into()));
        }
        if self.learning_rates.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
            return Err(Error::InvalidArgument("learning rates must be positive".into()));
        }
        if let Optimizer::Adam { beta1, beta2, epsilon } = self.optimizer {
            let unit = |b: f64| b > 0.0 && b < 1.0;
            if !unit(beta1) || !unit(beta2) || !(epsilon > 0.0) {
                return Err(Error::InvalidArgument(
                    "Adam needs beta1, beta2 in (0,1) and epsilon > 0".into(),
                ));
            }
        }
        Ok(())
    }
}
