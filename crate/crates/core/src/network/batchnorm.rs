/// Running statistics for every normalized feature, concatenated over sites
/// in the order of [`super::Layout::batch_norm`].
///
/// Means start at 0 and variances at 1. Both are exponential moving averages
/// with the architecture's momentum; reads for inference remove the weight
/// still carried by the initial values (`momentum^count`), so that after
/// `count` updates the statistics are a proper weighted average of the
/// observed batches only.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormState {
    pub running_mean: Vec<f64>,
    pub running_variance: Vec<f64>,
    pub step_count: Vec<u64>,
}

const INITIAL_MEAN: f64 = 0.0;
const INITIAL_VARIANCE: f64 = 1.0;

impl BatchNormState {
    pub fn fresh(features: usize) -> Self {
        BatchNormState {
            running_mean: vec![INITIAL_MEAN; features],
            running_variance: vec![INITIAL_VARIANCE; features],
            step_count: vec![0; features],
        }
    }

    pub fn len(&self) -> usize {
        self.running_mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.running_mean.is_empty()
    }

    pub(crate) fn update(&mut self, feature: usize, mean: f64, variance: f64, momentum: f64) {
        self.running_mean[feature] = momentum * self.running_mean[feature] + (1.0 - momentum) * mean;
        self.running_variance[feature] =
            momentum * self.running_variance[feature] + (1.0 - momentum) * variance;
        self.step_count[feature] += 1;
    }

    /// Inference statistics `(mean, variance)` for one feature.
    pub fn inference_stats(&self, feature: usize, momentum: f64) -> (f64, f64) {
        let count = self.step_count[feature];
        let (m, v) = (self.running_mean[feature], self.running_variance[feature]);
        if count == 0 {
            return (m, v);
        }
        let carry = momentum.powf(count as f64);
        let mean = (m - carry * INITIAL_MEAN) / (1.0 - carry);
        let var = (v - carry * INITIAL_VARIANCE) / (1.0 - carry);
        (mean, var.max(0.0))
    }
}
