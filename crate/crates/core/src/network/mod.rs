//! Feedforward approximators with batch normalization.
//!
//! A network with depth `k` has `k` affine maps: `d -> l`, then `k - 2` maps
//! `l -> l`, then `l -> 1`, with the activation applied after every affine
//! map except the last. Batch normalization can be inserted on the raw input
//! and after any affine map (before its activation).
//!
//! Parameters live in one flat vector. Each affine block stores its weight
//! matrix row-major (one row per output neuron) followed by its bias, blocks
//! in network order. Batch-normalization scale and shift vectors for every
//! site are appended after the last affine block.

mod batchnorm;
mod forward;
mod params;
mod snapshot;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use batchnorm::BatchNormState;
pub use forward::{ForwardCache, ForwardOutput, Mode};
pub use params::ParameterVector;
pub use snapshot::Snapshot;

pub const DEFAULT_BN_MOMENTUM: f64 = 0.99;
pub const DEFAULT_BN_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Logistic,
    /// Only useful for testing the affine plumbing.
    Identity,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Logistic => "logistic",
            Activation::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "relu" => Some(Activation::Relu),
            "logistic" => Some(Activation::Logistic),
            "identity" => Some(Activation::Identity),
            _ => None,
        }
    }

    #[inline]
    pub(crate) fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Logistic => 1.0 / (1.0 + (-x).exp()),
            Activation::Identity => x,
        }
    }

    /// Derivative given the pre-activation `x` and the activation output `y`.
    /// ReLU uses the left-hand derivative at 0, i.e. 0.
    #[inline]
    pub(crate) fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Logistic => y * (1.0 - y),
            Activation::Identity => 1.0,
        }
    }
}

/// Position of a batch-normalization layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BnSite {
    /// On the network input, before the first affine map.
    Input,
    /// On the output of affine map `i` (0-based), before its activation.
    Affine(usize),
}

impl BnSite {
    pub fn encode(self) -> String {
        match self {
            BnSite::Input => "input".to_string(),
            BnSite::Affine(i) => format!("affine{i}"),
        }
    }

    pub fn decode(s: &str) -> Option<Self> {
        if s == "input" {
            return Some(BnSite::Input);
        }
        s.strip_prefix("affine")?.parse().ok().map(BnSite::Affine)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkArchitecture {
    pub input_dim: usize,
    /// Number of affine maps (`k >= 3` in the benchmarks; 2 hidden layers means 3).
    pub depth: usize,
    pub hidden_width: usize,
    pub activation: Activation,
    pub batch_norm_sites: Vec<BnSite>,
    pub bn_momentum: f64,
    pub bn_epsilon: f64,
}

impl NetworkArchitecture {
    /// ReLU network with normalization on the input, after every hidden
    /// affine map and on the output.
    pub fn standard(input_dim: usize, depth: usize, hidden_width: usize) -> Self {
        let mut sites = vec![BnSite::Input];
        sites.extend((0..depth).map(BnSite::Affine));
        NetworkArchitecture {
            input_dim,
            depth,
            hidden_width,
            activation: Activation::Relu,
            batch_norm_sites: sites,
            bn_momentum: DEFAULT_BN_MOMENTUM,
            bn_epsilon: DEFAULT_BN_EPSILON,
        }
    }

    pub fn without_batch_norm(mut self) -> Self {
        self.batch_norm_sites.clear();
        self
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_width == 0 {
            return Err(Error::InvalidArgument(
                "input dimension and hidden width must be positive".into(),
            ));
        }
        if self.depth < 2 {
            return Err(Error::InvalidArgument(format!(
                "depth must be at least 2 affine maps, got {}",
                self.depth
            )));
        }
        if !self.batch_norm_sites.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument(
                "batch-norm sites must be strictly increasing".into(),
            ));
        }
        if let Some(BnSite::Affine(i)) = self.batch_norm_sites.last() {
            if *i >= self.depth {
                return Err(Error::InvalidArgument(format!(
                    "batch-norm site after affine map {i} but depth is {}",
                    self.depth
                )));
            }
        }
        if !(self.bn_momentum > 0.0 && self.bn_momentum < 1.0) || !(self.bn_epsilon > 0.0) {
            return Err(Error::InvalidArgument(
                "batch-norm momentum must lie in (0,1) and epsilon must be positive".into(),
            ));
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` of affine map `i`.
    pub fn affine_shape(&self, i: usize) -> (usize, usize) {
        let fan_in = if i == 0 { self.input_dim } else { self.hidden_width };
        let fan_out = if i + 1 == self.depth { 1 } else { self.hidden_width };
        (fan_in, fan_out)
    }

    fn site_features(&self, site: BnSite) -> usize {
        match site {
            BnSite::Input => self.input_dim,
            BnSite::Affine(i) => self.affine_shape(i).1,
        }
    }

    /// Number of affine parameters: `l(d+1) + (k-2) l(l+1) + (l+1)`.
    pub fn affine_param_count(&self) -> usize {
        (0..self.depth)
            .map(|i| {
                let (a, b) = self.affine_shape(i);
                b * (a + 1)
            })
            .sum()
    }

    pub fn normalized_feature_count(&self) -> usize {
        self.batch_norm_sites.iter().map(|&s| self.site_features(s)).sum()
    }

    pub fn param_count(&self) -> usize {
        self.affine_param_count() + 2 * self.normalized_feature_count()
    }

    pub fn layout(&self) -> Layout {
        let mut offset = 0;
        let affine = (0..self.depth)
            .map(|i| {
                let (fan_in, fan_out) = self.affine_shape(i);
                let block = AffineBlock { fan_in, fan_out, offset };
                offset += fan_out * (fan_in + 1);
                block
            })
            .collect();
        let mut feature_offset = 0;
        let batch_norm = self
            .batch_norm_sites
            .iter()
            .map(|&site| {
                let features = self.site_features(site);
                let block = BnBlock { site, features, offset, feature_offset };
                offset += 2 * features;
                feature_offset += features;
                block
            })
            .collect();
        Layout { affine, batch_norm, len: offset, features: feature_offset }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AffineBlock {
    pub fan_in: usize,
    pub fan_out: usize,
    pub offset: usize,
}

impl AffineBlock {
    pub fn weights(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.fan_in * self.fan_out
    }

    pub fn bias(&self) -> std::ops::Range<usize> {
        let start = self.offset + self.fan_in * self.fan_out;
        start..start + self.fan_out
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.bias().end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BnBlock {
    pub site: BnSite,
    pub features: usize,
    pub offset: usize,
    /// Offset of this site's features inside [`BatchNormState`].
    pub feature_offset: usize,
}

impl BnBlock {
    pub fn scale(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.features
    }

    pub fn shift(&self) -> std::ops::Range<usize> {
        self.offset + self.features..self.offset + 2 * self.features
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + 2 * self.features
    }

    pub fn state(&self) -> std::ops::Range<usize> {
        self.feature_offset..self.feature_offset + self.features
    }
}

/// Offsets of every parameter block inside a [`ParameterVector`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub affine: Vec<AffineBlock>,
    pub batch_norm: Vec<BnBlock>,
    pub len: usize,
    pub features: usize,
}

impl Layout {
    pub fn bn_block(&self, site: BnSite) -> Option<&BnBlock> {
        self.batch_norm.iter().find(|b| b.site == site)
    }

    /// Splits a flat vector into per-block pieces, affine blocks first.
    pub fn decode<'a>(&self, flat: &'a [f64]) -> Vec<&'a [f64]> {
        self.affine
            .iter()
            .map(|b| &flat[b.range()])
            .chain(self.batch_norm.iter().map(|b| &flat[b.range()]))
            .collect()
    }

    pub fn encode(&self, blocks: &[&[f64]]) -> Result<Vec<f64>> {
        let expected = self.affine.len() + self.batch_norm.len();
        if blocks.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: blocks.len() });
        }
        let mut flat = Vec::with_capacity(self.len);
        for block in blocks {
            flat.extend_from_slice(block);
        }
        if flat.len() != self.len {
            return Err(Error::DimensionMismatch { expected: self.len, got: flat.len() });
        }
        Ok(flat)
    }
}

/// An architecture together with its precomputed layout.
#[derive(Debug, Clone)]
pub struct Network {
    arch: Arc<NetworkArchitecture>,
    layout: Arc<Layout>,
}

impl Network {
    pub fn new(arch: NetworkArchitecture) -> Result<Self> {
        arch.validate()?;
        let layout = arch.layout();
        Ok(Network { arch: Arc::new(arch), layout: Arc::new(layout) })
    }

    pub fn architecture(&self) -> &NetworkArchitecture {
        &self.arch
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn fresh_batch_norm(&self) -> BatchNormState {
        BatchNormState::fresh(self.layout.features)
    }
}
