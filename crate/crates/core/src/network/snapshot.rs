//! Binary container for a trained network.
//!
//! ```text
//! deep-splitting-snapshot
//! layout_version = 1
//! input_dim = 10
//! ...
//! end
//! <param_count f64 LE> <bn_features f64 LE means> <variances> <step counts>
//! ```
//!
//! The header is UTF-8 `key = value` lines terminated by a line `end`.
//! Everything after the terminating newline is little-endian IEEE-754
//! float64. Step counts are stored as float64 as well (exact below 2^53).

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, ArrayView2};

use super::{Activation, BatchNormState, BnSite, Network, NetworkArchitecture, ParameterVector};
use crate::error::{Error, Result};

const MAGIC: &str = "deep-splitting-snapshot";
const LAYOUT_VERSION: u32 = 1;

/// Frozen network: architecture, parameters and batch-normalization state.
#[derive(Debug, Clone)]
pub struct Snapshot {
    network: Network,
    pub params: ParameterVector,
    pub bn: BatchNormState,
}

impl PartialEq for Snapshot {
    fn eq(&self, other: &Self) -> bool {
        self.network.architecture() == other.network.architecture()
            && self.params == other.params
            && self.bn == other.bn
    }
}

impl Snapshot {
    pub fn new(network: Network, params: ParameterVector, bn: BatchNormState) -> Result<Self> {
        let layout = network.layout();
        if params.len() != layout.len {
            return Err(Error::DimensionMismatch { expected: layout.len, got: params.len() });
        }
        if bn.len() != layout.features {
            return Err(Error::DimensionMismatch { expected: layout.features, got: bn.len() });
        }
        Ok(Snapshot { network, params, bn })
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array1<f64>> {
        self.network.predict(&self.params, &self.bn, x)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let arch = self.network.architecture();
        let sites: Vec<String> = arch.batch_norm_sites.iter().map(|s| s.encode()).collect();
        let mut header = String::new();
        let _ = writeln!(header, "{MAGIC}");
        let _ = writeln!(header, "layout_version = {LAYOUT_VERSION}");
        let _ = writeln!(header, "input_dim = {}", arch.input_dim);
        let _ = writeln!(header, "depth = {}", arch.depth);
        let _ = writeln!(header, "hidden_width = {}", arch.hidden_width);
        let _ = writeln!(header, "activation = {}", arch.activation.name());
        let _ = writeln!(header, "batch_norm_sites = {}", sites.join(","));
        let _ = writeln!(header, "bn_momentum = {}", arch.bn_momentum);
        let _ = writeln!(header, "bn_epsilon = {}", arch.bn_epsilon);
        let _ = writeln!(header, "param_count = {}", self.params.len());
        let _ = writeln!(header, "bn_features = {}", self.bn.len());
        let _ = writeln!(header, "end");

        let mut out = header.into_bytes();
        let floats = self
            .params
            .as_slice()
            .iter()
            .chain(&self.bn.running_mean)
            .chain(&self.bn.running_variance)
            .copied()
            .chain(self.bn.step_count.iter().map(|&c| c as f64));
        for v in floats {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: &str| Error::Snapshot(msg.to_string());
        let terminator = b"\nend\n";
        let end = bytes
            .windows(terminator.len())
            .position(|w| w == terminator)
            .ok_or_else(|| bad("missing header terminator"))?
            + terminator.len();
        let header = std::str::from_utf8(&bytes[..end]).map_err(|_| bad("header is not UTF-8"))?;
        let mut lines = header.lines();
        if lines.next() != Some(MAGIC) {
            return Err(bad("bad magic line"));
        }
        let mut fields = std::collections::HashMap::new();
        for line in lines {
            if line == "end" {
                break;
            }
            let (k, v) = line.split_once(" = ").ok_or_else(|| bad("malformed header line"))?;
            fields.insert(k.to_string(), v.to_string());
        }
        let get = |k: &str| fields.get(k).ok_or_else(|| Error::Snapshot(format!("missing key {k}")));
        let num = |k: &str| -> Result<usize> {
            get(k)?.parse().map_err(|_| Error::Snapshot(format!("bad integer for {k}")))
        };
        let real = |k: &str| -> Result<f64> {
            get(k)?.parse().map_err(|_| Error::Snapshot(format!("bad float for {k}")))
        };
        if num("layout_version")? != LAYOUT_VERSION as usize {
            return Err(bad("unsupported layout version"));
        }
        let sites_field = get("batch_norm_sites")?;
        let batch_norm_sites = if sites_field.is_empty() {
            Vec::new()
        } else {
            sites_field
                .split(',')
                .map(|s| BnSite::decode(s).ok_or_else(|| bad("bad batch-norm site")))
                .collect::<Result<Vec<_>>>()?
        };
        let arch = NetworkArchitecture {
            input_dim: num("input_dim")?,
            depth: num("depth")?,
            hidden_width: num("hidden_width")?,
            activation: Activation::parse(get("activation")?).ok_or_else(|| bad("bad activation"))?,
            batch_norm_sites,
            bn_momentum: real("bn_momentum")?,
            bn_epsilon: real("bn_epsilon")?,
        };
        let network = Network::new(arch)?;
        let (np, nf) = (num("param_count")?, num("bn_features")?);
        if np != network.layout().len || nf != network.layout().features {
            return Err(bad("counts disagree with the architecture"));
        }
        let body = &bytes[end..];
        if body.len() != 8 * (np + 3 * nf) {
            return Err(bad("payload length mismatch"));
        }
        let mut floats = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
        let params: Vec<f64> = floats.by_ref().take(np).collect();
        let running_mean: Vec<f64> = floats.by_ref().take(nf).collect();
        let running_variance: Vec<f64> = floats.by_ref().take(nf).collect();
        let step_count: Vec<u64> = floats.map(|c| c as u64).collect();
        Snapshot::new(
            network,
            ParameterVector::from_vec(params),
            BatchNormState { running_mean, running_variance, step_count },
        )
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
