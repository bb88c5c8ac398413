use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracles::RadialSettings;
use crate::problems::{paper_reference, preset_by_id, preset_heat_moment, preset_hjb, BenchmarkPreset, PresetId};
use crate::training::PiecewiseRate;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "DEEPSPLIT_OUTPUT_DIR";
pub const DEFAULT_RUNS: usize = 10;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_MC_SAMPLES: usize = 10_000_000;

/// Problem-level overrides of a preset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemOverrides {
    pub d: Option<usize>,
    #[serde(rename = "T")]
    pub horizon: Option<f64>,
    #[serde(rename = "N")]
    pub time_steps: Option<usize>,
}

/// Training overrides. `M` rescales the preset's learning-rate breakpoints;
/// `learning_rates` replaces them (and fixes `M` to the last breakpoint).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingOverrides {
    #[serde(rename = "M")]
    pub steps: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rates: Option<Vec<(usize, f64)>>,
    pub full_paths: Option<bool>,
    pub bn_recalibration: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkOverrides {
    pub width: Option<usize>,
}

/// Source of the value relative errors are measured against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ReferenceMode {
    /// The published value for the preset, when tabulated.
    Paper,
    Value { value: f64 },
    Oracle(OracleSpec),
}

impl Default for ReferenceMode {
    fn default() -> Self {
        ReferenceMode::Paper
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    RadialFd,
    GridFd,
    HjbMc,
    BsLinearMc,
}

impl OracleKind {
    pub const ALL: [OracleKind; 4] =
        [OracleKind::RadialFd, OracleKind::GridFd, OracleKind::HjbMc, OracleKind::BsLinearMc];

    pub fn as_str(self) -> &'static str {
        match self {
            OracleKind::RadialFd => "radial-fd",
            OracleKind::GridFd => "grid-fd",
            OracleKind::HjbMc => "hjb-mc",
            OracleKind::BsLinearMc => "bs-linear-mc",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown oracle '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    pub oracle: OracleKind,
    /// Monte Carlo sample count.
    pub samples: Option<usize>,
    pub radial_points: Option<usize>,
    pub time_steps: Option<usize>,
    pub r_max: Option<f64>,
    /// Constant default intensity for the linearized Black-Scholes oracle.
    pub gamma: Option<f64>,
    pub seed: Option<u64>,
}

impl OracleSpec {
    pub fn new(oracle: OracleKind) -> Self {
        OracleSpec {
            oracle,
            samples: None,
            radial_points: None,
            time_steps: None,
            r_max: None,
            gamma: None,
            seed: None,
        }
    }

    pub fn radial_settings(&self) -> RadialSettings {
        let base = RadialSettings::default();
        RadialSettings {
            r_max: self.r_max.or(base.r_max),
            radial_points: self.radial_points.unwrap_or(base.radial_points),
            time_steps: self.time_steps.unwrap_or(base.time_steps),
            check_boundary: base.check_boundary,
        }
    }
}

/// One experiment: a preset, its overrides, and how to run and score it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: PresetId,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub problem: ProblemOverrides,
    #[serde(default)]
    pub training: TrainingOverrides,
    #[serde(default)]
    pub network: NetworkOverrides,
    #[serde(default)]
    pub reference: ReferenceMode,
}

fn default_runs() -> usize {
    DEFAULT_RUNS
}

impl ExperimentConfig {
    pub fn new(preset: PresetId) -> Self {
        ExperimentConfig {
            preset,
            runs: DEFAULT_RUNS,
            seed: DEFAULT_SEED,
            output_dir: None,
            problem: ProblemOverrides::default(),
            training: TrainingOverrides::default(),
            network: NetworkOverrides::default(),
            reference: ReferenceMode::Paper,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Config(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        let p = &self.problem;
        if p.d == Some(0) {
            return Err(Error::Config("d must be positive".into()));
        }
        if let Some(t) = p.horizon {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("T must be positive, got {t}")));
            }
        }
        if p.time_steps == Some(0) {
            return Err(Error::Config("N must be positive".into()));
        }
        let t = &self.training;
        if t.steps == Some(0) {
            return Err(Error::Config("M must be positive".into()));
        }
        if matches!(t.batch_size, Some(j) if j < 2) {
            return Err(Error::Config("batch_size must be at least 2".into()));
        }
        if let Some(bounds) = &t.learning_rates {
            PiecewiseRate::new(bounds.clone()).map_err(|e| Error::Config(e.to_string()))?;
        }
        if self.network.width == Some(0) {
            return Err(Error::Config("width must be positive".into()));
        }
        if let ReferenceMode::Value { value } = self.reference {
            if !value.is_finite() || value == 0.0 {
                return Err(Error::Config("reference value must be finite and nonzero".into()));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.problem.d.unwrap_or(10)
    }

    /// The preset with every override applied.
    pub fn build_preset(&self) -> Result<BenchmarkPreset> {
        self.validate()?;
        let d = self.dim();
        let mut preset = match self.preset {
            PresetId::Hjb => {
                let base = preset_by_id(PresetId::Hjb, d);
                preset_hjb(
                    d,
                    self.problem.horizon.unwrap_or(base.horizon),
                    self.problem.time_steps.unwrap_or(base.time_steps),
                )
            }
            PresetId::HeatMoment => {
                let base = preset_by_id(PresetId::HeatMoment, d);
                preset_heat_moment(
                    d,
                    self.problem.horizon.unwrap_or(base.horizon),
                    self.problem.time_steps.unwrap_or(base.time_steps),
                )
            }
            id => {
                let mut p = preset_by_id(id, d);
                if let Some(t) = self.problem.horizon {
                    p.horizon = t;
                    if p.id != PresetId::Constant {
                        p.reference = paper_reference(id, d, t);
                    }
                }
                if let Some(n) = self.problem.time_steps {
                    p.time_steps = n;
                }
                p
            }
        };
        let t = &self.training;
        if let Some(bounds) = &t.learning_rates {
            preset.set_rate(PiecewiseRate::new(bounds.clone())?);
        } else if let Some(m) = t.steps {
            preset = preset.with_steps(m);
        }
        if let Some(j) = t.batch_size {
            preset.set_batch_size(j);
        }
        if let Some(full) = t.full_paths {
            preset.schedule.full_paths = full;
        }
        if let Some(k) = t.bn_recalibration {
            preset.schedule.bn_recalibration = k;
        }
        if let Some(l) = self.network.width {
            preset.architecture.hidden_width = l;
        }
        preset.architecture.validate()?;
        preset.schedule.validate()?;
        Ok(preset)
    }

    /// Output directory: the configured one, else the environment default,
    /// else `deepsplit-out`.
    pub fn resolved_output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(default_output_dir)
    }
}

pub fn default_output_dir() -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("deepsplit-out"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_file() {
        let text = r#"
preset = "heat"
runs = 3
seed = 7

[problem]
d = 100
N = 16

[training]
M = 250
full_paths = false

[network]
width = 40

[reference]
mode = "oracle"
oracle = "radial-fd"
radial_points = 1000
"#;
        let c = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(c.preset, PresetId::Heat);
        assert_eq!(c.runs, 3);
        let p = c.build_preset().unwrap();
        assert_eq!(p.problem.dim, 100);
        assert_eq!(p.time_steps, 16);
        assert_eq!(p.schedule.steps(), 250);
        assert_eq!(p.rate.bounds, vec![(150, 1e-1), (200, 1e-2), (250, 1e-3)]);
        assert!(!p.schedule.full_paths);
        assert_eq!(p.architecture.hidden_width, 40);
        assert_eq!(p.reference, Some(0.31674));
        match c.reference {
            ReferenceMode::Oracle(spec) => assert_eq!(spec.oracle, OracleKind::RadialFd),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn toml_round_trip() {
        let mut c = ExperimentConfig::new(PresetId::Hjb);
        c.problem.horizon = Some(1.0);
        c.training.learning_rates = Some(vec![(10, 0.1), (20, 0.01)]);
        c.reference = ReferenceMode::Value { value: 2.5 };
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::from_toml("preset = \"nope\"").is_err());
        assert!(ExperimentConfig::from_toml("preset = \"heat\"\nruns = 0").is_err());
        assert!(ExperimentConfig::from_toml("preset = \"heat\"\n[problem]\nd = \"ten\"").is_err());
        assert!(ExperimentConfig::from_toml("preset = \"heat\"\n[problem]\nwidth = 3").is_err());
        assert!(ExperimentConfig::from_toml("preset = \"heat\"\n[training]\nlearning_rates = [[5, 0.1], [3, 0.01]]").is_err());
    }

    #[test]
    fn horizon_override_updates_reference() {
        let mut c = ExperimentConfig::new(PresetId::Hjb);
        c.problem.d = Some(100);
        c.problem.horizon = Some(1.0);
        c.problem.time_steps = Some(24);
        assert_eq!(c.build_preset().unwrap().reference, Some(3.74471));
        c.preset = PresetId::Heat;
        c.problem.horizon = Some(0.5);
        assert_eq!(c.build_preset().unwrap().reference, None);
    }
}
