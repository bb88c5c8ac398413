use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::oracles::{
    grid_fd_reference, hjb_reference, linearized_bs_reference, radial_fd_reference, GridSettings,
};
use crate::problems::{BenchmarkPreset, BlackScholesParams, PresetId};
use crate::rng::{tag, Stream};
use crate::sde::TimeGrid;
use crate::training::{solve, SolverResult};

use super::config::{ExperimentConfig, OracleKind, OracleSpec, ReferenceMode, DEFAULT_MC_SAMPLES};
use super::report::ResultRow;

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run: usize,
    pub value: f64,
    pub runtime_s: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub row: ResultRow,
    pub runs: Vec<RunRecord>,
    pub failures: Vec<(usize, String)>,
}

/// Oracle output: value, an error estimate and a description of the settings.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub value: f64,
    pub error_estimate: f64,
    pub settings: String,
}

/// Stream of run `r` (1-based) of an experiment seeded with `seed`.
pub fn run_stream(seed: u64, run: usize) -> Stream {
    Stream::root(seed).child(tag::RUN).child(run as u64)
}

/// One solve of the configured preset.
pub fn solve_preset(preset: &BenchmarkPreset, stream: Stream) -> Result<SolverResult> {
    let grid = TimeGrid::uniform(preset.horizon, preset.time_steps)?;
    solve(&preset.problem, &grid, &preset.architecture, &preset.schedule, stream)
}

/// Runs `R` independent solves, evaluates each at the start point and
/// aggregates them into a [`ResultRow`]. With an output directory, the
/// snapshots and loss traces of every run are written below it.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let preset = config.build_preset()?;
    let reference = resolve_reference(config, &preset)?.value;
    let x0 = preset.start_point().to_vec();
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for r in 1..=config.runs {
        let start = Instant::now();
        let attempt = solve_preset(&preset, run_stream(config.seed, r))
            .and_then(|res| res.evaluate_final_at(&x0).map(|v| (res, v)));
        let runtime_s = start.elapsed().as_secs_f64();
        match attempt {
            Ok((res, value)) => {
                if let Some(dir) = &config.output_dir {
                    write_run(&dir.join(format!("run_{r}")), &res)?;
                }
                runs.push(RunRecord { run: r, value, runtime_s });
            }
            Err(e) => failures.push((r, e.to_string())),
        }
    }
    if runs.is_empty() {
        let detail = failures.iter().map(|(r, e)| format!("run {r}: {e}")).collect::<Vec<_>>().join("; ");
        return Err(Error::RunsFailed(detail));
    }
    let values: Vec<f64> = runs.iter().map(|r| r.value).collect();
    let times: Vec<f64> = runs.iter().map(|r| r.runtime_s).collect();
    let row = ResultRow::aggregate(
        preset.id.as_str(),
        preset.problem.dim,
        preset.horizon,
        preset.time_steps,
        reference,
        &values,
        &times,
        config.runs,
    )?;
    Ok(ExperimentOutcome { row, runs, failures })
}

fn write_run(dir: &Path, res: &SolverResult) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut losses = String::from("n,m,loss\n");
    for (i, snap) in res.snapshots.iter().enumerate() {
        snap.save(dir.join(format!("V_{}.snap", i + 1)))?;
        for (m, l) in res.loss_traces[i].iter().enumerate() {
            let _ = writeln!(losses, "{},{m},{l}", i + 1);
        }
    }
    std::fs::write(dir.join("loss.csv"), losses)?;
    Ok(())
}

/// The value relative errors are measured against.
pub fn resolve_reference(config: &ExperimentConfig, preset: &BenchmarkPreset) -> Result<OracleResult> {
    match &config.reference {
        ReferenceMode::Paper => preset
            .reference
            .map(|value| OracleResult { value, error_estimate: 0.0, settings: "published".into() })
            .ok_or_else(|| {
                Error::Config(format!(
                    "no published reference for {} with d={}, T={}; configure a value or an oracle",
                    preset.id, preset.problem.dim, preset.horizon
                ))
            }),
        ReferenceMode::Value { value } => {
            Ok(OracleResult { value: *value, error_estimate: 0.0, settings: "configured".into() })
        }
        ReferenceMode::Oracle(spec) => run_oracle(spec, preset),
    }
}

/// Evaluates an oracle at the preset's start point and final time.
///
/// Finite-difference oracles report the change against a solve at half
/// the resolution as their error estimate; Monte Carlo oracles report the
/// standard error.
pub fn run_oracle(spec: &OracleSpec, preset: &BenchmarkPreset) -> Result<OracleResult> {
    let t = preset.horizon;
    let x0 = preset.start_point();
    let stream = Stream::root(spec.seed.unwrap_or(0)).child(tag::ORACLE);
    let samples = spec.samples.unwrap_or(DEFAULT_MC_SAMPLES);
    match spec.oracle {
        OracleKind::RadialFd => {
            if x0.iter().any(|&v| v != 0.0) {
                return Err(Error::Config("radial oracle evaluates at the origin only".into()));
            }
            let fine = spec.radial_settings();
            let coarse = crate::oracles::RadialSettings {
                radial_points: fine.radial_points / 2,
                time_steps: (fine.time_steps / 2).max(1),
                check_boundary: false,
                ..fine
            };
            let value = radial_fd_reference(&preset.problem, t, fine)?;
            let rough = radial_fd_reference(&preset.problem, t, coarse)?;
            Ok(OracleResult {
                value,
                error_estimate: (value - rough).abs(),
                settings: format!(
                    "radial_points={} time_steps={} r_max={}",
                    fine.radial_points,
                    fine.time_steps,
                    fine.r_max.map_or("auto".to_string(), |r| r.to_string())
                ),
            })
        }
        OracleKind::GridFd => {
            let base = GridSettings::default();
            let fine = GridSettings {
                half_width: spec.r_max.or(base.half_width),
                intervals: spec.radial_points.unwrap_or(base.intervals),
                time_steps: spec.time_steps.unwrap_or(base.time_steps),
            };
            let coarse = GridSettings { intervals: fine.intervals / 2, time_steps: (fine.time_steps / 2).max(1), ..fine };
            let value = grid_fd_reference(&preset.problem, t, x0, fine)?;
            let rough = grid_fd_reference(&preset.problem, t, x0, coarse)?;
            Ok(OracleResult {
                value,
                error_estimate: (value - rough).abs(),
                settings: format!("intervals={} time_steps={}", fine.intervals, fine.time_steps),
            })
        }
        OracleKind::HjbMc => {
            if preset.id != PresetId::Hjb {
                return Err(Error::Config(format!("hjb-mc oracle does not apply to preset {}", preset.id)));
            }
            let e = hjb_reference(t, x0, samples, stream)?;
            Ok(OracleResult { value: e.value, error_estimate: e.std_error, settings: format!("samples={samples}") })
        }
        OracleKind::BsLinearMc => {
            if !matches!(preset.id, PresetId::BlackScholes | PresetId::BlackScholesLinear) {
                return Err(Error::Config(format!("bs-linear-mc oracle does not apply to preset {}", preset.id)));
            }
            let gamma = spec.gamma.unwrap_or(0.2);
            let e = linearized_bs_reference(&BlackScholesParams::default(), gamma, t, x0, samples, stream)?;
            Ok(OracleResult {
                value: e.value,
                error_estimate: e.std_error,
                settings: format!("samples={samples} gamma={gamma}"),
            })
        }
    }
}
