use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::problems::PresetId;

use super::check::run_quick_checks;
use super::config::{default_output_dir, ExperimentConfig, OracleKind, OracleSpec, ReferenceMode};
use super::experiment::{run_experiment, run_oracle};
use super::report::{emit_report, read_csv_file, sort_by_steps, to_csv, ReportFormat, ResultRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "deepsplit", version, about = "Deep splitting solver for semilinear parabolic PDEs")]
struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment and write its result row.
    Solve(SolveArgs),
    /// Evaluate a reference oracle for a preset.
    Reference(ReferenceArgs),
    /// Combine result files into one table.
    Report(ReportArgs),
    /// Sweep the number of time steps.
    Nstudy(NstudyArgs),
    /// Run the quick property checks.
    Check,
}

#[derive(Debug, Args, Clone)]
struct ExperimentArgs {
    /// TOML experiment file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long = "T")]
    horizon: Option<f64>,
    #[arg(long = "M")]
    steps: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: $DEEPSPLIT_OUTPUT_DIR or ./deepsplit-out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Measure errors against this value instead of the published one.
    #[arg(long)]
    reference_value: Option<f64>,
    /// Measure errors against an oracle.
    #[arg(long)]
    reference_oracle: Option<String>,
    /// Skip simulating path segments the loss never reads.
    #[arg(long)]
    truncate_paths: bool,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    common: ExperimentArgs,
    #[arg(long = "N")]
    time_steps: Option<usize>,
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Debug, Args)]
struct ReferenceArgs {
    #[arg(long)]
    oracle: String,
    #[arg(long)]
    preset: String,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long = "T")]
    horizon: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Spatial resolution (radial points or grid intervals per axis).
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    time_steps: Option<usize>,
    /// Outer radius or box half width.
    #[arg(long)]
    extent: Option<f64>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Result CSV files.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: String,
    /// Order rows by N.
    #[arg(long)]
    sort_by_n: bool,
}

#[derive(Debug, Args)]
struct NstudyArgs {
    #[command(flatten)]
    common: ExperimentArgs,
    /// Comma-separated time step counts.
    #[arg(long = "Ns", value_delimiter = ',', default_value = "1,2,4,8,16")]
    time_steps: Vec<usize>,
    #[arg(long, default_value = "csv")]
    format: String,
}

/// Entry point of the `deepsplit` binary; returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return EXIT_VALIDATION;
        }
        // a pool may already exist when called repeatedly in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Solve(args) => {
            let mut config = experiment_config(&args.common)?;
            if let Some(n) = args.time_steps {
                config.problem.time_steps = Some(n);
            }
            let format = ReportFormat::parse(&args.format)?;
            let dir = config.resolved_output_dir();
            config.output_dir = Some(dir.clone());
            let outcome = run_experiment(&config)?;
            for (r, e) in &outcome.failures {
                eprintln!("run {r} failed: {e}");
            }
            std::fs::create_dir_all(&dir)?;
            std::fs::write(dir.join("results.csv"), to_csv(std::slice::from_ref(&outcome.row))?)?;
            std::fs::write(dir.join("config.toml"), config.to_toml())?;
            print(&emit_report(&[outcome.row], format)?);
            Ok(EXIT_OK)
        }
        Command::Reference(args) => {
            let mut config = ExperimentConfig::new(parse_preset(&args.preset)?);
            config.problem.d = args.d;
            config.problem.horizon = args.horizon;
            let preset = config.build_preset()?;
            let spec = OracleSpec {
                oracle: OracleKind::parse(&args.oracle)?,
                samples: args.samples,
                radial_points: args.points,
                time_steps: args.time_steps,
                r_max: args.extent,
                gamma: args.gamma,
                seed: args.seed,
            };
            let result = run_oracle(&spec, &preset)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["oracle", "preset", "d", "T", "value", "error_estimate", "settings"])?;
            w.write_record([
                spec.oracle.as_str().to_string(),
                preset.id.to_string(),
                preset.problem.dim.to_string(),
                preset.horizon.to_string(),
                result.value.to_string(),
                result.error_estimate.to_string(),
                result.settings,
            ])?;
            let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
            print(&String::from_utf8_lossy(&bytes));
            Ok(EXIT_OK)
        }
        Command::Report(args) => {
            let format = ReportFormat::parse(&args.format)?;
            let mut rows: Vec<ResultRow> = Vec::new();
            for f in &args.files {
                rows.extend(read_csv_file(f)?);
            }
            if args.sort_by_n {
                sort_by_steps(&mut rows);
            }
            print(&emit_report(&rows, format)?);
            Ok(EXIT_OK)
        }
        Command::Nstudy(args) => {
            let base = experiment_config(&args.common)?;
            let format = ReportFormat::parse(&args.format)?;
            if args.time_steps.is_empty() || args.time_steps.contains(&0) {
                return Err(Error::Config("--Ns needs positive step counts".into()));
            }
            let dir = base.resolved_output_dir();
            let mut rows = Vec::new();
            for &n in &args.time_steps {
                let mut config = base.clone();
                config.problem.time_steps = Some(n);
                config.output_dir = Some(dir.join(format!("N_{n}")));
                let outcome = run_experiment(&config)?;
                for (r, e) in &outcome.failures {
                    eprintln!("N={n} run {r} failed: {e}");
                }
                rows.push(outcome.row);
            }
            sort_by_steps(&mut rows);
            std::fs::create_dir_all(&dir)?;
            std::fs::write(dir.join("nstudy.csv"), to_csv(&rows)?)?;
            print(&emit_report(&rows, format)?);
            Ok(EXIT_OK)
        }
        Command::Check => {
            let outcomes = run_quick_checks();
            for o in &outcomes {
                println!("{}", o.line());
            }
            Ok(if outcomes.iter().all(|o| o.passed) { EXIT_OK } else { EXIT_RUNTIME })
        }
    }
}

fn print(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes());
}

fn parse_preset(s: &str) -> Result<PresetId> {
    s.parse()
}

fn experiment_config(args: &ExperimentArgs) -> Result<ExperimentConfig> {
    let mut config = match (&args.config, &args.preset) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(p)) => ExperimentConfig::new(parse_preset(p)?),
        (None, None) => return Err(Error::Config("either --config or --preset is required".into())),
    };
    if let (Some(_), Some(p)) = (&args.config, &args.preset) {
        config.preset = parse_preset(p)?;
    }
    let set = |slot: &mut Option<usize>, v: Option<usize>| {
        if v.is_some() {
            *slot = v;
        }
    };
    set(&mut config.problem.d, args.d);
    set(&mut config.training.steps, args.steps);
    set(&mut config.training.batch_size, args.batch_size);
    set(&mut config.network.width, args.width);
    if args.horizon.is_some() {
        config.problem.horizon = args.horizon;
    }
    if let Some(r) = args.runs {
        config.runs = r;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if args.out.is_some() {
        config.output_dir = args.out.clone();
    } else if config.output_dir.is_none() {
        config.output_dir = Some(default_output_dir());
    }
    if args.truncate_paths {
        config.training.full_paths = Some(false);
    }
    match (args.reference_value, &args.reference_oracle) {
        (Some(_), Some(_)) => {
            return Err(Error::Config("give at most one of --reference-value and --reference-oracle".into()))
        }
        (Some(value), None) => config.reference = ReferenceMode::Value { value },
        (None, Some(name)) => config.reference = ReferenceMode::Oracle(OracleSpec::new(OracleKind::parse(name)?)),
        (None, None) => {}
    }
    config.validate()?;
    Ok(config)
}
