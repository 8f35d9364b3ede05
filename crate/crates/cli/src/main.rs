//! `cusum-sentinel` command-line front end.
//!
//! Exit codes: 0 success or alarm, 2 syntax error, 3 semantic error,
//! 4 dimension mismatch, 10 stream ended without alarm.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use cusum_sentinel::gcusum::{GcusumConfig, GcusumEngine, SupportPattern};
use cusum_sentinel::grid::{parse_case, parse_placement, IEEE14_CASE};
use cusum_sentinel::io::{read_matrix_csv, read_stream_csv, write_curves_csv, write_matrix_csv, write_runs_csv};
use cusum_sentinel::model::numerical_rank;
use cusum_sentinel::rgcusum;
use cusum_sentinel::sim::{Detector, ScenarioConfig, BUILTIN_IEEE14};
use cusum_sentinel::{AttackBounds, BoundsReport, Error, LinearModel};

const EXIT_SYNTAX: u8 = 2;
const EXIT_SEMANTIC: u8 = 3;
const EXIT_DIMENSION: u8 = 4;
const EXIT_CENSORED: u8 = 10;

#[derive(Parser)]
#[command(
    name = "cusum-sentinel",
    version,
    about = "Quickest detection of false data injection on linear measurement models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build H from a grid case (or read it) and report projector diagnostics.
    Model(ModelArgs),
    /// Run a detector over an observation stream.
    Detect(DetectArgs),
    /// Monte Carlo stopping times for one threshold.
    Simulate(SimArgs),
    /// Threshold floor, delay ceiling and per-meter expectation bounds.
    Bounds(BoundsArgs),
    /// ARL and detection delay over a threshold grid.
    Curves(CurvesArgs),
}

#[derive(Args, Clone)]
struct Source {
    /// Matrix CSV holding H.
    #[arg(long, conflicts_with_all = ["case", "placement"])]
    model: Option<PathBuf>,
    /// Grid case file, or `builtin:ieee14`.
    #[arg(long)]
    case: Option<String>,
    /// Meter placement file (overrides meters listed in the case).
    #[arg(long)]
    placement: Option<PathBuf>,
}

#[derive(Args)]
struct ModelArgs {
    #[command(flatten)]
    source: Source,
    /// Write H as CSV to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Band {
    #[arg(long)]
    sigma2: f64,
    #[arg(long)]
    rho_l: f64,
    #[arg(long)]
    rho_u: f64,
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    band: Band,
    #[arg(long)]
    threshold: f64,
    /// Observation stream CSV (`t,x_1,…,x_M`); stdin when absent or `-`.
    #[arg(long)]
    stream: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "rgcusum")]
    detector: DetectorArg,
    /// Write the JSON report to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum DetectorArg {
    Rgcusum,
    Gcusum,
}

impl From<DetectorArg> for Detector {
    fn from(d: DetectorArg) -> Self {
        match d {
            DetectorArg::Rgcusum => Detector::Rgcusum,
            DetectorArg::Gcusum => Detector::Gcusum,
        }
    }
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    band: Band,
    #[arg(long)]
    gamma: f64,
    /// Threshold for the delay ceiling (default: the floor).
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Scenario document plus flag overrides. Without `--scenario` the flags
/// describe the whole scenario (no attack).
#[derive(Args)]
struct ScenarioArgs {
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    sigma2: Option<f64>,
    #[arg(long)]
    rho_l: Option<f64>,
    #[arg(long)]
    rho_u: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    horizon: Option<u64>,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, value_enum)]
    detector: Option<DetectorArg>,
    /// Per-run CSV destination (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Aggregate JSON destination.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct CurvesArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Comma-separated ascending thresholds.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["h_min", "h_max", "points"])]
    hs: Option<Vec<f64>>,
    /// Geometric grid from `--h-min` to `--h-max` with `--points` entries.
    #[arg(long, requires_all = ["h_max", "points"])]
    h_min: Option<f64>,
    #[arg(long)]
    h_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// Horizon for attacked runs (default: same as `--horizon`).
    #[arg(long)]
    edd_horizon: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Syntax { .. } | Error::Json(_) => EXIT_SYNTAX,
            Error::DimensionMismatch { .. } => EXIT_DIMENSION,
            _ => EXIT_SEMANTIC,
        };
        Failure { code, message: e.to_string() }
    }
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

type CliResult<T> = Result<T, Failure>;

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| fail(EXIT_SEMANTIC, format!("{}: {e}", path.display())))
}

fn in_file(path: &Path, e: Error) -> Failure {
    let mut f = Failure::from(e);
    f.message = format!("{}: {}", path.display(), f.message);
    f
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| fail(EXIT_SEMANTIC, format!("{}: {e}", p.display()))),
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| fail(EXIT_SEMANTIC, e.to_string())),
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

/// Loads H from `--model` or `--case`/`--placement` without the rank check.
fn load_h(src: &Source) -> CliResult<nalgebra::DMatrix<f64>> {
    match (&src.model, &src.case) {
        (Some(path), None) => read_matrix_csv(&read_file(path)?).map_err(|e| in_file(path, e)),
        (None, Some(case)) => {
            let file = if case == BUILTIN_IEEE14 {
                parse_case(IEEE14_CASE)?
            } else {
                let path = Path::new(case);
                parse_case(&read_file(path)?).map_err(|e| in_file(path, e))?
            };
            let placement = match &src.placement {
                Some(p) => parse_placement(&read_file(p)?).map_err(|e| in_file(p, e))?,
                None => file.placement.ok_or_else(|| fail(EXIT_SEMANTIC, "case lists no meters; pass --placement"))?,
            };
            Ok(file.case.build_h(&placement)?)
        }
        _ => Err(fail(EXIT_SEMANTIC, "give exactly one of --model or --case")),
    }
}

fn load_model(src: &Source, sigma2: f64) -> CliResult<LinearModel> {
    Ok(LinearModel::new(load_h(src)?, sigma2)?)
}

#[derive(Serialize)]
struct ModelReport {
    meters: usize,
    states: usize,
    rank: usize,
    row_norms: Vec<f64>,
    symmetry: f64,
    idempotence: f64,
    annihilation: f64,
}

fn cmd_model(a: ModelArgs) -> CliResult<u8> {
    let h = load_h(&a.source)?;
    let rank = numerical_rank(&h);
    let model = LinearModel::new(h, 1.0)?;
    let proj = model.projector();
    let d = proj.diagnostics(model.h());
    let report = ModelReport {
        meters: model.num_meters(),
        states: model.num_params(),
        rank,
        row_norms: proj.row_norms().to_vec(),
        symmetry: d.symmetry,
        idempotence: d.idempotence,
        annihilation: d.annihilation,
    };
    eprintln!("meters {}  states {}  rank {}", report.meters, report.states, report.rank);
    eprintln!("max |P - Pᵀ| {:.2e}  max |P² - P| {:.2e}  max |PH| {:.2e}", d.symmetry, d.idempotence, d.annihilation);
    if let Some(out) = &a.out {
        emit(Some(out), &write_matrix_csv(model.h()))?;
    }
    emit(None, &to_json(&report))?;
    Ok(0)
}

#[derive(Serialize)]
struct DetectReport {
    detector: Detector,
    t_alarm: Option<u64>,
    censored: bool,
    samples: u64,
    statistic: f64,
    overshoot: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    patterns: Option<Vec<Option<SupportPattern>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sentinel_steps: Option<usize>,
}

fn cmd_detect(a: DetectArgs) -> CliResult<u8> {
    let model = load_model(&a.source, a.band.sigma2)?;
    let bounds = AttackBounds::new(a.band.rho_l, a.band.rho_u)?;
    let (label, text) = match a.stream.as_deref() {
        Some(p) if p != Path::new("-") => (p.display().to_string(), read_file(p)?),
        _ => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).map_err(|e| fail(EXIT_SEMANTIC, e.to_string()))?;
            ("<stdin>".to_string(), s)
        }
    };
    let stream = read_stream_csv(&text).map_err(|e| in_file(Path::new(&label), e))?;
    let detector = Detector::from(a.detector);
    let report = match detector {
        Detector::Rgcusum => {
            let r = rgcusum::run(&stream, &model.projector(), &bounds, model.sigma2(), a.threshold)?;
            DetectReport {
                detector,
                t_alarm: (!r.censored).then_some(r.stop_time),
                censored: r.censored,
                samples: r.trace.len() as u64,
                statistic: r.statistic,
                overshoot: r.overshoot,
                patterns: None,
                sentinel_steps: None,
            }
        }
        Detector::Gcusum => {
            let engine = GcusumEngine::new(&model, bounds, GcusumConfig::default())?;
            let r = engine.run(&stream, a.threshold)?;
            DetectReport {
                detector,
                t_alarm: (!r.censored).then_some(r.stop_time),
                censored: r.censored,
                samples: r.trace.len() as u64,
                statistic: r.statistic,
                overshoot: (!r.censored).then_some(r.statistic - a.threshold),
                patterns: Some(r.patterns),
                sentinel_steps: Some(r.sentinel_steps),
            }
        }
    };
    match report.t_alarm {
        Some(t) => eprintln!("alarm at t = {t}, statistic {:.6e}", report.statistic),
        None => eprintln!("no alarm in {} samples, statistic {:.6e}", report.samples, report.statistic),
    }
    emit(a.out.as_deref(), &to_json(&report))?;
    Ok(if report.censored { EXIT_CENSORED } else { 0 })
}

fn cmd_bounds(a: BoundsArgs) -> CliResult<u8> {
    let model = load_model(&a.source, a.band.sigma2)?;
    let bounds = AttackBounds::new(a.band.rho_l, a.band.rho_u)?;
    let r = BoundsReport::compute(&model.projector(), &bounds, model.sigma2(), a.gamma, a.threshold)?;
    eprintln!("threshold floor (γ = {}): {:.6e}", r.gamma, r.h_floor);
    match r.delay_ceiling.is_vacuous() {
        true => eprintln!("delay ceiling at h = {:.6e}: vacuous", r.h),
        false => eprintln!("delay ceiling at h = {:.6e}: {:.6e}", r.h, r.delay_ceiling.value()),
    }
    emit(a.out.as_deref(), &to_json(&r))?;
    Ok(0)
}

/// Scenario from file (paths resolved against its directory) or flags,
/// with flags overriding file values.
fn scenario_config(a: &ScenarioArgs, threshold: Option<f64>) -> CliResult<(ScenarioConfig, PathBuf)> {
    let (mut cfg, base) = match &a.scenario {
        Some(path) => {
            let cfg = ScenarioConfig::from_json(&read_file(path)?).map_err(|e| in_file(path, e))?;
            (cfg, path.parent().map(Path::to_path_buf).unwrap_or_default())
        }
        None => {
            let need = |v: Option<f64>, flag: &str| {
                v.ok_or_else(|| fail(EXIT_SEMANTIC, format!("{flag} is required without --scenario")))
            };
            let cfg = ScenarioConfig::from_json(&format!(
                r#"{{"sigma2": {}, "rho_l": {}, "rho_u": {}}}"#,
                need(a.sigma2, "--sigma2")?,
                need(a.rho_l, "--rho-l")?,
                need(a.rho_u, "--rho-u")?
            ))?;
            (cfg, PathBuf::from("."))
        }
    };
    if a.source.model.is_some() || a.source.case.is_some() {
        cfg.model = a.source.model.as_ref().map(|p| p.display().to_string());
        cfg.case = a.source.case.clone();
        cfg.placement = None;
    }
    if let Some(p) = &a.source.placement {
        cfg.placement = Some(p.display().to_string());
    }
    cfg.sigma2 = a.sigma2.unwrap_or(cfg.sigma2);
    cfg.rho_l = a.rho_l.unwrap_or(cfg.rho_l);
    cfg.rho_u = a.rho_u.unwrap_or(cfg.rho_u);
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    cfg.runs = a.runs.unwrap_or(cfg.runs);
    cfg.horizon = a.horizon.or(cfg.horizon);
    if a.gamma.is_some() {
        cfg.gamma = a.gamma;
        cfg.threshold = None;
    }
    if threshold.is_some() {
        cfg.threshold = threshold;
    }
    // Flag paths are relative to the working directory, file paths to the file.
    let base = if a.source.model.is_some() || a.source.case.is_some() || a.source.placement.is_some() {
        PathBuf::from(".")
    } else {
        base
    };
    Ok((cfg, base))
}

fn cmd_simulate(a: SimArgs) -> CliResult<u8> {
    let (mut cfg, base) = scenario_config(&a.scenario, a.threshold)?;
    if let Some(d) = a.detector {
        cfg.detector = d.into();
    }
    let scenario = cfg.build(&base)?;
    let report = scenario.run(GcusumConfig::default())?;
    let s = &report.stats;
    eprintln!(
        "h {:.6e}  runs {}  horizon {}  mean stop {:.4} (se {:.4})  censored {:.1}%",
        report.h,
        s.runs,
        report.horizon,
        s.mean_stop_time,
        s.std_error,
        100.0 * s.censored_fraction
    );
    if let Some(d) = s.mean_delay {
        eprintln!("mean delay {d:.4}  early alarms {}", s.early_alarms);
    }
    emit(a.out.as_deref(), &write_runs_csv(&s.records))?;
    if let Some(p) = &a.summary {
        emit(Some(p), &to_json(&report))?;
    }
    Ok(0)
}

fn cmd_curves(a: CurvesArgs) -> CliResult<u8> {
    let hs = match (&a.hs, a.h_min, a.h_max, a.points) {
        (Some(hs), ..) => hs.clone(),
        (None, Some(lo), Some(hi), Some(n)) => {
            if !(lo > 0.0 && hi >= lo && n >= 1) {
                return Err(fail(EXIT_SEMANTIC, "need 0 < h-min ≤ h-max and points ≥ 1"));
            }
            let ratio = if n > 1 { (hi / lo).powf(1.0 / (n - 1) as f64) } else { 1.0 };
            (0..n).map(|i| if i + 1 == n { hi } else { lo * ratio.powi(i as i32) }).collect()
        }
        _ => return Err(fail(EXIT_SEMANTIC, "give --hs or --h-min/--h-max/--points")),
    };
    let h_max = hs.iter().copied().fold(f64::NAN, f64::max);
    let (mut cfg, base) = scenario_config(&a.scenario, None)?;
    // The grid replaces the single threshold; the largest one sets the
    // default horizon.
    cfg.threshold = Some(h_max);
    let scenario = cfg.build(&base)?;
    let edd_horizon = a.edd_horizon.unwrap_or(scenario.horizon);
    let rows = scenario.simulator.curve_sweep(&hs, scenario.horizon, edd_horizon, scenario.seed, scenario.runs)?;
    eprintln!("{:>14} {:>14} {:>10} {:>14}", "h", "ARL", "censored", "EDD");
    for r in &rows {
        let edd = r.edd.map_or("-".to_string(), |e| format!("{e:.4}"));
        eprintln!("{:>14.6e} {:>14.4} {:>9.1}% {:>14}", r.h, r.arl, 100.0 * r.arl_censored_fraction, edd);
    }
    emit(a.out.as_deref(), &write_curves_csv(&rows))?;
    Ok(0)
}

fn init_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var("CUSUM_SENTINEL_THREADS") {
        let n: usize = v.parse().ok().filter(|&n| n >= 1).ok_or_else(|| {
            fail(EXIT_SEMANTIC, format!("CUSUM_SENTINEL_THREADS must be a positive integer, got `{v}`"))
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| fail(EXIT_SEMANTIC, e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_SYNTAX } else { 0 });
        }
    };
    let result = init_threads().and_then(|()| match cli.command {
        Command::Model(a) => cmd_model(a),
        Command::Detect(a) => cmd_detect(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Curves(a) => cmd_curves(a),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
