//! Seeded Monte Carlo harness.
//!
//! Each run draws its noise from its own ChaCha8 stream: the generator is
//! seeded with the scenario's base seed and switched to stream `run_index`.
//! Runs are therefore independent of execution order, and results are
//! bit-identical with or without the `parallel` feature.
//!
//! Observations follow `x(t) = H θ(t) + a(t) + n(t)`, `n ~ N(0, σ² I)`, with
//! `a(t) = 0` before the attack onset.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::attacks::{AttackSchedule, AttackSpec};
use crate::bounds::threshold_floor;
use crate::error::{Error, Result};
use crate::gcusum::{GcusumConfig, GcusumEngine, GcusumState};
use crate::grid::{parse_case, parse_placement, LinearTrajectory, LoadRamp, IEEE14_CASE};
use crate::io::read_matrix_csv;
use crate::model::{LinearModel, Projector};
use crate::rgcusum::{increment, AttackBounds};

/// Censoring horizon as a multiple of the target run length.
pub const HORIZON_FACTOR: f64 = 50.0;
/// Censored fraction above which an estimate is flagged as a lower bound.
pub const CENSOR_WARNING_FRACTION: f64 = 0.05;

/// Noise generator for one run.
pub fn run_rng(base_seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(run);
    rng
}

/// One observation `x = Hθ + a + n`.
pub fn generate_observation<R: Rng + ?Sized>(
    model: &LinearModel,
    theta: &[f64],
    attack: Option<&[f64]>,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let (m, n) = (model.num_meters(), model.num_params());
    if theta.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: theta.len() });
    }
    let mut x = vec![0.0; m];
    observe(model, theta, &mut x, rng);
    if let Some(a) = attack {
        if a.len() != m {
            return Err(Error::DimensionMismatch { expected: m, actual: a.len() });
        }
        for (xi, ai) in x.iter_mut().zip(a) {
            *xi += ai;
        }
    }
    Ok(x)
}

fn observe<R: Rng + ?Sized>(model: &LinearModel, theta: &[f64], x: &mut [f64], rng: &mut R) {
    let h = model.h();
    let sigma = model.sigma();
    for (i, xi) in x.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, th) in theta.iter().enumerate() {
            acc += h[(i, j)] * th;
        }
        let z: f64 = rng.sample(StandardNormal);
        *xi = acc + sigma * z;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: u64,
    /// Alarm time, or the horizon when censored.
    pub stop_time: u64,
    pub overshoot: Option<f64>,
    pub censored: bool,
}

/// Aggregates over runs. Censored runs contribute the horizon, so with any
/// censoring the mean is a lower bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub h: f64,
    pub horizon: u64,
    pub onset: u64,
    pub runs: usize,
    pub mean_stop_time: f64,
    pub std_error: f64,
    pub censored: usize,
    pub censored_fraction: f64,
    /// Mean of `T − t_a + 1` over runs that stopped at or after the onset.
    pub mean_delay: Option<f64>,
    pub delay_std_error: Option<f64>,
    /// Runs that alarmed before the onset.
    pub early_alarms: usize,
    /// Mean overshoot over alarmed runs.
    pub mean_overshoot: Option<f64>,
    #[serde(skip)]
    pub records: Vec<RunRecord>,
}

impl RunStats {
    pub fn from_records(records: Vec<RunRecord>, h: f64, horizon: u64, onset: u64) -> Self {
        let stops: Vec<f64> = records.iter().map(|r| r.stop_time as f64).collect();
        let (mean_stop_time, std_error) = mean_se(&stops);
        let censored = records.iter().filter(|r| r.censored).count();
        let delays: Vec<f64> =
            records.iter().filter(|r| r.stop_time >= onset).map(|r| (r.stop_time - onset + 1) as f64).collect();
        let overshoots: Vec<f64> = records.iter().filter_map(|r| r.overshoot).collect();
        let (mean_delay, delay_std_error) = if delays.is_empty() {
            (None, None)
        } else {
            let (m, s) = mean_se(&delays);
            (Some(m), Some(s))
        };
        Self {
            h,
            horizon,
            onset,
            runs: records.len(),
            mean_stop_time,
            std_error,
            censored,
            censored_fraction: if records.is_empty() { 0.0 } else { censored as f64 / records.len() as f64 },
            mean_delay,
            delay_std_error,
            early_alarms: records.len() - delays.len(),
            mean_overshoot: (!overshoots.is_empty()).then(|| pairwise_sum(&overshoots) / overshoots.len() as f64),
            records,
        }
    }

    /// Warning text when too many runs hit the horizon.
    pub fn censoring_warning(&self) -> Option<String> {
        (self.censored_fraction > CENSOR_WARNING_FRACTION).then(|| {
            format!(
                "{:.1}% of runs reached the horizon {} without alarm at h = {}; the mean is a lower bound",
                100.0 * self.censored_fraction,
                self.horizon,
                self.h
            )
        })
    }
}

/// Sum by recursive halving; the result depends only on the order of `v`.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Sample mean and its standard error.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(v) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n as u64).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n as u64).map(f).collect()
    }
}

fn check_h(h: f64) -> Result<()> {
    if !(h >= 0.0 && h.is_finite()) {
        return Err(Error::InvalidThreshold(h));
    }
    Ok(())
}

fn check_run_shape(horizon: u64, runs: usize) -> Result<()> {
    if horizon == 0 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    if runs == 0 {
        return Err(Error::Config("runs must be at least 1".into()));
    }
    Ok(())
}

/// One row of a threshold sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub h: f64,
    pub arl: f64,
    pub arl_std_error: f64,
    pub arl_censored_fraction: f64,
    pub edd: Option<f64>,
    pub edd_std_error: Option<f64>,
    pub edd_censored_fraction: Option<f64>,
    /// Mean overshoot of attacked runs divided by `h`.
    pub overshoot_ratio: Option<f64>,
}

/// Model, state trajectory and attack for repeated seeded runs.
#[derive(Debug, Clone)]
pub struct Simulator {
    model: LinearModel,
    projector: Projector,
    trajectory: LinearTrajectory,
    attack: AttackSchedule,
    bounds: AttackBounds,
}

/// Generates `x̃(1), x̃(2), …` for one run.
struct SamplePath<'a> {
    sim: &'a Simulator,
    rng: ChaCha8Rng,
    t: u64,
    theta: Vec<f64>,
    x: Vec<f64>,
    residual: Vec<f64>,
}

impl<'a> SamplePath<'a> {
    fn new(sim: &'a Simulator, base_seed: u64, run: u64) -> Self {
        let m = sim.model.num_meters();
        Self {
            sim,
            rng: run_rng(base_seed, run),
            t: 0,
            theta: vec![0.0; sim.model.num_params()],
            x: vec![0.0; m],
            residual: vec![0.0; m],
        }
    }

    fn next_observation(&mut self) -> &[f64] {
        self.t += 1;
        self.sim.trajectory.at(self.t, &mut self.theta);
        observe(&self.sim.model, &self.theta, &mut self.x, &mut self.rng);
        self.sim.attack.add_to(self.t, &mut self.x);
        &self.x
    }

    fn next_residual(&mut self) -> &[f64] {
        self.next_observation();
        self.sim.projector.residual_into(&self.x, &mut self.residual).expect("buffer sizes match the model");
        &self.residual
    }
}

impl Simulator {
    pub fn new(
        model: LinearModel,
        trajectory: LinearTrajectory,
        attack: AttackSchedule,
        bounds: AttackBounds,
    ) -> Result<Self> {
        if trajectory.dim() != model.num_params() {
            return Err(Error::DimensionMismatch { expected: model.num_params(), actual: trajectory.dim() });
        }
        let projector = model.projector();
        Ok(Self { model, projector, trajectory, attack, bounds })
    }

    /// Zero state, no attack.
    pub fn null(model: LinearModel, bounds: AttackBounds) -> Self {
        let n = model.num_params();
        Self::new(model, LinearTrajectory::constant(vec![0.0; n]), AttackSchedule::off(), bounds)
            .expect("dimensions agree")
    }

    pub fn with_attack(&self, attack: AttackSchedule) -> Self {
        Self { attack, ..self.clone() }
    }

    pub fn without_attack(&self) -> Self {
        self.with_attack(AttackSchedule::off())
    }

    pub fn with_trajectory(&self, trajectory: LinearTrajectory) -> Result<Self> {
        Self::new(self.model.clone(), trajectory, self.attack.clone(), self.bounds)
    }

    pub fn model(&self) -> &LinearModel {
        &self.model
    }

    pub fn projector(&self) -> &Projector {
        &self.projector
    }

    pub fn bounds(&self) -> &AttackBounds {
        &self.bounds
    }

    pub fn attack(&self) -> &AttackSchedule {
        &self.attack
    }

    /// Raw observations `x(1..=len)` of one run.
    pub fn observations(&self, base_seed: u64, run: u64, len: usize) -> Vec<Vec<f64>> {
        let mut path = SamplePath::new(self, base_seed, run);
        (0..len).map(|_| path.next_observation().to_vec()).collect()
    }

    /// Residuals `x̃(1..=len)` of one run.
    pub fn residuals(&self, base_seed: u64, run: u64, len: usize) -> Vec<Vec<f64>> {
        let mut path = SamplePath::new(self, base_seed, run);
        (0..len).map(|_| path.next_residual().to_vec()).collect()
    }

    /// Per-step RGCUSUM increments of one run.
    pub fn increments(&self, base_seed: u64, run: u64, len: usize) -> Vec<f64> {
        let s2 = self.model.sigma2();
        let mut path = SamplePath::new(self, base_seed, run);
        (0..len).map(|_| increment(path.next_residual(), &self.bounds, s2)).collect()
    }

    /// First crossing of every threshold in ascending `hs` along one path.
    pub fn crossing_times(&self, hs: &[f64], horizon: u64, base_seed: u64, run: u64) -> Vec<RunRecord> {
        let s2 = self.model.sigma2();
        let mut path = SamplePath::new(self, base_seed, run);
        let mut out = Vec::with_capacity(hs.len());
        let mut omega = 0.0;
        let mut next = 0;
        while next < hs.len() && path.t < horizon {
            omega += increment(path.next_residual(), &self.bounds, s2);
            while next < hs.len() && omega >= hs[next] {
                out.push(RunRecord { run, stop_time: path.t, overshoot: Some(omega - hs[next]), censored: false });
                next += 1;
            }
        }
        for _ in next..hs.len() {
            out.push(RunRecord { run, stop_time: horizon, overshoot: None, censored: true });
        }
        out
    }

    pub fn run_rgcusum(&self, h: f64, horizon: u64, base_seed: u64, run: u64) -> RunRecord {
        self.crossing_times(&[h], horizon, base_seed, run).pop().expect("one threshold")
    }

    /// RGCUSUM and GCUSUM on the same path.
    pub fn run_paired(
        &self,
        engine: &GcusumEngine,
        h: f64,
        horizon: u64,
        base_seed: u64,
        run: u64,
    ) -> Result<(RunRecord, RunRecord)> {
        let s2 = self.model.sigma2();
        let mut path = SamplePath::new(self, base_seed, run);
        let mut omega = 0.0;
        let mut g = GcusumState::new(h)?;
        let mut r_stop = None;
        let mut g_stop = None;
        while (r_stop.is_none() || g_stop.is_none()) && path.t < horizon {
            path.next_residual();
            let (t, xt) = (path.t, &path.residual);
            if r_stop.is_none() {
                omega += increment(xt, &self.bounds, s2);
                if omega >= h {
                    r_stop = Some((t, omega - h));
                }
            }
            if g_stop.is_none() {
                let v = engine.v_stat(xt)?.value;
                if g.step(v)? {
                    g_stop = Some((t, g.statistic() - h));
                }
            }
        }
        let rec = |s: Option<(u64, f64)>| match s {
            Some((t, o)) => RunRecord { run, stop_time: t, overshoot: Some(o), censored: false },
            None => RunRecord { run, stop_time: horizon, overshoot: None, censored: true },
        };
        Ok((rec(r_stop), rec(g_stop)))
    }

    pub fn run_gcusum(
        &self,
        engine: &GcusumEngine,
        h: f64,
        horizon: u64,
        base_seed: u64,
        run: u64,
    ) -> Result<RunRecord> {
        let mut path = SamplePath::new(self, base_seed, run);
        let mut g = GcusumState::new(h)?;
        while path.t < horizon {
            let v = engine.v_stat(path.next_residual())?.value;
            if g.step(v)? {
                return Ok(RunRecord { run, stop_time: path.t, overshoot: Some(g.statistic() - h), censored: false });
            }
        }
        Ok(RunRecord { run, stop_time: horizon, overshoot: None, censored: true })
    }

    /// RGCUSUM over `runs` independent paths at threshold `h`.
    pub fn estimate(&self, h: f64, horizon: u64, base_seed: u64, runs: usize) -> Result<RunStats> {
        check_h(h)?;
        check_run_shape(horizon, runs)?;
        let records = par_map(runs, |r| self.run_rgcusum(h, horizon, base_seed, r));
        Ok(RunStats::from_records(records, h, horizon, self.attack.onset()))
    }

    /// Average run length to false alarm (attack removed).
    pub fn estimate_arl(&self, h: f64, horizon: u64, base_seed: u64, runs: usize) -> Result<RunStats> {
        self.without_attack().estimate(h, horizon, base_seed, runs)
    }

    /// Detection delay under the configured attack.
    pub fn estimate_edd(&self, h: f64, horizon: u64, base_seed: u64, runs: usize) -> Result<RunStats> {
        if self.attack.is_off() {
            return Err(Error::Config("detection delay needs an attack".into()));
        }
        self.estimate(h, horizon, base_seed, runs)
    }

    pub fn estimate_gcusum(
        &self,
        cfg: GcusumConfig,
        h: f64,
        horizon: u64,
        base_seed: u64,
        runs: usize,
    ) -> Result<RunStats> {
        check_h(h)?;
        check_run_shape(horizon, runs)?;
        let engine = GcusumEngine::new(&self.model, self.bounds, cfg)?;
        let records = par_map(runs, |r| self.run_gcusum(&engine, h, horizon, base_seed, r));
        let records = records.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(RunStats::from_records(records, h, horizon, self.attack.onset()))
    }

    /// Statistics at every threshold of an ascending grid, reusing each
    /// run's path for all thresholds.
    pub fn sweep(&self, hs: &[f64], horizon: u64, base_seed: u64, runs: usize) -> Result<Vec<RunStats>> {
        if hs.is_empty() {
            return Err(Error::Config("threshold grid is empty".into()));
        }
        for &h in hs {
            check_h(h)?;
        }
        if hs.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Config("threshold grid must be ascending".into()));
        }
        check_run_shape(horizon, runs)?;
        let per_run = par_map(runs, |r| self.crossing_times(hs, horizon, base_seed, r));
        let onset = self.attack.onset();
        Ok((0..hs.len())
            .map(|i| {
                let records = per_run.iter().map(|recs| recs[i].clone()).collect();
                RunStats::from_records(records, hs[i], horizon, onset)
            })
            .collect())
    }

    /// ARL (attack removed) and detection delay (attack kept) on a
    /// threshold grid, with common random numbers across thresholds.
    pub fn curve_sweep(
        &self,
        hs: &[f64],
        arl_horizon: u64,
        edd_horizon: u64,
        base_seed: u64,
        runs: usize,
    ) -> Result<Vec<CurveRow>> {
        let arl = self.without_attack().sweep(hs, arl_horizon, base_seed, runs)?;
        let edd = if self.attack.is_off() { None } else { Some(self.sweep(hs, edd_horizon, base_seed, runs)?) };
        Ok(arl
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let e = edd.as_ref().map(|e| &e[i]);
                CurveRow {
                    h: a.h,
                    arl: a.mean_stop_time,
                    arl_std_error: a.std_error,
                    arl_censored_fraction: a.censored_fraction,
                    edd: e.and_then(|e| e.mean_delay),
                    edd_std_error: e.and_then(|e| e.delay_std_error),
                    edd_censored_fraction: e.map(|e| e.censored_fraction),
                    overshoot_ratio: e
                        .and_then(|e| e.mean_overshoot)
                        .map(|o| if a.h > 0.0 { o / a.h } else { f64::NAN }),
                }
            })
            .collect())
    }

    /// Default censoring horizon when no γ is given: `50 · max(h / ĝ₀, 1)`
    /// steps past the onset, where `ĝ₀` is the mean pre-attack increment of
    /// a fixed-seed pilot path. The drift bound `Σ U_m` is used instead when
    /// it is smaller, which only happens through sampling error.
    pub fn default_horizon(&self, h: f64) -> u64 {
        let s2 = self.model.sigma2();
        let bound: f64 =
            self.projector.row_norms().iter().map(|&p| crate::bounds::lemma1_upper_norm(p, &self.bounds, s2)).sum();
        let pilot = mean_increment(&self.without_attack(), PILOT_SEED, PILOT_STEPS);
        let drift = if pilot > 0.0 { pilot.min(bound) } else { bound };
        let gamma = if drift > 0.0 { (h / drift).max(1.0) } else { 1.0 };
        let onset = if self.attack.is_off() { 0 } else { self.attack.onset() - 1 };
        (HORIZON_FACTOR * gamma).ceil() as u64 + onset
    }
}

const PILOT_SEED: u64 = 0x5eed;
const PILOT_STEPS: usize = 1000;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Detector {
    #[default]
    Rgcusum,
    Gcusum,
}

fn default_runs() -> usize {
    300
}

fn default_attack() -> AttackSpec {
    AttackSpec::none()
}

/// JSON scenario document. Paths are relative to the document's directory;
/// `case` may also be `builtin:ieee14`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub case: Option<String>,
    #[serde(default)]
    pub placement: Option<String>,
    /// Matrix CSV for `H`, as an alternative to `case`.
    #[serde(default)]
    pub model: Option<String>,
    pub sigma2: f64,
    pub rho_l: f64,
    pub rho_u: f64,
    #[serde(default)]
    pub ramps: Vec<LoadRamp>,
    #[serde(default = "default_attack")]
    pub attack: AttackSpec,
    /// Explicit threshold; otherwise the floor for `gamma` is used.
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub horizon: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub detector: Detector,
}

pub const BUILTIN_IEEE14: &str = "builtin:ieee14";

/// A scenario with files loaded and defaults resolved.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub simulator: Simulator,
    pub h: f64,
    pub horizon: u64,
    pub seed: u64,
    pub runs: usize,
    pub detector: Detector,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub detector: Detector,
    pub h: f64,
    pub horizon: u64,
    pub seed: u64,
    pub stats: RunStats,
    pub warnings: Vec<String>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| match e.classify() {
            serde_json::error::Category::Syntax | serde_json::error::Category::Eof => {
                Error::Syntax { line: e.line(), message: format!("scenario: {e}") }
            }
            _ => Error::Config(format!("scenario: {e}")),
        })
    }

    /// Loads referenced files (relative to `base_dir`) and resolves defaults.
    pub fn build(&self, base_dir: &Path) -> Result<Scenario> {
        let read = |p: &str| std::fs::read_to_string(base_dir.join(p));
        let bounds = AttackBounds::new(self.rho_l, self.rho_u)?;
        let (model, trajectory) = match (&self.case, &self.model) {
            (Some(case), None) => {
                let file = if case == BUILTIN_IEEE14 { parse_case(IEEE14_CASE)? } else { parse_case(&read(case)?)? };
                let placement = match &self.placement {
                    Some(p) => parse_placement(&read(p)?)?,
                    None => file
                        .placement
                        .ok_or_else(|| Error::Config("case has no meters and no placement file was given".into()))?,
                };
                let model = file.case.model(&placement, self.sigma2)?;
                let trajectory = LinearTrajectory::new(&file.case, &self.ramps)?;
                (model, trajectory)
            }
            (None, Some(path)) => {
                if !self.ramps.is_empty() {
                    return Err(Error::Config("load ramps need a grid case".into()));
                }
                let model = LinearModel::new(read_matrix_csv(&read(path)?)?, self.sigma2)?;
                let n = model.num_params();
                (model, LinearTrajectory::constant(vec![0.0; n]))
            }
            _ => return Err(Error::Config("give exactly one of `case` or `model`".into())),
        };
        let projector = model.projector();
        let (attack, warnings) = self.attack.compile(&projector, &bounds)?;
        let h = match (self.threshold, self.gamma) {
            (Some(h), _) => {
                check_h(h)?;
                h
            }
            (None, Some(g)) => threshold_floor(&projector, &bounds, model.sigma2(), g)?,
            (None, None) => return Err(Error::Config("give `threshold` or `gamma`".into())),
        };
        let simulator = Simulator::new(model, trajectory, attack, bounds)?;
        let horizon = match (self.horizon, self.gamma) {
            (Some(t), _) => t,
            (None, Some(g)) => (HORIZON_FACTOR * g).ceil() as u64,
            (None, None) => simulator.default_horizon(h),
        };
        check_run_shape(horizon, self.runs)?;
        for w in &warnings {
            log::warn!("{w}");
        }
        Ok(Scenario { simulator, h, horizon, seed: self.seed, runs: self.runs, detector: self.detector, warnings })
    }
}

impl Scenario {
    pub fn run(&self, gcusum: GcusumConfig) -> Result<ScenarioReport> {
        let stats = match self.detector {
            Detector::Rgcusum => self.simulator.estimate(self.h, self.horizon, self.seed, self.runs)?,
            Detector::Gcusum => self.simulator.estimate_gcusum(gcusum, self.h, self.horizon, self.seed, self.runs)?,
        };
        let mut warnings = self.warnings.clone();
        if let Some(w) = stats.censoring_warning() {
            log::warn!("{w}");
            warnings.push(w);
        }
        Ok(ScenarioReport {
            detector: self.detector,
            h: self.h,
            horizon: self.horizon,
            seed: self.seed,
            stats,
            warnings,
        })
    }
}

/// Mean increment `E{Σ max(ζ,0)}` estimated from one long path; useful for
/// choosing thresholds.
pub fn mean_increment(sim: &Simulator, base_seed: u64, steps: usize) -> f64 {
    let inc = sim.increments(base_seed, 0, steps);
    pairwise_sum(&inc) / steps as f64
}
