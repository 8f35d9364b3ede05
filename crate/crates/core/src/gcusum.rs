//! Generalized CUSUM (GCUSUM) with exhaustive support search.
//!
//! The per-step statistic is
//!
//! ```text
//! v_t = max_A sup_{μ ∈ R⊥(H), supp μ ⊆ A, ρ_L ≤ |μ_m| ≤ ρ_U on A} (2μᵀx̃ − ‖μ‖²) / (2σ²)
//! ```
//!
//! Since `2μᵀx̃ − ‖μ‖² = ‖x̃‖² − ‖μ − x̃‖²`, the inner supremum is a Euclidean
//! projection of `x̃` onto the constraint set. Fixing the sign of every
//! coordinate in `A` turns that set into the intersection of a subspace and a
//! box, which Dykstra's alternating projections handle exactly. The outer
//! search visits every nonempty support and sign orthant (`3^M − 1` patterns),
//! pruned by the separable upper bound that also defines RGCUSUM.
//!
//! Cost is exponential in `M`; this module is a reference for small models.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{column_basis, LinearModel, Projector};
use crate::rgcusum::AttackBounds;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GcusumConfig {
    /// Largest `M` the exhaustive search accepts.
    pub max_meters: usize,
    /// Stop the inner solve once an iteration moves less than this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Largest subspace/box gap still accepted as feasible.
    pub feasibility_tolerance: f64,
}

impl Default for GcusumConfig {
    fn default() -> Self {
        Self { max_meters: 12, tolerance: 1e-8, max_iterations: 10_000, feasibility_tolerance: 1e-6 }
    }
}

/// Candidate attacked support `A` with a fixed sign per coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SupportPattern {
    /// Zero-based meter indices, ascending.
    pub support: Vec<usize>,
    /// `+1` or `-1` for each entry of `support`.
    pub signs: Vec<i8>,
}

impl SupportPattern {
    pub fn new(support: Vec<usize>, signs: Vec<i8>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::Config("support pattern must be nonempty".into()));
        }
        if support.len() != signs.len() {
            return Err(Error::DimensionMismatch { expected: support.len(), actual: signs.len() });
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::Config("signs must be +1 or -1".into()));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("support must be strictly ascending".into()));
        }
        Ok(Self { support, signs })
    }
}

/// Orthonormal basis of `col(H_A)` for one support; the feasible subspace in
/// support coordinates is its orthogonal complement.
#[derive(Debug, Clone)]
struct SubsetGeometry {
    support: Vec<usize>,
    basis: DMatrix<f64>,
}

impl SubsetGeometry {
    fn new(h: &DMatrix<f64>, support: Vec<usize>) -> Self {
        let rows = DMatrix::from_fn(support.len(), h.ncols(), |i, j| h[(support[i], j)]);
        let basis = column_basis(&rows);
        Self { support, basis }
    }

    fn free_dim(&self) -> usize {
        self.support.len() - self.basis.ncols()
    }

    /// Orthogonal projection onto `{y : H_Aᵀ y = 0}`.
    fn project(&self, y: &mut DVector<f64>) {
        if self.basis.ncols() == 0 {
            return;
        }
        let coeff = self.basis.tr_mul(y);
        y.gemv(-1.0, &self.basis, &coeff, 1.0);
    }
}

enum InnerOutcome {
    Feasible(DVector<f64>),
    Infeasible,
    NoConvergence { iterations: usize, violation: f64 },
}

fn box_limits(pattern_signs: &[i8], bounds: &AttackBounds) -> (Vec<f64>, Vec<f64>) {
    pattern_signs
        .iter()
        .map(|&s| if s > 0 { (bounds.rho_l(), bounds.rho_u()) } else { (-bounds.rho_u(), -bounds.rho_l()) })
        .unzip()
}

/// Dykstra's alternating projections between the support subspace and the
/// sign-fixed box, starting from `target`.
///
/// The returned point is the box iterate. It satisfies the band exactly and
/// the subspace constraint to within the feasibility tolerance, so its
/// objective never exceeds the separable RGCUSUM bound.
///
/// Infeasibility is only reported with a separating certificate: a vector
/// `w` orthogonal to the subspace whose maximum over the box is negative.
/// Iterates alone are not enough, since Dykstra's iterates can sit still for
/// several steps while the correction terms catch up.
fn dykstra(target: &DVector<f64>, geom: &SubsetGeometry, lo: &[f64], hi: &[f64], cfg: &GcusumConfig) -> InnerOutcome {
    let n = target.len();
    let mut x = target.clone();
    let mut p = DVector::<f64>::zeros(n);
    let mut q = DVector::<f64>::zeros(n);
    let mut y = DVector::<f64>::zeros(n);
    let mut y_prev = DVector::<f64>::from_element(n, f64::INFINITY);
    let mut w = DVector::<f64>::zeros(n);
    let scale = lo.iter().chain(hi).fold(0.0f64, |a, b| a.max(b.abs()));
    let mut gap = f64::INFINITY;
    for _ in 0..cfg.max_iterations {
        // Subspace step.
        y.copy_from(&x);
        y += &p;
        let before = y.clone();
        geom.project(&mut y);
        p = before - &y;
        // Box step.
        let mut movement = (&y - &y_prev).amax();
        gap = 0.0;
        for i in 0..n {
            let v = y[i] + q[i];
            let c = v.clamp(lo[i], hi[i]);
            q[i] = v - c;
            movement = movement.max((c - x[i]).abs());
            gap = gap.max((c - y[i]).abs());
            x[i] = c;
        }
        std::mem::swap(&mut y, &mut y_prev);
        if gap <= cfg.feasibility_tolerance {
            // Both iterates still and coincident; a stall alone is not
            // convergence while the corrections keep shifting by the gap.
            if movement <= cfg.tolerance && gap <= cfg.tolerance {
                return InnerOutcome::Feasible(x);
            }
            continue;
        }
        // w = -(x - P_S x) lies in the orthogonal complement of the subspace.
        w.copy_from(&x);
        geom.project(&mut w);
        w -= &x;
        // A negative support value bounds dist(S, B) below by -support/‖w‖.
        // Demand more than half the tolerance, plus the rounding in w.
        let support: f64 = (0..n).map(|i| (w[i] * lo[i]).max(w[i] * hi[i])).sum();
        let w_norm = w.norm();
        let rounding = 8.0 * f64::EPSILON * n as f64 * scale * x.norm();
        if w_norm > 0.5 * cfg.feasibility_tolerance && support < -0.5 * cfg.feasibility_tolerance * w_norm - rounding {
            return InnerOutcome::Infeasible;
        }
    }
    if gap <= cfg.feasibility_tolerance {
        InnerOutcome::Feasible(x)
    } else {
        InnerOutcome::NoConvergence { iterations: cfg.max_iterations, violation: gap }
    }
}

fn project_with_geometry(
    x_tilde: &[f64],
    geom: &SubsetGeometry,
    signs: &[i8],
    bounds: &AttackBounds,
    cfg: &GcusumConfig,
) -> InnerOutcome {
    if geom.free_dim() == 0 {
        // Only μ = 0 satisfies the subspace constraint on this support.
        return InnerOutcome::Infeasible;
    }
    let target = DVector::from_iterator(geom.support.len(), geom.support.iter().map(|&m| x_tilde[m]));
    let (lo, hi) = box_limits(signs, bounds);
    dykstra(&target, geom, &lo, &hi, cfg)
}

fn scatter(m: usize, support: &[usize], mu_a: &DVector<f64>) -> Vec<f64> {
    let mut mu = vec![0.0; m];
    for (k, &i) in support.iter().enumerate() {
        mu[i] = mu_a[k];
    }
    mu
}

/// Euclidean projection of `x̃` onto the pattern's constraint set, or `None`
/// when the set is empty.
pub fn project_feasible(
    x_tilde: &[f64],
    model: &LinearModel,
    pattern: &SupportPattern,
    bounds: &AttackBounds,
    cfg: &GcusumConfig,
) -> Result<Option<Vec<f64>>> {
    let m = model.num_meters();
    if x_tilde.len() != m {
        return Err(Error::DimensionMismatch { expected: m, actual: x_tilde.len() });
    }
    if let Some(&bad) = pattern.support.iter().find(|&&i| i >= m) {
        return Err(Error::Config(format!("support index {bad} out of range for {m} meters")));
    }
    let geom = SubsetGeometry::new(model.h(), pattern.support.clone());
    match project_with_geometry(x_tilde, &geom, &pattern.signs, bounds, cfg) {
        InnerOutcome::Feasible(mu_a) => Ok(Some(scatter(m, &pattern.support, &mu_a))),
        InnerOutcome::Infeasible => Ok(None),
        InnerOutcome::NoConvergence { iterations, violation } => Err(Error::NoConvergence { iterations, violation }),
    }
}

/// Per-step GCUSUM statistic with its maximizing pattern.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VStat {
    pub value: f64,
    pub pattern: Option<SupportPattern>,
    pub mu: Option<Vec<f64>>,
    /// No pattern was feasible; `value` is the finite fallback
    /// `−(‖x̃‖² + ρ_L²)/(2σ²)`.
    pub sentinel: bool,
    /// Patterns whose inner projection actually ran.
    pub patterns_evaluated: usize,
    /// Inner solves that hit the iteration cap and were treated as
    /// infeasible.
    pub no_convergence: usize,
}

/// Exhaustive GCUSUM evaluator with per-support geometry cached for one
/// model.
#[derive(Debug, Clone)]
pub struct GcusumEngine {
    projector: Projector,
    sigma2: f64,
    bounds: AttackBounds,
    cfg: GcusumConfig,
    subsets: Vec<SubsetGeometry>,
}

impl GcusumEngine {
    pub fn new(model: &LinearModel, bounds: AttackBounds, cfg: GcusumConfig) -> Result<Self> {
        let m = model.num_meters();
        if m > cfg.max_meters || m >= usize::BITS as usize {
            return Err(Error::TooLarge { meters: m, limit: cfg.max_meters });
        }
        let subsets = (1u64..(1u64 << m))
            .map(|mask| {
                let support: Vec<usize> = (0..m).filter(|&i| mask & (1 << i) != 0).collect();
                SubsetGeometry::new(model.h(), support)
            })
            .collect();
        Ok(Self { projector: model.projector(), sigma2: model.sigma2(), bounds, cfg, subsets })
    }

    pub fn projector(&self) -> &Projector {
        &self.projector
    }

    /// `v_t` for one residual vector.
    pub fn v_stat(&self, x_tilde: &[f64]) -> Result<VStat> {
        let m = self.projector.dim();
        if x_tilde.len() != m {
            return Err(Error::DimensionMismatch { expected: m, actual: x_tilde.len() });
        }
        let (rl, ru) = (self.bounds.rho_l(), self.bounds.rho_u());
        // Best value of 2μx − μ² per coordinate and sign, ignoring the
        // subspace. Summed over a pattern it bounds the pattern's objective.
        let coord_sup = |x: f64, s: i8| {
            let c = (f64::from(s) * x).clamp(rl, ru);
            2.0 * c * f64::from(s) * x - c * c
        };
        let mut candidates: Vec<(f64, usize, u32)> = Vec::new();
        for (idx, geom) in self.subsets.iter().enumerate() {
            if geom.free_dim() == 0 {
                continue;
            }
            let k = geom.support.len();
            for smask in 0u32..(1u32 << k) {
                let ub: f64 =
                    geom.support.iter().enumerate().map(|(j, &i)| coord_sup(x_tilde[i], sign_of(smask, j))).sum();
                candidates.push((ub, idx, smask));
            }
        }
        candidates.sort_by(|a, b| b.0.total_cmp(&a.0));

        let mut best: Option<(f64, usize, u32, DVector<f64>)> = None;
        let mut evaluated = 0;
        let mut stalled = 0;
        for &(ub, idx, smask) in &candidates {
            if let Some((obj, ..)) = &best {
                if ub <= *obj {
                    break;
                }
            }
            let geom = &self.subsets[idx];
            let signs: Vec<i8> = (0..geom.support.len()).map(|j| sign_of(smask, j)).collect();
            evaluated += 1;
            match project_with_geometry(x_tilde, geom, &signs, &self.bounds, &self.cfg) {
                InnerOutcome::Feasible(mu_a) => {
                    let obj: f64 =
                        geom.support.iter().zip(mu_a.iter()).map(|(&i, &mu)| 2.0 * mu * x_tilde[i] - mu * mu).sum();
                    if best.as_ref().is_none_or(|b| obj > b.0) {
                        best = Some((obj, idx, smask, mu_a));
                    }
                }
                InnerOutcome::Infeasible => {}
                InnerOutcome::NoConvergence { iterations, violation } => {
                    stalled += 1;
                    log::debug!(
                        "inner projection stalled after {iterations} iterations (gap {violation:e}); pattern skipped"
                    );
                }
            }
        }

        let two_s2 = 2.0 * self.sigma2;
        Ok(match best {
            Some((obj, idx, smask, mu_a)) => {
                let geom = &self.subsets[idx];
                let signs = (0..geom.support.len()).map(|j| sign_of(smask, j)).collect();
                VStat {
                    value: obj / two_s2,
                    pattern: Some(SupportPattern { support: geom.support.clone(), signs }),
                    mu: Some(scatter(m, &geom.support, &mu_a)),
                    sentinel: false,
                    patterns_evaluated: evaluated,
                    no_convergence: stalled,
                }
            }
            None => {
                let norm2: f64 = x_tilde.iter().map(|v| v * v).sum();
                VStat {
                    value: -(norm2 + rl * rl) / two_s2,
                    pattern: None,
                    mu: None,
                    sentinel: true,
                    patterns_evaluated: evaluated,
                    no_convergence: stalled,
                }
            }
        })
    }

    /// Runs GCUSUM over raw observations until alarm or end of stream.
    pub fn run<I, V>(&self, stream: I, h: f64) -> Result<GcusumReport>
    where
        I: IntoIterator<Item = V>,
        V: AsRef<[f64]>,
    {
        let mut state = GcusumState::new(h)?;
        let mut buf = vec![0.0; self.projector.dim()];
        let mut trace = Vec::new();
        let mut patterns = Vec::new();
        let mut sentinel_steps = 0;
        for x in stream {
            self.projector.residual_into(x.as_ref(), &mut buf)?;
            let v = self.v_stat(&buf)?;
            sentinel_steps += usize::from(v.sentinel);
            patterns.push(v.pattern);
            let fired = state.step(v.value)?;
            trace.push(state.statistic());
            if fired {
                break;
            }
        }
        Ok(GcusumReport {
            stop_time: state.k(),
            censored: !state.alarmed(),
            statistic: state.statistic(),
            trace,
            patterns,
            sentinel_steps,
        })
    }
}

#[inline]
fn sign_of(mask: u32, j: usize) -> i8 {
    if mask & (1 << j) != 0 {
        -1
    } else {
        1
    }
}

/// Convenience wrapper building a one-off engine.
pub fn v_stat(x_tilde: &[f64], model: &LinearModel, bounds: &AttackBounds, cfg: &GcusumConfig) -> Result<VStat> {
    GcusumEngine::new(model, *bounds, *cfg)?.v_stat(x_tilde)
}

/// GCUSUM statistic `V_K = max{V_{K−1}, 0} + v_K`, `V_0 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GcusumState {
    statistic: f64,
    k: u64,
    h: f64,
    alarmed: bool,
}

impl GcusumState {
    pub fn new(h: f64) -> Result<Self> {
        if !(h >= 0.0 && h.is_finite()) {
            return Err(Error::InvalidThreshold(h));
        }
        Ok(Self { statistic: 0.0, k: 0, h, alarmed: false })
    }

    /// Starts from an arbitrary `V` (useful for exercising the recursion).
    pub fn with_statistic(h: f64, statistic: f64) -> Result<Self> {
        let mut s = Self::new(h)?;
        s.statistic = statistic;
        Ok(s)
    }

    pub fn statistic(&self) -> f64 {
        self.statistic
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn alarmed(&self) -> bool {
        self.alarmed
    }

    pub fn step(&mut self, v: f64) -> Result<bool> {
        if self.alarmed {
            return Err(Error::SteppedAfterAlarm);
        }
        self.statistic = self.statistic.max(0.0) + v;
        self.k += 1;
        self.alarmed = self.statistic >= self.h;
        Ok(self.alarmed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GcusumReport {
    pub stop_time: u64,
    pub censored: bool,
    pub statistic: f64,
    pub trace: Vec<f64>,
    /// Maximizing pattern at each step (`None` when no pattern was feasible).
    pub patterns: Vec<Option<SupportPattern>>,
    pub sentinel_steps: usize,
}
