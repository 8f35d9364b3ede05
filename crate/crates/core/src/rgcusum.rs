//! Relaxed generalized CUSUM (RGCUSUM).
//!
//! Dropping the subspace constraint on the attack makes the per-meter
//! likelihood ratio separable. Each meter contributes
//!
//! ```text
//! ζ_m = sup_{ρ_L ≤ |μ| ≤ ρ_U} (2 μ x̃_m − μ²) / (2σ²)
//! ```
//!
//! which has the closed form in [`zeta`]. The statistic accumulates
//! `Σ_m max{ζ_m, 0}` every step and never resets, so the test is
//! `T_R = min{K : ω(K) ≥ h}` with `ω(K) = Σ_{t≤K} Σ_m max{ζ_m(t), 0}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Projector;

/// Band `[ρ_L, ρ_U]` for the magnitude of nonzero residual-space attack
/// components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackBounds {
    rho_l: f64,
    rho_u: f64,
}

impl AttackBounds {
    pub fn new(rho_l: f64, rho_u: f64) -> Result<Self> {
        if !(rho_l > 0.0 && rho_l <= rho_u && rho_u.is_finite()) {
            return Err(Error::InvalidBounds { rho_l, rho_u });
        }
        Ok(Self { rho_l, rho_u })
    }

    pub fn rho_l(&self) -> f64 {
        self.rho_l
    }

    pub fn rho_u(&self) -> f64 {
        self.rho_u
    }
}

/// Per-meter relaxed log-likelihood ratio `ζ`.
///
/// Continuous in `x̃`; the three branches meet at `|x̃| = ρ_L` and
/// `|x̃| = ρ_U`.
#[inline]
pub fn zeta(x_tilde: f64, bounds: &AttackBounds, sigma2: f64) -> f64 {
    let ax = x_tilde.abs();
    let (rl, ru) = (bounds.rho_l, bounds.rho_u);
    let num = if ax < rl {
        2.0 * ax * rl - rl * rl
    } else if ax > ru {
        2.0 * ax * ru - ru * ru
    } else {
        ax * ax
    };
    num / (2.0 * sigma2)
}

/// `Σ_m max{ζ_m, 0}`, summed in meter order.
#[inline]
pub fn increment(x_tilde: &[f64], bounds: &AttackBounds, sigma2: f64) -> f64 {
    let mut acc = 0.0;
    for &x in x_tilde {
        acc += zeta(x, bounds, sigma2).max(0.0);
    }
    acc
}

/// Running RGCUSUM statistic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RgcusumState {
    omega: f64,
    k: u64,
    h: f64,
    alarmed: bool,
    overshoot: Option<f64>,
}

impl RgcusumState {
    /// Fresh state with `ω(0) = 0`. `h = 0` is allowed and alarms on the
    /// first sample.
    pub fn new(h: f64) -> Result<Self> {
        if !(h >= 0.0 && h.is_finite()) {
            return Err(Error::InvalidThreshold(h));
        }
        Ok(Self { omega: 0.0, k: 0, h, alarmed: false, overshoot: None })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Samples processed so far.
    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn threshold(&self) -> f64 {
        self.h
    }

    pub fn alarmed(&self) -> bool {
        self.alarmed
    }

    /// `ω(T_R) − h`, set once the alarm fires.
    pub fn overshoot(&self) -> Option<f64> {
        self.overshoot
    }

    /// Adds a precomputed nonnegative increment. Returns whether the alarm
    /// fired on this step.
    pub fn step_increment(&mut self, inc: f64) -> Result<bool> {
        if self.alarmed {
            return Err(Error::SteppedAfterAlarm);
        }
        debug_assert!(inc >= 0.0);
        self.omega += inc;
        self.k += 1;
        if self.omega >= self.h {
            self.alarmed = true;
            self.overshoot = Some(self.omega - self.h);
        }
        Ok(self.alarmed)
    }

    /// One step of the recursion from a residual vector.
    pub fn step(&mut self, x_tilde: &[f64], bounds: &AttackBounds, sigma2: f64) -> Result<bool> {
        if self.alarmed {
            return Err(Error::SteppedAfterAlarm);
        }
        self.step_increment(increment(x_tilde, bounds, sigma2))
    }
}

/// Outcome of running a detector over a finite stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoppingReport {
    /// Stopping time, or the number of samples seen when censored.
    pub stop_time: u64,
    pub censored: bool,
    /// Statistic at the stopping time (or at the end of the stream).
    pub statistic: f64,
    pub overshoot: Option<f64>,
    pub trace: Vec<f64>,
}

/// Runs RGCUSUM over raw observations until alarm or end of stream.
///
/// A stream that ends first yields a censored report rather than an error.
pub fn run<I, V>(stream: I, projector: &Projector, bounds: &AttackBounds, sigma2: f64, h: f64) -> Result<StoppingReport>
where
    I: IntoIterator<Item = V>,
    V: AsRef<[f64]>,
{
    let mut state = RgcusumState::new(h)?;
    let mut buf = vec![0.0; projector.dim()];
    let mut trace = Vec::new();
    for x in stream {
        projector.residual_into(x.as_ref(), &mut buf)?;
        let fired = state.step(&buf, bounds, sigma2)?;
        trace.push(state.omega);
        if fired {
            break;
        }
    }
    Ok(StoppingReport {
        stop_time: state.k,
        censored: !state.alarmed,
        statistic: state.omega,
        overshoot: state.overshoot,
        trace,
    })
}
