//! Analytic performance bounds for RGCUSUM.
//!
//! Before an attack `x̃_m ~ N(0, σ²‖p_m‖²)` and each meter's expected
//! increment is at most
//!
//! ```text
//! U_m = ½‖p_m‖² + ((ρ_L + ρ_U)/σ) ‖p_m‖ √(2/π)
//! ```
//!
//! so `h ≥ γ Σ U_m` keeps the average run length above `γ`. After an attack
//! with `|μ_m|` in the band, the expected increment is at least
//!
//! ```text
//! L_m = ρ_L²/(2σ²) [erf(2ρ_U / (√2 σ‖p_m‖)) − erf((ρ_L + ρ_U) / (√2 σ‖p_m‖))]
//! ```
//!
//! and Wald's approximation bounds the worst-case delay by `h / Σ L_m`.

use std::f64::consts::{FRAC_2_PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::erf::erf_diff;
use crate::error::{Error, Result};
use crate::model::Projector;
use crate::rgcusum::AttackBounds;

/// Denominators at or below this make the delay ceiling vacuous.
pub const VACUOUS_DENOMINATOR: f64 = 1e-300;

/// Upper bound on the pre-attack mean of `max{ζ_m, 0}` for row norm `p`.
pub fn lemma1_upper_norm(p: f64, bounds: &AttackBounds, sigma2: f64) -> f64 {
    if p == 0.0 {
        return 0.0;
    }
    let sigma = sigma2.sqrt();
    0.5 * p * p + (bounds.rho_l() + bounds.rho_u()) / sigma * p * FRAC_2_PI.sqrt()
}

/// Lower bound on the post-attack mean of `max{ζ_m, 0}` for row norm `p`.
pub fn lemma1_lower_norm(p: f64, bounds: &AttackBounds, sigma2: f64) -> f64 {
    if p == 0.0 {
        return 0.0;
    }
    let (rl, ru) = (bounds.rho_l(), bounds.rho_u());
    let scale = SQRT_2 * sigma2.sqrt() * p;
    let diff = erf_diff((rl + ru) / scale, 2.0 * ru / scale);
    rl * rl / (2.0 * sigma2) * diff.max(0.0)
}

pub fn lemma1_upper(m: usize, proj: &Projector, bounds: &AttackBounds, sigma2: f64) -> f64 {
    lemma1_upper_norm(proj.row_norms()[m], bounds, sigma2)
}

pub fn lemma1_lower(m: usize, proj: &Projector, bounds: &AttackBounds, sigma2: f64) -> f64 {
    lemma1_lower_norm(proj.row_norms()[m], bounds, sigma2)
}

/// Smallest threshold guaranteeing an average run length of at least `gamma`.
pub fn threshold_floor(proj: &Projector, bounds: &AttackBounds, sigma2: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let sum: f64 = proj.row_norms().iter().map(|&p| lemma1_upper_norm(p, bounds, sigma2)).sum();
    Ok(gamma * sum)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma >= 1.0 && gamma.is_finite()) {
        return Err(Error::Config(format!("gamma must be a finite value >= 1, got {gamma}")));
    }
    Ok(())
}

/// Worst-case detection delay ceiling, or `Vacuous` when the per-step drift
/// bound underflows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum DelayCeiling {
    Finite(f64),
    Vacuous,
}

impl DelayCeiling {
    pub fn value(&self) -> f64 {
        match *self {
            DelayCeiling::Finite(v) => v,
            DelayCeiling::Vacuous => f64::INFINITY,
        }
    }

    pub fn is_vacuous(&self) -> bool {
        matches!(self, DelayCeiling::Vacuous)
    }
}

pub fn delay_ceiling(h: f64, proj: &Projector, bounds: &AttackBounds, sigma2: f64) -> Result<DelayCeiling> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidThreshold(h));
    }
    let denom: f64 = proj.row_norms().iter().map(|&p| lemma1_lower_norm(p, bounds, sigma2)).sum();
    Ok(ceiling_from_denominator(h, denom))
}

fn ceiling_from_denominator(h: f64, denom: f64) -> DelayCeiling {
    if denom <= VACUOUS_DENOMINATOR {
        DelayCeiling::Vacuous
    } else {
        DelayCeiling::Finite(h / denom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub gamma: f64,
    pub sigma2: f64,
    pub rho_l: f64,
    pub rho_u: f64,
    pub h_floor: f64,
    /// Threshold the delay ceiling was evaluated at.
    pub h: f64,
    pub delay_ceiling: DelayCeiling,
    pub per_meter_upper: Vec<f64>,
    pub per_meter_lower: Vec<f64>,
}

impl BoundsReport {
    /// Evaluates every bound. The delay ceiling uses `h` when given and the
    /// threshold floor otherwise.
    pub fn compute(proj: &Projector, bounds: &AttackBounds, sigma2: f64, gamma: f64, h: Option<f64>) -> Result<Self> {
        check_gamma(gamma)?;
        let per_meter_upper: Vec<f64> =
            proj.row_norms().iter().map(|&p| lemma1_upper_norm(p, bounds, sigma2)).collect();
        let per_meter_lower: Vec<f64> =
            proj.row_norms().iter().map(|&p| lemma1_lower_norm(p, bounds, sigma2)).collect();
        let h_floor = gamma * per_meter_upper.iter().sum::<f64>();
        let h = h.unwrap_or(h_floor);
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidThreshold(h));
        }
        let delay_ceiling = ceiling_from_denominator(h, per_meter_lower.iter().sum());
        Ok(Self {
            gamma,
            sigma2,
            rho_l: bounds.rho_l(),
            rho_u: bounds.rho_u(),
            h_floor,
            h,
            delay_ceiling,
            per_meter_upper,
            per_meter_lower,
        })
    }
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use crate::model::LinearModel;
    use nalgebra::DMatrix;

    fn paper() -> AttackBounds {
        AttackBounds::new(0.025, 100.0).unwrap()
    }

    fn moderate() -> AttackBounds {
        AttackBounds::new(0.5, 1.0).unwrap()
    }

    #[test]
    fn upper_reference_value() {
        assert_eq!(lemma1_upper_norm(0.0, &paper(), 1.0), 0.0);
        let u = lemma1_upper_norm(0.5f64.sqrt(), &paper(), 1.0);
        assert!((u - 56.683063094364336).abs() < 1e-12, "{u}");
    }

    #[test]
    fn lower_reference_value() {
        let l = lemma1_lower_norm(1.0, &moderate(), 1.0);
        assert!((l - 0.0110142673301697147).abs() < 1e-15, "{l}");
        assert_eq!(lemma1_lower_norm(0.0, &moderate(), 1.0), 0.0);
        let collapsed = AttackBounds::new(0.7, 0.7).unwrap();
        assert_eq!(lemma1_lower_norm(1.0, &collapsed, 1.0), 0.0);
    }

    #[test]
    fn floor_and_ceiling() {
        let model = LinearModel::new(DMatrix::from_element(2, 1, 1.0), 1.0).unwrap();
        let p = model.projector();
        let h = threshold_floor(&p, &paper(), 1.0, 10.0).unwrap();
        assert!((h - 1133.6612618872866).abs() < 1e-9, "{h}");
        let one = threshold_floor(&p, &paper(), 1.0, 1.0).unwrap();
        assert!((10.0 * one - h).abs() < 1e-9);
        assert!(threshold_floor(&p, &paper(), 1.0, 0.5).is_err());

        let five = LinearModel::new(DMatrix::from_element(5, 1, 1.0), 1.0).unwrap();
        let l = lemma1_lower_norm(1.0, &moderate(), 1.0);
        let c = ceiling_from_denominator(10.0, 5.0 * l);
        assert!((c.value() - 181.582663653142215).abs() < 1e-9);
        let c = delay_ceiling(2.0 * 0.3, &five.projector(), &moderate(), 1.0).unwrap();
        assert!(!c.is_vacuous());
    }

    #[test]
    fn paper_regime_is_vacuous() {
        let model = LinearModel::new(DMatrix::from_element(4, 1, 1.0), 0.005).unwrap();
        let c = delay_ceiling(100.0, &model.projector(), &paper(), 0.005).unwrap();
        assert!(c.is_vacuous());
        assert_eq!(c.value(), f64::INFINITY);
    }

    #[test]
    fn ceiling_scales_with_h() {
        let model = LinearModel::new(DMatrix::from_element(3, 1, 1.0), 1.0).unwrap();
        let p = model.projector();
        let denom: f64 = (0..3).map(|m| lemma1_lower(m, &p, &moderate(), 1.0)).sum();
        let c = delay_ceiling(2.0 * denom, &p, &moderate(), 1.0).unwrap();
        assert!((c.value() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn report_is_consistent() {
        let model = LinearModel::new(DMatrix::from_element(3, 1, 1.0), 1.0).unwrap();
        let p = model.projector();
        let r = BoundsReport::compute(&p, &moderate(), 1.0, 50.0, None).unwrap();
        assert!((r.h_floor - 50.0 * r.per_meter_upper.iter().sum::<f64>()).abs() < 1e-9);
        assert_eq!(r.h, r.h_floor);
        assert!(r.per_meter_lower.iter().all(|&l| l >= 0.0));
        let json = serde_json::to_string(&r).unwrap();
        let back: BoundsReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn floor_is_monotone() {
        let norms = [0.1, 0.4, 0.9];
        let mut prev = 0.0;
        for rl in [0.1, 0.2, 0.4] {
            for ru in [0.5, 1.0, 3.0] {
                let b = AttackBounds::new(rl, ru).unwrap();
                let s: f64 = norms.iter().map(|&p| lemma1_upper_norm(p, &b, 1.0)).sum();
                if ru == 0.5 {
                    assert!(s >= prev);
                    prev = s;
                }
            }
        }
        let b = moderate();
        assert!(lemma1_upper_norm(0.5, &b, 1.0) < lemma1_upper_norm(0.6, &b, 1.0));
    }
}
