//! Attack specifications and the reference attack vectors for the 23-meter
//! IEEE 14-bus setup.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Projector;
use crate::rgcusum::AttackBounds;

/// Constant attack vector.
pub const CONSTANT: [f64; 23] = [
    -2.629, -2.704, 2.781, 2.923, 0.516, -0.936, 1.969, -3.938, -0.033, 0.0, -0.483, -0.033, -1.934, 1.934, -1.934,
    4.259, 2.842, 0.110, 1.314, -0.520, 2.195, -0.046, 1.778,
];

/// First vector of the cyclic attack.
pub const CYCLIC_1: [f64; 23] = [
    0.0, 6.881, -1.776, -3.067, 0.747, 0.949, 0.545, -1.090, -0.249, 0.0, -0.498, -0.249, -0.351, 0.351, -0.351,
    -0.395, 0.0, 0.395, 0.0, 0.264, 0.132, 0.132, 0.0,
];

/// Second vector of the cyclic attack as given: 20 entries where 23 are
/// needed. Kept verbatim; it cannot be used until padded by the caller.
pub const CYCLIC_2_TRUNCATED: [f64; 20] = [
    -3.528, -0.375, -0.246, -0.504, 1.008, 0.125, 0.0, 0.250, 0.125, 0.176, -0.176, 0.176, 0.199, 0.0, -0.199, 0.0,
    -0.132, -0.066, -0.066, 0.0,
];

/// Third vector of the cyclic attack.
pub const CYCLIC_3: [f64; 23] = [
    3.983, 5.254, 0.0, -4.445, 0.346, 0.578, 0.116, -0.231, -0.116, 0.0, -0.231, -0.116, -0.163, 0.163, -0.163, -0.184,
    0.0, 0.184, 0.0, 0.122, 0.061, 0.061, 0.0,
];

/// Per-step growth of the cyclic attack: `b(k) = v_{(k−1) mod L} · (1 + k·g)`.
pub const CYCLIC_GROWTH: f64 = 1e-6;

/// Meters left unattacked by each cyclic vector (1-based), as stated for the
/// original grid model.
pub const REPORTED_COMPLEMENT_SUPPORTS: [[usize; 5]; 3] =
    [[1, 10, 17, 19, 23], [2, 10, 17, 19, 23], [3, 10, 17, 19, 23]];

/// The usable cyclic vectors (the 20-entry one is excluded).
pub fn bundled_cyclic() -> Vec<Vec<f64>> {
    vec![CYCLIC_1.to_vec(), CYCLIC_3.to_vec()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackKind {
    None,
    Constant {
        vector: Vec<f64>,
    },
    /// Vectors applied in rotation with multiplicative growth.
    Cyclic {
        vectors: Vec<Vec<f64>>,
        #[serde(default = "default_growth")]
        growth: f64,
    },
    /// Explicit `b(1), …, b(L)`; no attack after the sequence ends.
    Sequence {
        vectors: Vec<Vec<f64>>,
    },
}

fn default_growth() -> f64 {
    CYCLIC_GROWTH
}

fn default_onset() -> u64 {
    1
}

/// What is injected and when: `a(t_a + k − 1) = b(k)` for `k ≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSpec {
    #[serde(flatten)]
    pub kind: AttackKind,
    /// First attacked time step `t_a ≥ 1`.
    #[serde(default = "default_onset")]
    pub onset: u64,
    /// Inject `P·b(k)` instead of `b(k)`.
    #[serde(default)]
    pub project_to_complement: bool,
}

impl AttackSpec {
    pub fn none() -> Self {
        Self { kind: AttackKind::None, onset: 1, project_to_complement: false }
    }

    pub fn constant(vector: Vec<f64>) -> Self {
        Self { kind: AttackKind::Constant { vector }, onset: 1, project_to_complement: false }
    }

    pub fn is_none(&self) -> bool {
        matches!(self.kind, AttackKind::None)
    }

    /// Validates dimensions and projects vectors when requested. Band
    /// violations of projected vectors come back as warnings.
    pub fn compile(&self, proj: &Projector, bounds: &AttackBounds) -> Result<(AttackSchedule, Vec<String>)> {
        if self.onset == 0 {
            return Err(Error::Config("attack onset must be at least 1".into()));
        }
        let m = proj.dim();
        let (vectors, mode) = match &self.kind {
            AttackKind::None => (Vec::new(), Mode::Off),
            AttackKind::Constant { vector } => (vec![vector.clone()], Mode::Cyclic { growth: 0.0 }),
            AttackKind::Cyclic { vectors, growth } => {
                if !growth.is_finite() {
                    return Err(Error::Config("cyclic growth must be finite".into()));
                }
                (vectors.clone(), Mode::Cyclic { growth: *growth })
            }
            AttackKind::Sequence { vectors } => (vectors.clone(), Mode::Sequence),
        };
        if !matches!(mode, Mode::Off) && vectors.is_empty() {
            return Err(Error::Config("attack needs at least one vector".into()));
        }
        let mut warnings = Vec::new();
        let mut out = Vec::with_capacity(vectors.len());
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != m {
                return Err(Error::DimensionMismatch { expected: m, actual: v.len() });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Config(format!("attack vector {} has non-finite entries", i + 1)));
            }
            if self.project_to_complement {
                let mu = proj.residual(v)?.into_vec();
                warnings.extend(band_violations(&mu, bounds).map(|msg| format!("attack vector {}: {msg}", i + 1)));
                out.push(mu);
            } else {
                out.push(v.clone());
            }
        }
        Ok((AttackSchedule { vectors: out, mode, onset: self.onset }, warnings))
    }
}

/// Entries treated as outside the support.
pub const SUPPORT_TOLERANCE: f64 = 1e-9;

fn band_violations(mu: &[f64], bounds: &AttackBounds) -> Option<String> {
    let bad: Vec<usize> = mu
        .iter()
        .enumerate()
        .filter(|(_, &v)| {
            let a = v.abs();
            a > SUPPORT_TOLERANCE && (a < bounds.rho_l() || a > bounds.rho_u())
        })
        .map(|(i, _)| i + 1)
        .collect();
    (!bad.is_empty()).then(|| format!("projected entries outside [ρ_L, ρ_U] at meters {bad:?}"))
}

/// Meters (1-based) where `|μ_m| ≤ tol`.
pub fn complement_support(mu: &[f64], tol: f64) -> Vec<usize> {
    mu.iter().enumerate().filter(|(_, v)| v.abs() <= tol).map(|(i, _)| i + 1).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    Off,
    Cyclic { growth: f64 },
    Sequence,
}

/// A compiled attack, evaluated per time step.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackSchedule {
    vectors: Vec<Vec<f64>>,
    mode: Mode,
    onset: u64,
}

impl AttackSchedule {
    pub fn off() -> Self {
        Self { vectors: Vec::new(), mode: Mode::Off, onset: 1 }
    }

    pub fn onset(&self) -> u64 {
        self.onset
    }

    pub fn is_off(&self) -> bool {
        matches!(self.mode, Mode::Off)
    }

    /// Adds `a(t)` to `x`. Returns whether anything was added.
    pub fn add_to(&self, t: u64, x: &mut [f64]) -> bool {
        if t < self.onset {
            return false;
        }
        let k = t - self.onset + 1;
        let (v, scale) = match self.mode {
            Mode::Off => return false,
            Mode::Cyclic { growth } => {
                let l = self.vectors.len() as u64;
                (&self.vectors[((k - 1) % l) as usize], 1.0 + k as f64 * growth)
            }
            Mode::Sequence => match self.vectors.get((k - 1) as usize) {
                Some(v) => (v, 1.0),
                None => return false,
            },
        };
        for (xi, vi) in x.iter_mut().zip(v) {
            *xi += scale * vi;
        }
        true
    }

    /// `a(t)` as a fresh vector (zeros before onset).
    pub fn at(&self, t: u64, m: usize) -> Vec<f64> {
        let mut x = vec![0.0; m];
        self.add_to(t, &mut x);
        x
    }
}
