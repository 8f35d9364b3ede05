//! Sequential detection of time-varying false data injection attacks.
//!
//! The observation model is `x(t) = H θ(t) + a(t) + n(t)` with an unknown,
//! time-varying state `θ(t)` and i.i.d. Gaussian noise. Only the component of
//! an attack in the orthogonal complement of `col(H)` is detectable, so every
//! detector here works on the projected residual `x̃(t) = P x(t)`.
//!
//! * [`model`] builds the projector and residuals.
//! * [`rgcusum`] is the linear-cost relaxed generalized CUSUM detector.
//! * [`gcusum`] is the exhaustive generalized CUSUM, kept as a desk-scale
//!   reference.
//! * [`bounds`] evaluates the analytic false-alarm threshold floor and the
//!   detection-delay ceiling.
//! * [`grid`] parses grid case files, compiles the DC measurement matrix and
//!   solves DC power flow.
//! * [`sim`] is the seeded Monte Carlo harness (ARL, detection delay,
//!   overshoot).
//! * [`io`] holds the CSV/JSON file formats shared with the CLI.

#![forbid(unsafe_code)]

pub mod attacks;
pub mod bounds;
pub mod erf;
pub mod error;
pub mod gcusum;
pub mod grid;
pub mod io;
pub mod model;
pub mod rgcusum;
pub mod sim;

pub use bounds::{BoundsReport, DelayCeiling};
pub use error::{Error, Result};
pub use gcusum::{GcusumConfig, GcusumState, SupportPattern};
pub use grid::{GridCase, MeterPlacement};
pub use model::{LinearModel, Projector, Residual};
pub use rgcusum::{AttackBounds, RgcusumState, StoppingReport};
