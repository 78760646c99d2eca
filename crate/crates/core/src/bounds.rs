//! Measured-versus-bound records and the table of bound constants.

use serde::{Deserialize, Serialize};

/// One inequality check: `measured <= bound`, with `margin = bound - measured`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub id: String,
    pub measured: f64,
    pub bound: f64,
    pub margin: f64,
    /// The bound exceeds the largest value the quantity can take.
    pub vacuous: bool,
}

impl BoundReport {
    pub fn new(id: impl Into<String>, measured: f64, bound: f64) -> Self {
        BoundReport { id: id.into(), measured, bound, margin: bound - measured, vacuous: false }
    }

    /// Lower-bound form `measured >= bound`; margin is `measured - bound`.
    pub fn at_least(id: impl Into<String>, measured: f64, bound: f64) -> Self {
        BoundReport { id: id.into(), measured, bound, margin: measured - bound, vacuous: false }
    }

    /// Marks the report vacuous when the bound is at least `cap` (e.g. 1 for probabilities).
    pub fn with_cap(mut self, cap: f64) -> Self {
        self.vacuous = self.bound >= cap;
        self
    }

    /// Marks a lower-bound report vacuous when the bound is at most `floor`.
    pub fn with_floor(mut self, floor: f64) -> Self {
        self.vacuous = self.bound <= floor;
        self
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.margin >= -tol
    }
}

/// Named constants of every bound the diagnostics check.
pub mod constants {
    /// Local variance of points: `24 (eps + delta + md/q)`.
    pub const LOCAL_POINTS: f64 = 24.0;
    /// Points commutativity: `32 gamma m`.
    pub const POINTS_COMMUTE: f64 = 32.0;
    /// Commutativity of `G` with points: `30 m (gamma^{1/4} + zeta^{1/4} + (d/q)^{1/4})`.
    pub const G_COMMUTE: f64 = 30.0;
    /// Data-processed commutativity: `48 m (gamma^{1/2} + zeta^{1/2})`.
    pub const G_COMMUTE_DATA: f64 = 48.0;
    /// Orthogonalization, measurement case.
    pub const ORTHO_MEASUREMENT: f64 = 84.0;
    /// Orthogonalization, sub-measurement case.
    pub const ORTHO_SUB: f64 = 100.0;
    /// Completeness of the rank-reduced projectors: `1 - 11 zeta^{1/4}`.
    pub const Q_COMPLETENESS: f64 = 11.0;
    /// Self-improvement: `3000 m (eps^{1/32} + delta^{1/32} + (d/q)^{1/32})`.
    pub const SELF_IMPROVE: f64 = 3000.0;
    pub const SELF_IMPROVE_EXP: f64 = 1.0 / 32.0;
    /// Main theorem: `100000 k^2 m^4 (eps^{1/40000} + (d/q)^{1/40000} + e^{-k/(2560000 m^2)})`.
    pub const MAIN: f64 = 100_000.0;
    pub const MAIN_EXP: f64 = 1.0 / 40_000.0;
    pub const MAIN_TAIL: f64 = 2_560_000.0;
}
