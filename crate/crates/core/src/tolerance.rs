//! Central tolerance table.

use crate::scalar::Scalar;

/// Numerical tolerances used by validation, feasibility tests, the LP kernel
/// and active-set extraction. Values are stated for `f64`; use
/// [`Tolerances::for_scalar`] to widen them for lower precisions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Row-stochasticity of transition matrices.
    pub stochastic: f64,
    /// Feasibility comparisons (`y >= 0`, row consistency, budgets, integrality).
    pub feasibility: f64,
    /// Residual bound on LP outputs and relaxed-solution invariants.
    pub lp: f64,
    /// Smallest admissible simplex pivot.
    pub pivot: f64,
    /// Relative threshold for active-set membership, multiplied by `max(1, |b|_inf)`.
    pub active: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            stochastic: 1e-12,
            feasibility: 1e-9,
            lp: 1e-8,
            pivot: 1e-11,
            active: 1e-7,
        }
    }
}

impl Tolerances {
    pub fn for_scalar<S: Scalar>() -> Self {
        Self::default().scaled(S::tolerance_scale())
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self {
            stochastic: self.stochastic * factor,
            feasibility: self.feasibility * factor,
            lp: self.lp * factor,
            pivot: self.pivot * factor,
            active: self.active * factor,
        }
    }

    /// Overrides the feasibility tolerance (`--tol` on the command line).
    pub fn with_feasibility(mut self, tol: f64) -> Self {
        self.feasibility = tol;
        self
    }
}
