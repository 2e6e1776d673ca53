//! Common interface for allocation rules expressed in promise space.

use crate::econ::Economy;

/// Period decision at a state (s, ω).
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    /// Consumption share of the young.
    pub consumption: f64,
    /// Promise to next period's old, one entry per next state r.
    pub promises: Vec<f64>,
    /// Multiplier on the young's participation constraint.
    pub mu: f64,
    /// Multiplier on promise keeping, −(δ/β)V_ω.
    pub lambda: f64,
}

/// A stationary rule mapping (s, ω) to consumption and promises.
pub trait PromisePolicy: Sync {
    fn economy(&self) -> &Economy;

    /// Decision at (s, ω); ω is clamped into [ω_min(s), ω_max(s)].
    fn decide(&self, s: usize, omega: f64) -> Decision;

    /// The promise that state s is reset to when the young's constraint is slack.
    fn reset_promise(&self, s: usize) -> f64;
}
