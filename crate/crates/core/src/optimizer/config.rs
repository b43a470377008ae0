use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances and limits of the alternating optimizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AoConfig {
    /// Stop when the rate changes by less than this between outer iterations (bits/s/Hz).
    pub eta: f64,
    pub k_max: usize,
    /// Phase step budget in radians, divided by `‖Y‖` per element.
    pub delta0: f64,
    pub dinkelbach_tol: f64,
    pub dinkelbach_max_iter: usize,
    pub qcqp_tol: f64,
    pub backtracking: bool,
    /// Maximum number of step halvings before a phase step is rejected.
    pub max_halvings: usize,
}

impl Default for AoConfig {
    fn default() -> Self {
        Self {
            eta: 1e-3,
            k_max: 100,
            delta0: 0.01,
            dinkelbach_tol: 1e-9,
            dinkelbach_max_iter: 50,
            qcqp_tol: 1e-8,
            backtracking: true,
            max_halvings: 10,
        }
    }
}

impl AoConfig {
    /// `k_max = 0` is accepted and returns the initial point.
    pub fn validate(&self) -> Result<()> {
        let positive = [self.eta, self.delta0, self.dinkelbach_tol, self.qcqp_tol];
        if positive.iter().any(|v| !(*v > 0.0)) || self.dinkelbach_max_iter == 0 {
            return Err(Error::Config("optimizer tolerances must be positive".into()));
        }
        Ok(())
    }
}
