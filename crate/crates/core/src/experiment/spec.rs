use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::Scenario;
use crate::error::{Error, Result};
use crate::optimizer::{AoConfig, Scheme};

/// Trials per point in the quick suite.
pub const QUICK_TRIALS: usize = 20;
/// Trials per point with `--full`.
pub const FULL_TRIALS: usize = 100;

/// The scenario parameter a sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Axis {
    /// Transmit budget in dBm.
    PMax,
    /// Amplification budget in dBm.
    PMaxA,
    /// Element count (a perfect square).
    NumElements,
    /// RIS spacing as a fraction of the wavelength.
    Spacing,
    /// RIS center y-coordinate in meters.
    RisYCoord,
    /// `Γ_max²` in dB.
    GammaMax,
    /// Outer iteration index; one optimization per trial, reported at each value.
    Iteration,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::PMax => "PMax",
            Axis::PMaxA => "PMaxA",
            Axis::NumElements => "NumElements",
            Axis::Spacing => "Spacing",
            Axis::RisYCoord => "RisYCoord",
            Axis::GammaMax => "GammaMax",
            Axis::Iteration => "Iteration",
        }
    }

    /// `scenario` with the axis set to `value`.
    pub fn apply(self, scenario: &Scenario, value: f64) -> Result<Scenario> {
        let mut sc = scenario.clone();
        match self {
            Axis::PMax => sc.p_max_dbm = value,
            Axis::PMaxA => sc.p_max_a_dbm = value,
            Axis::NumElements => {
                if value.fract() != 0.0 || value < 1.0 {
                    return Err(Error::Config(format!("element count {value} is not a positive integer")));
                }
                sc.set_num_elements(value as usize)?;
            }
            Axis::Spacing => sc.spacing_over_lambda = value,
            Axis::RisYCoord => sc.ris_center[1] = value,
            Axis::GammaMax => sc.gamma_max_db = value,
            Axis::Iteration => {}
        }
        sc.validate()?;
        Ok(sc)
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        const ALL: [Axis; 7] = [
            Axis::PMax,
            Axis::PMaxA,
            Axis::NumElements,
            Axis::Spacing,
            Axis::RisYCoord,
            Axis::GammaMax,
            Axis::Iteration,
        ];
        ALL.into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown axis `{s}`")))
    }
}

fn default_trials() -> usize {
    QUICK_TRIALS
}

fn default_schemes() -> Vec<Scheme> {
    Scheme::ALL.to_vec()
}

/// One Monte Carlo sweep: every scheme at every axis value for `trials` seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: Axis,
    pub values: Vec<f64>,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<Scheme>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Optimizer settings; omitted fields take their defaults.
    #[serde(default)]
    pub optimizer: AoConfig,
}

impl SweepSpec {
    pub fn new(axis: Axis, values: Vec<f64>, schemes: Vec<Scheme>) -> Self {
        Self { axis, values, schemes, trials: QUICK_TRIALS, base_seed: 0, optimizer: AoConfig::default() }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("sweep: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read sweep {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("sweep values must be nonempty".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) || self.values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("sweep values must be finite and strictly increasing".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("at least one scheme is required".into()));
        }
        let mut sorted = self.schemes.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.schemes.len() {
            return Err(Error::Config("schemes must not repeat".into()));
        }
        if self.axis == Axis::Iteration && self.values.iter().any(|v| v.fract() != 0.0 || *v < 0.0) {
            return Err(Error::Config("iteration values must be nonnegative integers".into()));
        }
        self.optimizer.validate()
    }

    /// Seed of trial `t`.
    pub fn trial_seed(&self, t: usize) -> u64 {
        self.base_seed.wrapping_add(t as u64)
    }
}
