use serde::{Deserialize, Serialize};

use crate::channel::Scenario;
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, CVector};
use crate::metrics::{ris_amplification_power, weighted_mse, NoisePowers};
use crate::multiport::{
    conventional_channels_with_gamma, em_channels, ChannelPair, ModelVariant, ReflectionState, ScatteringMatrix,
};

/// Comparison schemes. `EmMc` optimizes and evaluates on the coupled model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scheme {
    EmMc,
    ActiveNoMc,
    McUnaware,
    PassiveMc,
    PassiveNoMc,
}

impl Scheme {
    pub const ALL: [Scheme; 5] =
        [Scheme::EmMc, Scheme::ActiveNoMc, Scheme::McUnaware, Scheme::PassiveMc, Scheme::PassiveNoMc];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::EmMc => "EmMc",
            Scheme::ActiveNoMc => "ActiveNoMc",
            Scheme::McUnaware => "McUnaware",
            Scheme::PassiveMc => "PassiveMc",
            Scheme::PassiveNoMc => "PassiveNoMc",
        }
    }

    pub fn is_passive(self) -> bool {
        matches!(self, Scheme::PassiveMc | Scheme::PassiveNoMc)
    }

    /// Whether the optimizer sees the coupling block.
    pub fn optimizes_with_coupling(self) -> bool {
        matches!(self, Scheme::EmMc | Scheme::PassiveMc)
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown scheme `{s}`")))
    }
}

/// The network and budgets one optimizer run works on.
#[derive(Clone, Debug)]
pub struct AoProblem {
    /// Network as seen by the optimizer (coupling block removed for unaware schemes).
    pub s: ScatteringMatrix,
    pub noise: NoisePowers,
    pub p_max: f64,
    /// Amplification budget; `None` for passive surfaces.
    pub p_max_a: Option<f64>,
    pub insertion_loss: f64,
    pub gamma_max: f64,
    pub passive: bool,
    pub variant: ModelVariant,
}

impl AoProblem {
    /// Active surface on the coupled model.
    pub fn active(
        s: ScatteringMatrix,
        noise: NoisePowers,
        p_max: f64,
        p_max_a: f64,
        insertion_loss: f64,
        gamma_max: f64,
    ) -> Self {
        Self {
            s,
            noise,
            p_max,
            p_max_a: Some(p_max_a),
            insertion_loss,
            gamma_max,
            passive: false,
            variant: ModelVariant::EmMc,
        }
    }

    /// The problem a scheme optimizes. Passive schemes get the pooled transmit
    /// budget `P_max + P^A_max`, no RIS noise and no amplification budget.
    pub fn for_scheme(s: &ScatteringMatrix, scenario: &Scenario, scheme: Scheme) -> Self {
        let s_eff = if scheme.optimizes_with_coupling() { s.clone() } else { s.with_s_aa_zeroed() };
        let mut noise = scenario.noise();
        let (variant, passive) = match scheme {
            Scheme::EmMc => (ModelVariant::EmMc, false),
            Scheme::ActiveNoMc | Scheme::McUnaware => (ModelVariant::Conventional, false),
            Scheme::PassiveMc => (ModelVariant::PassiveMc, true),
            Scheme::PassiveNoMc => (ModelVariant::PassiveNoMc, true),
        };
        if passive {
            noise.sigma2_ris = 0.0;
        }
        Self {
            s: s_eff,
            noise,
            p_max: if passive { scenario.p_max() + scenario.p_max_a() } else { scenario.p_max() },
            p_max_a: if passive { None } else { Some(scenario.p_max_a()) },
            insertion_loss: scenario.insertion_loss(),
            gamma_max: scenario.gamma_max(),
            passive,
            variant,
        }
    }

    pub fn l2(&self) -> f64 {
        self.insertion_loss * self.insertion_loss
    }

    pub fn channels(&self, gamma: &CVector) -> Result<ChannelPair> {
        let mut ch = match self.variant {
            ModelVariant::Conventional => conventional_channels_with_gamma(&self.s, gamma)?,
            _ => em_channels(&self.s, gamma)?,
        };
        ch.variant = self.variant;
        if self.passive {
            ch.h_n.fill(c(0.0, 0.0));
            ch.h_out_n.fill(c(0.0, 0.0));
        }
        Ok(ch)
    }

    /// Weighted MSE and amplification power of a candidate reflection.
    pub fn evaluate(&self, gamma: &CVector, w: &CMatrix, d: &CMatrix, v: &CMatrix) -> Result<(f64, f64)> {
        let ch = self.channels(gamma)?;
        Ok((weighted_mse(&ch, w, d, v, &self.noise), ris_amplification_power(&ch, w, &self.noise)))
    }

    pub fn amplification_ok(&self, power: f64) -> bool {
        self.p_max_a.map_or(true, |pa| power <= pa * (1.0 + 1e-9))
    }

    /// A reflection state with unit magnitudes for passive surfaces.
    pub fn passive_state(&self, phases: Vec<f64>) -> ReflectionState {
        let alpha = 1.0 / self.l2();
        ReflectionState::new_unchecked(vec![alpha; phases.len()], phases, self.insertion_loss, self.gamma_max)
    }
}
