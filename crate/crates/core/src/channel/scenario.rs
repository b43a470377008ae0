use std::path::Path;

use serde::{Deserialize, Serialize};

use super::geometry::Point;
use crate::error::{Error, Result};
use crate::metrics::NoisePowers;

/// Carrier wavelength at 2.4 GHz, in meters.
pub const WAVELENGTH_2G4: f64 = 0.1249;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathLossExponents {
    pub rt: f64,
    pub ra: f64,
    pub at: f64,
}

impl Default for PathLossExponents {
    fn default() -> Self {
        Self { rt: 2.45, ra: 2.2, at: 2.2 }
    }
}

/// Geometry, array sizes, propagation parameters and budgets of one link.
///
/// Powers are in dBm, `gamma_max_db` is the power gain `20 log10 Γ_max` and the
/// RIS spacing is a fraction of the wavelength. The receiver sits on a circle of
/// radius `rx_radius` around `rx_center` at an angle drawn from `seed`
/// (a zero radius pins it to the center).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub tx_pos: Point,
    pub ris_center: Point,
    pub rx_center: Point,
    pub rx_radius: f64,
    pub n_t: usize,
    pub n_r: usize,
    pub m_side_x: usize,
    pub m_side_y: usize,
    pub spacing_over_lambda: f64,
    /// Allow RIS spacings between the tabulated coupling anchors.
    pub interpolate_coupling: bool,
    pub coupling_decay: f64,
    /// Optional Touchstone file replacing the parametric coupling block.
    pub coupling_file: Option<String>,
    pub antenna_spacing_over_lambda: f64,
    pub wavelength: f64,
    /// Linear Rician factor.
    pub rician_k: f64,
    pub beta0_db: f64,
    pub exponents: PathLossExponents,
    pub noise_rx_dbm: f64,
    pub noise_ris_dbm: f64,
    pub p_max_dbm: f64,
    pub p_max_a_dbm: f64,
    pub gamma_max_db: f64,
    pub insertion_loss_db: f64,
    pub seed: u64,
    pub direct_link_blocked: bool,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            tx_pos: [40.0, 0.0, 1.0],
            ris_center: [0.0, 60.0, 2.0],
            rx_center: [20.0, 120.0, 1.0],
            rx_radius: 15.0,
            n_t: 4,
            n_r: 2,
            m_side_x: 8,
            m_side_y: 8,
            spacing_over_lambda: 0.25,
            interpolate_coupling: false,
            coupling_decay: 1.0,
            coupling_file: None,
            antenna_spacing_over_lambda: 0.5,
            wavelength: WAVELENGTH_2G4,
            rician_k: 10f64.powf(0.3),
            beta0_db: -30.0,
            exponents: PathLossExponents::default(),
            noise_rx_dbm: -100.0,
            noise_ris_dbm: -100.0,
            p_max_dbm: 20.0,
            p_max_a_dbm: 20.0,
            gamma_max_db: 30.0,
            insertion_loss_db: 1.0,
            seed: 0,
            direct_link_blocked: true,
        }
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

impl Scenario {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("scenario: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read scenario {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n_t == 0 || self.n_r == 0 || self.m_side_x == 0 || self.m_side_y == 0 {
            return bad("antenna and element counts must be at least 1".into());
        }
        if !(self.spacing_over_lambda > 0.0) || !(self.wavelength > 0.0) || !(self.antenna_spacing_over_lambda > 0.0) {
            return bad("spacings and wavelength must be positive".into());
        }
        if !(self.rician_k >= 0.0) {
            return bad(format!("rician_k {} must be nonnegative", self.rician_k));
        }
        if !(self.gamma_max_db > 0.0) {
            return bad(format!("gamma_max_db {} must be positive (Γ_max > 1)", self.gamma_max_db));
        }
        if !(self.insertion_loss_db >= 0.0) {
            return bad(format!("insertion_loss_db {} must be nonnegative", self.insertion_loss_db));
        }
        if !(self.rx_radius >= 0.0) || !(self.coupling_decay >= 0.0) {
            return bad("rx_radius and coupling_decay must be nonnegative".into());
        }
        let powers = [self.noise_rx_dbm, self.noise_ris_dbm, self.p_max_dbm, self.p_max_a_dbm, self.beta0_db];
        if powers.iter().any(|p| !p.is_finite()) {
            return bad("powers must be finite".into());
        }
        let min_gap = self.rx_radius + super::geometry::D0;
        let gaps = [
            super::geometry::distance(&self.tx_pos, &self.ris_center),
            super::geometry::distance(&self.tx_pos, &self.rx_center) - min_gap,
            super::geometry::distance(&self.ris_center, &self.rx_center) - min_gap,
        ];
        if !(gaps[0] > super::geometry::D0) || !(gaps[1] > 0.0) || !(gaps[2] > 0.0) {
            return bad("devices must be separated by more than the 1 m reference distance".into());
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.m_side_x * self.m_side_y
    }

    pub fn spacing(&self) -> f64 {
        self.spacing_over_lambda * self.wavelength
    }

    /// Linear `Γ_max` (amplitude).
    pub fn gamma_max(&self) -> f64 {
        10f64.powf(self.gamma_max_db / 20.0)
    }

    /// Linear per-pass phase-shifter amplitude `L_PS`.
    pub fn insertion_loss(&self) -> f64 {
        10f64.powf(-self.insertion_loss_db / 20.0)
    }

    pub fn kappa_db(&self) -> f64 {
        10.0 * self.rician_k.log10()
    }

    pub fn p_max(&self) -> f64 {
        dbm_to_watts(self.p_max_dbm)
    }

    pub fn p_max_a(&self) -> f64 {
        dbm_to_watts(self.p_max_a_dbm)
    }

    pub fn noise(&self) -> NoisePowers {
        NoisePowers { sigma2_rx: dbm_to_watts(self.noise_rx_dbm), sigma2_ris: dbm_to_watts(self.noise_ris_dbm) }
    }

    /// Sets a square element count `m = side²`.
    pub fn set_num_elements(&mut self, m: usize) -> Result<()> {
        let side = (m as f64).sqrt().round() as usize;
        if side == 0 || side * side != m {
            return Err(Error::Config(format!("element count {m} is not a perfect square")));
        }
        self.m_side_x = side;
        self.m_side_y = side;
        Ok(())
    }
}
