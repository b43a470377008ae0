use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};

/// Relative slack allowed on the `1 <= |Γ_A,m| <= Γ_max` box.
const MAGNITUDE_SLACK: f64 = 1e-9;

/// Reflection coefficient of a one-port load `z_ra` against reference `z0`.
///
/// Negative-resistance loads (`Re z_ra < 0`) give `|Γ| > 1`.
pub fn ra_reflection(z_ra: Complex64, z0: Complex64) -> Result<Complex64> {
    let den = z_ra + z0;
    if den.norm() <= f64::EPSILON * (z_ra.norm() + z0.norm()).max(1.0) {
        return Err(Error::SingularInput(format!("z_ra + z0 vanishes (z_ra = {z_ra}, z0 = {z0})")));
    }
    Ok((z_ra - z0) / den)
}

/// Element reflection of a phase-shifter two-port terminated by a reflection amplifier.
pub fn element_reflection_exact(s_ps: &Matrix2<Complex64>, gamma_ra: Complex64) -> Result<Complex64> {
    let loop_gain = s_ps[(1, 1)] * gamma_ra;
    let den = Complex64::new(1.0, 0.0) - loop_gain;
    if den.norm() < 1e-12 {
        return Err(Error::Instability { context: "element feedback S22 Γ_RA", spectral_radius: loop_gain.norm() });
    }
    Ok(s_ps[(0, 0)] + s_ps[(0, 1)] * s_ps[(1, 0)] * gamma_ra / den)
}

/// Configuration of an active RIS: reflection-amplifier gains, phase-shifter phases,
/// the phase-shifter insertion loss and the reflection magnitude ceiling.
///
/// Element `m` reflects `L² α_m e^{j 2 θ_m}`. Phases are stored unwrapped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReflectionState {
    amplitudes: Vec<f64>,
    phases: Vec<f64>,
    insertion_loss: f64,
    gamma_max: f64,
}

impl ReflectionState {
    pub fn new(amplitudes: Vec<f64>, phases: Vec<f64>, insertion_loss: f64, gamma_max: f64) -> Result<Self> {
        let state = Self::new_unchecked(amplitudes, phases, insertion_loss, gamma_max);
        state.validate()?;
        Ok(state)
    }

    /// Builds a state without checking the magnitude box. Intended for degenerate
    /// configurations in tests (e.g. `Γ_A = 0`) and for passive surfaces.
    pub fn new_unchecked(amplitudes: Vec<f64>, phases: Vec<f64>, insertion_loss: f64, gamma_max: f64) -> Self {
        Self { amplitudes, phases, insertion_loss, gamma_max }
    }

    /// Every element reflects with the same magnitude `|Γ|` and the given phases.
    pub fn with_magnitude(magnitude: f64, phases: Vec<f64>, insertion_loss: f64, gamma_max: f64) -> Result<Self> {
        let alpha = magnitude / (insertion_loss * insertion_loss);
        Self::new(vec![alpha; phases.len()], phases, insertion_loss, gamma_max)
    }

    pub fn validate(&self) -> Result<()> {
        if self.amplitudes.len() != self.phases.len() {
            return Err(Error::Dimension(format!(
                "{} amplitudes vs {} phases",
                self.amplitudes.len(),
                self.phases.len()
            )));
        }
        if !(self.insertion_loss > 0.0 && self.insertion_loss <= 1.0) {
            return Err(Error::Invariant(format!("insertion loss {} outside (0, 1]", self.insertion_loss)));
        }
        if !(self.gamma_max > 1.0) || !self.gamma_max.is_finite() {
            return Err(Error::Invariant(format!("gamma_max {} must exceed 1", self.gamma_max)));
        }
        for (m, (&a, &p)) in self.amplitudes.iter().zip(&self.phases).enumerate() {
            if !a.is_finite() || !p.is_finite() || a <= 0.0 {
                return Err(Error::Invariant(format!("element {m}: amplitude {a}, phase {p}")));
            }
            let mag = self.magnitude(m);
            if mag < 1.0 - MAGNITUDE_SLACK || mag > self.gamma_max * (1.0 + MAGNITUDE_SLACK) {
                return Err(Error::Invariant(format!("element {m}: |Γ| = {mag} outside [1, {}]", self.gamma_max)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn insertion_loss(&self) -> f64 {
        self.insertion_loss
    }

    pub fn gamma_max(&self) -> f64 {
        self.gamma_max
    }

    /// `|Γ_A,m| = L² α_m`.
    pub fn magnitude(&self, m: usize) -> f64 {
        self.insertion_loss * self.insertion_loss * self.amplitudes[m]
    }

    /// Feasible amplitude range `[1 / L², Γ_max / L²]`.
    pub fn amplitude_bounds(&self) -> (f64, f64) {
        let l2 = self.insertion_loss * self.insertion_loss;
        (1.0 / l2, self.gamma_max / l2)
    }

    pub fn set_amplitude(&mut self, m: usize, alpha: f64) {
        self.amplitudes[m] = alpha;
    }

    pub fn set_phase(&mut self, m: usize, theta: f64) {
        self.phases[m] = theta;
    }

    pub fn reflection(&self, m: usize) -> Complex64 {
        Complex64::from_polar(self.magnitude(m), 2.0 * self.phases[m])
    }

    /// Diagonal of `Γ_A`.
    pub fn gamma_diagonal(&self) -> CVector {
        CVector::from_fn(self.len(), |m, _| self.reflection(m))
    }
}

/// `Γ_A,m = L² α_m e^{j 2 θ_m}`.
pub fn element_reflection_simplified(state: &ReflectionState, index: usize) -> Result<Complex64> {
    if index >= state.len() {
        return Err(Error::Dimension(format!("element index {index} out of range for {} elements", state.len())));
    }
    Ok(state.reflection(index))
}

/// The diagonal reflection matrix `Γ_A`.
pub fn build_gamma_a(state: &ReflectionState) -> CMatrix {
    CMatrix::from_diagonal(&state.gamma_diagonal())
}
