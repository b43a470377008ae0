use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::geometry::{distance, Point};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Full-wave reference values `(spacing / λ, S11 dB, S21 dB)`, sorted by spacing.
pub const COUPLING_TABLE: [(f64, f64, f64); 4] = [
    (1.0 / 6.0, -16.23, -12.43),
    (1.0 / 4.0, -20.81, -13.62),
    (1.0 / 3.0, -24.26, -18.25),
    (1.0 / 2.0, -25.15, -19.11),
];

const TABLE_MATCH_TOL: f64 = 1e-9;

/// `(S11 dB, S21 dB)` for a spacing given as a fraction of the wavelength.
///
/// Tabulated spacings are returned verbatim. Other spacings are rejected unless
/// `interpolate` is set, in which case both values are interpolated linearly in dB
/// (and extrapolated from the end segments outside the table).
pub fn coupling_table(spacing_over_lambda: f64, interpolate: bool) -> Result<(f64, f64)> {
    if let Some(&(_, s11, s21)) =
        COUPLING_TABLE.iter().find(|(r, _, _)| (r - spacing_over_lambda).abs() < TABLE_MATCH_TOL)
    {
        return Ok((s11, s21));
    }
    if !interpolate {
        return Err(Error::Config(format!(
            "spacing {spacing_over_lambda} λ is not tabulated (λ/6, λ/4, λ/3, λ/2); enable interpolation to use it"
        )));
    }
    if !(spacing_over_lambda > 0.0) {
        return Err(Error::Domain(format!("spacing {spacing_over_lambda} λ must be positive")));
    }
    let seg = COUPLING_TABLE.windows(2).position(|w| spacing_over_lambda <= w[1].0).unwrap_or(COUPLING_TABLE.len() - 2);
    let (x0, a0, b0) = COUPLING_TABLE[seg];
    let (x1, a1, b1) = COUPLING_TABLE[seg + 1];
    let t = (spacing_over_lambda - x0) / (x1 - x0);
    let s11 = a0 + t * (a1 - a0);
    let s21 = b0 + t * (b1 - b0);
    Ok((s11.min(0.0), s21.min(0.0)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseMode {
    DistancePhase,
    ZeroPhase,
}

/// Parametric RIS self-scattering block anchored at the nearest-neighbor coupling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingModel {
    pub s11_db: f64,
    pub s21_db: f64,
    /// Nearest-neighbor distance in meters at which `s21_db` applies.
    pub reference_spacing: f64,
    pub decay_exponent: f64,
    pub phase_mode: PhaseMode,
}

impl CouplingModel {
    pub fn from_table(spacing_over_lambda: f64, wavelength: f64, interpolate: bool) -> Result<Self> {
        let (s11_db, s21_db) = coupling_table(spacing_over_lambda, interpolate)?;
        let model = Self {
            s11_db,
            s21_db,
            reference_spacing: spacing_over_lambda * wavelength,
            decay_exponent: 1.0,
            phase_mode: PhaseMode::DistancePhase,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.s11_db > 0.0 || self.s21_db > 0.0 {
            return Err(Error::Invariant(format!(
                "coupling magnitudes must be at most 0 dB (S11 {} dB, S21 {} dB)",
                self.s11_db, self.s21_db
            )));
        }
        if !(self.reference_spacing > 0.0) || !(self.decay_exponent >= 0.0) {
            return Err(Error::Invariant(format!(
                "reference spacing {} and decay exponent {} must be positive",
                self.reference_spacing, self.decay_exponent
            )));
        }
        Ok(())
    }
}

fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// Symmetric `m x m` coupling block for the given element positions.
pub fn build_coupling_matrix(model: &CouplingModel, positions: &[Point], wavelength: f64) -> Result<CMatrix> {
    model.validate()?;
    if !(wavelength > 0.0) {
        return Err(Error::Domain(format!("wavelength {wavelength} must be positive")));
    }
    let m = positions.len();
    let self_term = Complex64::new(db_to_amplitude(model.s11_db), 0.0);
    let neighbor = db_to_amplitude(model.s21_db);
    let mut s = CMatrix::zeros(m, m);
    for i in 0..m {
        s[(i, i)] = self_term;
        for j in (i + 1)..m {
            let d = distance(&positions[i], &positions[j]);
            if d <= 0.0 {
                return Err(Error::Domain(format!("elements {i} and {j} coincide")));
            }
            let mag = neighbor * (model.reference_spacing / d).powf(model.decay_exponent);
            let phase = match model.phase_mode {
                PhaseMode::DistancePhase => -2.0 * PI * d / wavelength,
                PhaseMode::ZeroPhase => 0.0,
            };
            let v = Complex64::from_polar(mag, phase);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    Ok(s)
}
