use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CVector;

pub type Point = [f64; 3];

/// Reference distance of the path-loss law, in meters.
pub const D0: f64 = 1.0;

pub fn distance(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Azimuth of the direction `from -> to` in the x-y plane.
pub fn azimuth(from: &Point, to: &Point) -> f64 {
    (to[1] - from[1]).atan2(to[0] - from[0])
}

/// Path gain in dB, `β0 - 10 β log10(d / d0)`; negative for lossy links.
pub fn path_loss_db(beta0_db: f64, exponent: f64, distance_m: f64) -> Result<f64> {
    if !(distance_m >= D0) {
        return Err(Error::Domain(format!("distance {distance_m} m is below the reference distance {D0} m")));
    }
    Ok(beta0_db - 10.0 * exponent * (distance_m / D0).log10())
}

/// Uniform linear steering vector with entries `conj(exp(j 2π (d/λ) k sin φ))`.
pub fn array_response(count: usize, spacing: f64, wavelength: f64, angle: f64) -> CVector {
    let step = 2.0 * PI * spacing / wavelength * angle.sin();
    CVector::from_fn(count, |k, _| Complex64::from_polar(1.0, -step * k as f64))
}

/// Element positions of a UPA in the y-z plane, row-major over `(side_x, side_y)`:
/// index `ix * side_y + iy` sits at `center + (0, ix d, iy d)` relative to the array centroid.
pub fn upa_positions(center: &Point, side_x: usize, side_y: usize, spacing: f64) -> Vec<Point> {
    let off_x = (side_x as f64 - 1.0) / 2.0;
    let off_y = (side_y as f64 - 1.0) / 2.0;
    let mut out = Vec::with_capacity(side_x * side_y);
    for ix in 0..side_x {
        for iy in 0..side_y {
            out.push([center[0], center[1] + (ix as f64 - off_x) * spacing, center[2] + (iy as f64 - off_y) * spacing]);
        }
    }
    out
}

/// Positions, distances and steering angles of one trial's geometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    pub tx: Point,
    pub ris: Point,
    pub rx: Point,
    pub d_rt: f64,
    pub d_at: f64,
    pub d_ra: f64,
    /// Departure angle at the transmitter towards the receiver.
    pub iota_t: f64,
    /// Departure angle at the transmitter towards the RIS.
    pub iota_a: f64,
    /// Arrival angle at the RIS from the transmitter.
    pub phi_t: f64,
    /// Departure angle at the RIS towards the receiver.
    pub iota_r: f64,
    /// Arrival angle at the receiver from the transmitter.
    pub phi_rt: f64,
    /// Arrival angle at the receiver from the RIS.
    pub phi_ra: f64,
}

impl LinkGeometry {
    pub fn new(tx: Point, ris: Point, rx: Point) -> Self {
        Self {
            tx,
            ris,
            rx,
            d_rt: distance(&tx, &rx),
            d_at: distance(&tx, &ris),
            d_ra: distance(&ris, &rx),
            iota_t: azimuth(&tx, &rx),
            iota_a: azimuth(&tx, &ris),
            phi_t: azimuth(&ris, &tx),
            iota_r: azimuth(&ris, &rx),
            phi_rt: azimuth(&rx, &tx),
            phi_ra: azimuth(&rx, &ris),
        }
    }

    pub fn min_distance(&self) -> f64 {
        self.d_rt.min(self.d_at).min(self.d_ra)
    }
}
