//! Phase increments from a linearized loop response.
//!
//! With `T = G - S_AA`, `K = T^{-1}` and `Y = j2 K G`, a small phase increment
//! `Δ` gives `K(Δ) ≈ K + Y Δ K`, so `H_e ≈ S1 + S2 Δ S3` and `H_n ≈ S̃1 + S2 Δ S̃3`
//! with `S1 = H_e`, `S2 = S_RA Y`, `S3 = K S_AT`, `S̃1 = S_RA K`, `S̃3 = K`.

use crate::error::Result;
use crate::linalg::{c, diag_of_product, spectral_norm, CMatrix, CVector};
use crate::multiport::loop_response;

use super::problem::AoProblem;

/// Local model `f(θ + Δ) - f(θ) ≈ Δ^T Υ Δ + 2 Re(Δ^T ζ)`.
#[derive(Clone, Debug)]
pub struct PhaseModel {
    pub zeta: CVector,
    pub upsilon: CMatrix,
    /// `‖Y‖₂`.
    pub y_norm: f64,
}

impl PhaseModel {
    pub fn predict(&self, delta: &[f64]) -> f64 {
        let dv = CVector::from_iterator(delta.len(), delta.iter().map(|&x| c(x, 0.0)));
        let quad = (dv.transpose() * &self.upsilon * &dv)[(0, 0)].re;
        let lin: f64 = delta.iter().zip(self.zeta.iter()).map(|(dm, z)| dm * z.re).sum();
        quad + 2.0 * lin
    }

    /// Sign rule: each element moves by `∓ delta0 / ‖Y‖` against `Re ζ_m`.
    pub fn increment(&self, delta0: f64) -> Vec<f64> {
        let step = delta0 / self.y_norm;
        self.zeta.iter().map(|z| if z.re < 0.0 { step } else { -step }).collect()
    }
}

pub fn phase_model(problem: &AoProblem, gamma: &CVector, w: &CMatrix, d: &CMatrix, v: &CMatrix) -> Result<PhaseModel> {
    let s = &problem.s;
    let k = loop_response(gamma, &s.s_aa)?;
    // K G: columns of K divided by Γ_m
    let mut kg = k.clone();
    for (j, mut col) in kg.column_iter_mut().enumerate() {
        col /= gamma[j];
    }
    let y = kg * c(0.0, 2.0);
    let y_norm = spectral_norm(&y);

    let s1 = &s.s_rt + &s.s_ra * &k * &s.s_at;
    let s2 = &s.s_ra * &y;
    let s3 = &k * &s.s_at;
    let s1t = &s.s_ra * &k;
    let q = d * v * d.adjoint();
    let sigma = problem.noise.sigma2_ris;

    let qs2 = &q * &s2;
    let ww = w * w.adjoint();
    let sig_term = diag_of_product(&s3, &(&ww * s1.adjoint() * &qs2));
    let noise_term = diag_of_product(&k, &(s1t.adjoint() * &qs2));
    let lin_term = diag_of_product(&s3, &(w * v * d.adjoint() * &s2));
    let zeta = sig_term + noise_term * c(sigma, 0.0) - lin_term;

    let a = s2.adjoint() * &qs2;
    let b = &s3 * &ww * s3.adjoint();
    let kk = &k * k.adjoint();
    let upsilon = CMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * b[(j, i)] + a[(i, j)] * kk[(j, i)] * sigma);
    Ok(PhaseModel { zeta, upsilon, y_norm })
}
