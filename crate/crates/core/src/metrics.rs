//! Rate, RIS power and MSE functionals.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, frob2, hermitian_part, identity, inverse, ln_det_hpd, solve, CMatrix};
use crate::multiport::{ChannelPair, ReflectionState};

/// Receiver and RIS thermal noise powers in watts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoisePowers {
    pub sigma2_rx: f64,
    pub sigma2_ris: f64,
}

impl NoisePowers {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma2_rx > 0.0) || !(self.sigma2_ris >= 0.0) {
            return Err(Error::Invariant(format!(
                "noise powers must be positive (σ² = {}, σ²_RIS = {})",
                self.sigma2_rx, self.sigma2_ris
            )));
        }
        Ok(())
    }
}

/// Iterate of the alternating optimizer.
#[derive(Clone, Debug)]
pub struct OptimizerState {
    pub w: CMatrix,
    pub d: CMatrix,
    pub v: CMatrix,
    pub reflection: ReflectionState,
    /// Achievable rate (bits/s/Hz) before the first and after every outer iteration.
    pub rate_trace: Vec<f64>,
    pub iteration: usize,
    pub converged: bool,
}

/// `N = σ²_RIS H_n H_n^H + σ² I`.
pub fn noise_covariance(ch: &ChannelPair, noise: &NoisePowers) -> CMatrix {
    let n_r = ch.h_e.nrows();
    let hn = &ch.h_n * ch.h_n.adjoint() * c(noise.sigma2_ris, 0.0);
    hermitian_part(&(hn + identity(n_r) * c(noise.sigma2_rx, 0.0)))
}

fn check_w(ch: &ChannelPair, w: &CMatrix) -> Result<()> {
    if w.nrows() != ch.h_e.ncols() {
        return Err(Error::Dimension(format!(
            "beamformer has {} rows, channel has {} transmit antennas",
            w.nrows(),
            ch.h_e.ncols()
        )));
    }
    Ok(())
}

/// `log2 det(I + H_e W W^H H_e^H N^{-1})` in bits/s/Hz.
pub fn achievable_rate(ch: &ChannelPair, w: &CMatrix, noise: &NoisePowers) -> Result<f64> {
    check_w(ch, w)?;
    let n = noise_covariance(ch, noise);
    let hw = &ch.h_e * w;
    // det(I + X N^{-1}) = det(N + X) / det(N)
    let ln_num = ln_det_hpd(&(&n + &hw * hw.adjoint()), "N + H W W^H H^H")?;
    let ln_den = ln_det_hpd(&n, "noise covariance")?;
    Ok(((ln_num - ln_den) / LN_2).max(0.0))
}

/// RIS amplification power `Tr(H̆_e W W^H H̆_e^H) + σ²_RIS Tr(H̆_n H̆_n^H)`.
pub fn ris_amplification_power(ch: &ChannelPair, w: &CMatrix, noise: &NoisePowers) -> f64 {
    frob2(&(&ch.h_out_e * w)) + noise.sigma2_ris * frob2(&ch.h_out_n)
}

/// `U = (D^H H_e W - I)(D^H H_e W - I)^H + D^H N D`.
pub fn mse_matrix(ch: &ChannelPair, w: &CMatrix, d: &CMatrix, noise: &NoisePowers) -> CMatrix {
    let k = w.ncols();
    let e = d.adjoint() * &ch.h_e * w - identity(k);
    let n = noise_covariance(ch, noise);
    hermitian_part(&(&e * e.adjoint() + d.adjoint() * n * d))
}

/// `Re Tr(V U)`.
pub fn weighted_mse(ch: &ChannelPair, w: &CMatrix, d: &CMatrix, v: &CMatrix, noise: &NoisePowers) -> f64 {
    (v * mse_matrix(ch, w, d, noise)).trace().re
}

/// MMSE receiver `(H_e W W^H H_e^H + N)^{-1} H_e W`.
pub fn optimal_detector(ch: &ChannelPair, w: &CMatrix, noise: &NoisePowers) -> Result<CMatrix> {
    check_w(ch, w)?;
    let hw = &ch.h_e * w;
    let cov = hermitian_part(&(&hw * hw.adjoint() + noise_covariance(ch, noise)));
    solve(&cov, &hw, "H W W^H H^H + N")
}

/// `V* = U^{-1}`.
pub fn optimal_weight(u: &CMatrix) -> Result<CMatrix> {
    Ok(hermitian_part(&inverse(u, "MSE matrix U")?))
}

/// `log2 det V - Tr(V U) + n`, the weighted-MSE lower bound on the rate.
pub fn wmmse_bound(ch: &ChannelPair, w: &CMatrix, d: &CMatrix, v: &CMatrix, noise: &NoisePowers) -> Result<f64> {
    let ld = ln_det_hpd(v, "V")? / LN_2;
    Ok(ld - weighted_mse(ch, w, d, v, noise) + v.nrows() as f64)
}

/// `(bound at (D*, V*), achievable rate)`.
pub fn rate_mse_identity(ch: &ChannelPair, w: &CMatrix, noise: &NoisePowers) -> Result<(f64, f64)> {
    let d = optimal_detector(ch, w, noise)?;
    let v = optimal_weight(&mse_matrix(ch, w, &d, noise))?;
    Ok((wmmse_bound(ch, w, &d, &v, noise)?, achievable_rate(ch, w, noise)?))
}
