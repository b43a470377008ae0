use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::element::ReflectionState;
use crate::error::{Error, Result};
use crate::linalg::{c, diag_mul, identity, inverse, is_finite, solve, spectral_radius, zeros, CMatrix, CVector};

pub const DEFAULT_Z0: f64 = 50.0;

/// Margin used by [`ensure_spectral_stability`]: the loop gain must satisfy `ρ < 1 - margin`.
pub const SPECTRAL_MARGIN: f64 = 1e-6;

/// Partitioned scattering matrix of the transmitter (T), RIS (A) and receiver (R) ports.
#[derive(Clone, Debug, PartialEq)]
pub struct ScatteringMatrix {
    pub s_tt: CMatrix,
    pub s_ta: CMatrix,
    pub s_tr: CMatrix,
    pub s_at: CMatrix,
    pub s_aa: CMatrix,
    pub s_ar: CMatrix,
    pub s_rt: CMatrix,
    pub s_ra: CMatrix,
    pub s_rr: CMatrix,
    pub z0: f64,
}

impl ScatteringMatrix {
    /// All-zero network with the given port counts.
    pub fn zeros(n_t: usize, m: usize, n_r: usize) -> Self {
        Self {
            s_tt: zeros(n_t, n_t),
            s_ta: zeros(n_t, m),
            s_tr: zeros(n_t, n_r),
            s_at: zeros(m, n_t),
            s_aa: zeros(m, m),
            s_ar: zeros(m, n_r),
            s_rt: zeros(n_r, n_t),
            s_ra: zeros(n_r, m),
            s_rr: zeros(n_r, n_r),
            z0: DEFAULT_Z0,
        }
    }

    /// Splits a full `N x N` matrix ordered as `[T, A, R]`.
    pub fn from_full(full: &CMatrix, n_t: usize, m: usize, n_r: usize, z0: f64) -> Result<Self> {
        let n = n_t + m + n_r;
        if full.shape() != (n, n) {
            return Err(Error::Dimension(format!("full matrix is {:?}, expected {n}x{n}", full.shape())));
        }
        let offs = [(0, n_t), (n_t, m), (n_t + m, n_r)];
        let block = |i: usize, j: usize| full.view((offs[i].0, offs[j].0), (offs[i].1, offs[j].1)).into_owned();
        let s = Self {
            s_tt: block(0, 0),
            s_ta: block(0, 1),
            s_tr: block(0, 2),
            s_at: block(1, 0),
            s_aa: block(1, 1),
            s_ar: block(1, 2),
            s_rt: block(2, 0),
            s_ra: block(2, 1),
            s_rr: block(2, 2),
            z0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn n_t(&self) -> usize {
        self.s_tt.nrows()
    }

    pub fn m(&self) -> usize {
        self.s_aa.nrows()
    }

    pub fn n_r(&self) -> usize {
        self.s_rr.nrows()
    }

    pub fn ports(&self) -> usize {
        self.n_t() + self.m() + self.n_r()
    }

    pub fn validate(&self) -> Result<()> {
        let (t, a, r) = (self.n_t(), self.m(), self.n_r());
        let expected = [
            ("S_TT", &self.s_tt, t, t),
            ("S_TA", &self.s_ta, t, a),
            ("S_TR", &self.s_tr, t, r),
            ("S_AT", &self.s_at, a, t),
            ("S_AA", &self.s_aa, a, a),
            ("S_AR", &self.s_ar, a, r),
            ("S_RT", &self.s_rt, r, t),
            ("S_RA", &self.s_ra, r, a),
            ("S_RR", &self.s_rr, r, r),
        ];
        for (name, blk, rows, cols) in expected {
            if blk.shape() != (rows, cols) {
                return Err(Error::Dimension(format!("{name} is {:?}, expected {rows}x{cols}", blk.shape())));
            }
            if !is_finite(blk) {
                return Err(Error::Invariant(format!("{name} has non-finite entries")));
            }
        }
        if !(self.z0 > 0.0 && self.z0.is_finite()) {
            return Err(Error::Invariant(format!("reference impedance {} must be positive", self.z0)));
        }
        Ok(())
    }

    /// Reassembles the full `N x N` matrix in `[T, A, R]` port order.
    pub fn to_full(&self) -> CMatrix {
        let (t, a) = (self.n_t(), self.m());
        let n = self.ports();
        let mut full = zeros(n, n);
        let offs = [0, t, t + a];
        let rows = [
            [&self.s_tt, &self.s_ta, &self.s_tr],
            [&self.s_at, &self.s_aa, &self.s_ar],
            [&self.s_rt, &self.s_ra, &self.s_rr],
        ];
        for (i, row) in rows.iter().enumerate() {
            for (j, blk) in row.iter().enumerate() {
                full.view_mut((offs[i], offs[j]), blk.shape()).copy_from(*blk);
            }
        }
        full
    }

    /// Copy with the RIS coupling block removed.
    pub fn with_s_aa_zeroed(&self) -> Self {
        let mut s = self.clone();
        s.s_aa.fill(c(0.0, 0.0));
        s
    }

    /// Copy with the reverse paths `S_TA`, `S_TR`, `S_AR` removed.
    pub fn unilateral(&self) -> Self {
        let mut s = self.clone();
        s.s_ta.fill(c(0.0, 0.0));
        s.s_tr.fill(c(0.0, 0.0));
        s.s_ar.fill(c(0.0, 0.0));
        s
    }
}

/// Diagonal source and load reflection coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Terminations {
    pub gamma_t: CVector,
    pub gamma_r: CVector,
}

impl Terminations {
    /// Rejects non-passive entries unless `allow_active` is set.
    pub fn new(gamma_t: CVector, gamma_r: CVector, allow_active: bool) -> Result<Self> {
        if !allow_active {
            for g in gamma_t.iter().chain(gamma_r.iter()) {
                if g.norm() > 1.0 + 1e-12 {
                    return Err(Error::Invariant(format!("termination |Γ| = {} exceeds 1", g.norm())));
                }
            }
        }
        Ok(Self { gamma_t, gamma_r })
    }

    pub fn matched(n_t: usize, n_r: usize) -> Self {
        Self { gamma_t: CVector::zeros(n_t), gamma_r: CVector::zeros(n_r) }
    }

    /// Terminations from source and load impedances against reference `z0`.
    pub fn from_impedances(z_t: &[Complex64], z_r: &[Complex64], z0: f64) -> Result<Self> {
        let refl = |z: &Complex64| super::element::ra_reflection(*z, c(z0, 0.0));
        let gt = z_t.iter().map(refl).collect::<Result<Vec<_>>>()?;
        let gr = z_r.iter().map(refl).collect::<Result<Vec<_>>>()?;
        Self::new(CVector::from_vec(gt), CVector::from_vec(gr), true)
    }

    pub fn gamma_t_matrix(&self) -> CMatrix {
        CMatrix::from_diagonal(&self.gamma_t)
    }

    pub fn gamma_r_matrix(&self) -> CMatrix {
        CMatrix::from_diagonal(&self.gamma_r)
    }

    fn check(&self, s: &ScatteringMatrix) -> Result<()> {
        if self.gamma_t.len() != s.n_t() || self.gamma_r.len() != s.n_r() {
            return Err(Error::Dimension(format!(
                "terminations ({}, {}) vs ports ({}, {})",
                self.gamma_t.len(),
                self.gamma_r.len(),
                s.n_t(),
                s.n_r()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelVariant {
    EmMc,
    Conventional,
    PassiveMc,
    PassiveNoMc,
}

/// Effective channels at the receiver (`h_e`, `h_n`) and at the RIS output (`h_out_e`, `h_out_n`).
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelPair {
    pub h_e: CMatrix,
    pub h_n: CMatrix,
    pub h_out_e: CMatrix,
    pub h_out_n: CMatrix,
    pub variant: ModelVariant,
}

impl ChannelPair {
    /// `H_e a_s + H_n a_n`.
    pub fn received(&self, a_s: &CVector, a_n: &CVector) -> CVector {
        &self.h_e * a_s + &self.h_n * a_n
    }

    /// `H̆_e a_s + H̆_n a_n`.
    pub fn ris_output(&self, a_s: &CVector, a_n: &CVector) -> CVector {
        &self.h_out_e * a_s + &self.h_out_n * a_n
    }
}

fn check_gamma(s: &ScatteringMatrix, gamma: &CVector) -> Result<()> {
    if gamma.len() != s.m() {
        return Err(Error::Dimension(format!("{} reflection coefficients for {} RIS ports", gamma.len(), s.m())));
    }
    Ok(())
}

pub fn loop_gain_spectral_radius(gamma: &CVector, s_aa: &CMatrix) -> f64 {
    spectral_radius(&diag_mul(gamma, s_aa))
}

/// Strict stability check `ρ(Γ_A S_AA) < 1 - SPECTRAL_MARGIN`. Returns the spectral radius.
pub fn ensure_spectral_stability(gamma: &CVector, s_aa: &CMatrix) -> Result<f64> {
    let rho = loop_gain_spectral_radius(gamma, s_aa);
    if !(rho < 1.0 - SPECTRAL_MARGIN) {
        return Err(Error::Instability { context: "Γ_A S_AA", spectral_radius: rho });
    }
    Ok(rho)
}

/// `(I - Γ_A S_AA)^{-1} Γ_A`, the response of the coupled RIS to the waves it receives.
///
/// Fails with an instability error when the loop matrix is numerically singular.
pub fn loop_response(gamma: &CVector, s_aa: &CMatrix) -> Result<CMatrix> {
    let m = gamma.len();
    let loop_mat = identity(m) - diag_mul(gamma, s_aa);
    let inv = inverse(&loop_mat, "I - Γ_A S_AA").map_err(|_| Error::Instability {
        context: "I - Γ_A S_AA",
        spectral_radius: loop_gain_spectral_radius(gamma, s_aa),
    })?;
    let mut k = inv;
    for (j, mut col) in k.column_iter_mut().enumerate() {
        col *= gamma[j];
    }
    Ok(k)
}

fn channels_from_response(s: &ScatteringMatrix, k: CMatrix, variant: ModelVariant) -> ChannelPair {
    let h_n = &s.s_ra * &k;
    let h_out_e = &k * &s.s_at;
    let h_e = &s.s_rt + &h_n * &s.s_at;
    ChannelPair { h_e, h_n, h_out_e, h_out_n: k, variant }
}

/// EM-compliant channels for a raw reflection diagonal.
pub fn em_channels(s: &ScatteringMatrix, gamma: &CVector) -> Result<ChannelPair> {
    check_gamma(s, gamma)?;
    let k = loop_response(gamma, &s.s_aa)?;
    Ok(channels_from_response(s, k, ModelVariant::EmMc))
}

/// Reduced EM-compliant channels with matched terminations.
pub fn reduced_channels(s: &ScatteringMatrix, state: &ReflectionState) -> Result<ChannelPair> {
    em_channels(s, &state.gamma_diagonal())
}

/// Conventional cascaded channels that ignore `S_AA`.
pub fn conventional_channels_with_gamma(s: &ScatteringMatrix, gamma: &CVector) -> Result<ChannelPair> {
    check_gamma(s, gamma)?;
    let k = CMatrix::from_diagonal(gamma);
    Ok(channels_from_response(s, k, ModelVariant::Conventional))
}

pub fn conventional_channels(s: &ScatteringMatrix, state: &ReflectionState) -> Result<ChannelPair> {
    conventional_channels_with_gamma(s, &state.gamma_diagonal())
}

/// Passive-RIS channel. No RIS noise is injected, so `h_n` and `h_out_n` are zero.
pub fn passive_channel(s: &ScatteringMatrix, gamma_p: &CVector, with_mc: bool) -> Result<ChannelPair> {
    check_gamma(s, gamma_p)?;
    if let Some(g) = gamma_p.iter().find(|g| g.norm() > 1.0 + 1e-12) {
        return Err(Error::Invariant(format!("passive reflection |Γ| = {} exceeds 1", g.norm())));
    }
    let (k, variant) = if with_mc {
        (loop_response(gamma_p, &s.s_aa)?, ModelVariant::PassiveMc)
    } else {
        (CMatrix::from_diagonal(gamma_p), ModelVariant::PassiveNoMc)
    };
    let mut pair = channels_from_response(s, k, variant);
    pair.h_n.fill(c(0.0, 0.0));
    pair.h_out_n.fill(c(0.0, 0.0));
    Ok(pair)
}

/// Auxiliary matrices of the closed-form received wave with general terminations.
///
/// `b_R = F_R S̃_RT a_T + S_N a_N` with
/// `a_T = (I - Γ_T Ŝ_TT)^{-1} (a_S + Γ_T Ŝ_N a_N)`.
#[derive(Clone, Debug)]
pub struct FullModelTerms {
    pub s_tilde_tt: CMatrix,
    pub s_tilde_tr: CMatrix,
    pub s_tilde_rt: CMatrix,
    pub s_tilde_rr: CMatrix,
    pub s_hat_tt: CMatrix,
    pub s_hat_n: CMatrix,
    pub s_n: CMatrix,
    /// `(I - S̃_RR Γ_R)^{-1} S̃_RT`
    pub transfer_rt: CMatrix,
    gamma_t: CVector,
}

impl FullModelTerms {
    pub fn b_r(&self, a_s: &CVector, a_n: &CVector) -> Result<CVector> {
        let n_t = self.gamma_t.len();
        if a_s.len() != n_t || a_n.len() != self.s_n.ncols() {
            return Err(Error::Dimension(format!(
                "waves ({}, {}) vs ports ({n_t}, {})",
                a_s.len(),
                a_n.len(),
                self.s_n.ncols()
            )));
        }
        let lhs = identity(n_t) - diag_mul(&self.gamma_t, &self.s_hat_tt);
        let rhs = a_s + self.gamma_t.component_mul(&(&self.s_hat_n * a_n));
        let a_t = solve(&lhs, &CMatrix::from_column_slice(n_t, 1, rhs.as_slice()), "I - Γ_T Ŝ_TT")?;
        let a_t = CVector::from_column_slice(a_t.as_slice());
        let b = &self.transfer_rt * a_t + &self.s_n * a_n;
        Ok(b)
    }
}

pub fn full_model_terms(s: &ScatteringMatrix, gamma: &CVector, term: &Terminations) -> Result<FullModelTerms> {
    s.validate()?;
    check_gamma(s, gamma)?;
    term.check(s)?;
    let k = loop_response(gamma, &s.s_aa)?;
    let ka_t = &k * &s.s_at;
    let ka_r = &k * &s.s_ar;
    let s_tilde_tt = &s.s_tt + &s.s_ta * &ka_t;
    let s_tilde_tr = &s.s_tr + &s.s_ta * &ka_r;
    let s_tilde_rt = &s.s_rt + &s.s_ra * &ka_t;
    let s_tilde_rr = &s.s_rr + &s.s_ra * &ka_r;

    let n_r = s.n_r();
    let mut rr_gamma = s_tilde_rr.clone();
    for (j, mut col) in rr_gamma.column_iter_mut().enumerate() {
        col *= term.gamma_r[j];
    }
    let feedback = identity(n_r) - rr_gamma;
    let h_n = &s.s_ra * &k;
    let s_n = solve(&feedback, &h_n, "I - S̃_RR Γ_R")?;
    let transfer_rt = solve(&feedback, &s_tilde_rt, "I - S̃_RR Γ_R")?;
    // Written without S̃_RR^{-1}: Γ_R (I - S̃_RR Γ_R)^{-1} closes the receiver loop.
    let tr_gamma = {
        let mut m = s_tilde_tr.clone();
        for (j, mut col) in m.column_iter_mut().enumerate() {
            col *= term.gamma_r[j];
        }
        m
    };
    let s_hat_tt = &s_tilde_tt + &tr_gamma * &transfer_rt;
    let s_hat_n = &tr_gamma * &s_n + &s.s_ta * &k;
    Ok(FullModelTerms {
        s_tilde_tt,
        s_tilde_tr,
        s_tilde_rt,
        s_tilde_rr,
        s_hat_tt,
        s_hat_n,
        s_n,
        transfer_rt,
        gamma_t: term.gamma_t.clone(),
    })
}

/// Received wave `b_R` of the full EM-compliant model with arbitrary terminations.
pub fn full_model_b_r(
    s: &ScatteringMatrix,
    state: &ReflectionState,
    term: &Terminations,
    a_s: &CVector,
    a_n: &CVector,
) -> Result<CVector> {
    full_model_terms(s, &state.gamma_diagonal(), term)?.b_r(a_s, a_n)
}
