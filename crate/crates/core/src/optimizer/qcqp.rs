//! Beamforming subproblem: a convex QCQP with a power ball and an ellipsoid.
//!
//! minimize `w^H H1 w - 2 Re(h2^H w)` s.t. `w^H w <= p`, `w^H H3 w <= p_bar`.
//! The minimizer has the form `w(λ1, λ2) = (H1 + λ1 I + λ2 H3)^{-1} h2`; the
//! multipliers are found by bisection on the active constraints.

use crate::error::{Error, Result};
use crate::linalg::{c, frob2, hermitian_part, kron_identity, unvec, vec_of, CMatrix, CVector};
use crate::metrics::NoisePowers;
use crate::multiport::ChannelPair;

const MAX_BISECT: usize = 300;
const MAX_EXPAND: usize = 400;

#[derive(Clone, Debug)]
pub struct QcqpSolution {
    pub w: CVector,
    pub lambda1: f64,
    pub lambda2: f64,
    pub objective: f64,
}

/// Stacked problem data for the beamformer update.
#[derive(Clone, Debug)]
pub struct BeamformingProblem {
    pub h1: CMatrix,
    pub h2: CVector,
    pub h3: CMatrix,
    pub p_max: f64,
    /// Budget left for the signal after the amplified RIS noise; infinite when unconstrained.
    pub p_bar: f64,
    pub n_t: usize,
    pub n_r: usize,
}

pub fn qcqp_objective(h1: &CMatrix, h2: &CVector, w: &CVector) -> f64 {
    (w.adjoint() * h1 * w)[(0, 0)].re - 2.0 * (h2.adjoint() * w)[(0, 0)].re
}

fn quad(h: &CMatrix, w: &CVector) -> f64 {
    (w.adjoint() * h * w)[(0, 0)].re
}

/// Builds `H̄1 = I ⊗ H_e^H D V D^H H_e`, `h2 = vec(H_e^H D V)`, `H̄3 = I ⊗ H̆_e^H H̆_e`.
///
/// `p_max_a = None` drops the amplification constraint.
pub fn beamforming_problem(
    ch: &ChannelPair,
    d: &CMatrix,
    v: &CMatrix,
    p_max: f64,
    p_max_a: Option<f64>,
    noise: &NoisePowers,
) -> Result<BeamformingProblem> {
    let n_t = ch.h_e.ncols();
    let n_r = d.ncols();
    let hd = ch.h_e.adjoint() * d;
    let h1 = hermitian_part(&(&hd * v * hd.adjoint()));
    let h2 = vec_of(&(&hd * v));
    let h3 = hermitian_part(&(ch.h_out_e.adjoint() * &ch.h_out_e));
    let p_bar = match p_max_a {
        None => f64::INFINITY,
        Some(pa) => {
            let pb = pa - noise.sigma2_ris * frob2(&ch.h_out_n);
            if !(pb > 0.0) {
                return Err(Error::Infeasible(format!(
                    "amplified RIS noise {:.6e} W exhausts the amplification budget {pa:.6e} W",
                    pa - pb
                )));
            }
            pb
        }
    };
    Ok(BeamformingProblem { h1: kron_identity(n_r, &h1), h2, h3: kron_identity(n_r, &h3), p_max, p_bar, n_t, n_r })
}

/// Eigen-decomposed `H1 + λ2 H3`, giving cheap `w(λ1)` for fixed `λ2`.
struct Pencil {
    vals: Vec<f64>,
    vecs: CMatrix,
    coef: CVector,
}

impl Pencil {
    fn new(h1: &CMatrix, h3: &CMatrix, h2: &CVector, lambda2: f64, ridge: f64) -> Self {
        let a = hermitian_part(&(h1 + h3 * c(lambda2, 0.0)));
        let eig = a.symmetric_eigen();
        let vals = eig.eigenvalues.iter().map(|&l| l.max(ridge)).collect();
        let coef = eig.eigenvectors.adjoint() * h2;
        Self { vals, vecs: eig.eigenvectors, coef }
    }

    fn w(&self, lambda1: f64) -> CVector {
        let scaled = CVector::from_fn(self.vals.len(), |i, _| self.coef[i] / (self.vals[i] + lambda1));
        &self.vecs * scaled
    }

    fn norm2(&self, lambda1: f64) -> f64 {
        self.vals.iter().zip(self.coef.iter()).map(|(l, z)| z.norm_sqr() / (l + lambda1).powi(2)).sum()
    }

    /// Smallest `λ1 >= 0` with `‖w‖² <= p`, approached from the feasible side.
    fn lambda1_for(&self, p: f64, tol: f64) -> f64 {
        if self.norm2(0.0) <= p {
            return 0.0;
        }
        let mut hi = self.coef.norm() / p.sqrt();
        while self.norm2(hi) > p {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..MAX_BISECT {
            let mid = 0.5 * (lo + hi);
            if self.norm2(mid) > p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= tol * hi {
                break;
            }
        }
        hi
    }
}

/// Solves the QCQP; see the module docs. `tol` is the relative bisection tolerance.
pub fn solve_qcqp(h1: &CMatrix, h2: &CVector, h3: &CMatrix, p: f64, p_bar: f64, tol: f64) -> Result<QcqpSolution> {
    let n = h2.len();
    if h1.shape() != (n, n) || h3.shape() != (n, n) {
        return Err(Error::Dimension(format!("QCQP data: H1 {:?}, h2 {n}, H3 {:?}", h1.shape(), h3.shape())));
    }
    if !(p > 0.0) || !(p_bar > 0.0) {
        return Err(Error::Infeasible(format!("QCQP budgets must be positive (p = {p}, p_bar = {p_bar})")));
    }
    let scale1 = h1.trace().re.abs().max(f64::MIN_POSITIVE);
    for (name, h) in [("H1", h1), ("H3", h3)] {
        let ev = hermitian_part(h).symmetric_eigenvalues();
        let tr = h.trace().re.abs().max(f64::MIN_POSITIVE);
        if ev.iter().any(|&l| l < -1e-9 * tr) {
            return Err(Error::Invariant(format!("{name} is not positive semidefinite")));
        }
    }
    let ridge = 1e-12 * scale1 / n as f64;
    let bisect_tol = tol.min(1e-12);
    let finish = |w: CVector, l1: f64, l2: f64| QcqpSolution {
        objective: qcqp_objective(h1, h2, &w),
        w,
        lambda1: l1,
        lambda2: l2,
    };
    if h2.norm() == 0.0 {
        return Ok(finish(CVector::zeros(n), 0.0, 0.0));
    }

    // λ2 = 0: interior or power ball active.
    let base = Pencil::new(h1, h3, h2, 0.0, ridge);
    let l1 = base.lambda1_for(p, bisect_tol);
    let w = base.w(l1);
    if quad(h3, &w) <= p_bar {
        return Ok(finish(w, l1, 0.0));
    }

    // λ2 > 0. For each λ2 the inner λ1 is solved exactly; the outer search uses the
    // sign of `g(λ2) = w^H H3 w - p_bar`, the derivative of the concave dual.
    let g = |l2: f64| {
        let pen = Pencil::new(h1, h3, h2, l2, ridge);
        let l1 = pen.lambda1_for(p, bisect_tol);
        let w = pen.w(l1);
        (quad(h3, &w) - p_bar, w, l1)
    };
    let mut hi = (h2.norm() / p_bar.sqrt()).max(f64::MIN_POSITIVE);
    let mut expand = 0;
    let mut at_hi = g(hi);
    while at_hi.0 > 0.0 {
        hi *= 2.0;
        at_hi = g(hi);
        expand += 1;
        if expand > MAX_EXPAND {
            return Err(Error::Infeasible("amplification constraint cannot be met".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..MAX_BISECT {
        if hi - lo <= bisect_tol * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let at_mid = g(mid);
        if at_mid.0 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
            at_hi = at_mid;
        }
    }
    let (_, w, l1) = at_hi;
    Ok(finish(w, l1, hi))
}

/// Solves the beamformer subproblem and returns `W` (`n_t x n_r`).
pub fn solve_beamforming(problem: &BeamformingProblem, tol: f64) -> Result<(CMatrix, QcqpSolution)> {
    let sol = solve_qcqp(&problem.h1, &problem.h2, &problem.h3, problem.p_max, problem.p_bar, tol)?;
    Ok((unvec(&sol.w, problem.n_t, problem.n_r), sol))
}

/// Relative stationarity residual `‖(H1 + λ1 I + λ2 H3) w - h2‖ / ‖h2‖`.
pub fn kkt_residual(h1: &CMatrix, h2: &CVector, h3: &CMatrix, sol: &QcqpSolution) -> f64 {
    let n = h2.len();
    let a = h1 + CMatrix::identity(n, n) * c(sol.lambda1, 0.0) + h3 * c(sol.lambda2, 0.0);
    (a * &sol.w - h2).norm() / h2.norm().max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_linear_term() {
        let h1 = CMatrix::identity(3, 3);
        let sol = solve_qcqp(&h1, &CVector::zeros(3), &h1, 1.0, 1.0, 1e-8).unwrap();
        assert_eq!(sol.w, CVector::zeros(3));
        assert_eq!((sol.lambda1, sol.lambda2), (0.0, 0.0));
    }

    #[test]
    fn interior_solution() {
        let h1 = CMatrix::identity(2, 2);
        let h2 = CVector::from_vec(vec![c(0.3, 0.1), c(-0.2, 0.4)]);
        let sol = solve_qcqp(&h1, &h2, &CMatrix::zeros(2, 2), 1.0, 1.0, 1e-8).unwrap();
        assert!((&sol.w - &h2).norm() < 1e-10);
        assert_eq!(sol.lambda2, 0.0);
    }

    #[test]
    fn ball_constraint_scales_solution() {
        let h1 = CMatrix::identity(2, 2);
        let h2 = CVector::from_vec(vec![c(3.0, 0.0), c(0.0, 4.0)]);
        let sol = solve_qcqp(&h1, &h2, &CMatrix::zeros(2, 2), 1.0, 1.0, 1e-8).unwrap();
        assert!((sol.w.norm() - 1.0).abs() < 1e-10);
        assert!((&sol.w - &h2 / c(5.0, 0.0)).norm() < 1e-9);
        assert!((sol.lambda1 - 4.0).abs() < 1e-8);
        assert!(kkt_residual(&h1, &h2, &CMatrix::zeros(2, 2), &sol) < 1e-8);
    }

    #[test]
    fn ellipsoid_active() {
        let h1 = CMatrix::identity(2, 2);
        let h2 = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let mut h3 = CMatrix::zeros(2, 2);
        h3[(0, 0)] = c(4.0, 0.0);
        let sol = solve_qcqp(&h1, &h2, &h3, 10.0, 1.0, 1e-8).unwrap();
        // w = 1 / (1 + 4 λ2) with 4 w² = 1 → w = 0.5, λ2 = 0.25
        assert!((sol.w[0] - c(0.5, 0.0)).norm() < 1e-9);
        assert!((sol.lambda2 - 0.25).abs() < 1e-8);
        assert!(quad(&h3, &sol.w) <= 1.0);
    }

    #[test]
    fn non_psd_input_rejected() {
        let mut h1 = CMatrix::identity(2, 2);
        h1[(1, 1)] = c(-1.0, 0.0);
        let h2 = CVector::from_element(2, c(1.0, 0.0));
        assert!(matches!(solve_qcqp(&h1, &h2, &CMatrix::zeros(2, 2), 1.0, 1.0, 1e-8), Err(Error::Invariant(_))));
        assert!(matches!(
            solve_qcqp(&CMatrix::identity(2, 2), &h2, &CMatrix::zeros(2, 2), 1.0, -1.0, 1e-8),
            Err(Error::Infeasible(_))
        ));
    }
}
