//! Dense complex matrix helpers shared by the network model and the optimizer.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Reciprocal 1-norm condition estimate below which a matrix is treated as singular.
pub const RCOND_FLOOR: f64 = 1e-13;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    CMatrix::zeros(rows, cols)
}

pub fn diag(entries: &CVector) -> CMatrix {
    CMatrix::from_diagonal(entries)
}

/// `diag(A B)` without forming the product.
pub fn diag_of_product(a: &CMatrix, b: &CMatrix) -> CVector {
    debug_assert_eq!(a.ncols(), b.nrows());
    CVector::from_fn(a.nrows().min(b.ncols()), |i, _| (0..a.ncols()).map(|k| a[(i, k)] * b[(k, i)]).sum())
}

/// Left-multiply by a diagonal matrix given as a vector.
pub fn diag_mul(d: &CVector, m: &CMatrix) -> CMatrix {
    let mut out = m.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row *= d[i];
    }
    out
}

/// Squared Frobenius norm.
pub fn frob2(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn trace_re(m: &CMatrix) -> f64 {
    m.trace().re
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn one_norm(m: &CMatrix) -> f64 {
    m.column_iter().map(|col| col.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Solve `A X = B` by partial-pivot LU; rejects numerically singular `A`.
pub fn solve(a: &CMatrix, b: &CMatrix, name: &'static str) -> Result<CMatrix> {
    let lu = a.clone().lu();
    let x = lu.solve(b).ok_or(Error::Singular(name))?;
    if !is_finite(&x) {
        return Err(Error::Singular(name));
    }
    Ok(x)
}

/// Inverse with a reciprocal-condition check.
pub fn inverse(a: &CMatrix, name: &'static str) -> Result<CMatrix> {
    let inv = a.clone().try_inverse().ok_or(Error::Singular(name))?;
    if !is_finite(&inv) || rcond(a, &inv) < RCOND_FLOOR {
        return Err(Error::Singular(name));
    }
    Ok(inv)
}

/// Reciprocal 1-norm condition number given the matrix and its inverse.
pub fn rcond(a: &CMatrix, inv: &CMatrix) -> f64 {
    let denom = one_norm(a) * one_norm(inv);
    if denom == 0.0 || !denom.is_finite() {
        0.0
    } else {
        1.0 / denom
    }
}

pub fn spectral_radius(m: &CMatrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone().schur().eigenvalues().map(|ev| ev.iter().map(|z| z.norm()).fold(0.0, f64::max)).unwrap_or(f64::NAN)
}

pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.iter().copied().fold(0.0, f64::max)
}

/// `0.5 (A + A^H)`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Eigenvalues of a Hermitian matrix (ascending order not guaranteed).
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    hermitian_part(m).symmetric_eigen().eigenvalues.iter().copied().collect()
}

/// Natural log-determinant of a Hermitian positive definite matrix via Cholesky.
pub fn ln_det_hpd(m: &CMatrix, name: &'static str) -> Result<f64> {
    let chol = hermitian_part(m).cholesky().ok_or(Error::Singular(name))?;
    Ok(chol.l().diagonal().iter().map(|z| 2.0 * z.re.ln()).sum())
}

/// Column-stacking vectorization.
pub fn vec_of(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

pub fn unvec(v: &CVector, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_column_slice(rows, cols, v.as_slice())
}

/// `I_n ⊗ A`.
pub fn kron_identity(n: usize, a: &CMatrix) -> CMatrix {
    let (r, k) = a.shape();
    let mut out = zeros(n * r, n * k);
    for b in 0..n {
        out.view_mut((b * r, b * k), (r, k)).copy_from(a);
    }
    out
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Relative Frobenius distance `‖a - b‖ / max(‖b‖, tiny)`.
pub fn rel_err(a: &CMatrix, b: &CMatrix) -> f64 {
    let num = (a - b).norm();
    let den = b.norm();
    if den < 1e-300 {
        num
    } else {
        num / den
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diag_of_product_matches_full_product() {
        let a = CMatrix::from_fn(3, 4, |i, j| c(i as f64 + 0.5, j as f64 - 1.0));
        let b = CMatrix::from_fn(4, 3, |i, j| c(j as f64 * 0.3, i as f64));
        let full = &a * &b;
        let d = diag_of_product(&a, &b);
        for i in 0..3 {
            assert!((d[i] - full[(i, i)]).norm() < 1e-12);
        }
    }

    #[test]
    fn kron_identity_blocks() {
        let a = CMatrix::from_fn(2, 2, |i, j| c((i * 2 + j) as f64, 0.0));
        let k = kron_identity(3, &a);
        assert_eq!(k.shape(), (6, 6));
        assert_eq!(k[(3, 4)], ZERO);
        assert_eq!(k[(3, 2)], a[(1, 0)]);
        assert_eq!(k[(5, 5)], a[(1, 1)]);
        // vec(A X) = (I ⊗ A) vec(X)
        let x = CMatrix::from_fn(2, 3, |i, j| c(i as f64 - j as f64, 1.0));
        let lhs = vec_of(&(&a * &x));
        let rhs = &k * vec_of(&x);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = CMatrix::from_fn(2, 2, |_, _| ONE);
        assert!(inverse(&a, "ones").is_err());
    }

    #[test]
    fn ln_det_matches_eigenvalues() {
        let a = CMatrix::from_fn(3, 3, |i, j| c((i + j) as f64 * 0.1, i as f64 - j as f64));
        let h = &a * a.adjoint() + identity(3);
        let ld = ln_det_hpd(&h, "h").unwrap();
        let from_eig: f64 = hermitian_eigenvalues(&h).iter().map(|l| l.ln()).sum();
        assert!((ld - from_eig).abs() < 1e-12);
    }
}
