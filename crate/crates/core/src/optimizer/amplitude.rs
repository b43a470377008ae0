//! Per-element amplitude update.
//!
//! Changing element `m` perturbs `G = Γ_A^{-1}` by a rank one term, so with the
//! current loop response `K0 = (G0 - S_AA)^{-1}` the new response is
//! `K(ḡ) = K0 - u v^T (ḡ - ḡ0) / (q d(ḡ))`, `u = K0 e_m`, `v^T = e_m^T K0`,
//! `q = L² e^{j2θ_m}`, `ḡ = 1/α_m` and `d(ḡ) = 1 + k (ḡ - ḡ0)/q`, `k = K0[m, m]`.
//! Every channel is then affine in ḡ over `d(ḡ)`, which makes the weighted MSE
//! times `|d|²` and the amplification slack times `|d|²` real quadratics in ḡ.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c, frob2, CMatrix, CVector};
use crate::metrics::NoisePowers;
use crate::multiport::ScatteringMatrix;

/// Real quadratic `c0 + c1 x + c2 x²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadratic {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Quadratic {
    pub fn eval(&self, x: f64) -> f64 {
        self.c0 + x * (self.c1 + x * self.c2)
    }

    /// Interpolates through three points.
    pub fn fit(xs: [f64; 3], ys: [f64; 3]) -> Self {
        // Newton divided differences, exact for quadratics.
        let d01 = (ys[1] - ys[0]) / (xs[1] - xs[0]);
        let d12 = (ys[2] - ys[1]) / (xs[2] - xs[1]);
        let c2 = (d12 - d01) / (xs[2] - xs[0]);
        let c1 = d01 - c2 * (xs[0] + xs[1]);
        let c0 = ys[0] - xs[0] * (c1 + c2 * xs[0]);
        Self { c0, c1, c2 }
    }

    /// Minimizer over `[lo, hi]` by the vertex-or-endpoint rule.
    pub fn argmin_on(&self, lo: f64, hi: f64) -> f64 {
        let mut best = (self.eval(lo), lo);
        let v = self.eval(hi);
        if v < best.0 {
            best = (v, hi);
        }
        if self.c2 > 0.0 {
            let x = -self.c1 / (2.0 * self.c2);
            if x > lo && x < hi {
                let v = self.eval(x);
                if v < best.0 {
                    best = (v, x);
                }
            }
        }
        best.1
    }

    fn sub(&self, other: &Quadratic, mu: f64) -> Quadratic {
        Quadratic { c0: self.c0 - mu * other.c0, c1: self.c1 - mu * other.c1, c2: self.c2 - mu * other.c2 }
    }

    /// Sub-intervals of `[lo, hi]` on which the quadratic is nonnegative.
    pub fn nonnegative_parts(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        let scale = self.c0.abs().max(self.c1.abs() * hi.abs().max(lo.abs())).max(self.c2.abs() * hi * hi);
        let mut cuts = vec![lo];
        let mut roots = Vec::new();
        if self.c2.abs() > 1e-14 * scale {
            let disc = self.c1 * self.c1 - 4.0 * self.c2 * self.c0;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                // numerically stable pair
                let qq = -0.5 * (self.c1 + self.c1.signum() * sq);
                if qq != 0.0 {
                    roots.push(qq / self.c2);
                    roots.push(self.c0 / qq);
                } else {
                    roots.push(0.0);
                }
            }
        } else if self.c1 != 0.0 {
            roots.push(-self.c0 / self.c1);
        }
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.extend(roots.into_iter().filter(|r| *r > lo && *r < hi));
        cuts.push(hi);
        let mut out: Vec<(f64, f64)> = Vec::new();
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let probe = if b > a { 0.5 * (a + b) } else { a };
            if self.eval(probe) >= 0.0 {
                match out.last_mut() {
                    Some(last) if last.1 == a => last.1 = b,
                    _ => out.push((a, b)),
                }
            }
        }
        out
    }
}

/// Everything needed to evaluate the objective and constraint exactly along one
/// coordinate `ḡ_m`, plus the identified rational form.
#[derive(Clone, Debug)]
pub struct SubproblemCoefficients {
    pub element: usize,
    pub g0: f64,
    pub q: Complex64,
    /// `d(ḡ) = d0 + d1 ḡ`.
    pub d0: Complex64,
    pub d1: Complex64,
    /// `d1 / d0`.
    pub a_m: Complex64,
    /// Weighted MSE times `|d|²`.
    pub numerator: Quadratic,
    /// `|d(ḡ)|²`.
    pub denominator: Quadratic,
    /// `(P^A_max - P^A(ḡ)) |d|²`; `None` without an amplification budget.
    pub constraint: Option<Quadratic>,
    pub bounds: (f64, f64),
}

/// Fixed data of one outer iteration (everything except the RIS state).
pub struct CoordinateContext<'a> {
    pub s: &'a ScatteringMatrix,
    pub w: &'a CMatrix,
    pub d: &'a CMatrix,
    pub v: &'a CMatrix,
    pub noise: &'a NoisePowers,
    pub p_max_a: Option<f64>,
    /// `L_PS²`.
    pub l2: f64,
    pub gamma_max: f64,
}

/// Cached products of the current loop response used by the rank-one formulas.
pub struct AnchoredResponse {
    pub k: CMatrix,
    pub h_e: CMatrix,
    pub h_n: CMatrix,
    /// `K S_AT W`
    pub out_w: CMatrix,
    hn_hn: CMatrix,
    k_f2: f64,
    out_w_f2: f64,
}

impl AnchoredResponse {
    pub fn new(ctx: &CoordinateContext, k: CMatrix) -> Self {
        let s_at_w = &ctx.s.s_at * ctx.w;
        let h_n = &ctx.s.s_ra * &k;
        let h_e = &ctx.s.s_rt + &h_n * &ctx.s.s_at;
        let out_w = &k * &s_at_w;
        Self { hn_hn: &h_n * h_n.adjoint(), k_f2: frob2(&k), out_w_f2: frob2(&out_w), k, h_e, h_n, out_w }
    }

    /// Applies the accepted rank-one change `K <- K - u v^T s`.
    pub fn update(&mut self, ctx: &CoordinateContext, m: usize, s: Complex64) {
        let u = self.k.column(m).into_owned();
        let v = self.k.row(m).into_owned();
        let k = &self.k - &u * &v * s;
        *self = Self::new(ctx, k);
    }
}

/// Exact evaluation of the weighted MSE and the amplification power along `ḡ_m`.
pub struct Coordinate<'c, 'a> {
    ctx: &'c CoordinateContext<'a>,
    base: &'c AnchoredResponse,
    pub m: usize,
    pub g0: f64,
    pub q: Complex64,
    pub k_mm: Complex64,
    a: CVector,
    /// `b^T S_AT`
    b_s_at: CMatrix,
    b_out_w: CMatrix,
    hn_bconj: CVector,
    b_norm2: f64,
    u_norm2: f64,
    k_cross: Complex64,
    e_cross: Complex64,
    y_norm2: f64,
    dv: CMatrix,
    q_mat: CMatrix,
    const_term: f64,
}

impl<'c, 'a> Coordinate<'c, 'a> {
    pub fn new(ctx: &'c CoordinateContext<'a>, base: &'c AnchoredResponse, m: usize, gamma_m: Complex64) -> Self {
        let q = gamma_m / gamma_m.norm() * ctx.l2;
        let g0 = ctx.l2 / gamma_m.norm();
        let u = base.k.column(m).into_owned();
        let b = base.k.row(m).transpose();
        let a = &ctx.s.s_ra * &u;
        let b_s_at = CMatrix::from_row_slice(1, b.len(), b.as_slice()) * &ctx.s.s_at;
        let b_out_w = &b_s_at * ctx.w;
        let hn_bconj = &base.h_n * b.conjugate();
        let k_cross = (u.adjoint() * &base.k * b.conjugate())[(0, 0)];
        let e_cross = (u.adjoint() * &base.out_w * b_out_w.adjoint())[(0, 0)];
        let dv = ctx.d * ctx.v;
        let q_mat = &dv * ctx.d.adjoint();
        let const_term = ctx.v.trace().re + ctx.noise.sigma2_rx * q_mat.trace().re;
        Self {
            ctx,
            base,
            m,
            g0,
            q,
            k_mm: base.k[(m, m)],
            b_norm2: b.norm_squared(),
            u_norm2: u.norm_squared(),
            y_norm2: b_out_w.norm_squared(),
            a,
            b_s_at,
            b_out_w,
            hn_bconj,
            k_cross,
            e_cross,
            dv,
            q_mat,
            const_term,
        }
    }

    /// `d(ḡ) = 1 + k (ḡ - ḡ0) / q` as `(d0, d1)`.
    pub fn d_coeffs(&self) -> (Complex64, Complex64) {
        let d1 = self.k_mm / self.q;
        (c(1.0, 0.0) - d1 * self.g0, d1)
    }

    /// Rank-one coefficient `s(ḡ)` with `K(ḡ) = K0 - u v^T s(ḡ)`.
    pub fn shift(&self, g: f64) -> Complex64 {
        let (d0, d1) = self.d_coeffs();
        let t = c(g - self.g0, 0.0) / self.q;
        t / (d0 + d1 * g)
    }

    /// `H_e` with element `m` moved to `ḡ` and all others held.
    pub fn h_e(&self, g: f64) -> CMatrix {
        &self.base.h_e - &self.a * &self.b_s_at * self.shift(g)
    }

    /// Weighted MSE `Re Tr(V U)` at `ḡ`.
    pub fn objective(&self, g: f64) -> f64 {
        let s = self.shift(g);
        let ctx = self.ctx;
        // H_e(ḡ) W = H_e0 W - s a (b^T S_AT W)
        let hw = &self.base.h_e * ctx.w - &self.a * &self.b_out_w * s;
        // H_n H_n^H
        let ax = &self.a * self.hn_bconj.adjoint();
        let hnhn = &self.base.hn_hn - (&ax * s + ax.adjoint() * s.conj())
            + &self.a * self.a.adjoint() * c(s.norm_sqr() * self.b_norm2, 0.0);
        // Tr(V U) = Tr(Q H W W^H H^H) - 2 Re Tr(V D^H H W) + Tr(V) + Tr(Q N)
        let quad = (&self.q_mat * &hw * hw.adjoint()).trace().re;
        let lin = (self.dv.adjoint() * &hw).trace().re;
        let noise = ctx.noise.sigma2_ris * (&self.q_mat * hnhn).trace().re;
        quad - 2.0 * lin + noise + self.const_term
    }

    /// Amplification power `‖K S_AT W‖² + σ²_RIS ‖K‖²` at `ḡ`.
    pub fn amplification(&self, g: f64) -> f64 {
        let s = self.shift(g);
        let sig = self.base.out_w_f2 - 2.0 * (s.conj() * self.e_cross).re + s.norm_sqr() * self.u_norm2 * self.y_norm2;
        let kk = self.base.k_f2 - 2.0 * (s.conj() * self.k_cross).re + s.norm_sqr() * self.u_norm2 * self.b_norm2;
        sig + self.ctx.noise.sigma2_ris * kk
    }

    /// Identifies the rational form from exact evaluations at three points.
    pub fn coefficients(&self) -> SubproblemCoefficients {
        let (lo, hi) = (self.ctx.l2 / self.ctx.gamma_max, self.ctx.l2);
        let (d0, d1) = self.d_coeffs();
        let denominator = Quadratic { c0: d0.norm_sqr(), c1: 2.0 * (d0 * d1.conj()).re, c2: d1.norm_sqr() };
        let xs = [lo, 0.5 * (lo + hi), hi];
        let dn = xs.map(|x| denominator.eval(x));
        let numerator = Quadratic::fit(xs, [0, 1, 2].map(|i| self.objective(xs[i]) * dn[i]));
        let constraint =
            self.ctx.p_max_a.map(|pa| Quadratic::fit(xs, [0, 1, 2].map(|i| (pa - self.amplification(xs[i])) * dn[i])));
        SubproblemCoefficients {
            element: self.m,
            g0: self.g0,
            q: self.q,
            d0,
            d1,
            a_m: if d0.norm() > 0.0 { d1 / d0 } else { c(f64::INFINITY, 0.0) },
            numerator,
            denominator,
            constraint,
            bounds: (lo, hi),
        }
    }
}

/// Feasible pieces of the `ḡ` box after the amplification constraint.
pub fn feasible_set(coef: &SubproblemCoefficients) -> Vec<(f64, f64)> {
    let (lo, hi) = coef.bounds;
    match &coef.constraint {
        None => vec![(lo, hi)],
        Some(cq) => cq.nonnegative_parts(lo, hi),
    }
}

/// Dinkelbach iterations for `min N(ḡ)/D(ḡ)` over a union of intervals.
pub fn dinkelbach(coef: &SubproblemCoefficients, set: &[(f64, f64)], tol: f64, max_iter: usize) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::Infeasible(format!("element {}: empty feasible interval", coef.element)));
    }
    let ratio = |x: f64| coef.numerator.eval(x) / coef.denominator.eval(x);
    let start = set.iter().find(|(a, b)| coef.g0 >= *a && coef.g0 <= *b).map(|_| coef.g0).unwrap_or(set[0].0);
    let mut x = start;
    let mut mu = ratio(x);
    for _ in 0..max_iter {
        let para = coef.numerator.sub(&coef.denominator, mu);
        let mut best = (f64::INFINITY, x);
        for &(a, b) in set {
            let cand = para.argmin_on(a, b);
            let val = para.eval(cand);
            if val < best.0 {
                best = (val, cand);
            }
        }
        x = best.1;
        let scale = coef.numerator.eval(x).abs().max(f64::MIN_POSITIVE);
        if best.0 >= -tol * scale {
            break;
        }
        mu = ratio(x);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_fit_and_minimum() {
        let q = Quadratic { c0: 1.0, c1: -4.0, c2: 2.0 };
        let fit = Quadratic::fit([0.0, 0.5, 3.0], [q.eval(0.0), q.eval(0.5), q.eval(3.0)]);
        assert!((fit.c0 - 1.0).abs() < 1e-12 && (fit.c1 + 4.0).abs() < 1e-12 && (fit.c2 - 2.0).abs() < 1e-12);
        assert!((q.argmin_on(0.0, 3.0) - 1.0).abs() < 1e-15);
        assert_eq!(q.argmin_on(2.0, 3.0), 2.0);
        let concave = Quadratic { c0: 0.0, c1: 0.0, c2: -1.0 };
        assert_eq!(concave.argmin_on(-1.0, 2.0), 2.0);
    }

    #[test]
    fn nonnegative_parts_of_quadratic() {
        // (x - 1)(x - 2) >= 0 on [0, 3] → [0, 1] ∪ [2, 3]
        let q = Quadratic { c0: 2.0, c1: -3.0, c2: 1.0 };
        let parts = q.nonnegative_parts(0.0, 3.0);
        assert_eq!(parts.len(), 2);
        assert!((parts[0].1 - 1.0).abs() < 1e-12 && (parts[1].0 - 2.0).abs() < 1e-12);
        let neg = Quadratic { c0: -1.0, c1: 0.0, c2: 0.0 };
        assert!(neg.nonnegative_parts(0.0, 1.0).is_empty());
        let lin = Quadratic { c0: 1.0, c1: -2.0, c2: 0.0 };
        let p = lin.nonnegative_parts(0.0, 1.0);
        assert_eq!(p.len(), 1);
        assert!((p[0].1 - 0.5).abs() < 1e-15);
    }

    fn coef(numerator: Quadratic, denominator: Quadratic) -> SubproblemCoefficients {
        SubproblemCoefficients {
            element: 0,
            g0: 0.5,
            q: c(1.0, 0.0),
            d0: c(1.0, 0.0),
            d1: c(0.0, 0.0),
            a_m: c(0.0, 0.0),
            numerator,
            denominator,
            constraint: None,
            bounds: (0.1, 1.0),
        }
    }

    #[test]
    fn constant_numerator_maximizes_denominator() {
        let cf = coef(Quadratic { c0: 1.0, c1: 0.0, c2: 0.0 }, Quadratic { c0: 1.0, c1: 2.0, c2: 1.0 });
        let x = dinkelbach(&cf, &[(0.1, 1.0)], 1e-12, 50).unwrap();
        assert_eq!(x, 1.0);
    }

    #[test]
    fn unit_denominator_is_plain_quadratic() {
        let cf = coef(Quadratic { c0: 0.0, c1: -0.8, c2: 1.0 }, Quadratic { c0: 1.0, c1: 0.0, c2: 0.0 });
        let x = dinkelbach(&cf, &[(0.1, 1.0)], 1e-12, 50).unwrap();
        assert!((x - 0.4).abs() < 1e-12);
        assert!(dinkelbach(&cf, &[], 1e-12, 50).is_err());
    }

    #[test]
    fn ratio_minimum_matches_grid() {
        let cf = coef(Quadratic { c0: 0.3, c1: -1.0, c2: 1.5 }, Quadratic { c0: 0.2, c1: 0.5, c2: 0.7 });
        let x = dinkelbach(&cf, &[(0.1, 1.0)], 1e-14, 100).unwrap();
        let f = |x: f64| cf.numerator.eval(x) / cf.denominator.eval(x);
        let best = (0..=100_000).map(|i| 0.1 + 0.9 * i as f64 / 1e5).fold(f64::INFINITY, |a, x| a.min(f(x)));
        assert!(f(x) <= best + 1e-12);
    }
}
