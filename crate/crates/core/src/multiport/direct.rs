use super::element::ReflectionState;
use super::network::{loop_gain_spectral_radius, ScatteringMatrix, Terminations};
use crate::error::{Error, Result};
use crate::linalg::{c, inverse, CMatrix, CVector};

/// Incident (`a_*`) and scattered (`b_*`) waves at every port of a solved network,
/// together with the source and noise excitations that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct PortWaves {
    pub a_t: CVector,
    pub b_t: CVector,
    pub a_a: CVector,
    pub b_a: CVector,
    pub a_r: CVector,
    pub b_r: CVector,
    pub a_s: CVector,
    pub a_n: CVector,
}

impl PortWaves {
    /// Incident waves stacked in `[T, A, R]` order.
    pub fn a(&self) -> CVector {
        stack(&[&self.a_t, &self.a_a, &self.a_r])
    }

    pub fn b(&self) -> CVector {
        stack(&[&self.b_t, &self.b_a, &self.b_r])
    }

    /// Port voltages `√Z0 (a + b)`.
    pub fn voltages(&self, z0: f64) -> CVector {
        (self.a() + self.b()) * c(z0.sqrt(), 0.0)
    }

    /// Port currents `(a - b) / √Z0`.
    pub fn currents(&self, z0: f64) -> CVector {
        (self.a() - self.b()) / c(z0.sqrt(), 0.0)
    }

    /// Largest relative residual over `b = S a` and the three boundary conditions.
    pub fn max_residual(&self, s: &ScatteringMatrix, gamma: &CVector, term: &Terminations) -> f64 {
        let a = self.a();
        let b = self.b();
        let scale = a.norm().max(b.norm()).max(self.a_s.norm()).max(self.a_n.norm()).max(1e-300);
        let r_net = (&b - s.to_full() * &a).norm();
        let r_t = (&self.a_t - &self.a_s - term.gamma_t.component_mul(&self.b_t)).norm();
        let r_r = (&self.a_r - term.gamma_r.component_mul(&self.b_r)).norm();
        let r_a = (&self.a_a - gamma.component_mul(&(&self.a_n + &self.b_a))).norm();
        [r_net, r_t, r_r, r_a].into_iter().fold(0.0, f64::max) / scale
    }
}

fn stack(parts: &[&CVector]) -> CVector {
    CVector::from_iterator(parts.iter().map(|p| p.len()).sum(), parts.iter().flat_map(|p| p.iter().copied()))
}

/// Solves the port network as one `2N x 2N` linear system in the unknowns `[a; b]`.
///
/// Rows `0..N` hold `b - S a = 0`; rows `N..2N` hold the terminations
/// `a_T - Γ_T b_T = a_S`, `a_A - Γ_A b_A = Γ_A a_N`, `a_R - Γ_R b_R = 0`.
pub fn solve_network_direct_with_gamma(
    s: &ScatteringMatrix,
    gamma: &CVector,
    term: &Terminations,
    a_s: &CVector,
    a_n: &CVector,
) -> Result<PortWaves> {
    s.validate()?;
    let (n_t, m, n_r) = (s.n_t(), s.m(), s.n_r());
    let n = n_t + m + n_r;
    if gamma.len() != m || term.gamma_t.len() != n_t || term.gamma_r.len() != n_r || a_s.len() != n_t || a_n.len() != m
    {
        return Err(Error::Dimension(format!(
            "direct solve: ports ({n_t}, {m}, {n_r}), Γ_A {}, Γ_T {}, Γ_R {}, a_s {}, a_n {}",
            gamma.len(),
            term.gamma_t.len(),
            term.gamma_r.len(),
            a_s.len(),
            a_n.len()
        )));
    }
    let full = s.to_full();
    let mut sys = CMatrix::zeros(2 * n, 2 * n);
    let mut rhs = CMatrix::zeros(2 * n, 1);
    for i in 0..n {
        sys[(i, n + i)] = c(1.0, 0.0);
        for j in 0..n {
            sys[(i, j)] = -full[(i, j)];
        }
    }
    let refl = |p: usize| {
        if p < n_t {
            term.gamma_t[p]
        } else if p < n_t + m {
            gamma[p - n_t]
        } else {
            term.gamma_r[p - n_t - m]
        }
    };
    for p in 0..n {
        sys[(n + p, p)] = c(1.0, 0.0);
        sys[(n + p, n + p)] = -refl(p);
        rhs[(n + p, 0)] = if p < n_t {
            a_s[p]
        } else if p < n_t + m {
            gamma[p - n_t] * a_n[p - n_t]
        } else {
            c(0.0, 0.0)
        };
    }
    let inv = inverse(&sys, "direct network system").map_err(|_| Error::Instability {
        context: "direct network system",
        spectral_radius: loop_gain_spectral_radius(gamma, &s.s_aa),
    })?;
    let x = inv * rhs;
    let seg = |off: usize, len: usize| CVector::from_iterator(len, (off..off + len).map(|i| x[(i, 0)]));
    Ok(PortWaves {
        a_t: seg(0, n_t),
        a_a: seg(n_t, m),
        a_r: seg(n_t + m, n_r),
        b_t: seg(n, n_t),
        b_a: seg(n + n_t, m),
        b_r: seg(n + n_t + m, n_r),
        a_s: a_s.clone(),
        a_n: a_n.clone(),
    })
}

pub fn solve_network_direct(
    s: &ScatteringMatrix,
    state: &ReflectionState,
    term: &Terminations,
    a_s: &CVector,
    a_n: &CVector,
) -> Result<PortWaves> {
    solve_network_direct_with_gamma(s, &state.gamma_diagonal(), term, a_s, a_n)
}
