use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::amplitude::{dinkelbach, feasible_set, AnchoredResponse, Coordinate, CoordinateContext};
use super::config::AoConfig;
use super::phase::phase_model;
use super::problem::AoProblem;
use super::qcqp::{beamforming_problem, solve_beamforming};
use crate::error::{Error, Result};
use crate::linalg::{c, frob2, spectral_norm, CMatrix, CVector};
use crate::metrics::{
    achievable_rate, mse_matrix, optimal_detector, optimal_weight, ris_amplification_power, weighted_mse,
    OptimizerState,
};
use crate::multiport::{loop_response, ReflectionState};

/// Relative constraint violations of a final iterate.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Residuals {
    pub power: f64,
    pub amp: f64,
    pub gamma: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.power.max(self.amp).max(self.gamma)
    }
}

fn gamma_of(state: &ReflectionState) -> CVector {
    state.gamma_diagonal()
}

/// Feasible starting point: uniform random phases from `seed`, a common
/// amplitude that spends the amplification budget under a no-coupling estimate,
/// and a matched-filter beamformer at half of the tighter budget.
pub fn initialize(problem: &AoProblem, seed: u64) -> Result<OptimizerState> {
    let m = problem.s.m();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let phases: Vec<f64> = (0..m).map(|_| rng.random::<f64>() * 2.0 * PI).collect();

    let (reflection, ch) = match problem.p_max_a {
        None => {
            let state = problem.passive_state(phases);
            let ch = problem.channels(&gamma_of(&state))?;
            (state, ch)
        }
        Some(pa) => {
            let s_at = spectral_norm(&problem.s.s_at);
            let per_unit = s_at * s_at * problem.p_max + problem.noise.sigma2_ris * m as f64;
            let mut mag = if per_unit > 0.0 { (pa / per_unit).sqrt() } else { problem.gamma_max };
            mag = mag.clamp(1.0, problem.gamma_max);
            loop {
                let state =
                    ReflectionState::with_magnitude(mag, phases.clone(), problem.insertion_loss, problem.gamma_max)?;
                let attempt = problem.channels(&gamma_of(&state));
                match attempt {
                    Ok(ch) => {
                        let np = problem.noise.sigma2_ris * frob2(&ch.h_out_n);
                        if np <= 0.5 * pa {
                            break (state, ch);
                        }
                        if mag <= 1.0 {
                            return Err(Error::Infeasible(format!(
                                "amplified RIS noise {np:.3e} W exceeds half the budget {pa:.3e} W even at |Γ| = 1"
                            )));
                        }
                    }
                    Err(e) if mag <= 1.0 => return Err(e),
                    Err(_) => {}
                }
                mag = (mag / 2f64.sqrt()).max(1.0);
            }
        }
    };

    let n_t = problem.s.n_t();
    let n_r = problem.s.n_r();
    let mut w = ch.h_e.adjoint();
    if frob2(&w) == 0.0 {
        w = CMatrix::from_fn(n_t, n_r, |i, j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) });
    }
    let mut scale2 = 0.5 * problem.p_max / frob2(&w);
    if let Some(pa) = problem.p_max_a {
        let budget = pa - problem.noise.sigma2_ris * frob2(&ch.h_out_n);
        let sig = frob2(&(&ch.h_out_e * &w));
        if sig > 0.0 {
            scale2 = scale2.min(0.5 * budget / sig);
        }
    }
    let w = w * c(scale2.sqrt(), 0.0);
    let d = optimal_detector(&ch, &w, &problem.noise)?;
    let v = optimal_weight(&mse_matrix(&ch, &w, &d, &problem.noise))?;
    let rate = achievable_rate(&ch, &w, &problem.noise)?;
    Ok(OptimizerState { w, d, v, reflection, rate_trace: vec![rate], iteration: 0, converged: false })
}

/// One sweep of per-element amplitude updates. Returns the number of accepted updates.
pub fn amplitude_sweep(problem: &AoProblem, state: &mut OptimizerState, config: &AoConfig) -> Result<usize> {
    if problem.passive {
        return Ok(0);
    }
    let ctx = CoordinateContext {
        s: &problem.s,
        w: &state.w,
        d: &state.d,
        v: &state.v,
        noise: &problem.noise,
        p_max_a: problem.p_max_a,
        l2: problem.l2(),
        gamma_max: problem.gamma_max,
    };
    let mut gamma = gamma_of(&state.reflection);
    let mut base = AnchoredResponse::new(&ctx, loop_response(&gamma, &problem.s.s_aa)?);
    let mut accepted = 0;
    let (lo, hi) = (ctx.l2 / ctx.gamma_max, ctx.l2);
    for m in 0..gamma.len() {
        let coord = Coordinate::new(&ctx, &base, m, gamma[m]);
        let coef = coord.coefficients();
        let set = feasible_set(&coef);
        let g_new = match dinkelbach(&coef, &set, config.dinkelbach_tol, config.dinkelbach_max_iter) {
            Ok(g) => g.clamp(lo, hi),
            Err(e) => {
                log::warn!("amplitude update skipped: {e}");
                continue;
            }
        };
        if g_new == coord.g0 {
            continue;
        }
        let f_old = coord.objective(coord.g0);
        let f_new = coord.objective(g_new);
        if !(f_new <= f_old) || !problem.amplification_ok(coord.amplification(g_new)) {
            continue;
        }
        let shift = coord.shift(g_new);
        let q = coord.q;
        state.reflection.set_amplitude(m, 1.0 / g_new);
        gamma[m] = q / g_new;
        base.update(&ctx, m, shift);
        accepted += 1;
    }
    Ok(accepted)
}

/// One phase increment with backtracking. Returns the budget of the accepted
/// step, if any.
pub fn phase_update(problem: &AoProblem, state: &mut OptimizerState, config: &AoConfig) -> Result<Option<f64>> {
    let gamma = gamma_of(&state.reflection);
    let model = phase_model(problem, &gamma, &state.w, &state.d, &state.v)?;
    if !(model.y_norm > 0.0) || !model.y_norm.is_finite() {
        return Ok(None);
    }
    let (f_old, _) = problem.evaluate(&gamma, &state.w, &state.d, &state.v)?;
    let attempts = if config.backtracking { config.max_halvings + 1 } else { 1 };
    let mut budget = config.delta0;
    for _ in 0..attempts {
        let delta = model.increment(budget);
        let mut cand = state.reflection.clone();
        for (m, dm) in delta.iter().enumerate() {
            cand.set_phase(m, cand.phases()[m] + dm);
        }
        let ok = match problem.evaluate(&gamma_of(&cand), &state.w, &state.d, &state.v) {
            Ok((f_new, pa)) => !config.backtracking || (f_new <= f_old && problem.amplification_ok(pa)),
            Err(Error::Instability { .. }) => false,
            Err(e) => return Err(e),
        };
        if ok {
            state.reflection = cand;
            return Ok(Some(budget));
        }
        budget *= 0.5;
    }
    Ok(None)
}

/// Constraint violations of `state` on `problem`.
pub fn residuals(problem: &AoProblem, state: &OptimizerState) -> Result<Residuals> {
    let power = (frob2(&state.w) / problem.p_max - 1.0).max(0.0);
    let amp = match problem.p_max_a {
        None => 0.0,
        Some(pa) => {
            let ch = problem.channels(&gamma_of(&state.reflection))?;
            (ris_amplification_power(&ch, &state.w, &problem.noise) / pa - 1.0).max(0.0)
        }
    };
    let r = &state.reflection;
    let gamma = (0..r.len())
        .map(|m| {
            let mag = r.magnitude(m);
            if problem.passive {
                (mag - 1.0).abs()
            } else {
                (1.0 - mag).max(mag / problem.gamma_max - 1.0).max(0.0)
            }
        })
        .fold(0.0, f64::max);
    Ok(Residuals { power, amp, gamma })
}

/// Alternating optimization from `init`: detector, weight, beamformer, all
/// amplitudes in order, then one phase increment per outer iteration.
pub fn ao_loop(problem: &AoProblem, config: &AoConfig, init: OptimizerState) -> Result<OptimizerState> {
    config.validate()?;
    let mut state = init;
    let res = residuals(problem, &state)?;
    if res.max() > 1e-6 {
        return Err(Error::Infeasible(format!("initial point violates the constraints: {res:?}")));
    }
    if state.rate_trace.is_empty() {
        let ch = problem.channels(&gamma_of(&state.reflection))?;
        state.rate_trace.push(achievable_rate(&ch, &state.w, &problem.noise)?);
    }
    for k in 1..=config.k_max {
        let ch = problem.channels(&gamma_of(&state.reflection))?;
        state.d = optimal_detector(&ch, &state.w, &problem.noise)?;
        state.v = optimal_weight(&mse_matrix(&ch, &state.w, &state.d, &problem.noise))?;

        let bf = beamforming_problem(&ch, &state.d, &state.v, problem.p_max, problem.p_max_a, &problem.noise)?;
        let (w_new, _) = solve_beamforming(&bf, config.qcqp_tol)?;
        let f_old = weighted_mse(&ch, &state.w, &state.d, &state.v, &problem.noise);
        let f_new = weighted_mse(&ch, &w_new, &state.d, &state.v, &problem.noise);
        if f_new <= f_old {
            state.w = w_new;
        }

        amplitude_sweep(problem, &mut state, config)?;
        phase_update(problem, &mut state, config)?;

        let ch = problem.channels(&gamma_of(&state.reflection))?;
        let rate = achievable_rate(&ch, &state.w, &problem.noise)?;
        let prev = *state.rate_trace.last().expect("trace has the initial rate");
        state.rate_trace.push(rate);
        state.iteration = k;
        if (rate - prev).abs() < config.eta {
            state.converged = true;
            break;
        }
    }
    Ok(state)
}

/// [`initialize`] followed by [`ao_loop`].
pub fn optimize(problem: &AoProblem, config: &AoConfig, seed: u64) -> Result<OptimizerState> {
    let init = initialize(problem, seed)?;
    ao_loop(problem, config, init)
}
