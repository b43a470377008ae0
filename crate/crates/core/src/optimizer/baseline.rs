use super::ao::{optimize, residuals, Residuals};
use super::config::AoConfig;
use super::problem::{AoProblem, Scheme};
use crate::channel::Scenario;
use crate::error::{Error, Result};
use crate::metrics::{achievable_rate, OptimizerState};
use crate::multiport::{em_channels, ScatteringMatrix};

/// Result of optimizing one scheme on one network.
#[derive(Clone, Debug)]
pub struct SchemeOutcome {
    pub scheme: Scheme,
    pub state: OptimizerState,
    /// Rate of the final iterate on the model the scheme is judged on.
    pub rate: f64,
    /// Constraint violations on the model the scheme optimized.
    pub residuals: Residuals,
}

/// Optimizes `scheme` on `s`. The initial phases are drawn from `scenario.seed`,
/// so every scheme starts from the same phases on the same network.
///
/// `McUnaware` is optimized exactly like `ActiveNoMc`; its rate is then
/// evaluated with the coupling block restored.
pub fn optimize_baseline(
    scheme: Scheme,
    s: &ScatteringMatrix,
    scenario: &Scenario,
    config: &AoConfig,
) -> Result<SchemeOutcome> {
    if scheme == Scheme::McUnaware {
        let ideal = optimize_baseline(Scheme::ActiveNoMc, s, scenario, config)?;
        return unaware_outcome(&ideal, s, scenario);
    }
    let problem = AoProblem::for_scheme(s, scenario, scheme);
    let state = optimize(&problem, config, scenario.seed)?;
    let res = residuals(&problem, &state)?;
    let rate = *state.rate_trace.last().expect("trace has the initial rate");
    Ok(SchemeOutcome { scheme, state, rate, residuals: res })
}

/// Re-evaluates an `ActiveNoMc` outcome on the coupled network `s`.
pub fn unaware_outcome(ideal: &SchemeOutcome, s: &ScatteringMatrix, scenario: &Scenario) -> Result<SchemeOutcome> {
    if ideal.scheme != Scheme::ActiveNoMc {
        return Err(Error::Invariant(format!("expected an ActiveNoMc outcome, got {}", ideal.scheme.name())));
    }
    let ch = em_channels(s, &ideal.state.reflection.gamma_diagonal())?;
    let rate = achievable_rate(&ch, &ideal.state.w, &scenario.noise())?;
    Ok(SchemeOutcome { scheme: Scheme::McUnaware, state: ideal.state.clone(), rate, residuals: ideal.residuals })
}
