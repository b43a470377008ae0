//! Seeded Monte Carlo sweeps over scenario parameters.

mod output;
mod spec;
mod suite;

use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

pub use output::{
    emit_results, format_g12, read_csv, read_json, to_csv_string, to_json_string, write_csv, OutputFormat,
    ResultDocument, ResultRow, AGGREGATE_SEED, CSV_HEADER,
};
pub use spec::{Axis, SweepSpec, FULL_TRIALS, QUICK_TRIALS};
pub use suite::{load_suite, SuiteRun};

use crate::channel::{synthesize_seeded, Scenario};
use crate::error::{Error, Result};
use crate::optimizer::{optimize_baseline, unaware_outcome, Scheme, SchemeOutcome};

/// Environment variable read when no thread count is given.
pub const THREADS_ENV: &str = "MCRIS_THREADS";

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Worker threads; `None` falls back to `MCRIS_THREADS`, then to one per core.
    pub threads: Option<usize>,
    /// Fill the `ms` column with wall times. Off by default so output is reproducible.
    pub record_timing: bool,
}

/// A trial that could not be completed.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialFailure {
    pub scheme: Scheme,
    pub value: f64,
    pub seed: u64,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct SweepOutput {
    /// Trial rows in canonical order (scheme, value, seed), then the aggregate rows.
    pub rows: Vec<ResultRow>,
    pub failures: Vec<TrialFailure>,
    pub metadata: serde_json::Value,
}

impl SweepOutput {
    pub fn document(&self) -> ResultDocument {
        ResultDocument { metadata: self.metadata.clone(), results: self.rows.clone() }
    }

    pub fn to_csv(&self) -> Result<String> {
        to_csv_string(&self.rows)
    }

    pub fn aggregates(&self) -> impl Iterator<Item = &ResultRow> {
        self.rows.iter().filter(|r| r.is_aggregate())
    }

    /// Aggregate row of `scheme` at `value`.
    pub fn mean(&self, scheme: Scheme, value: f64) -> Option<&ResultRow> {
        self.aggregates().find(|r| r.scheme == scheme.name() && r.value == value)
    }

    /// Trial row of `scheme` at `value` for `seed`.
    pub fn trial(&self, scheme: Scheme, value: f64, seed: u64) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.seed == Some(seed) && r.scheme == scheme.name() && r.value == value)
    }
}

fn resolve_threads(opts: &RunOptions) -> Result<Option<usize>> {
    let n = match opts.threads {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) if !v.trim().is_empty() => {
                Some(v.trim().parse().map_err(|_| Error::Config(format!("{THREADS_ENV}={v} is not a thread count")))?)
            }
            _ => None,
        },
    };
    if n == Some(0) {
        return Err(Error::Config("thread count must be at least 1".into()));
    }
    Ok(n)
}

fn trial_row(scheme: Scheme, axis: Axis, value: f64, seed: u64, out: &SchemeOutcome, ms: f64) -> ResultRow {
    ResultRow {
        scheme: scheme.name().into(),
        axis: axis.name().into(),
        value,
        seed: Some(seed),
        rate: out.rate,
        iters: out.state.iteration,
        converged: out.state.converged,
        res_power: out.residuals.power,
        res_amp: out.residuals.amp,
        res_gamma: out.residuals.gamma,
        ms,
    }
}

fn failed_row(scheme: Scheme, axis: Axis, value: f64, seed: u64) -> ResultRow {
    ResultRow {
        scheme: scheme.name().into(),
        axis: axis.name().into(),
        value,
        seed: Some(seed),
        rate: f64::NAN,
        iters: 0,
        converged: false,
        res_power: f64::NAN,
        res_amp: f64::NAN,
        res_gamma: f64::NAN,
        ms: 0.0,
    }
}

type TrialResult = (Vec<ResultRow>, Vec<TrialFailure>);

/// Runs every requested scheme on one synthesized network.
fn run_point(spec: &SweepSpec, scenario: &Scenario, value: f64, seed: u64, opts: &RunOptions) -> TrialResult {
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut sc = scenario.clone();
    sc.seed = seed;
    // the iteration axis reports one row per value from a single optimization
    let row_values: Vec<f64> = if spec.axis == Axis::Iteration { spec.values.clone() } else { vec![value] };
    let fail = |scheme: Scheme, message: String, rows: &mut Vec<ResultRow>, failures: &mut Vec<TrialFailure>| {
        rows.extend(row_values.iter().map(|&v| failed_row(scheme, spec.axis, v, seed)));
        failures.push(TrialFailure { scheme, value, seed, message });
    };
    let net = match synthesize_seeded(&sc) {
        Ok(n) => n,
        Err(e) => {
            for &scheme in &spec.schemes {
                fail(scheme, e.to_string(), &mut rows, &mut failures);
            }
            return (rows, failures);
        }
    };
    // the unaware scheme reuses the ideal optimization when both are requested
    let mut ideal: Option<(std::result::Result<SchemeOutcome, String>, f64)> = None;
    let mut order = spec.schemes.clone();
    order.sort();
    for scheme in order {
        let start = Instant::now();
        let outcome = match (scheme, &ideal) {
            (Scheme::McUnaware, Some((Ok(ideal), _))) => unaware_outcome(ideal, &net.s, &sc).map_err(|e| e.to_string()),
            (Scheme::McUnaware, Some((Err(msg), _))) => Err(msg.clone()),
            _ => optimize_baseline(scheme, &net.s, &sc, &spec.optimizer).map_err(|e| e.to_string()),
        };
        let mut ms = if opts.record_timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
        if scheme == Scheme::ActiveNoMc {
            ideal = Some((outcome.clone(), ms));
        }
        if scheme == Scheme::McUnaware {
            if let Some((_, ideal_ms)) = &ideal {
                ms += ideal_ms;
            }
        }
        match outcome {
            Ok(out) => {
                if spec.axis == Axis::Iteration {
                    for &k in &spec.values {
                        let mut row = trial_row(scheme, spec.axis, k, seed, &out, ms);
                        let trace = &out.state.rate_trace;
                        row.rate = if scheme == Scheme::McUnaware {
                            out.rate
                        } else {
                            trace[(k as usize).min(trace.len() - 1)]
                        };
                        rows.push(row);
                    }
                } else {
                    rows.push(trial_row(scheme, spec.axis, value, seed, &out, ms));
                }
            }
            Err(message) => fail(scheme, message, &mut rows, &mut failures),
        }
    }
    (rows, failures)
}

fn scheme_rank(name: &str) -> usize {
    Scheme::ALL.iter().position(|s| s.name() == name).unwrap_or(usize::MAX)
}

fn aggregate(rows: &[ResultRow]) -> Vec<ResultRow> {
    let mut out: Vec<ResultRow> = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        let mut j = i;
        while j < rows.len() && rows[j].scheme == rows[i].scheme && rows[j].value == rows[i].value {
            j += 1;
        }
        let group = &rows[i..j];
        let ok: Vec<&ResultRow> = group.iter().filter(|r| !r.failed()).collect();
        let n = ok.len();
        let mean = if n > 0 { ok.iter().map(|r| r.rate).sum::<f64>() / n as f64 } else { f64::NAN };
        let stderr = if n > 1 {
            let var = ok.iter().map(|r| (r.rate - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else if n == 1 {
            0.0
        } else {
            f64::NAN
        };
        let max_of = |f: fn(&ResultRow) -> f64| ok.iter().map(|r| f(r)).fold(0.0, f64::max);
        out.push(ResultRow {
            scheme: group[0].scheme.clone(),
            axis: group[0].axis.clone(),
            value: group[0].value,
            seed: None,
            rate: mean,
            iters: n,
            converged: n == group.len() && ok.iter().all(|r| r.converged),
            res_power: max_of(|r| r.res_power),
            res_amp: max_of(|r| r.res_amp),
            res_gamma: max_of(|r| r.res_gamma),
            ms: stderr,
        });
        i = j;
    }
    out
}

/// Implementation choices the output depends on.
pub fn metadata(spec: &SweepSpec, scenario: &Scenario) -> serde_json::Value {
    let round12 = |x: f64| (x * 1e12).round() / 1e12;
    json!({
        "kappa_db": round12(scenario.kappa_db()),
        "rician_k_linear": scenario.rician_k,
        "beta0_db": scenario.beta0_db,
        "insertion_loss_db": scenario.insertion_loss_db,
        "insertion_loss_linear": scenario.insertion_loss(),
        "path_loss_convention": "PL_dB = beta0_db - 10 * exponent * log10(d / 1 m), applied as amplitude 10^(PL_dB / 20)",
        "power_units": "p_max_dbm, p_max_a_dbm, noise_rx_dbm and noise_ris_dbm are dBm",
        "gamma_max_convention": "gamma_max_db is the power gain 20 log10(Gamma_max)",
        "direct_link": if scenario.direct_link_blocked { "blocked: S_RT is zero" } else { "present" },
        "coupling": {
            "source": scenario.coupling_file.clone().map_or("table".to_string(), |p| format!("touchstone:{p}")),
            "anchors_db": crate::channel::COUPLING_TABLE.iter().map(|(r, a, b)| json!([r, a, b])).collect::<Vec<_>>(),
            "decay_exponent": scenario.coupling_decay,
            "off_diagonal_phase": "exp(-j 2 pi d / lambda)",
            "interpolate": scenario.interpolate_coupling,
        },
        "ris_layout": "UPA in the y-z plane, index = ix * m_side_y + iy, 1-D steering vector over the linear index",
        "angles": "azimuth in the x-y plane",
        "receiver_angle": "uniform on [0, 2 pi) from the trial seed",
        "phase_sign_rule": "Re(zeta_m) >= 0 moves element m by -delta0 / ||Y||, otherwise by +delta0 / ||Y||",
        "feasible_amplitude_interval": "g in [L_PS^2 / Gamma_max, L_PS^2]",
        "stability_guard": "loops with reciprocal condition number below 1e-13 are rejected",
        "initialization": "uniform phases from the trial seed (stream 1); common magnitude from the uncoupled budget estimate; matched-filter W at half the tighter budget",
        "passive_budget": "passive schemes transmit with p_max + p_max_a and have no RIS noise",
        "trial_seed": "base_seed + trial index; every scheme sees the same network per (value, trial)",
        "aggregate_rows": "seed = aggregate, rate_bps_hz = mean, iters = successful trials, converged = all trials converged, res_* = maximum, ms = standard error of the mean rate",
        "timing": "ms is 0 unless timing is recorded",
        "scenario": scenario,
        "sweep": spec,
        "version": env!("CARGO_PKG_VERSION"),
    })
}

/// Runs `spec` on `scenario`. Invalid inputs are configuration errors; trial
/// failures are recorded in the rows and in `failures`.
pub fn run_sweep(spec: &SweepSpec, scenario: &Scenario, opts: &RunOptions) -> Result<SweepOutput> {
    spec.validate()?;
    scenario.validate()?;
    let points: Vec<(f64, Scenario)> = if spec.axis == Axis::Iteration {
        vec![(0.0, scenario.clone())]
    } else {
        spec.values.iter().map(|&v| Ok((v, spec.axis.apply(scenario, v)?))).collect::<Result<_>>()?
    };
    let tasks: Vec<(usize, usize)> = (0..points.len()).flat_map(|p| (0..spec.trials).map(move |t| (p, t))).collect();
    let work = || -> Vec<TrialResult> {
        tasks.par_iter().map(|&(p, t)| run_point(spec, &points[p].1, points[p].0, spec.trial_seed(t), opts)).collect()
    };
    let results = match resolve_threads(opts)? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (r, f) in results {
        rows.extend(r);
        failures.extend(f);
    }
    rows.sort_by(|a, b| {
        scheme_rank(&a.scheme).cmp(&scheme_rank(&b.scheme)).then(a.value.total_cmp(&b.value)).then(a.seed.cmp(&b.seed))
    });
    failures.sort_by(|a, b| a.scheme.cmp(&b.scheme).then(a.value.total_cmp(&b.value)).then(a.seed.cmp(&b.seed)));
    let aggregates = aggregate(&rows);
    rows.extend(aggregates);
    Ok(SweepOutput { rows, failures, metadata: metadata(spec, scenario) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Scenario {
        let mut sc = Scenario::default();
        sc.m_side_x = 2;
        sc.m_side_y = 2;
        sc
    }

    fn quick(axis: Axis, values: Vec<f64>, schemes: Vec<Scheme>, trials: usize) -> SweepSpec {
        let mut s = SweepSpec::new(axis, values, schemes);
        s.trials = trials;
        s.optimizer.k_max = 4;
        s
    }

    #[test]
    fn one_trial_gives_trial_plus_aggregate() {
        let spec = quick(Axis::PMax, vec![20.0], vec![Scheme::EmMc], 1);
        let out = run_sweep(&spec, &tiny(), &RunOptions::default()).unwrap();
        assert_eq!(out.rows.len(), 2);
        assert!(!out.rows[0].is_aggregate());
        let agg = &out.rows[1];
        assert!(agg.is_aggregate());
        assert_eq!(agg.ms, 0.0);
        assert_eq!(agg.rate, out.rows[0].rate);
        assert_eq!(out.metadata["kappa_db"], json!(3.0));
    }

    #[test]
    fn rows_are_canonical_and_paired() {
        let spec =
            quick(Axis::PMax, vec![10.0, 20.0], vec![Scheme::PassiveNoMc, Scheme::McUnaware, Scheme::ActiveNoMc], 2);
        let opts = RunOptions { threads: Some(2), record_timing: false };
        let out = run_sweep(&spec, &tiny(), &opts).unwrap();
        assert_eq!(out.rows.len(), 3 * 2 * 2 + 3 * 2);
        let names: Vec<&str> = out.rows[..12].iter().map(|r| r.scheme.as_str()).collect();
        assert_eq!(&names[..4], ["ActiveNoMc"; 4]);
        assert_eq!(&names[8..], ["PassiveNoMc"; 4]);
        assert_eq!(out.rows[0].seed, Some(0));
        assert_eq!(out.rows[1].seed, Some(1));
        assert_eq!(out.rows[2].value, 20.0);
        // unaware rows reuse the ideal optimization
        let a = out.trial(Scheme::ActiveNoMc, 10.0, 1).unwrap();
        let u = out.trial(Scheme::McUnaware, 10.0, 1).unwrap();
        assert_eq!(a.iters, u.iters);
        assert!(out.failures.is_empty());
        let again = run_sweep(&spec, &tiny(), &RunOptions { threads: Some(1), record_timing: false }).unwrap();
        assert_eq!(out.to_csv().unwrap(), again.to_csv().unwrap());
    }

    #[test]
    fn iteration_axis_reports_the_trace() {
        let spec = quick(Axis::Iteration, vec![0.0, 1.0, 2.0, 50.0], vec![Scheme::EmMc], 2);
        let out = run_sweep(&spec, &tiny(), &RunOptions::default()).unwrap();
        assert_eq!(out.rows.len(), 4 * 2 + 4);
        for seed in [0, 1] {
            let trace: Vec<f64> =
                [0.0, 1.0, 2.0, 50.0].iter().map(|&k| out.trial(Scheme::EmMc, k, seed).unwrap().rate).collect();
            assert!(trace.windows(2).all(|w| w[1] >= w[0] - 1e-9));
        }
    }

    #[test]
    fn invalid_inputs_are_config_errors_and_trial_failures_are_recorded() {
        let spec = quick(Axis::NumElements, vec![3.0], vec![Scheme::EmMc], 1);
        assert!(matches!(run_sweep(&spec, &tiny(), &RunOptions::default()), Err(Error::Config(_))));
        let opts = RunOptions { threads: Some(0), record_timing: false };
        let ok = quick(Axis::PMax, vec![20.0], vec![Scheme::EmMc], 1);
        assert!(matches!(run_sweep(&ok, &tiny(), &opts), Err(Error::Config(_))));

        let mut sc = tiny();
        sc.coupling_file = Some("/nonexistent/coupling.s4p".into());
        let out = run_sweep(&ok, &sc, &RunOptions::default()).unwrap();
        assert_eq!(out.failures.len(), 1);
        assert!(out.rows[0].failed());
        assert!(out.rows[1].rate.is_nan());
        assert_eq!(out.rows[1].iters, 0);
    }
}
