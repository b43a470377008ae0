//! Python bindings. Matrices cross the boundary as nested lists of complex numbers.

use mcris_core::channel::{self, Scenario as CoreScenario};
use mcris_core::error::Error;
use mcris_core::experiment::{self, RunOptions, SweepSpec};
use mcris_core::linalg::{CMatrix, CVector};
use mcris_core::metrics::{self, NoisePowers};
use mcris_core::multiport::{self, ChannelPair, ScatteringMatrix, Terminations};
use mcris_core::optimizer::{self, AoConfig, Scheme};
use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

type Rows = Vec<Vec<Complex64>>;

fn err(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        Error::Config(_) | Error::Dimension(_) | Error::Domain(_) | Error::Json(_) | Error::Touchstone { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn rows(m: &CMatrix) -> Rows {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn matrix(r: &Rows) -> PyResult<CMatrix> {
    let n = r.len();
    let k = r.first().map_or(0, Vec::len);
    if r.iter().any(|row| row.len() != k) {
        return Err(PyValueError::new_err("ragged matrix"));
    }
    Ok(CMatrix::from_fn(n, k, |i, j| r[i][j]))
}

fn scheme(name: &str) -> PyResult<Scheme> {
    name.parse().map_err(err)
}

/// Link geometry, array sizes, propagation constants and power budgets.
#[pyclass(name = "Scenario", from_py_object)]
#[derive(Clone)]
struct PyScenario {
    inner: CoreScenario,
}

#[pymethods]
impl PyScenario {
    /// Default scenario, with fields overridden by a JSON object string.
    #[new]
    #[pyo3(signature = (json = "{}"))]
    fn new(json: &str) -> PyResult<Self> {
        Ok(Self { inner: CoreScenario::from_json_str(json).map_err(err)? })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { inner: CoreScenario::load(path).map_err(err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn n_t(&self) -> usize {
        self.inner.n_t
    }

    #[getter]
    fn n_r(&self) -> usize {
        self.inner.n_r
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.seed = seed;
    }

    #[getter]
    fn kappa_db(&self) -> f64 {
        self.inner.kappa_db()
    }

    fn noise(&self) -> (f64, f64) {
        let n = self.inner.noise();
        (n.sigma2_rx, n.sigma2_ris)
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(n_t={}, m={}, n_r={}, seed={})",
            self.inner.n_t,
            self.inner.m(),
            self.inner.n_r,
            self.inner.seed
        )
    }
}

/// Partitioned scattering matrix of the transmitter, RIS and receiver ports.
#[pyclass(name = "Network", from_py_object)]
#[derive(Clone)]
struct PyNetwork {
    inner: ScatteringMatrix,
}

#[pymethods]
impl PyNetwork {
    /// Builds a network from a full `N x N` matrix ordered transmitter, RIS, receiver.
    #[staticmethod]
    #[pyo3(signature = (full, n_t, m, n_r, z0 = multiport::DEFAULT_Z0))]
    fn from_full(full: Rows, n_t: usize, m: usize, n_r: usize, z0: f64) -> PyResult<Self> {
        Ok(Self { inner: ScatteringMatrix::from_full(&matrix(&full)?, n_t, m, n_r, z0).map_err(err)? })
    }

    #[getter]
    fn n_t(&self) -> usize {
        self.inner.n_t()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn n_r(&self) -> usize {
        self.inner.n_r()
    }

    fn full(&self) -> Rows {
        rows(&self.inner.to_full())
    }

    /// One named block: "tt", "ta", "tr", "at", "aa", "ar", "rt", "ra" or "rr".
    fn block(&self, name: &str) -> PyResult<Rows> {
        let s = &self.inner;
        let b = match name {
            "tt" => &s.s_tt,
            "ta" => &s.s_ta,
            "tr" => &s.s_tr,
            "at" => &s.s_at,
            "aa" => &s.s_aa,
            "ar" => &s.s_ar,
            "rt" => &s.s_rt,
            "ra" => &s.s_ra,
            "rr" => &s.s_rr,
            _ => return Err(PyValueError::new_err(format!("unknown block `{name}`"))),
        };
        Ok(rows(b))
    }

    fn without_coupling(&self) -> Self {
        Self { inner: self.inner.with_s_aa_zeroed() }
    }

    fn __repr__(&self) -> String {
        format!("Network(n_t={}, m={}, n_r={})", self.inner.n_t(), self.inner.m(), self.inner.n_r())
    }
}

/// Effective signal and RIS-noise channels at the receiver.
#[pyclass(name = "Channels")]
struct PyChannels {
    inner: ChannelPair,
}

#[pymethods]
impl PyChannels {
    #[getter]
    fn h_e(&self) -> Rows {
        rows(&self.inner.h_e)
    }

    #[getter]
    fn h_n(&self) -> Rows {
        rows(&self.inner.h_n)
    }

    #[getter]
    fn h_out_e(&self) -> Rows {
        rows(&self.inner.h_out_e)
    }

    #[getter]
    fn h_out_n(&self) -> Rows {
        rows(&self.inner.h_out_n)
    }

    /// Achievable rate in bits/s/Hz for precoder `w`.
    fn rate(&self, w: Rows, sigma2_rx: f64, sigma2_ris: f64) -> PyResult<f64> {
        let noise = NoisePowers { sigma2_rx, sigma2_ris };
        metrics::achievable_rate(&self.inner, &matrix(&w)?, &noise).map_err(err)
    }

    /// Power delivered by the RIS amplifiers for precoder `w`.
    fn amplification_power(&self, w: Rows, sigma2_rx: f64, sigma2_ris: f64) -> PyResult<f64> {
        let noise = NoisePowers { sigma2_rx, sigma2_ris };
        Ok(metrics::ris_amplification_power(&self.inner, &matrix(&w)?, &noise))
    }
}

/// Draws the network of `scenario` from its seed.
#[pyfunction]
fn synthesize(scenario: &PyScenario) -> PyResult<PyNetwork> {
    Ok(PyNetwork { inner: channel::synthesize_seeded(&scenario.inner).map_err(err)?.s })
}

/// Channels of the coupled model for RIS reflection coefficients `gamma`.
#[pyfunction]
fn em_channels(network: &PyNetwork, gamma: Vec<Complex64>) -> PyResult<PyChannels> {
    let inner = multiport::em_channels(&network.inner, &CVector::from_vec(gamma)).map_err(err)?;
    Ok(PyChannels { inner })
}

/// Channels of the conventional cascaded model (coupling ignored).
#[pyfunction]
fn conventional_channels(network: &PyNetwork, gamma: Vec<Complex64>) -> PyResult<PyChannels> {
    let inner = multiport::conventional_channels_with_gamma(&network.inner, &CVector::from_vec(gamma)).map_err(err)?;
    Ok(PyChannels { inner })
}

/// Received waves from a direct solve of the full port equations with matched terminations.
#[pyfunction]
fn solve_direct(
    network: &PyNetwork,
    gamma: Vec<Complex64>,
    a_s: Vec<Complex64>,
    a_n: Vec<Complex64>,
) -> PyResult<Vec<Complex64>> {
    let s = &network.inner;
    let term = Terminations::matched(s.n_t(), s.n_r());
    let waves = multiport::solve_network_direct_with_gamma(
        s,
        &CVector::from_vec(gamma),
        &term,
        &CVector::from_vec(a_s),
        &CVector::from_vec(a_n),
    )
    .map_err(err)?;
    Ok(waves.b_r.iter().copied().collect())
}

/// Optimizes `scheme` on `network`. `config` is a JSON object of optimizer
/// settings; omitted fields take their defaults.
#[pyfunction]
#[pyo3(signature = (scheme_name, network, scenario, config = None))]
fn optimize<'py>(
    py: Python<'py>,
    scheme_name: &str,
    network: &PyNetwork,
    scenario: &PyScenario,
    config: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let config: AoConfig = match config {
        Some(text) => serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?,
        None => AoConfig::default(),
    };
    config.validate().map_err(err)?;
    let out =
        optimizer::optimize_baseline(scheme(scheme_name)?, &network.inner, &scenario.inner, &config).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("scheme", out.scheme.name())?;
    d.set_item("rate", out.rate)?;
    d.set_item("iterations", out.state.iteration)?;
    d.set_item("converged", out.state.converged)?;
    d.set_item("rate_trace", out.state.rate_trace.clone())?;
    d.set_item("amplitudes", out.state.reflection.amplitudes().to_vec())?;
    d.set_item("phases", out.state.reflection.phases().to_vec())?;
    d.set_item("gamma", out.state.reflection.gamma_diagonal().iter().copied().collect::<Vec<_>>())?;
    d.set_item("w", rows(&out.state.w))?;
    d.set_item("residuals", (out.residuals.power, out.residuals.amp, out.residuals.gamma))?;
    Ok(d)
}

/// Runs a sweep given as a JSON string. Returns `(csv_text, metadata_json, failures)`.
#[pyfunction]
#[pyo3(signature = (sweep, scenario, threads = None))]
fn run_sweep(
    py: Python<'_>,
    sweep: &str,
    scenario: &PyScenario,
    threads: Option<usize>,
) -> PyResult<(String, String, usize)> {
    let spec = SweepSpec::from_json_str(sweep).map_err(err)?;
    let sc = scenario.inner.clone();
    let opts = RunOptions { threads, record_timing: false };
    let out = py.detach(|| experiment::run_sweep(&spec, &sc, &opts)).map_err(err)?;
    let meta = serde_json::to_string(&out.metadata).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok((out.to_csv().map_err(err)?, meta, out.failures.len()))
}

/// Reads a Touchstone v1 file. Returns `(matrix, z0, frequency_hz)`.
#[pyfunction]
fn load_touchstone(path: &str) -> PyResult<(Rows, f64, f64)> {
    let data = channel::load_touchstone(path).map_err(err)?;
    Ok((rows(&data.matrix), data.z0, data.frequency_hz))
}

#[pymodule]
fn mcris(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyChannels>()?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(em_channels, m)?)?;
    m.add_function(wrap_pyfunction!(conventional_channels, m)?)?;
    m.add_function(wrap_pyfunction!(solve_direct, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(load_touchstone, m)?)?;
    m.add("SCHEMES", Scheme::ALL.iter().map(|s| s.name()).collect::<Vec<_>>())?;
    Ok(())
}
