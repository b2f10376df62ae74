//! Python bindings for `olla-core`.

use std::path::PathBuf;
use std::sync::Mutex;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use olla_core::bounds::{self, BoundsError};
use olla_core::harness::{self, ExperimentConfig, HarnessError, DEFAULT_EXPERIMENT};
use olla_core::policies::{build_policy, OllaPolicy, PolicyKind, PolicyOptions};
use olla_core::synth::{self, SynthConfig, SynthError};

fn bounds_err(e: BoundsError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn harness_err(e: HarnessError) -> PyErr {
    match e.kind() {
        "io" => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn synth_err(e: SynthError) -> PyErr {
    match e {
        SynthError::Io { .. } => PyIOError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

#[pyclass(name = "ExplorationParams", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyParams(bounds::ExplorationParams);

#[pymethods]
impl PyParams {
    #[new]
    fn new(beta: f64, epsilon: f64, delta: f64, big_l: u32) -> PyResult<Self> {
        bounds::ExplorationParams::new(beta, epsilon, delta, big_l)
            .map(Self)
            .map_err(bounds_err)
    }

    #[staticmethod]
    fn from_target_bler(target_bler: f64, epsilon: f64, delta: f64, big_l: u32) -> PyResult<Self> {
        bounds::ExplorationParams::from_target_bler(target_bler, epsilon, delta, big_l)
            .map(Self)
            .map_err(bounds_err)
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.0.beta()
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.0.epsilon()
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.0.delta()
    }

    #[getter]
    fn big_l(&self) -> u32 {
        self.0.big_l()
    }

    #[getter]
    fn num_arms(&self) -> usize {
        self.0.num_arms()
    }

    fn __repr__(&self) -> String {
        format!(
            "ExplorationParams(beta={}, epsilon={}, delta={}, big_l={})",
            self.0.beta(),
            self.0.epsilon(),
            self.0.delta(),
            self.0.big_l()
        )
    }
}

#[pyfunction]
fn required_samples(params: PyParams) -> u64 {
    bounds::required_samples(&params.0)
}

#[pyfunction]
fn max_distinct_arms(big_l: u32) -> u32 {
    bounds::max_distinct_arms(big_l)
}

#[pyfunction]
fn per_step_failure_budget(params: PyParams) -> f64 {
    bounds::per_step_failure_budget(&params.0)
}

#[pyfunction]
fn kl_bernoulli(p: f64, q: f64) -> PyResult<f64> {
    bounds::kl_bernoulli(p, q).map_err(bounds_err)
}

#[pyfunction]
fn right_tail_bound(n: u64, beta: f64, beta_l: f64) -> PyResult<f64> {
    bounds::right_tail_bound(n, beta, beta_l).map_err(bounds_err)
}

#[pyfunction]
fn left_tail_bound(n: u64, beta: f64, beta_l: f64) -> PyResult<f64> {
    bounds::left_tail_bound(n, beta, beta_l).map_err(bounds_err)
}

#[pyfunction]
fn normal_upper_quantile(tail: f64) -> f64 {
    bounds::normal_upper_quantile(tail)
}

/// `(lower, upper)` of the Wald interval.
#[pyfunction]
fn wald_interval(beta_hat: f64, n: u64, delta1: f64) -> (f64, f64) {
    let ci = bounds::wald_interval(beta_hat, n, delta1);
    (ci.lower, ci.upper)
}

/// Any OLLA policy, built by kind name (`pbs`, `final`, `clustering`, ...).
#[pyclass(name = "Policy")]
struct PyPolicy {
    kind: PolicyKind,
    inner: Mutex<Box<dyn OllaPolicy>>,
}

impl PyPolicy {
    fn with<R>(&self, f: impl FnOnce(&mut dyn OllaPolicy) -> R) -> R {
        let mut guard = self.inner.lock().unwrap_or_else(|e| e.into_inner());
        f(guard.as_mut())
    }
}

#[pymethods]
impl PyPolicy {
    #[new]
    #[pyo3(signature = (kind, params, seed=0, switching_window=None, nack_run=5, ack_run=50))]
    fn new(
        kind: &str,
        params: PyParams,
        seed: u64,
        switching_window: Option<usize>,
        nack_run: u32,
        ack_run: u32,
    ) -> PyResult<Self> {
        let kind: PolicyKind = kind.parse().map_err(PyValueError::new_err)?;
        let options = PolicyOptions {
            switching_window,
            nack_run,
            ack_run,
            seed,
        };
        Ok(Self {
            kind,
            inner: Mutex::new(build_policy(kind, params.0, &options)),
        })
    }

    /// Offset for the next transmission.
    fn decide(&self) -> i32 {
        self.with(|p| p.decide().offset)
    }

    fn observe(&self, ack: bool) {
        self.with(|p| p.observe(ack))
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.kind.as_str()
    }

    #[getter]
    fn phase(&self) -> &'static str {
        self.with(|p| p.phase().as_str())
    }

    #[getter]
    fn exploration_samples(&self) -> u64 {
        self.with(|p| p.exploration_samples())
    }

    #[getter]
    fn selected_arm(&self) -> Option<i32> {
        self.with(|p| p.selected_arm())
    }
}

#[pyclass(name = "SyntheticBandit")]
struct PyBandit(Mutex<synth::SyntheticBandit>);

#[pymethods]
impl PyBandit {
    #[new]
    fn new(arm_success: Vec<f64>, seed: u64) -> PyResult<Self> {
        synth::SyntheticBandit::new(&arm_success, seed)
            .map(|b| Self(Mutex::new(b)))
            .map_err(synth_err)
    }

    fn pull(&self, offset: i32) -> bool {
        self.0
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .pull(offset)
    }

    fn success(&self, offset: i32) -> f64 {
        self.0
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .success(offset)
    }
}

/// Runs the PAC trials described by a synthetic-bandit TOML config.
#[pyfunction]
fn run_synth<'py>(py: Python<'py>, config_toml: &str) -> PyResult<Bound<'py, PyDict>> {
    let config = SynthConfig::from_toml_str(config_toml).map_err(synth_err)?;
    let report = py.detach(|| synth::run_synth(&config)).map_err(synth_err)?;
    let d = PyDict::new(py);
    d.set_item("policy", &report.policy)?;
    d.set_item("trials", report.trials())?;
    d.set_item(
        "epsilon_optimal_frequency",
        report.epsilon_optimal_frequency(),
    )?;
    d.set_item(
        "mean_exploration_samples",
        report.mean_exploration_samples(),
    )?;
    d.set_item(
        "selected_arms",
        report
            .outcomes
            .iter()
            .map(|o| o.selected_arm)
            .collect::<Vec<_>>(),
    )?;
    Ok(d)
}

/// Runs a multi-UE experiment and returns one summary dict per policy.
/// Without a config the bundled four-scheme comparison is used; with
/// `out_dir` the CSVs and plots are written there too.
#[pyfunction]
#[pyo3(signature = (config_toml=None, out_dir=None))]
fn run_experiment<'py>(
    py: Python<'py>,
    config_toml: Option<&str>,
    out_dir: Option<PathBuf>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let config = ExperimentConfig::from_toml_str(config_toml.unwrap_or(DEFAULT_EXPERIMENT))
        .map_err(harness_err)?;
    let run = py
        .detach(|| match &out_dir {
            Some(dir) => harness::run_to_dir(&config, Some(dir)).map(|(run, _, _)| run),
            None => harness::run_experiment(&config),
        })
        .map_err(harness_err)?;
    let mut out = Vec::new();
    for label in &run.report.policies {
        let Some(s) = run.report.summary(label) else {
            continue;
        };
        let d = PyDict::new(py);
        d.set_item("policy", &s.policy)?;
        d.set_item("num_ues", s.num_ues)?;
        d.set_item("avg_throughput_mbps", s.avg_throughput_mbps)?;
        d.set_item("avg_bler", s.avg_bler)?;
        d.set_item("avg_offset", s.avg_offset)?;
        d.set_item("avg_exploration_samples", s.avg_exploration_samples)?;
        d.set_item("fraction_within_target", s.fraction_within_target)?;
        out.push(d);
    }
    Ok(out)
}

#[pymodule]
fn olla(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParams>()?;
    m.add_class::<PyPolicy>()?;
    m.add_class::<PyBandit>()?;
    m.add_function(wrap_pyfunction!(required_samples, m)?)?;
    m.add_function(wrap_pyfunction!(max_distinct_arms, m)?)?;
    m.add_function(wrap_pyfunction!(per_step_failure_budget, m)?)?;
    m.add_function(wrap_pyfunction!(kl_bernoulli, m)?)?;
    m.add_function(wrap_pyfunction!(right_tail_bound, m)?)?;
    m.add_function(wrap_pyfunction!(left_tail_bound, m)?)?;
    m.add_function(wrap_pyfunction!(normal_upper_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(wald_interval, m)?)?;
    m.add_function(wrap_pyfunction!(run_synth, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
