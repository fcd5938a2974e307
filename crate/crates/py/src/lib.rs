//! Python bindings: configuration, simulation runs, the scheduler, the
//! arbiter and the model calculators.

use ocs_core::metrics::to_json;
use ocs_core::models::{self, Topology, TopologyModel, TransceiverOption};
use ocs_core::sim::{self, RunOptions};
use ocs_core::{
    Algorithm, ClockPeriod, Request, RoundRobinArbiter, SchedulerState, SimConfig, SizeDistribution, ValidatedConfig,
};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_error(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Converts through `json.loads` so nested values arrive as plain Python
/// containers.
fn to_python<'py>(py: Python<'py>, value: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    PyModule::import(py, "json")?.call_method1("loads", (value.to_string(),))
}

#[pyclass(name = "Config", module = "ocs_py", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: SimConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (
        algorithm = "slot-level",
        n_nodes = 64,
        epoch_ns = 360,
        requests_per_node = 6,
        distribution = "TD1",
        input_load = 1.0,
        seed = 1,
        n_epochs = 2000,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        algorithm: &str,
        n_nodes: usize,
        epoch_ns: u64,
        requests_per_node: u32,
        distribution: &str,
        input_load: f64,
        seed: u64,
        n_epochs: u64,
    ) -> PyResult<Self> {
        let mut c = SimConfig::default();
        c.scheduler.algorithm = algorithm.parse::<Algorithm>().map_err(value_error)?;
        c.network.n_nodes = n_nodes;
        c.network.n_wavelengths = n_nodes;
        c.network.epoch_ns = epoch_ns;
        c.traffic.requests_per_node = requests_per_node;
        c.traffic.distribution = distribution.parse::<SizeDistribution>().map_err(value_error)?;
        c.traffic.input_load = input_load;
        c.traffic.seed = seed;
        c.traffic.n_epochs = n_epochs;
        Ok(PyConfig { inner: c })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        SimConfig::from_toml_str(text).map(|inner| PyConfig { inner }).map_err(value_error)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        SimConfig::load(path).map(|inner| PyConfig { inner }).map_err(value_error)
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml_string()
    }

    /// Raises ValueError with the validation message on a bad config.
    fn validate(&self) -> PyResult<()> {
        self.validated().map(|_| ())
    }

    #[getter]
    fn slots_per_epoch(&self) -> PyResult<usize> {
        Ok(self.validated()?.slots_per_epoch)
    }

    #[getter]
    fn iterations(&self) -> PyResult<u32> {
        Ok(self.validated()?.iterations)
    }

    #[getter]
    fn algorithm(&self) -> &'static str {
        self.inner.scheduler.algorithm.as_str()
    }

    #[setter]
    fn set_algorithm(&mut self, v: &str) -> PyResult<()> {
        self.inner.scheduler.algorithm = v.parse().map_err(value_error)?;
        Ok(())
    }

    #[getter]
    fn input_load(&self) -> f64 {
        self.inner.traffic.input_load
    }

    #[setter]
    fn set_input_load(&mut self, v: f64) {
        self.inner.traffic.input_load = v;
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.traffic.seed
    }

    #[setter]
    fn set_seed(&mut self, v: u64) {
        self.inner.traffic.seed = v;
    }

    #[getter]
    fn n_epochs(&self) -> u64 {
        self.inner.traffic.n_epochs
    }

    #[setter]
    fn set_n_epochs(&mut self, v: u64) {
        self.inner.traffic.n_epochs = v;
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "Config(algorithm='{}', n_nodes={}, epoch_ns={}, requests_per_node={}, distribution='{}', input_load={}, seed={}, n_epochs={})",
            c.scheduler.algorithm,
            c.network.n_nodes,
            c.network.epoch_ns,
            c.traffic.requests_per_node,
            c.traffic.distribution,
            c.traffic.input_load,
            c.traffic.seed,
            c.traffic.n_epochs
        )
    }
}

impl PyConfig {
    fn validated(&self) -> PyResult<ValidatedConfig> {
        self.inner.validate().map_err(value_error)
    }
}

/// Runs one simulation; returns {"metrics": {...}, "latency_cdf": [[ns, F], ...]}.
#[pyfunction]
#[pyo3(signature = (config, warmup_discard = 0, check_invariants = true))]
fn simulate<'py>(
    py: Python<'py>,
    config: &PyConfig,
    warmup_discard: u64,
    check_invariants: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = config.validated()?;
    let opts = RunOptions { warmup_discard, event_log: false, check_invariants };
    let out = py.detach(|| sim::run(&cfg, &opts)).map_err(value_error)?;
    to_python(py, &to_json(&out.metrics, &out.latencies))
}

/// Epoch-by-epoch scheduler driven with explicit requests.
#[pyclass(name = "Scheduler", module = "ocs_py")]
struct PyScheduler {
    config: ValidatedConfig,
    state: SchedulerState,
    epoch: u64,
    next_id: u64,
}

#[pymethods]
impl PyScheduler {
    #[new]
    fn new(config: &PyConfig) -> PyResult<Self> {
        let config = config.validated()?;
        let state = SchedulerState::new(&config);
        Ok(PyScheduler { config, state, epoch: 0, next_id: 0 })
    }

    /// Schedules one epoch of `(source, destination, slots)` requests and
    /// returns the grants as dicts. Unserved demand stays buffered.
    fn schedule<'py>(
        &mut self,
        py: Python<'py>,
        requests: Vec<(usize, usize, u32)>,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let n = self.config.n_nodes();
        let t = self.config.slots_per_epoch as u32;
        let mut batch = Vec::with_capacity(requests.len());
        for (s, d, size) in requests {
            if s >= n || d >= n || s == d || size == 0 || size > t {
                return Err(PyValueError::new_err(format!("bad request ({s}, {d}, {size}) for N={n}, T={t}")));
            }
            let generated = self.epoch * self.config.epoch_ns();
            batch.push(Request::new(self.next_id, s, d, size, self.epoch, generated));
            self.next_id += 1;
        }
        let (outcome, _) = self.state.schedule_epoch(self.epoch, batch, &self.config);
        self.epoch += 1;
        outcome
            .grants
            .iter()
            .map(|g| {
                let d = PyDict::new(py);
                d.set_item("request_id", g.request_id)?;
                d.set_item("source", g.source)?;
                d.set_item("destination", g.destination)?;
                d.set_item("wavelength", g.wavelength)?;
                d.set_item("slots", g.slots.clone())?;
                d.set_item("epoch", g.epoch)?;
                d.set_item("completed_at_ns", g.completed_at_ns)?;
                Ok(d)
            })
            .collect()
    }

    #[getter]
    fn buffer_len(&self) -> usize {
        self.state.buffer_len()
    }

    #[getter]
    fn epoch(&self) -> u64 {
        self.epoch
    }
}

#[pyclass(name = "Arbiter", module = "ocs_py")]
struct PyArbiter {
    inner: RoundRobinArbiter,
}

#[pymethods]
impl PyArbiter {
    #[new]
    #[pyo3(signature = (width, pointer = 0))]
    fn new(width: usize, pointer: usize) -> PyResult<Self> {
        if width == 0 || pointer >= width {
            return Err(PyValueError::new_err(format!(
                "need 0 <= pointer < width, got width={width} pointer={pointer}"
            )));
        }
        Ok(PyArbiter { inner: RoundRobinArbiter::with_pointer(width, pointer) })
    }

    fn arbitrate(&mut self, requests: Vec<bool>) -> PyResult<Option<usize>> {
        self.inner.arbitrate(&requests).map_err(value_error)
    }

    #[getter]
    fn pointer(&self) -> usize {
        self.inner.pointer()
    }
}

#[pyfunction]
#[pyo3(signature = (epoch_ns, clk_ns = 2.3, boot_cycles = 4))]
fn compute_iterations(epoch_ns: u64, clk_ns: f64, boot_cycles: u32) -> PyResult<u32> {
    let clk = ClockPeriod::try_from(clk_ns).map_err(PyValueError::new_err)?;
    ocs_core::compute_iterations(epoch_ns, clk, boot_cycles).map_err(value_error)
}

/// (watts, pJ/bit) of a TX/RX pair.
#[pyfunction]
#[pyo3(signature = (tx, rx, line_rate_gbps = 100.0))]
fn transceiver_power(tx: &str, rx: &str, line_rate_gbps: f64) -> PyResult<(f64, f64)> {
    let tx: TransceiverOption = tx.parse().map_err(value_error)?;
    let rx: TransceiverOption = rx.parse().map_err(value_error)?;
    let p = models::transceiver_power(&tx, &rx, line_rate_gbps).map_err(value_error)?;
    Ok((p.watts, p.pj_per_bit))
}

/// ($/Gbps low, high) for "Flat", "SL", "FT" or "OCS".
#[pyfunction]
fn network_cost(topology: &str) -> PyResult<(f64, f64)> {
    let t = Topology::ALL
        .into_iter()
        .find(|t| t.label().eq_ignore_ascii_case(topology))
        .ok_or_else(|| PyValueError::new_err(format!("unknown topology {topology:?}")))?;
    Ok(TopologyModel::new(t).cost_per_gbps())
}

#[pyfunction]
#[pyo3(signature = (x, n_nodes = 64, line_rate_gbps = 100.0))]
fn scalability_row(py: Python<'_>, x: u64, n_nodes: u64, line_rate_gbps: f64) -> PyResult<Bound<'_, PyAny>> {
    let row = models::scalability_row(x, n_nodes, line_rate_gbps).map_err(value_error)?;
    to_python(py, &serde_json::to_value(row).map_err(value_error)?)
}

#[pyfunction]
fn propagation_overhead(length_m: f64) -> f64 {
    sim::propagation_overhead(length_m)
}

#[pymodule]
fn ocs_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyScheduler>()?;
    m.add_class::<PyArbiter>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(compute_iterations, m)?)?;
    m.add_function(wrap_pyfunction!(transceiver_power, m)?)?;
    m.add_function(wrap_pyfunction!(network_cost, m)?)?;
    m.add_function(wrap_pyfunction!(scalability_row, m)?)?;
    m.add_function(wrap_pyfunction!(propagation_overhead, m)?)?;
    Ok(())
}
