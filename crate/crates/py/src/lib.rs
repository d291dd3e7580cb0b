//! Python bindings: parameters, netlists, assembled systems and the solve loop.

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

use solc::assembler::System as CoreSystem;
use solc::compiler::{self, FactorSpec, SubsetSumSpec, DEFAULT_RAMP};
use solc::device::{validate_params, DeviceParams, SmoothStep};
use solc::gate::check_gate_configs;
use solc::integrator::{self, IntegrationOpts, Method};
use solc::netlist::Netlist as CoreNetlist;
use solc::runner::{self, Machine, Problem, SolveOpts};
use solc::Error;

fn err(e: Error) -> PyErr {
    match e {
        Error::Io(m) => PyIOError::new_err(m),
        Error::Numerical(m) => PyRuntimeError::new_err(m),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any().unbind(),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.into_pyobject(py)?.into_any().unbind(),
            (None, Some(u)) => u.into_pyobject(py)?.into_any().unbind(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any().unbind(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any().unbind(),
        Value::Array(a) => {
            let items = a.iter().map(|x| to_py(py, x)).collect::<PyResult<Vec<_>>>()?;
            PyList::new(py, items)?.into_any().unbind()
        }
        Value::Object(o) => {
            let d = PyDict::new(py);
            for (k, x) in o {
                d.set_item(k, to_py(py, x)?)?;
            }
            d.into_any().unbind()
        }
    })
}

fn json<T: serde::Serialize>(py: Python<'_>, x: &T) -> PyResult<Py<PyAny>> {
    let v = serde_json::to_value(x).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    to_py(py, &v)
}

/// Device parameters plus gate tables, parsed from `key=value` text.
#[pyclass(name = "Params", from_py_object)]
#[derive(Clone)]
struct PyParams {
    machine: Machine,
}

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (text = ""))]
    fn new(text: &str) -> PyResult<Self> {
        Ok(Self { machine: Machine::from_kv_str(text).map_err(err)? })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { machine: Machine::load(Some(path.as_ref())).map_err(err)? })
    }

    fn get(&self, key: &str) -> PyResult<f64> {
        self.machine
            .dev
            .p
            .to_map()
            .get(key)
            .copied()
            .ok_or_else(|| PyValueError::new_err(format!("unknown parameter {key:?}")))
    }

    /// Returns a copy with one parameter changed.
    fn with_value(&self, key: &str, value: f64) -> PyResult<Self> {
        let mut p = self.machine.dev.p.clone();
        p.set(key, &value.to_string()).map_err(err)?;
        let mut machine = Machine::new(p).map_err(err)?;
        machine.tables = self.machine.tables.clone();
        Ok(Self { machine })
    }

    fn to_dict(&self) -> std::collections::BTreeMap<String, f64> {
        self.machine.dev.p.to_map()
    }

    /// Soft warnings; hard violations raise.
    fn validate(&self) -> PyResult<Vec<String>> {
        Ok(validate_params(&self.machine.dev.p)
            .map_err(err)?
            .iter()
            .map(|w| w.to_string())
            .collect())
    }

    fn __repr__(&self) -> String {
        format!("Params({} keys)", self.machine.dev.p.to_map().len())
    }
}

fn machine(p: Option<&PyParams>) -> Machine {
    p.map(|p| p.machine.clone()).unwrap_or_default()
}

#[pyclass(name = "Netlist", from_py_object)]
#[derive(Clone)]
struct PyNetlist {
    inner: CoreNetlist,
}

#[pymethods]
impl PyNetlist {
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Self { inner: CoreNetlist::deserialize(text).map_err(err)? })
    }

    fn to_text(&self) -> String {
        self.inner.serialize()
    }

    #[getter]
    fn n_gates(&self) -> usize {
        self.inner.gates.len()
    }

    #[getter]
    fn n_nodes(&self) -> usize {
        self.inner.nodes.len()
    }

    /// Gate counts, node counts and state dimension.
    fn report(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        json(py, &compiler::gate_count_report(&self.inner))
    }

    /// `(errors, warnings)` from structural validation.
    fn validate(&self) -> (Vec<String>, Vec<String>) {
        let d = self.inner.validate();
        (d.errors, d.warnings)
    }

    fn readout(&self) -> Vec<(String, Vec<u32>)> {
        self.inner.readout.iter().map(|g| (g.name.clone(), g.nodes.clone())).collect()
    }

    fn __repr__(&self) -> String {
        format!("Netlist({} nodes, {} gates)", self.inner.nodes.len(), self.inner.gates.len())
    }
}

#[pyfunction]
#[pyo3(signature = (n, bits = None))]
fn compile_factor(n: u64, bits: Option<usize>) -> PyResult<PyNetlist> {
    let c = compiler::compile_factorization(&FactorSpec::new(n, bits).map_err(err)?, DEFAULT_RAMP)
        .map_err(err)?;
    Ok(PyNetlist { inner: c.netlist })
}

#[pyfunction]
#[pyo3(signature = (set, target, precision = None, fold_constants = false))]
fn compile_subset_sum(
    set: Vec<u64>,
    target: u64,
    precision: Option<usize>,
    fold_constants: bool,
) -> PyResult<PyNetlist> {
    let mut spec = SubsetSumSpec::new(set, target, precision).map_err(err)?;
    spec.fold_constants = fold_constants;
    let c = compiler::compile_subset_sum(&spec, DEFAULT_RAMP).map_err(err)?;
    Ok(PyNetlist { inner: c.netlist })
}

#[pyfunction]
fn compile_adder(width: usize, total: u64) -> PyResult<PyNetlist> {
    let c = compiler::compile_adder(width, total, DEFAULT_RAMP).map_err(err)?;
    Ok(PyNetlist { inner: c.netlist })
}

fn opts(
    dt: Option<f64>,
    t_max: Option<f64>,
    method: Option<&str>,
    seed: u64,
) -> PyResult<IntegrationOpts> {
    let mut o = IntegrationOpts { seed, ..Default::default() };
    if let Some(dt) = dt {
        o.dt = dt;
        o.eq_dwell = 100.0 * dt;
    }
    if let Some(t) = t_max {
        o.t_max = t;
    }
    if let Some(m) = method {
        o.method = m.parse::<Method>().map_err(err)?;
    }
    o.validate().map_err(err)?;
    Ok(o)
}

/// Assembled ODE system for a netlist.
#[pyclass(name = "System")]
struct PySystem {
    inner: CoreSystem,
}

#[pymethods]
impl PySystem {
    #[new]
    #[pyo3(signature = (netlist, params = None))]
    fn new(netlist: &PyNetlist, params: Option<&PyParams>) -> PyResult<Self> {
        let m = machine(params);
        Ok(Self { inner: CoreSystem::assemble(&netlist.inner, &m.dev, &m.tables).map_err(err)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// `(free nodes, memristors, VCDCGs)`.
    #[getter]
    fn layout(&self) -> (usize, usize, usize) {
        let l = self.inner.layout;
        (l.nv, l.nm, l.nd)
    }

    fn initial_state(&self, seed: u64) -> Vec<f64> {
        integrator::initial_state(&self.inner, seed)
    }

    fn rhs(&self, t: f64, y: Vec<f64>) -> PyResult<Vec<f64>> {
        if y.len() != self.inner.dim() {
            return Err(PyValueError::new_err("state has the wrong length"));
        }
        let mut dy = vec![0.0; y.len()];
        self.inner.eval_rhs(t, &y, &mut dy);
        Ok(dy)
    }

    /// Dense Jacobian as a list of rows.
    fn jacobian(&self, t: f64, y: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        if y.len() != self.inner.dim() {
            return Err(PyValueError::new_err("state has the wrong length"));
        }
        let j = self.inner.jacobian_dense(t, &y);
        Ok((0..j.nrows()).map(|r| j.row(r).iter().copied().collect()).collect())
    }

    /// Integrates from a seeded initial state; returns the outcome summary.
    #[pyo3(signature = (seed = 0, dt = None, t_max = None, method = None))]
    fn integrate(
        &self,
        py: Python<'_>,
        seed: u64,
        dt: Option<f64>,
        t_max: Option<f64>,
        method: Option<&str>,
    ) -> PyResult<Py<PyAny>> {
        let o = opts(dt, t_max, method, seed)?;
        let sys = &self.inner;
        let r = py
            .detach(|| integrator::integrate(sys, &integrator::initial_state(sys, seed), &o))
            .map_err(err)?;
        let out = PyDict::new(py);
        out.set_item("outcome", json(py, &r.outcome)?)?;
        out.set_item("t_end", r.t_end)?;
        out.set_item("t_converged", r.t_converged)?;
        out.set_item("steps", r.steps)?;
        out.set_item("state", r.state.clone())?;
        out.set_item("audit", json(py, &r.audit)?)?;
        Ok(out.into_any().unbind())
    }
}

fn run_solve(
    py: Python<'_>,
    problem: Problem,
    params: Option<&PyParams>,
    o: IntegrationOpts,
    retries: u32,
    trials: usize,
) -> PyResult<Py<PyAny>> {
    let m = machine(params);
    let so = SolveOpts { integration: o, retries, ramp: DEFAULT_RAMP };
    if trials > 1 {
        let est = py
            .detach(|| runner::estimate_success_probability(&problem, &m, trials, &so))
            .map_err(err)?;
        return json(py, &est);
    }
    let out = py.detach(|| runner::solve(&problem, &m, &so)).map_err(err)?;
    json(py, &out)
}

/// Factors `n`; returns the run outcome as a dict (or a success estimate
/// when `trials > 1`).
#[pyfunction]
#[pyo3(signature = (n, bits = None, params = None, seed = 0, dt = None, t_max = None,
                    method = None, retries = 0, trials = 1))]
#[allow(clippy::too_many_arguments)]
fn factor(
    py: Python<'_>,
    n: u64,
    bits: Option<usize>,
    params: Option<&PyParams>,
    seed: u64,
    dt: Option<f64>,
    t_max: Option<f64>,
    method: Option<&str>,
    retries: u32,
    trials: usize,
) -> PyResult<Py<PyAny>> {
    let spec = FactorSpec::new(n, bits).map_err(err)?;
    run_solve(py, Problem::Factor(spec), params, opts(dt, t_max, method, seed)?, retries, trials)
}

#[pyfunction]
#[pyo3(signature = (set, target, precision = None, params = None, seed = 0, dt = None,
                    t_max = None, method = None, retries = 0, trials = 1))]
#[allow(clippy::too_many_arguments)]
fn subset_sum(
    py: Python<'_>,
    set: Vec<u64>,
    target: u64,
    precision: Option<usize>,
    params: Option<&PyParams>,
    seed: u64,
    dt: Option<f64>,
    t_max: Option<f64>,
    method: Option<&str>,
    retries: u32,
    trials: usize,
) -> PyResult<Py<PyAny>> {
    let spec = SubsetSumSpec::new(set, target, precision).map_err(err)?;
    run_solve(py, Problem::SubsetSum(spec), params, opts(dt, t_max, method, seed)?, retries, trials)
}

/// Static gate-configuration report, one dict per configuration.
#[pyfunction]
#[pyo3(signature = (params = None))]
fn check_gates(py: Python<'_>, params: Option<&PyParams>) -> PyResult<Py<PyAny>> {
    let m = machine(params);
    json(py, &check_gate_configs(&m.tables, &m.dev))
}

/// Smooth step of order `r` on `[0, 1]`.
#[pyfunction]
fn smoothstep(r: u32, y: f64) -> PyResult<f64> {
    Ok(SmoothStep::new(r).map_err(err)?.eval(y))
}

/// `(f, df/dv)` of the VCDCG drive for the default parameters.
#[pyfunction]
fn f_dcg(v: f64) -> (f64, f64) {
    let p = DeviceParams::default();
    solc::device::f_dcg(v, p.v_c, p.q, p.m0, p.m1)
}

#[pymodule]
fn pysolc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyParams>()?;
    m.add_class::<PyNetlist>()?;
    m.add_class::<PySystem>()?;
    m.add_function(wrap_pyfunction!(compile_factor, m)?)?;
    m.add_function(wrap_pyfunction!(compile_subset_sum, m)?)?;
    m.add_function(wrap_pyfunction!(compile_adder, m)?)?;
    m.add_function(wrap_pyfunction!(factor, m)?)?;
    m.add_function(wrap_pyfunction!(subset_sum, m)?)?;
    m.add_function(wrap_pyfunction!(check_gates, m)?)?;
    m.add_function(wrap_pyfunction!(smoothstep, m)?)?;
    m.add_function(wrap_pyfunction!(f_dcg, m)?)?;
    Ok(())
}
