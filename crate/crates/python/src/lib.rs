//! Python bindings: configs, simulations, states, studies and snapshots.

// pyo3 0.22 macro expansion trips this lint on every `PyResult` method.
#![allow(clippy::useless_conversion)]

use std::path::PathBuf;

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use pecfdtd::config::{parse_config_with_overrides, render_config, FieldName};
use pecfdtd::harness::{convergence_study, StudyPlan};
use pecfdtd::snapshot::{write_heatmap, write_snapshot, auto_range, SnapshotHeader};
use pecfdtd::{EMState, ScalarField, Scheme, SimConfig, Simulation};

fn to_py(e: pecfdtd::Error) -> PyErr {
    if e.is_numerical() {
        PyArithmeticError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn field_name(name: &str) -> PyResult<FieldName> {
    FieldName::parse(name).ok_or_else(|| PyValueError::new_err(format!("unknown field `{name}` (Ez, Hx or Hy)")))
}

fn rows(f: &ScalarField) -> Vec<Vec<f64>> {
    f.values().chunks(f.grid().nx).map(<[f64]>::to_vec).collect()
}

/// A parsed, validated experiment description.
#[pyclass(name = "Config", module = "pecfdtd_py")]
#[derive(Clone)]
struct PyConfig {
    inner: SimConfig,
}

#[pymethods]
impl PyConfig {
    /// Parses INI text; `overrides` are `section.key=value` strings.
    #[new]
    #[pyo3(signature = (text = "", overrides = Vec::new()))]
    fn new(text: &str, overrides: Vec<String>) -> PyResult<Self> {
        Ok(PyConfig {
            inner: parse_config_with_overrides(text, &overrides).map_err(to_py)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (path, overrides = Vec::new()))]
    fn from_file(path: PathBuf, overrides: Vec<String>) -> PyResult<Self> {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| PyValueError::new_err(format!("{}: {e}", path.display())))?;
        Self::new(&text, overrides)
    }

    /// Returns a copy with more overrides applied.
    fn with_overrides(&self, overrides: Vec<String>) -> PyResult<Self> {
        Self::new(&render_config(&self.inner), overrides)
    }

    fn render(&self) -> String {
        render_config(&self.inner)
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.inner.spacing
    }

    #[getter]
    fn t_final(&self) -> f64 {
        self.inner.t_final
    }

    #[getter]
    fn cfl(&self) -> f64 {
        self.inner.cfl
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.inner.theta
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(spacing={}, cfl={}, t_final={})",
            self.inner.spacing, self.inner.cfl, self.inner.t_final
        )
    }
}

/// Fields `(Ez, Hx, Hy)` at one time; arrays are lists of rows, `[j][i]`.
#[pyclass(name = "State", module = "pecfdtd_py")]
#[derive(Clone)]
struct PyState {
    inner: EMState,
}

#[pymethods]
impl PyState {
    #[getter]
    fn time(&self) -> f64 {
        self.inner.time
    }

    /// `(nx, ny)`.
    #[getter]
    fn shape(&self) -> (usize, usize) {
        let g = self.inner.grid();
        (g.nx, g.ny)
    }

    /// Node coordinates `(xs, ys)`.
    fn coords(&self) -> (Vec<f64>, Vec<f64>) {
        let g = *self.inner.grid();
        ((0..g.nx).map(|i| g.x(i)).collect(), (0..g.ny).map(|j| g.y(j)).collect())
    }

    fn field(&self, name: &str) -> PyResult<Vec<Vec<f64>>> {
        Ok(rows(self.pick(field_name(name)?)))
    }

    #[getter]
    fn ez(&self) -> Vec<Vec<f64>> {
        rows(&self.inner.ez)
    }

    #[getter]
    fn hx(&self) -> Vec<Vec<f64>> {
        rows(&self.inner.hx)
    }

    #[getter]
    fn hy(&self) -> Vec<Vec<f64>> {
        rows(&self.inner.hy)
    }

    fn max_abs(&self) -> f64 {
        self.inner.max_abs()
    }

    /// Writes a text snapshot of one field.
    fn write_snapshot(&self, name: &str, path: PathBuf) -> PyResult<()> {
        let f = self.pick(field_name(name)?);
        let header = SnapshotHeader::for_field(f, self.inner.time, name);
        write_snapshot(f, &header, &path).map_err(to_py)
    }

    /// Writes a PPM heatmap; `range` defaults to symmetric about zero.
    #[pyo3(signature = (name, path, range = None))]
    fn write_heatmap(&self, name: &str, path: PathBuf, range: Option<(f64, f64)>) -> PyResult<()> {
        let f = self.pick(field_name(name)?);
        write_heatmap(f, &path, range.unwrap_or_else(|| auto_range(f))).map_err(to_py)
    }
}

impl PyState {
    fn pick(&self, f: FieldName) -> &ScalarField {
        match f {
            FieldName::Ez => &self.inner.ez,
            FieldName::Hx => &self.inner.hx,
            FieldName::Hy => &self.inner.hy,
        }
    }
}

fn scheme(name: &str) -> PyResult<Scheme> {
    match name {
        "bfecc" => Ok(Scheme::Bfecc),
        "forward" => Ok(Scheme::ForwardOnly),
        other => Err(PyValueError::new_err(format!("unknown scheme `{other}` (bfecc or forward)"))),
    }
}

#[pyclass(name = "Simulation", module = "pecfdtd_py")]
struct PySimulation {
    inner: Simulation,
}

#[pymethods]
impl PySimulation {
    #[new]
    fn new(config: &PyConfig) -> PyResult<Self> {
        Ok(PySimulation {
            inner: Simulation::from_config(&config.inner).map_err(to_py)?,
        })
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.params().dt
    }

    #[getter]
    fn steps(&self) -> usize {
        self.inner.params().steps
    }

    /// Layer tag of every node as a list of rows of strings.
    fn layers(&self) -> Vec<Vec<String>> {
        let g = *self.inner.grid();
        let l = self.inner.bundle().mask.layers();
        l.chunks(g.nx)
            .map(|row| row.iter().map(|t| format!("{t:?}")).collect())
            .collect()
    }

    fn initial_state(&self) -> PyState {
        PyState {
            inner: self.inner.initial_state(),
        }
    }

    #[pyo3(signature = (state, steps, scheme = "bfecc"))]
    fn advance(&mut self, py: Python<'_>, state: &PyState, steps: usize, scheme: &str) -> PyResult<PyState> {
        let s = self::scheme(scheme)?;
        let start = state.inner.clone();
        let sim = &mut self.inner;
        let out = py.allow_threads(|| sim.advance(start, steps, s)).map_err(to_py)?;
        Ok(PyState { inner: out })
    }

    fn finalize(&self, state: &PyState) -> PyResult<PyState> {
        Ok(PyState {
            inner: self.inner.finalize(&state.inner).map_err(to_py)?,
        })
    }

    /// Initial condition, all steps, finalize.
    #[pyo3(signature = (scheme = "bfecc"))]
    fn run(&mut self, py: Python<'_>, scheme: &str) -> PyResult<PyState> {
        let s = self::scheme(scheme)?;
        let sim = &mut self.inner;
        let out = py.allow_threads(|| sim.run(s)).map_err(to_py)?;
        Ok(PyState { inner: out })
    }
}

/// Runs the refinement study described by `config`; one dict per resolution.
#[pyfunction]
fn convergence<'py>(py: Python<'py>, config: &PyConfig) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let plan = StudyPlan::from_config(&config.inner);
    let reports = py.allow_threads(|| convergence_study(&plan)).map_err(to_py)?;
    reports
        .iter()
        .map(|r| {
            let d = PyDict::new_bound(py);
            d.set_item("resolution", r.resolution)?;
            for f in FieldName::ALL {
                let e = r.field(f);
                let inner = PyDict::new_bound(py);
                inner.set_item("l1", e.l1)?;
                inner.set_item("linf", e.linf)?;
                inner.set_item("order", e.order)?;
                d.set_item(f.as_str(), inner)?;
            }
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn pecfdtd_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyState>()?;
    m.add_class::<PySimulation>()?;
    m.add_function(wrap_pyfunction!(convergence, m)?)?;
    Ok(())
}
