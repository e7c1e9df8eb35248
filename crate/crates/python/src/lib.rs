//! Python bindings: grids, fields, the individual substeps, full runs and the
//! experiment harness. Long computations release the GIL.

use std::path::PathBuf;
use std::sync::Arc;

use numpy::{IntoPyArray, PyArray1, PyArray2, PyReadonlyArray1, PyReadonlyArray2};
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use wpfp::config::{load_config, parse_config, parse_potential, to_ini_string, OutputOptions};
use wpfp::experiments::{
    convergence_study, convergence_study_config, default_reference, preset_reference, steady_state_run_config, Axis,
};
use wpfp::friction::{build_friction_diffmatrix, build_friction_propagator, build_galerkin_matrices};
use wpfp::grid::{build_grid, error_norms, gaussian_wavepacket, total_mass};
use wpfp::observables::{global_moments, SteadyCriterion};
use wpfp::poisson::{density, self_consistent_delta_v, solve_poisson as core_solve_poisson};
use wpfp::presets::{preset_by_name, PresetId};
use wpfp::splitting::{potential_samples, run_simulation, NullSink};
use wpfp::transport::build_delta_v_external;
use wpfp::{GaussianIC, GridSpec, PotentialSpec, RunConfig, WignerField, WpfpError};

fn to_py(e: WpfpError) -> PyErr {
    match e {
        WpfpError::Io { .. } => PyOSError::new_err(e.to_string()),
        WpfpError::NonFinite { .. } | WpfpError::Numeric(_) => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for wpfp::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

/// Uniform periodic phase-space grid on `[a, b) × [c, d)`.
#[pyclass(name = "Grid", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGrid {
    inner: Arc<GridSpec>,
}

#[pymethods]
impl PyGrid {
    #[new]
    fn new(a: f64, b: f64, c: f64, d: f64, nx: usize, nxi: usize) -> PyResult<Self> {
        Ok(Self { inner: build_grid(a, b, c, d, nx, nxi).py_err()? })
    }

    #[getter]
    fn nx(&self) -> usize {
        self.inner.nx
    }

    #[getter]
    fn nxi(&self) -> usize {
        self.inner.nxi
    }

    #[getter]
    fn hx(&self) -> f64 {
        self.inner.hx
    }

    #[getter]
    fn hxi(&self) -> f64 {
        self.inner.hxi
    }

    #[getter]
    fn bounds(&self) -> (f64, f64, f64, f64) {
        let g = &self.inner;
        (g.a, g.b, g.c, g.d)
    }

    #[getter]
    fn x<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray1<f64>> {
        self.inner.x.clone().into_pyarray(py)
    }

    #[getter]
    fn xi<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray1<f64>> {
        self.inner.xi.clone().into_pyarray(py)
    }

    fn __repr__(&self) -> String {
        let g = &self.inner;
        format!("Grid([{}, {}] x [{}, {}], {} x {})", g.a, g.b, g.c, g.d, g.nx, g.nxi)
    }
}

/// Wigner function sampled on a grid, `values[m, l] = W(x_m, xi_l)`.
#[pyclass(name = "Field", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyField {
    inner: WignerField,
}

impl PyField {
    fn wrap(inner: WignerField) -> Self {
        Self { inner }
    }
}

#[pymethods]
impl PyField {
    #[new]
    #[pyo3(signature = (grid, values, time = 0.0))]
    fn new(grid: &PyGrid, values: PyReadonlyArray2<'_, f64>, time: f64) -> PyResult<Self> {
        let values = values.as_array().to_owned();
        Ok(Self::wrap(WignerField::from_values(grid.inner.clone(), values, time).py_err()?))
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid { inner: self.inner.grid.clone() }
    }

    #[getter]
    fn values<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray2<f64>> {
        self.inner.values.clone().into_pyarray(py)
    }

    #[getter]
    fn time(&self) -> f64 {
        self.inner.time
    }

    fn mass(&self) -> f64 {
        total_mass(&self.inner)
    }

    fn max_abs(&self) -> f64 {
        self.inner.max_abs()
    }

    fn density<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray1<f64>> {
        density(&self.inner).into_pyarray(py)
    }

    /// `(N, J, E)` with the energy taken in the given potential.
    #[pyo3(signature = (potential = "harmonic(1, 1)"))]
    fn moments(&self, potential: &str) -> PyResult<(f64, f64, f64)> {
        let spec = parse_potential(potential).py_err()?;
        let v = potential_samples(&self.inner, &spec);
        let m = global_moments(&self.inner, &v, spec.energy_weight()).py_err()?;
        Ok((m.n, m.j, m.e))
    }

    /// `(L2, Linf)` distance to `other` on the same grid.
    fn error_norms(&self, other: &PyField) -> PyResult<(f64, f64)> {
        error_norms(&self.inner, &other.inner).py_err()
    }

    fn __repr__(&self) -> String {
        format!("Field({}x{}, t = {})", self.inner.grid.nx, self.inner.grid.nxi, self.inner.time)
    }
}

/// Validated run configuration.
#[pyclass(name = "Config", skip_from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: RunConfig,
}

#[pymethods]
impl PyConfig {
    /// Parses INI text.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Self { inner: parse_config(text).py_err()?.run })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: load_config(&path).py_err()?.run })
    }

    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        Ok(Self { inner: preset_by_name(name).py_err()?.config })
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid { inner: self.inner.grid.clone() }
    }

    #[setter]
    fn set_grid(&mut self, grid: &PyGrid) {
        self.inner.grid = grid.inner.clone();
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt
    }

    #[setter]
    fn set_dt(&mut self, dt: f64) {
        self.inner.dt = dt;
    }

    #[getter]
    fn t_final(&self) -> f64 {
        self.inner.t_final
    }

    #[setter]
    fn set_t_final(&mut self, t: f64) {
        self.inner.t_final = t;
    }

    #[getter]
    fn record_every(&self) -> usize {
        self.inner.record_every
    }

    #[setter]
    fn set_record_every(&mut self, k: usize) {
        self.inner.record_every = k;
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.params.epsilon
    }

    fn initial_field(&self) -> PyResult<PyField> {
        Ok(PyField::wrap(self.inner.initial_field().py_err()?))
    }

    fn to_ini(&self) -> String {
        to_ini_string(&self.inner, &OutputOptions::default())
    }
}

/// Gaussian wavepacket initial datum.
#[pyfunction]
#[pyo3(signature = (grid, epsilon, x0, xi0, a11 = 1.0, a22 = 1.0, a12 = 0.0))]
fn gaussian(grid: &PyGrid, epsilon: f64, x0: f64, xi0: f64, a11: f64, a22: f64, a12: f64) -> PyResult<PyField> {
    let ic = GaussianIC { a11, a22, a12, x0, xi0 };
    Ok(PyField::wrap(gaussian_wavepacket(&ic, epsilon, &grid.inner).py_err()?))
}

/// Exact free transport `W(x - xi tau, xi)`.
#[pyfunction]
fn step_convection(field: &PyField, tau: f64) -> PyField {
    PyField::wrap(wpfp::transport::step_convection(&field.inner, tau))
}

/// Exact phase-space diffusion with coefficients `Dqq, Dpq, Dpp`.
#[pyfunction]
fn step_diffusion(field: &PyField, tau: f64, dqq: f64, dpq: f64, dpp: f64) -> PyField {
    PyField::wrap(wpfp::transport::step_diffusion(&field.inner, tau, dqq, dpq, dpp))
}

/// Exact nonlocal potential step; `potential` uses the config syntax.
#[pyfunction]
#[pyo3(signature = (field, tau, potential, epsilon, t = 0.0))]
fn step_nonlocal(field: &PyField, tau: f64, potential: &str, epsilon: f64, t: f64) -> PyResult<PyField> {
    let w = &field.inner;
    let dv = match parse_potential(potential).py_err()? {
        PotentialSpec::SelfConsistent { alpha } => self_consistent_delta_v(w, alpha, epsilon),
        spec => build_delta_v_external(&spec, &w.grid, epsilon, t).py_err()?,
    };
    Ok(PyField::wrap(wpfp::transport::step_nonlocal(w, tau, &dv).py_err()?))
}

/// Friction step over `dt` with either discretization.
#[pyfunction]
#[pyo3(signature = (field, gamma, dt, scheme = "collocation"))]
fn step_friction(field: &PyField, gamma: f64, dt: f64, scheme: &str) -> PyResult<PyField> {
    let w = &field.inner;
    let out = match scheme {
        "collocation" => {
            let prop = build_friction_propagator(&w.grid, gamma, dt).py_err()?;
            wpfp::friction::step_friction_collocation(w, &prop)
        }
        "galerkin" => {
            let mats = build_galerkin_matrices(&w.grid);
            wpfp::friction::step_friction_galerkin(w, &mats, gamma, dt)
        }
        other => return Err(PyValueError::new_err(format!("unknown friction scheme '{other}'"))),
    };
    Ok(PyField::wrap(out.py_err()?))
}

/// Periodic Poisson solve; returns `V(x_m)`.
#[pyfunction]
fn solve_poisson<'py>(
    py: Python<'py>,
    grid: &PyGrid,
    rho: PyReadonlyArray1<'_, f64>,
    alpha: f64,
) -> PyResult<Bound<'py, PyArray1<f64>>> {
    let rho = rho.as_slice()?;
    if rho.len() != grid.inner.nx {
        return Err(PyValueError::new_err(format!("rho has {} samples, grid has {}", rho.len(), grid.inner.nx)));
    }
    Ok(core_solve_poisson(rho, alpha, &grid.inner).samples().into_pyarray(py))
}

/// Dense matrix exponential.
#[pyfunction]
fn matrix_exp<'py>(py: Python<'py>, a: PyReadonlyArray2<'_, f64>) -> PyResult<Bound<'py, PyArray2<f64>>> {
    let a = a.as_array().to_owned();
    Ok(wpfp::linalg::matrix_exp(&a).py_err()?.into_pyarray(py))
}

/// Pseudospectral matrix `D` of the friction generator `I + Lambda D`.
#[pyfunction]
fn friction_diffmatrix<'py>(py: Python<'py>, grid: &PyGrid) -> Bound<'py, PyArray2<f64>> {
    build_friction_diffmatrix(&grid.inner).d.into_pyarray(py)
}

/// Runs a configuration; returns the final field and the series as arrays.
#[pyfunction]
fn run<'py>(py: Python<'py>, config: &PyConfig) -> PyResult<(PyField, Bound<'py, PyDict>)> {
    let cfg = config.inner.clone();
    let out = py.detach(move || run_simulation(&cfg, &mut NullSink)).py_err()?;
    let recs = out.series.records();
    let col = |f: fn(&wpfp::observables::ObservableRecord) -> f64| recs.iter().map(f).collect::<Vec<_>>();
    let series = PyDict::new(py);
    series.set_item("t", col(|r| r.t).into_pyarray(py))?;
    series.set_item("N", col(|r| r.moments.n).into_pyarray(py))?;
    series.set_item("J", col(|r| r.moments.j).into_pyarray(py))?;
    series.set_item("E", col(|r| r.moments.e).into_pyarray(py))?;
    Ok((PyField::wrap(out.field), series))
}

/// Reference field of a preset at its final time.
#[pyfunction]
fn reference(py: Python<'_>, preset: &str) -> PyResult<PyField> {
    let p = preset_by_name(preset).py_err()?;
    Ok(PyField::wrap(py.detach(move || preset_reference(&p)).py_err()?))
}

/// Convergence study for a preset name or a `Config`; returns a dict.
#[pyfunction]
fn convergence<'py>(
    py: Python<'py>,
    target: &Bound<'py, PyAny>,
    axis: &str,
    samples: Vec<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let axis: Axis = axis.parse().py_err()?;
    let report = if let Ok(name) = target.extract::<String>() {
        let p = preset_by_name(&name).py_err()?;
        py.detach(move || convergence_study(&p, axis, &samples))
    } else {
        let cfg = target.cast::<PyConfig>()?.borrow().inner.clone();
        py.detach(move || convergence_study_config("config", &cfg, default_reference(&cfg), axis, &samples))
    }
    .py_err()?;
    let d = PyDict::new(py);
    d.set_item("l2", report.samples.iter().map(|s| s.l2).collect::<Vec<_>>())?;
    d.set_item("linf", report.samples.iter().map(|s| s.linf).collect::<Vec<_>>())?;
    d.set_item("orders_l2", report.orders_l2.clone())?;
    d.set_item("orders_linf", report.orders_linf.clone())?;
    d.set_item("spectral_decay", report.spectral_decay())?;
    d.set_item("text", report.text())?;
    Ok(d)
}

/// Steady-state run of a preset; returns a dict.
#[pyfunction]
fn steady<'py>(py: Python<'py>, preset: &str, tmax: f64) -> PyResult<Bound<'py, PyDict>> {
    let id: PresetId = preset.parse().py_err()?;
    let p = preset_by_name(preset).py_err()?;
    let report = py
        .detach(move || {
            steady_state_run_config(id.name(), &p.config, tmax, SteadyCriterion::default(), p.steady, &mut NullSink)
        })
        .py_err()?;
    let d = PyDict::new(py);
    d.set_item("reached", report.verdict.reached)?;
    d.set_item("t_steady", report.verdict.t_steady)?;
    d.set_item("mass_drift", report.mass_drift)?;
    d.set_item("passes", report.passes())?;
    d.set_item("residuals", report.output.residual_history())?;
    Ok(d)
}

#[pymodule]
pub fn pywpfp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyConfig>()?;
    m.add_function(wrap_pyfunction!(gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(step_convection, m)?)?;
    m.add_function(wrap_pyfunction!(step_diffusion, m)?)?;
    m.add_function(wrap_pyfunction!(step_nonlocal, m)?)?;
    m.add_function(wrap_pyfunction!(step_friction, m)?)?;
    m.add_function(wrap_pyfunction!(solve_poisson, m)?)?;
    m.add_function(wrap_pyfunction!(matrix_exp, m)?)?;
    m.add_function(wrap_pyfunction!(friction_diffmatrix, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(reference, m)?)?;
    m.add_function(wrap_pyfunction!(convergence, m)?)?;
    m.add_function(wrap_pyfunction!(steady, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
