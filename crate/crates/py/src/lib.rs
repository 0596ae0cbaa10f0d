//! Python bindings: grids, fields, maps, gauge states, reconstruction,
//! evolution and virial diagnostics. Arrays cross the boundary as lists.

use equimap_core as core;
use equimap_core::{Complex64, RadialField, RadialGrid};
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(equimap, EquimapError, PyRuntimeError, "Numerical failure inside equimap.");

fn to_py(e: core::Error) -> PyErr {
    match e {
        core::Error::InvalidArgument(_) | core::Error::GridMismatch { .. } => PyValueError::new_err(e.to_string()),
        other => EquimapError::new_err(other.to_string()),
    }
}

trait IntoPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for core::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

/// Cell-centred radial grid r_j = (j + 1/2) R / n.
#[pyclass(name = "Grid", module = "equimap", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGrid(RadialGrid);

#[pymethods]
impl PyGrid {
    #[new]
    fn new(n: usize, r_max: f64) -> PyResult<Self> {
        Ok(PyGrid(RadialGrid::new(n, r_max).py_err()?))
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn r_max(&self) -> f64 {
        self.0.r_max()
    }

    fn nodes(&self) -> Vec<f64> {
        self.0.nodes().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("Grid(n={}, r_max={})", self.0.n(), self.0.r_max())
    }
}

/// Complex field sampled on a grid.
#[pyclass(name = "Field", module = "equimap", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyField(RadialField);

#[pymethods]
impl PyField {
    #[new]
    fn new(grid: &PyGrid, values: Vec<Complex64>) -> PyResult<Self> {
        Ok(PyField(RadialField::new(&grid.0, values).py_err()?))
    }

    /// Parse `r value_re value_im` lines; nodes must match to 1e-12.
    #[staticmethod]
    fn from_text(grid: &PyGrid, text: &str) -> PyResult<Self> {
        let g = &grid.0;
        let mut values = Vec::with_capacity(g.n());
        for (k, line) in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).enumerate() {
            let cols: Vec<f64> = line
                .split_whitespace()
                .map(|s| s.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| PyValueError::new_err(format!("row {}: {e}", k + 1)))?;
            if cols.len() != 3 {
                return Err(PyValueError::new_err(format!("row {}: expected 3 columns", k + 1)));
            }
            let node = *g.nodes().get(k).ok_or_else(|| PyValueError::new_err("more rows than grid nodes"))?;
            if (cols[0] - node).abs() > 1e-12 * node.max(1.0) {
                return Err(PyValueError::new_err(format!("row {}: r = {} is not grid node {node}", k + 1, cols[0])));
            }
            values.push(Complex64::new(cols[1], cols[2]));
        }
        Ok(PyField(RadialField::new(g, values).py_err()?))
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(self.0.grid().clone())
    }

    fn values(&self) -> Vec<Complex64> {
        self.0.values().to_vec()
    }

    /// ∫|f|² r dr.
    fn mass(&self) -> f64 {
        self.0.mass()
    }

    fn scaled(&self, s: Complex64) -> Self {
        PyField(self.0.scale(s))
    }

    fn __len__(&self) -> usize {
        self.0.grid().n()
    }
}

/// Equivariant map profile with its Coulomb frame.
#[pyclass(name = "Map", module = "equimap", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMap(core::MapState);

#[pymethods]
impl PyMap {
    /// Compactly supported bump of amplitude `a`.
    #[staticmethod]
    fn bump(grid: &PyGrid, a: f64) -> PyResult<Self> {
        Ok(PyMap(core::fixtures::bump_map(&grid.0, a).py_err()?))
    }

    /// Bump amplitude whose ψ⁻ carries the given mass.
    #[staticmethod]
    fn bump_amplitude_for_mass(grid: &PyGrid, mass: f64) -> PyResult<f64> {
        core::fixtures::bump_amplitude_for_mass(&grid.0, mass).py_err()
    }

    #[staticmethod]
    #[pyo3(signature = (grid, lam, alpha = 0.0))]
    fn soliton(grid: &PyGrid, lam: f64, alpha: f64) -> PyResult<Self> {
        let p = core::SolitonParams::new(lam, alpha).py_err()?;
        Ok(PyMap(core::soliton_map(p, &grid.0).py_err()?))
    }

    /// Rows (u1, u2, u3) at each node.
    fn profile(&self) -> Vec<[f64; 3]> {
        self.0.u_bar().iter().map(|u| [u[0], u[1], u[2]]).collect()
    }

    /// ½∫|∂_r u|² + |u × k̂|²/r² over the plane.
    fn energy(&self) -> f64 {
        core::energy(&self.0)
    }

    fn gauge(&self) -> PyGauge {
        PyGauge(core::extract_fields(&self.0))
    }

    fn sup_distance(&self, other: &PyMap) -> f64 {
        self.0.sup_distance(&other.0)
    }
}

/// Reduced fields ψ₁, ψ₂, ψ±, A₂, A₀.
#[pyclass(name = "Gauge", module = "equimap", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGauge(core::GaugeState);

#[pymethods]
impl PyGauge {
    /// Solve for (ψ⁺, A₂) given ψ⁻ (mass below 8).
    #[staticmethod]
    fn from_psi_minus(psi_minus: &PyField) -> PyResult<Self> {
        Ok(PyGauge(core::solve_gauge_from_psi_minus(&psi_minus.0).py_err()?))
    }

    #[staticmethod]
    fn from_psi_pair(psi_plus: &PyField, psi_minus: &PyField) -> PyResult<Self> {
        Ok(PyGauge(core::GaugeState::from_psi_pair(&psi_plus.0, &psi_minus.0).py_err()?))
    }

    #[getter]
    fn psi1(&self) -> PyField {
        PyField(self.0.psi1.clone())
    }

    #[getter]
    fn psi2(&self) -> PyField {
        PyField(self.0.psi2.clone())
    }

    #[getter]
    fn psi_plus(&self) -> PyField {
        PyField(self.0.psi_plus.clone())
    }

    #[getter]
    fn psi_minus(&self) -> PyField {
        PyField(self.0.psi_minus.clone())
    }

    #[getter]
    fn a2(&self) -> Vec<f64> {
        self.0.a2.clone()
    }

    #[getter]
    fn a0(&self) -> Vec<f64> {
        self.0.a0.clone()
    }

    fn sup_a2(&self) -> f64 {
        self.0.sup_a2()
    }

    fn compat_residual(&self) -> f64 {
        core::compatibility_residual(&self.0)
    }

    fn psi0(&self) -> PyField {
        PyField(core::compute_psi0(&self.0))
    }

    fn map(&self) -> PyResult<PyMap> {
        Ok(PyMap(core::rebuild_map(&self.0).py_err()?))
    }
}

/// ψ⁻ → (gauge, map) with residuals.
#[pyfunction]
fn reconstruct<'py>(py: Python<'py>, psi_minus: &PyField) -> PyResult<Bound<'py, PyDict>> {
    let rep = core::reconstruct(&psi_minus.0).py_err()?;
    let d = PyDict::new(py);
    let again = core::extract_fields(&rep.map).psi_minus;
    let roundtrip = again.sub(&psi_minus.0).py_err()?.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
    d.set_item("mass", rep.mass)?;
    d.set_item("energy", core::energy(&rep.map))?;
    d.set_item("roundtrip_sup_error", roundtrip)?;
    d.set_item("compat_residual", rep.residuals.compatibility)?;
    d.set_item("sup_a2", rep.sup_a2)?;
    d.set_item("fixed_point_iterations", rep.fixed_point_iterations)?;
    d.set_item("gauge", PyGauge(rep.gauge.clone()))?;
    d.set_item("map", PyMap(rep.map))?;
    Ok(d)
}

/// Monitored run of the split-step integrator.
#[pyclass(name = "Trajectory", module = "equimap", frozen)]
struct PyTrajectory(core::TrajectoryRecord);

#[pymethods]
impl PyTrajectory {
    fn times(&self) -> Vec<f64> {
        self.0.times()
    }

    fn to_csv(&self) -> String {
        self.0.to_csv()
    }

    /// Monitor samples as dicts keyed like the CSV columns.
    fn samples<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.0
            .samples
            .iter()
            .map(|s| {
                let d = PyDict::new(py);
                d.set_item("t", s.t)?;
                d.set_item("mass_minus", s.mass_minus)?;
                d.set_item("mass_plus", s.mass_plus)?;
                d.set_item("sup_a2", s.sup_a2)?;
                d.set_item("compat_residual", s.compat_residual)?;
                d.set_item("strichartz_accum", s.strichartz_accum)?;
                d.set_item("energy_proxy", s.energy_proxy)?;
                Ok(d)
            })
            .collect()
    }

    fn final_gauge(&self) -> PyGauge {
        PyGauge(self.0.final_state.gauge())
    }

    fn alarm_count(&self) -> (usize, usize) {
        (self.0.compat_alarms.len(), self.0.mass_alarms.len())
    }

    /// Momentum ledger over the stored snapshots (needs `keep_snapshots`).
    #[pyo3(signature = (scale = 10.0))]
    fn virial<'py>(&self, py: Python<'py>, scale: f64) -> PyResult<Bound<'py, PyDict>> {
        if self.0.snapshots.len() < 2 {
            return Err(PyValueError::new_err("run with keep_snapshots=True to collect snapshots"));
        }
        let b = core::virial_balance(&self.0.snapshots, core::Cutoff::QuadraticBump { scale }).py_err()?;
        let local =
            core::virial_local_charge_residual(&self.0.snapshots, core::Cutoff::Bump { scale }, core::SIGMA).py_err()?;
        let d = PyDict::new(py);
        d.set_item("boundary", b.boundary)?;
        d.set_item("bulk", b.bulk)?;
        d.set_item("sign_definite", b.sign_definite)?;
        d.set_item("log_laplacian", b.log_laplacian)?;
        d.set_item("a0_term", b.a0_term)?;
        d.set_item("closure", b.closure)?;
        d.set_item("closure_relative", b.closure_relative)?;
        d.set_item("local_charge_max_relative", local.max_relative())?;
        Ok(d)
    }
}

#[pyfunction]
#[pyo3(signature = (initial, dt, t_final, monitor_stride = 1, keep_snapshots = false, xi_max = None))]
fn evolve(
    py: Python<'_>,
    initial: &PyGauge,
    dt: f64,
    t_final: f64,
    monitor_stride: usize,
    keep_snapshots: bool,
    xi_max: Option<f64>,
) -> PyResult<PyTrajectory> {
    let g = initial.0.grid();
    let mut cfg = core::EvolutionConfig::new(g.n(), g.r_max(), dt, t_final);
    cfg.monitor_stride = monitor_stride;
    cfg.keep_snapshots = keep_snapshots;
    cfg.xi_max = xi_max;
    let state = initial.0.clone();
    let rec = py.detach(move || core::run(&state, &cfg)).py_err()?;
    Ok(PyTrajectory(rec))
}

#[pymodule]
fn equimap(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("EquimapError", m.py().get_type::<EquimapError>())?;
    m.add_class::<PyGrid>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyMap>()?;
    m.add_class::<PyGauge>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add("CSV_HEADER", core::TrajectoryRecord::CSV_HEADER)?;
    Ok(())
}
