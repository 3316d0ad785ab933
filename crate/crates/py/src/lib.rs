//! Python bindings for `cavity_selforg`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cavity_selforg::config::RunConfig;
use cavity_selforg::ensemble::{default_workers, run_ensemble, EnsembleResult};
use cavity_selforg::meanfield::{self, Phase};
use cavity_selforg::params;
use cavity_selforg::protocol::DEFAULT_EPSILON;
use cavity_selforg::units::{self, DEFAULT_KAPPA};
use cavity_selforg::{Error, ProtocolKind};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) | Error::InvalidMode(_) | Error::Unstable(_) => {
            PyValueError::new_err(e.to_string())
        }
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Physical parameters: atom number, cavity decay rate, detuning and pump strengths.
#[pyclass(name = "SystemParams", frozen)]
struct PySystemParams {
    inner: cavity_selforg::SystemParams,
}

#[pymethods]
impl PySystemParams {
    #[new]
    #[pyo3(signature = (n_atoms, alpha, kappa = DEFAULT_KAPPA, delta_c = None))]
    fn new(n_atoms: usize, alpha: [f64; 2], kappa: f64, delta_c: Option<f64>) -> PyResult<Self> {
        let inner = cavity_selforg::SystemParams::new(n_atoms, kappa, delta_c.unwrap_or(-kappa), alpha).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n_atoms(&self) -> usize {
        self.inner.n_atoms
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa
    }

    #[getter]
    fn delta_c(&self) -> f64 {
        self.inner.delta_c
    }

    #[getter]
    fn alpha(&self) -> [f64; 2] {
        self.inner.alpha
    }

    /// Steady-state temperature in hbar omega_r.
    fn temperature(&self) -> f64 {
        self.inner.temperature()
    }

    fn beta(&self) -> f64 {
        self.inner.beta()
    }

    fn retardation_ratio(&self) -> f64 {
        self.inner.retardation_ratio()
    }

    fn diffusion_coefficient(&self, mode: usize) -> f64 {
        self.inner.diffusion_coefficient(mode)
    }

    fn friction_coefficient(&self, mode: usize) -> f64 {
        self.inner.friction_coefficient(mode)
    }

    /// Temperature including the trap-frequency correction at (theta1, theta2).
    fn corrected_temperature(&self, theta1: f64, theta2: f64) -> PyResult<f64> {
        params::corrected_temperature(&self.inner, theta1, theta2).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!("SystemParams(n_atoms={}, alpha={:?}, kappa={}, delta_c={})", p.n_atoms, p.alpha, p.kappa, p.delta_c)
    }
}

/// Pump schedule. Times are in 1/omega_r.
#[pyclass(name = "Protocol", frozen)]
struct PyProtocol {
    inner: cavity_selforg::Protocol,
}

fn protocol(kind: ProtocolKind, t_final: f64) -> PyResult<PyProtocol> {
    Ok(PyProtocol { inner: cavity_selforg::Protocol::new(kind, t_final).map_err(to_py)? })
}

#[pymethods]
impl PyProtocol {
    #[staticmethod]
    #[pyo3(signature = (alpha_final, t_final, alpha_initial = None))]
    fn sudden(alpha_final: [f64; 2], t_final: f64, alpha_initial: Option<[f64; 2]>) -> PyResult<Self> {
        let alpha_initial = alpha_initial.unwrap_or([DEFAULT_EPSILON; 2]);
        protocol(ProtocolKind::Sudden { alpha_initial, alpha_final }, t_final)
    }

    #[staticmethod]
    #[pyo3(signature = (alpha_final, tau, t_final, epsilon = DEFAULT_EPSILON))]
    fn linear_ramp(alpha_final: [f64; 2], tau: f64, t_final: f64, epsilon: f64) -> PyResult<Self> {
        protocol(ProtocolKind::LinearRamp { epsilon, alpha_final, tau }, t_final)
    }

    #[staticmethod]
    fn two_step(alpha_intermediate: [f64; 2], alpha_final: [f64; 2], tau: f64, t_final: f64) -> PyResult<Self> {
        protocol(ProtocolKind::TwoStep { alpha_intermediate, alpha_final, tau }, t_final)
    }

    /// `t_initial` is in units of the minimal temperature.
    #[staticmethod]
    fn temperature_quench(t_initial: f64, alpha_final: [f64; 2], t_final: f64) -> PyResult<Self> {
        protocol(ProtocolKind::TemperatureQuench { t_initial, alpha_final }, t_final)
    }

    #[getter]
    fn t_final(&self) -> f64 {
        self.inner.t_final
    }

    fn alpha_at(&self, t: f64) -> [f64; 2] {
        self.inner.alpha_at(t)
    }

    fn final_alpha(&self) -> [f64; 2] {
        self.inner.final_alpha()
    }

    fn __repr__(&self) -> String {
        format!("Protocol({:?}, t_final={})", self.inner.kind, self.inner.t_final)
    }
}

/// Intensive free energy beta*f at (theta1, theta2).
#[pyfunction]
fn free_energy(theta1: f64, theta2: f64, alpha1: f64, alpha2: f64) -> PyResult<f64> {
    meanfield::intensive_free_energy(theta1, theta2, alpha1, alpha2).map_err(to_py)
}

/// Local minima of the free energy as a list of dicts.
#[pyfunction]
fn find_minima<'py>(py: Python<'py>, alpha1: f64, alpha2: f64) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let set = meanfield::find_minima(alpha1, alpha2).map_err(to_py)?;
    set.minima
        .iter()
        .map(|m| {
            let d = PyDict::new(py);
            d.set_item("theta1", m.theta1)?;
            d.set_item("theta2", m.theta2)?;
            d.set_item("value", m.value)?;
            d.set_item("phase", m.phase.name())?;
            d.set_item("global", m.global)?;
            Ok(d)
        })
        .collect()
}

/// (|theta1|, theta2) at the global minimum.
#[pyfunction]
fn steady_observables(alpha1: f64, alpha2: f64) -> PyResult<(f64, f64)> {
    meanfield::steady_observables(alpha1, alpha2).map_err(to_py)
}

/// Phase labels on a `resolution` x `resolution` grid over [0, amax]^2.
///
/// `phases[i1][i2]` holds the code of the global phase at
/// `(axis[i1], axis[i2])`: 0 paramagnetic, 1 nematic, 2 ferromagnetic.
#[pyfunction]
#[pyo3(signature = (amax = 4.0, resolution = 81))]
fn phase_diagram<'py>(py: Python<'py>, amax: f64, resolution: usize) -> PyResult<Bound<'py, PyDict>> {
    let d = py.detach(|| meanfield::phase_diagram(amax, resolution)).map_err(to_py)?;
    let n = d.axis.len();
    let grid = |f: &dyn Fn(usize, usize) -> u8| -> Vec<Vec<u32>> { (0..n).map(|i| (0..n).map(|j| u32::from(f(i, j))).collect()).collect() };
    let out = PyDict::new(py);
    out.set_item("axis", &d.axis)?;
    out.set_item("phases", grid(&|i, j| d.cell(i, j).phase.code()))?;
    out.set_item("boundary_order", grid(&|i, j| d.boundary_code(i, j)))?;
    out.set_item("phase_names", [Phase::Paramagnetic, Phase::Nematic, Phase::Ferromagnetic].map(Phase::name))?;
    Ok(out)
}

fn series_dict<'py>(py: Python<'py>, r: &EnsembleResult, kappa: f64) -> PyResult<Bound<'py, PyDict>> {
    let s = &r.series;
    let col = |v: &[[f64; 2]], k: usize| v.iter().map(|x| x[k]).collect::<Vec<_>>();
    let d = PyDict::new(py);
    d.set_item("t_kappa", s.times.iter().map(|&t| units::time_to_kappa_units(t, kappa)).collect::<Vec<_>>())?;
    d.set_item("mean_abs_theta1", col(&s.mean_abs_theta, 0))?;
    d.set_item("mean_abs_theta2", col(&s.mean_abs_theta, 1))?;
    d.set_item("dtheta1", col(&s.dtheta, 0))?;
    d.set_item("dtheta2", col(&s.dtheta, 1))?;
    d.set_item("mean_theta1", &s.mean_theta1)?;
    d.set_item("stderr_theta1", &s.stderr_theta1)?;
    d.set_item("ekin_over_ekin0", s.kinetic_energy.iter().map(|e| e / params::minimal_kinetic_energy(kappa)).collect::<Vec<_>>())?;
    d.set_item("kurtosis", &s.kurtosis)?;
    d.set_item("p_theta2_negative", &s.p_theta2_negative)?;
    d.set_item("nematic_fraction", &s.nematic_fraction)?;
    Ok(d)
}

/// Run the ensemble described by a TOML configuration string.
///
/// Returns a dict with the ensemble time series (`series`), the terminal
/// order parameters of every trajectory and the number of failed
/// trajectories.
#[pyfunction]
#[pyo3(signature = (config, seed = None, workers = None))]
fn run_config<'py>(py: Python<'py>, config: &str, seed: Option<u64>, workers: Option<usize>) -> PyResult<Bound<'py, PyDict>> {
    let cfg = RunConfig::from_toml_str(config).map_err(to_py)?;
    let mut spec = cfg.to_run_spec().map_err(to_py)?;
    if let Some(s) = seed {
        spec.base_seed = s;
    }
    let workers = workers.or(cfg.ensemble.workers).unwrap_or_else(default_workers).max(1);
    let r = py.detach(|| run_ensemble(&spec, workers)).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("series", series_dict(py, &r, spec.params.kappa)?)?;
    out.set_item("terminal_theta", r.terminal.iter().map(|t| t.theta).collect::<Vec<_>>())?;
    out.set_item("failed", r.failed)?;
    out.set_item("trajectories", spec.trajectories)?;
    Ok(out)
}

#[pyfunction]
fn time_to_kappa_units(t: f64, kappa: f64) -> f64 {
    units::time_to_kappa_units(t, kappa)
}

#[pyfunction]
fn time_from_kappa_units(t_kappa: f64, kappa: f64) -> f64 {
    units::time_from_kappa_units(t_kappa, kappa)
}

#[pyfunction]
fn minimal_kinetic_energy(kappa: f64) -> f64 {
    params::minimal_kinetic_energy(kappa)
}

#[pymodule]
fn pyselforg(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystemParams>()?;
    m.add_class::<PyProtocol>()?;
    m.add_function(wrap_pyfunction!(free_energy, m)?)?;
    m.add_function(wrap_pyfunction!(find_minima, m)?)?;
    m.add_function(wrap_pyfunction!(steady_observables, m)?)?;
    m.add_function(wrap_pyfunction!(phase_diagram, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(time_to_kappa_units, m)?)?;
    m.add_function(wrap_pyfunction!(time_from_kappa_units, m)?)?;
    m.add_function(wrap_pyfunction!(minimal_kinetic_energy, m)?)?;
    m.add("DEFAULT_KAPPA", DEFAULT_KAPPA)?;
    Ok(())
}
