//! Python module `cpk`.

// Triggered by the pyo3 0.22 method macros.
#![allow(clippy::useless_conversion)]

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cpk_core::config::{load_scenario, load_species, MaterialCatalog, SpeciesCatalog};
use cpk_core::potential::{u_thermal_state, EvaluationPath};
use cpk_core::spectrum::characteristic_temperatures as core_temperatures;
use cpk_core::sweep::{compare_asymptotics, evaluate, run_sweep, Axis, Spacing, SweepSpec};
use cpk_core::units::debye2_to_si;
use cpk_core::{
    Asymptote, Error, Preparation, Scenario as CoreScenario, SpeciesState, SurfaceModel, Tolerances,
};

create_exception!(cpk, NumericsError, PyRuntimeError);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Numerics { .. } | Error::UnstableStaticLimit(_) => {
            NumericsError::new_err(e.to_string())
        }
        e => PyValueError::new_err(e.to_string()),
    }
}

fn json_to_py(py: Python<'_>, text: &str) -> PyResult<PyObject> {
    Ok(py
        .import_bound("json")?
        .call_method1("loads", (text,))?
        .unbind())
}

fn preparation(kind: &str, level: usize) -> PyResult<Preparation> {
    match kind {
        "eigenstate" => Ok(Preparation::Eigenstate(level)),
        "thermal_ensemble" => Ok(Preparation::ThermalEnsemble),
        _ => Err(PyValueError::new_err(format!(
            "preparation must be 'eigenstate' or 'thermal_ensemble', got '{kind}'"
        ))),
    }
}

/// Level scheme, dipole data and preparation of an atom or molecule.
#[pyclass(module = "cpk", frozen)]
#[derive(Clone)]
struct Species(SpeciesState);

#[pymethods]
impl Species {
    /// Two-level system with transition frequency `omega` (rad/s) and
    /// `|d|²` in debye².
    #[staticmethod]
    #[pyo3(signature = (name, omega, d2_debye2, preparation="eigenstate", level=0))]
    fn two_level(
        name: &str,
        omega: f64,
        d2_debye2: f64,
        preparation: &str,
        level: usize,
    ) -> PyResult<Self> {
        let prep = self::preparation(preparation, level)?;
        SpeciesState::two_level(name, omega, debye2_to_si(d2_debye2), prep)
            .map(Species)
            .map_err(py_err)
    }

    #[staticmethod]
    fn bundled(name: &str) -> PyResult<Self> {
        let catalog = SpeciesCatalog::bundled();
        catalog.get(name).cloned().map(Species).ok_or_else(|| {
            PyValueError::new_err(format!(
                "unknown species '{name}'; available: {}",
                catalog.names().join(", ")
            ))
        })
    }

    #[staticmethod]
    fn bundled_names() -> Vec<String> {
        SpeciesCatalog::bundled()
            .names()
            .into_iter()
            .map(String::from)
            .collect()
    }

    #[staticmethod]
    fn from_file(path: std::path::PathBuf, name: &str) -> PyResult<Self> {
        let catalog = load_species(&path).map_err(py_err)?;
        catalog.get(name).cloned().map(Species).ok_or_else(|| {
            PyValueError::new_err(format!("no species '{name}' in {}", path.display()))
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name.clone()
    }

    /// Level energies in joules.
    #[getter]
    fn energies(&self) -> Vec<f64> {
        self.0.levels.iter().map(|l| l.energy).collect()
    }

    /// `(ω_kn, |d|²)` pairs of the prepared state, SI units.
    fn prepared_transitions(&self) -> PyResult<Vec<(f64, f64)>> {
        Ok(self
            .0
            .prepared_transitions()
            .map_err(py_err)?
            .into_iter()
            .map(|t| (t.omega_kn, t.d2))
            .collect())
    }

    /// Copy with a different preparation.
    #[pyo3(signature = (preparation, level=0))]
    fn prepared(&self, preparation: &str, level: usize) -> PyResult<Self> {
        let mut s = self.0.clone();
        s.preparation = self::preparation(preparation, level)?;
        s.validate().map_err(py_err)?;
        Ok(Species(s))
    }

    fn __repr__(&self) -> String {
        format!("Species('{}', {} levels)", self.0.name, self.0.levels.len())
    }
}

/// Surface response model.
#[pyclass(module = "cpk", frozen)]
#[derive(Clone)]
struct Surface(SurfaceModel);

#[pymethods]
impl Surface {
    #[staticmethod]
    fn perfect() -> Self {
        Surface(SurfaceModel::PerfectReflector)
    }

    #[staticmethod]
    fn drude(omega_p: f64, gamma: f64) -> PyResult<Self> {
        SurfaceModel::drude(omega_p, gamma)
            .map(Surface)
            .map_err(py_err)
    }

    #[staticmethod]
    fn gold() -> Self {
        Surface(SurfaceModel::gold())
    }

    #[staticmethod]
    fn bundled(name: &str) -> PyResult<Self> {
        let catalog = MaterialCatalog::bundled();
        catalog.get(name).map(Surface).ok_or_else(|| {
            PyValueError::new_err(format!(
                "unknown surface '{name}'; available: {}",
                catalog.names().join(", ")
            ))
        })
    }

    #[getter]
    fn is_perfect(&self) -> bool {
        self.0.is_perfect()
    }

    fn __repr__(&self) -> String {
        match self.0 {
            SurfaceModel::PerfectReflector => "Surface.perfect()".into(),
            SurfaceModel::Drude { omega_p, gamma } => {
                format!("Surface.drude({omega_p:e}, {gamma:e})")
            }
        }
    }
}

/// A species at distance `z` (m) from a surface at temperature `T` (K).
#[pyclass(module = "cpk", frozen)]
#[derive(Clone)]
struct Scenario(CoreScenario);

#[pymethods]
impl Scenario {
    #[new]
    fn new(species: &Species, surface: &Surface, z: f64, temperature: f64) -> PyResult<Self> {
        CoreScenario::new(
            species.0.clone(),
            surface.0,
            z,
            temperature,
            Tolerances::default(),
        )
        .map(Scenario)
        .map_err(py_err)
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        load_scenario(&path).map(Scenario).map_err(py_err)
    }

    #[getter]
    fn z(&self) -> f64 {
        self.0.z
    }

    #[getter]
    fn temperature(&self) -> f64 {
        self.0.temperature
    }

    #[getter]
    fn species(&self) -> Species {
        Species(self.0.species.clone())
    }

    fn at_temperature(&self, temperature: f64) -> PyResult<Self> {
        let s = self.0.at_temperature(temperature);
        s.validate().map_err(py_err)?;
        Ok(Scenario(s))
    }

    fn at_distance(&self, z: f64) -> PyResult<Self> {
        let s = self.0.at_distance(z);
        s.validate().map_err(py_err)?;
        Ok(Scenario(s))
    }

    fn u_nonresonant(&self, py: Python<'_>) -> PyResult<f64> {
        py.allow_threads(|| cpk_core::u_nonresonant(&self.0))
            .map_err(py_err)
    }

    fn u_nonresonant_closed(&self) -> PyResult<f64> {
        cpk_core::u_nonresonant_closed(&self.0).map_err(py_err)
    }

    fn u_evanescent(&self, py: Python<'_>) -> PyResult<f64> {
        py.allow_threads(|| cpk_core::u_evanescent(&self.0))
            .map_err(py_err)
    }

    fn u_evanescent_closed(&self) -> PyResult<f64> {
        cpk_core::u_evanescent_closed(&self.0).map_err(py_err)
    }

    /// Thermal-ensemble potential.
    fn u_thermal_state(&self, py: Python<'_>) -> PyResult<f64> {
        py.allow_threads(|| u_thermal_state(&self.0))
            .map_err(py_err)
    }

    /// Components, per-transition parts, regime label and validity flag.
    fn breakdown<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let b = py
            .allow_threads(|| evaluate(&self.0, EvaluationPath::Auto))
            .map_err(py_err)?;
        let d = PyDict::new_bound(py);
        d.set_item("u_nonresonant", b.u_nonresonant)?;
        d.set_item("u_evanescent", b.u_evanescent)?;
        d.set_item("u_total", b.u_total)?;
        let per: Vec<(f64, f64, f64, f64)> = b
            .per_transition
            .iter()
            .map(|c| (c.transition.omega_kn, c.transition.d2, c.u_nr, c.u_ev))
            .collect();
        d.set_item("per_transition", per)?;
        d.set_item("regime", b.regime.label())?;
        d.set_item("far_field_warning", b.validity.far_field_warning)?;
        Ok(d)
    }

    /// Closed-form asymptote by token (`"eq10"`) or name.
    fn asymptote(&self, which: &str) -> PyResult<f64> {
        let a: Asymptote = which.parse().map_err(py_err)?;
        cpk_core::asymptote(&self.0, a).map_err(py_err)
    }

    fn regime(&self) -> PyResult<String> {
        cpk_core::classify_regime(&self.0.species, self.0.z, self.0.temperature)
            .map(|r| r.label().to_string())
            .map_err(py_err)
    }

    /// Sweep as CSV text with the documented column order.
    #[pyo3(signature = (axis, min, max, points, spacing="linear", asymptotes=Vec::new(), per_transition=false, threads=0))]
    #[allow(clippy::too_many_arguments)]
    fn sweep_csv(
        &self,
        py: Python<'_>,
        axis: &str,
        min: f64,
        max: f64,
        points: usize,
        spacing: &str,
        asymptotes: Vec<String>,
        per_transition: bool,
        threads: usize,
    ) -> PyResult<String> {
        let axis: Axis = axis.parse().map_err(py_err)?;
        let spacing: Spacing = spacing.parse().map_err(py_err)?;
        let mut spec = SweepSpec::new(axis, min, max, points, spacing);
        spec.asymptotes = asymptotes
            .iter()
            .map(|a| a.parse())
            .collect::<Result<_, _>>()
            .map_err(py_err)?;
        spec.per_transition = per_transition;
        py.allow_threads(|| run_sweep(&self.0, &spec, threads)?.to_csv_string())
            .map_err(py_err)
    }

    /// Asymptote comparison report as nested dicts and lists.
    #[pyo3(signature = (temperatures, tolerance, threads=0))]
    fn compare(
        &self,
        py: Python<'_>,
        temperatures: Vec<f64>,
        tolerance: f64,
        threads: usize,
    ) -> PyResult<PyObject> {
        let report = py
            .allow_threads(|| compare_asymptotics(&self.0, &temperatures, tolerance, threads))
            .map_err(py_err)?;
        json_to_py(py, &report.to_json())
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario('{}', z={:e} m, T={} K)",
            self.0.species.name, self.0.z, self.0.temperature
        )
    }
}

/// `k_B T/ħ` in rad/s.
#[pyfunction]
fn thermal_frequency(temperature: f64) -> PyResult<f64> {
    cpk_core::thermal_frequency(temperature).map_err(py_err)
}

/// Mean thermal photon number; `ω < 0` gives `−[n(|ω|) + 1]`.
#[pyfunction]
fn photon_number(omega: f64, temperature: f64) -> PyResult<f64> {
    cpk_core::photon_number(omega, temperature).map_err(py_err)
}

/// `(T_ω, T_z)` in kelvin.
#[pyfunction]
fn characteristic_temperatures(omega: f64, z: f64) -> PyResult<(f64, f64)> {
    core_temperatures(omega, z)
        .map(|c| (c.t_omega, c.t_z))
        .map_err(py_err)
}

/// Casimir energy per unit area (J/m²) of a dilute half-space.
#[pyfunction]
fn casimir_energy(
    py: Python<'_>,
    species: &Species,
    surface: &Surface,
    z: f64,
    temperature: f64,
    eta: f64,
) -> PyResult<PyObject> {
    let e = py
        .allow_threads(|| {
            cpk_core::casimir_energy_dilute(
                &species.0,
                &surface.0,
                z,
                temperature,
                eta,
                &Tolerances::default(),
            )
        })
        .map_err(py_err)?;
    let d = PyDict::new_bound(py);
    d.set_item("closed", e.closed)?;
    d.set_item("numerical", e.numerical)?;
    d.set_item("numerical_error", e.numerical_error)?;
    d.set_item("cutoff", e.cutoff)?;
    d.set_item("warnings", e.warnings)?;
    Ok(d.into_any().unbind())
}

#[pymodule]
pub fn cpk(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Species>()?;
    m.add_class::<Surface>()?;
    m.add_class::<Scenario>()?;
    m.add_function(wrap_pyfunction!(thermal_frequency, m)?)?;
    m.add_function(wrap_pyfunction!(photon_number, m)?)?;
    m.add_function(wrap_pyfunction!(characteristic_temperatures, m)?)?;
    m.add_function(wrap_pyfunction!(casimir_energy, m)?)?;
    m.add("NumericsError", m.py().get_type_bound::<NumericsError>())?;
    m.add(
        "ASYMPTOTES",
        Asymptote::ALL.iter().map(|a| a.token()).collect::<Vec<_>>(),
    )?;
    Ok(())
}
