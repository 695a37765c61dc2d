use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use magedge::assembly::{assemble_full, BasisOptions, WallSet};
use magedge::experiments::{self, DecayModel, ExperimentSetup};
use magedge::io::{self, Subcommand};
use magedge::model::{build_lattice, sample_realization, LatticeVariant, WallSide};
use magedge::observables::{current, x_centroid_and_spread, ClassificationThresholds};
use magedge::spectral::{self, EnergyWindow, SolverOptions};
use magedge::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config { .. } | Error::Invariant(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

fn walls(name: &str) -> PyResult<WallSet> {
    match name {
        "both" => Ok(WallSet::BOTH),
        "left" => Ok(WallSet::LEFT),
        "right" => Ok(WallSet::RIGHT),
        "none" => Ok(WallSet::NONE),
        _ => Err(PyValueError::new_err(format!("walls must be both/left/right/none, got {name:?}"))),
    }
}

fn side(name: &str) -> PyResult<WallSide> {
    match name {
        "left" => Ok(WallSide::Left),
        "right" => Ok(WallSide::Right),
        _ => Err(PyValueError::new_err(format!("side must be left/right, got {name:?}"))),
    }
}

/// Physical parameters of one cylinder.
#[pyclass(name = "Params", from_py_object)]
#[derive(Clone)]
struct PyParams {
    inner: magedge::model::ModelParams,
}

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (b_field, length, v0, epsilon=None, delta=None, flux=0.0))]
    fn new(b_field: f64, length: f64, v0: f64, epsilon: Option<f64>, delta: Option<f64>, flux: f64) -> PyResult<Self> {
        let mut p = magedge::model::ModelParams::new(b_field, length, v0).with_flux(flux);
        if let Some(e) = epsilon {
            p = p.with_epsilon(e);
        }
        if let Some(d) = delta {
            p = p.with_delta(d);
        }
        p.validate().map_err(to_py)?;
        Ok(Self { inner: p })
    }

    #[getter(B)]
    fn b_field(&self) -> f64 {
        self.inner.b_field
    }

    #[getter(L)]
    fn length(&self) -> f64 {
        self.inner.length
    }

    #[getter(V0)]
    fn v0(&self) -> f64 {
        self.inner.v0
    }

    #[getter]
    fn flux(&self) -> f64 {
        self.inner.flux
    }

    /// `(lo, hi)` of the band window `[B+ε, B+V0]`.
    fn band_window(&self) -> PyResult<(f64, f64)> {
        let w = EnergyWindow::band(&self.inner).map_err(to_py)?;
        Ok((w.lo, w.hi))
    }

    fn gap_window(&self) -> (f64, f64) {
        let w = EnergyWindow::gap(&self.inner);
        (w.lo, w.hi)
    }

    fn validate_band_experiment(&self) -> PyResult<()> {
        self.inner.validate_band_experiment().map_err(to_py)
    }

    fn validate_gap_experiment(&self) -> PyResult<()> {
        self.inner.validate_gap_experiment().map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        json(&self.inner)
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!("Params(B={}, L={}, V0={}, flux={})", p.b_field, p.length, p.v0, p.flux)
    }
}

/// Mixed Fourier/grid discretization.
#[pyclass(name = "Basis", from_py_object)]
#[derive(Clone)]
struct PyBasis {
    inner: magedge::assembly::Basis,
}

#[pymethods]
impl PyBasis {
    /// Grid sized so the walls dominate `e_top` at the ends.
    #[staticmethod]
    #[pyo3(signature = (params, e_top, dx=None, n_x=None, j_max=None))]
    fn auto(params: &PyParams, e_top: f64, dx: Option<f64>, n_x: Option<usize>, j_max: Option<i64>) -> PyResult<Self> {
        let inner = magedge::assembly::Basis::auto(&params.inner, e_top, BasisOptions { dx, n_x, j_max }).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n_x(&self) -> usize {
        self.inner.n_x()
    }

    #[getter]
    fn n_modes(&self) -> usize {
        self.inner.n_modes()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn dx(&self) -> f64 {
        self.inner.dx
    }

    #[getter]
    fn x_max(&self) -> f64 {
        self.inner.x_max()
    }

    fn __repr__(&self) -> String {
        format!("Basis(n_x={}, modes={}, dim={})", self.n_x(), self.n_modes(), self.dim())
    }
}

/// Lowest `count` eigenvalues of the fiber at momentum `k`.
#[pyfunction]
#[pyo3(signature = (params, basis, k, count, walls="none"))]
fn fiber_levels(params: &PyParams, basis: &PyBasis, k: f64, count: usize, walls: &str) -> PyResult<Vec<f64>> {
    spectral::fiber_levels(k, &basis.inner, &params.inner, self::walls(walls)?, count).map_err(to_py)
}

/// Branches of the single-wall fiber family as `(band, k, energy, current, slope)` lists.
#[pyfunction]
#[pyo3(signature = (params, basis, side, k_lo, k_hi, n_max=0, samples_per_unit=8))]
#[allow(clippy::too_many_arguments, clippy::type_complexity)]
fn dispersion(
    params: &PyParams,
    basis: &PyBasis,
    side: &str,
    k_lo: f64,
    k_hi: f64,
    n_max: usize,
    samples_per_unit: usize,
) -> PyResult<Vec<(usize, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)>> {
    let b = spectral::dispersion_branches(self::side(side)?, &params.inner, &basis.inner, n_max, (k_lo, k_hi), samples_per_unit)
        .map_err(to_py)?;
    Ok(b.into_iter().map(|b| (b.band, b.k, b.energy, b.current, b.slope)).collect())
}

/// Window eigenvalues of `H_ω` for one seed as `(energy, current, x_centroid, residual)`.
#[pyfunction]
#[pyo3(signature = (params, basis, seed, lo, hi, lattice="band"))]
fn window_spectrum(
    params: &PyParams,
    basis: &PyBasis,
    seed: u64,
    lo: f64,
    hi: f64,
    lattice: &str,
) -> PyResult<Vec<(f64, f64, f64, f64)>> {
    let variant = match lattice {
        "band" => LatticeVariant::BandExperiment,
        "gap" => LatticeVariant::GapExperiment,
        _ => return Err(PyValueError::new_err("lattice must be band or gap")),
    };
    let p = &params.inner;
    let lat = build_lattice(variant, p.length).map_err(to_py)?;
    let omega = sample_realization(seed, &lat, p.v0);
    let op = assemble_full(&omega, &basis.inner, p).map_err(to_py)?;
    let window = EnergyWindow::custom(lo, hi).map_err(to_py)?;
    let spec = spectral::eigs_in_window(&op, &window, &SolverOptions::default()).map_err(to_py)?;
    spec.records
        .iter()
        .map(|r| {
            let j = current(&r.vector, &op.velocity)?;
            let (xc, _) = x_centroid_and_spread(&r.vector, &basis.inner)?;
            Ok((r.energy, j, xc, r.residual))
        })
        .collect::<magedge::Result<_>>()
        .map_err(to_py)
}

fn setup(params: &PyParams, basis: &PyBasis, window: EnergyWindow, workers: usize) -> ExperimentSetup {
    ExperimentSetup {
        params: params.inner.clone(),
        basis: basis.inner.clone(),
        window,
        solver: SolverOptions::default(),
        thresholds: ClassificationThresholds::default_for(params.inner.b_field),
        workers,
    }
}

/// Band-window ensemble; returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (params, basis, seeds, workers=1))]
fn theorem1(params: &PyParams, basis: &PyBasis, seeds: Vec<u64>, workers: usize) -> PyResult<String> {
    let w = EnergyWindow::band(&params.inner).map_err(to_py)?;
    let r = experiments::theorem1_run(&setup(params, basis, w, workers), &seeds).map_err(to_py)?;
    json(&r)
}

/// Gap-window ensemble; returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (params, basis, seeds, workers=1))]
fn theorem2(params: &PyParams, basis: &PyBasis, seeds: Vec<u64>, workers: usize) -> PyResult<String> {
    let w = EnergyWindow::gap(&params.inner);
    let r = experiments::theorem2_run(&setup(params, basis, w, workers), &seeds).map_err(to_py)?;
    json(&r)
}

/// `(flux, L·min spacing)` per grid value over the band window.
#[pyfunction]
fn flux_scan(params: &PyParams, basis: &PyBasis, grid: Vec<f64>) -> PyResult<Vec<(f64, Option<f64>)>> {
    let w = EnergyWindow::band(&params.inner).map_err(to_py)?;
    let s = experiments::hypothesis1_flux_scan(&params.inner, &basis.inner, &w, &grid).map_err(to_py)?;
    Ok(s.rows.into_iter().map(|r| (r.flux, r.scaled)).collect())
}

/// Order-preserving pairing; returns `(perturbed_index, reference_index, shift)` triples.
#[pyfunction]
fn match_spectra(perturbed: Vec<f64>, reference: Vec<f64>, cap: f64) -> Vec<(usize, usize, f64)> {
    experiments::match_spectra(&perturbed, &reference, cap)
        .pairs
        .into_iter()
        .map(|p| (p.perturbed_index, p.reference_index, p.shift))
        .collect()
}

/// `(slope, intercept, residual)` of `log(shift)` against the model abscissa.
#[pyfunction]
#[pyo3(signature = (points, model, floor=0.0))]
fn fit_decay(points: Vec<(f64, f64)>, model: &str, floor: f64) -> PyResult<(f64, f64, f64)> {
    let m = DecayModel::parse(model).ok_or_else(|| PyValueError::new_err("model must be log_sq or sqrt"))?;
    let f = experiments::fit_decay(&points, m, floor).map_err(to_py)?;
    Ok((f.slope, f.intercept, f.residual))
}

/// Runs a subcommand with a JSON config and writes its artifacts under `out`.
#[pyfunction]
fn run(subcommand: &str, config_json: &str, out: PathBuf) -> PyResult<usize> {
    let sub = Subcommand::parse(subcommand).ok_or_else(|| PyValueError::new_err(format!("unknown subcommand {subcommand:?}")))?;
    let config = io::parse_config_str(config_json).map_err(to_py)?;
    let outcome = io::run_subcommand(sub, &config, &out).map_err(to_py)?;
    Ok(outcome.files.len())
}

#[pymodule]
fn magedge_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParams>()?;
    m.add_class::<PyBasis>()?;
    m.add_function(wrap_pyfunction!(fiber_levels, m)?)?;
    m.add_function(wrap_pyfunction!(dispersion, m)?)?;
    m.add_function(wrap_pyfunction!(window_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(theorem1, m)?)?;
    m.add_function(wrap_pyfunction!(theorem2, m)?)?;
    m.add_function(wrap_pyfunction!(flux_scan, m)?)?;
    m.add_function(wrap_pyfunction!(match_spectra, m)?)?;
    m.add_function(wrap_pyfunction!(fit_decay, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
