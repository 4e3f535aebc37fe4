//! Python module `hodsar`: spin Hamiltonians, rate and Rabi dynamics,
//! resonator fitting, CW spectra and the command-line entry point.

use std::collections::HashMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use hodsar_core::constants::dbm_to_mw;
use hodsar_core::dynamics::{self as dyn_, DriveSpec, DynamicsError, Readout, TripletRateParams};
use hodsar_core::experiment::{self as exp, EnergyBudget, Execution, ExperimentError};
use hodsar_core::io::{self, IoError};
use hodsar_core::numeric::ode::OdeOptions;
use hodsar_core::resonator::{
    self as res, Background, FindModesOptions, ResonatorError, ResonatorMode, ResonatorModeSet,
    SParamRecord,
};
use hodsar_core::spin::{self, StrainCouplings, StrainField, TransitionPair, ZfsParams, C64};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn dyn_err(e: DynamicsError) -> PyErr {
    match e {
        DynamicsError::Numerical(_) | DynamicsError::Integrator(_) | DynamicsError::NoOscillationDetected => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => value_err(e),
    }
}

fn res_err(e: ResonatorError) -> PyErr {
    match e {
        ResonatorError::FitFailed(_) | ResonatorError::CircleFitDegenerate => PyRuntimeError::new_err(e.to_string()),
        _ => value_err(e),
    }
}

fn exp_err(e: ExperimentError) -> PyErr {
    match e {
        ExperimentError::Dynamics(d) => dyn_err(d),
        ExperimentError::Resonator(r) => res_err(r),
        other => value_err(other),
    }
}

fn io_err(e: IoError) -> PyErr {
    match e {
        IoError::Numeric(_) => PyRuntimeError::new_err(e.to_string()),
        _ => value_err(e),
    }
}

fn pair(name: &str) -> PyResult<TransitionPair> {
    name.parse().map_err(value_err)
}

/// Optical-cycle and triplet rates (μs⁻¹). Defaults are placeholders.
#[pyclass(name = "TripletRates", from_py_object)]
#[derive(Clone)]
struct PyTripletRates {
    inner: TripletRateParams,
}

#[pymethods]
impl PyTripletRates {
    #[new]
    #[pyo3(signature = (**kwargs))]
    fn new(kwargs: Option<&Bound<'_, pyo3::types::PyDict>>) -> PyResult<Self> {
        let mut r = Self {
            inner: TripletRateParams::default(),
        };
        if let Some(kw) = kwargs {
            for (k, v) in kw.iter() {
                let key: String = k.extract()?;
                if key == "branch" {
                    r.inner.branch = v.extract()?;
                    continue;
                }
                let x: f64 = v.extract()?;
                let p = &mut r.inner;
                let slot = match key.as_str() {
                    "pump_g" => &mut p.pump_g,
                    "k_fluor" => &mut p.k_fluor,
                    "k_isc" => &mut p.k_isc,
                    "gamma_xy" => &mut p.gamma_xy,
                    "gamma_xz" => &mut p.gamma_xz,
                    "gamma_yz" => &mut p.gamma_yz,
                    "k_x" => &mut p.k_x,
                    "k_y" => &mut p.k_y,
                    "k_z" => &mut p.k_z,
                    _ => return Err(value_err(format!("unknown rate `{key}`"))),
                };
                *slot = x;
            }
        }
        r.inner.validate().map_err(dyn_err)?;
        Ok(r)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// Energies (MHz, ascending), labels and the three transition frequencies.
#[pyfunction]
fn eigensystem(d: f64, e: f64) -> PyResult<(Vec<f64>, Vec<String>, HashMap<&'static str, f64>)> {
    let es = spin::eigensystem(&spin::zfs_hamiltonian(&ZfsParams::new(d, e).map_err(value_err)?))
        .map_err(value_err)?;
    let labels = es.labels.iter().map(|l| format!("{l:?}")).collect();
    let trans = TransitionPair::ALL
        .iter()
        .map(|&p| (p.as_str(), es.transition_frequency(p)))
        .collect();
    Ok((es.energies.to_vec(), labels, trans))
}

/// `⟨a|H_strain|b⟩` (MHz) for the named pair. `couplings` holds g1..g5 and
/// `strain` the six tensor components; missing keys are zero.
#[pyfunction]
#[pyo3(signature = (d, e, couplings, strain, pair_name = "xy"))]
fn strain_matrix_element(
    d: f64,
    e: f64,
    couplings: HashMap<String, f64>,
    strain: HashMap<String, f64>,
    pair_name: &str,
) -> PyResult<C64> {
    let get = |m: &HashMap<String, f64>, k: &str| m.get(k).copied().unwrap_or(0.0);
    for k in couplings.keys() {
        if !["g1", "g2", "g3", "g4", "g5"].contains(&k.as_str()) {
            return Err(value_err(format!("unknown coupling `{k}`")));
        }
    }
    for k in strain.keys() {
        if !["exx", "eyy", "ezz", "exy", "exz", "eyz"].contains(&k.as_str()) {
            return Err(value_err(format!("unknown strain component `{k}`")));
        }
    }
    let g = StrainCouplings {
        g1: get(&couplings, "g1"),
        g2: get(&couplings, "g2"),
        g3: get(&couplings, "g3"),
        g4: get(&couplings, "g4"),
        g5: get(&couplings, "g5"),
    };
    let s = StrainField {
        exx: get(&strain, "exx"),
        eyy: get(&strain, "eyy"),
        ezz: get(&strain, "ezz"),
        exy: get(&strain, "exy"),
        exz: get(&strain, "exz"),
        eyz: get(&strain, "eyz"),
        f_drive: None,
    };
    let es = spin::eigensystem(&spin::zfs_hamiltonian(&ZfsParams::new(d, e).map_err(value_err)?))
        .map_err(value_err)?;
    Ok(es.matrix_element(&spin::strain_hamiltonian(&s, &g), pair(pair_name)?))
}

/// Steady-state populations `(S0, S1, Tx, Ty, Tz)` with an incoherent
/// drive rate `drive_w` (μs⁻¹) on the named pair.
#[pyfunction]
#[pyo3(signature = (rates, drive_w = 0.0, pair_name = "xy"))]
fn steady_state(rates: &PyTripletRates, drive_w: f64, pair_name: &str) -> PyResult<Vec<f64>> {
    let m = dyn_::build_rate_matrix(&rates.inner, drive_w, pair(pair_name)?).map_err(dyn_err)?;
    Ok(dyn_::steady_state(&m).map_err(dyn_err)?.to_vec())
}

/// Population trajectory from `S0` on `times` (μs).
#[pyfunction]
#[pyo3(signature = (rates, times, drive_w = 0.0, pair_name = "xy"))]
fn propagate_populations(
    rates: &PyTripletRates,
    times: Vec<f64>,
    drive_w: f64,
    pair_name: &str,
) -> PyResult<Vec<Vec<f64>>> {
    let m = dyn_::build_rate_matrix(&rates.inner, drive_w, pair(pair_name)?).map_err(dyn_err)?;
    let tr = dyn_::propagate_populations(&m, &[1.0, 0.0, 0.0, 0.0, 0.0], &times, &OdeOptions::default())
        .map_err(dyn_err)?;
    Ok(tr.populations.iter().map(|p| p.to_vec()).collect())
}

/// Pair-difference signal versus pulse length for a constant drive.
#[pyfunction]
#[pyo3(signature = (rabi_frequency, taus, detuning = 0.0, t2 = f64::INFINITY, pair_name = "xy", rates = None))]
fn rabi_trace(
    rabi_frequency: f64,
    taus: Vec<f64>,
    detuning: f64,
    t2: f64,
    pair_name: &str,
    rates: Option<&PyTripletRates>,
) -> PyResult<Vec<f64>> {
    let drive = DriveSpec {
        pair: pair(pair_name)?,
        rabi_frequency,
        detuning,
        t2,
    };
    let r = rates.map_or_else(TripletRateParams::default, |r| r.inner);
    let tr = dyn_::rabi_trace(&drive, &r, &taus, &Readout::default(), &OdeOptions::default()).map_err(dyn_err)?;
    Ok(tr.signal)
}

/// Damped-cosine fit; returns omega_r, decay_rate, phase, offset,
/// amplitude and residual_rms.
#[pyfunction]
fn fit_rabi(times: Vec<f64>, signal: Vec<f64>) -> PyResult<HashMap<&'static str, f64>> {
    let tr = dyn_::RabiTrace::from_samples(times, signal).map_err(dyn_err)?;
    let f = dyn_::fit_rabi(&tr).map_err(dyn_err)?;
    Ok(HashMap::from([
        ("omega_r", f.omega_r),
        ("decay_rate", f.decay_rate),
        ("phase", f.phase),
        ("offset", f.offset),
        ("amplitude", f.amplitude),
        ("residual_rms", f.residual_rms),
    ]))
}

/// Two-port S-parameter record on a frequency grid in MHz.
#[pyclass(name = "SParamRecord", from_py_object)]
#[derive(Clone)]
struct PySParamRecord {
    inner: SParamRecord,
}

#[pymethods]
impl PySParamRecord {
    #[new]
    fn new(freqs: Vec<f64>, s21: Vec<C64>) -> PyResult<Self> {
        let inner = SParamRecord::new(freqs, s21, "python");
        inner.validate().map_err(res_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn freqs(&self) -> Vec<f64> {
        self.inner.freqs.clone()
    }

    #[getter]
    fn s21(&self) -> Vec<C64> {
        self.inner.s21.clone()
    }

    #[getter]
    fn z0(&self) -> f64 {
        self.inner.z0
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn to_touchstone(&self) -> String {
        io::write_touchstone(&self.inner)
    }

    /// Resonance candidates as `(f0, lo, hi)` with an index window.
    fn find_modes(&self) -> Vec<(f64, usize, usize)> {
        res::find_modes(&self.inner, &FindModesOptions::default())
            .iter()
            .map(|c| (c.f0, c.window.0, c.window.1))
            .collect()
    }

    /// Q-circle fit over the inclusive index window `[lo, hi]`.
    fn qcircle_fit(&self, lo: usize, hi: usize) -> PyResult<HashMap<&'static str, f64>> {
        let f = res::qcircle_fit(&self.inner, (lo, hi)).map_err(res_err)?;
        Ok(HashMap::from([
            ("f0", f.f0),
            ("q_loaded", f.q_loaded),
            ("q_unloaded", f.q_unloaded().unwrap_or(f64::NAN)),
            ("radius", f.radius),
            ("residual", f.residual),
        ]))
    }
}

#[pyfunction]
fn parse_touchstone(text: &str) -> PyResult<PySParamRecord> {
    Ok(PySParamRecord {
        inner: io::parse_touchstone(text).map_err(io_err)?,
    })
}

/// Mode-sum S21; `modes` is a list of `(f0, q_loaded, amplitude)`.
#[pyfunction]
#[pyo3(signature = (modes, freqs, background = C64::new(0.0, 0.0)))]
fn synth_s21_modesum(modes: Vec<(f64, f64, C64)>, freqs: Vec<f64>, background: C64) -> PyResult<PySParamRecord> {
    let modes = modes
        .into_iter()
        .map(|(f0, q, a)| ResonatorMode::new(f0, q, a))
        .collect::<Result<Vec<_>, _>>()
        .map_err(res_err)?;
    let ms = ResonatorModeSet::new(
        modes,
        Background {
            offset: background,
            ..Background::default()
        },
    );
    Ok(PySParamRecord {
        inner: res::synth_s21_modesum(&ms, &freqs).map_err(res_err)?,
    })
}

/// Validated run configuration.
#[pyclass(name = "RunConfig", from_py_object)]
#[derive(Clone)]
struct PyRunConfig {
    inner: io::RunConfig,
}

#[pymethods]
impl PyRunConfig {
    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn zfs(&self) -> (f64, f64) {
        (self.inner.zfs.d, self.inner.zfs.e)
    }

    fn hash(&self) -> String {
        self.inner.hash()
    }

    /// Canonical TOML form.
    fn to_toml(&self) -> PyResult<String> {
        toml::to_string(&self.inner).map_err(value_err)
    }

    /// CW sweep with the config's sweep grid unless overridden. Returns
    /// `(freqs, contrast, stderr)`.
    #[pyo3(signature = (power_dbm = None, f_start = None, f_stop = None, f_step = None, parallel = true))]
    fn cw_spectrum(
        &self,
        power_dbm: Option<f64>,
        f_start: Option<f64>,
        f_stop: Option<f64>,
        f_step: Option<f64>,
        parallel: bool,
    ) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let s = &self.inner.sweep;
        let grid = res::linear_grid(f_start.unwrap_or(s.f_start), f_stop.unwrap_or(s.f_stop), f_step.unwrap_or(s.f_step));
        let model = self.inner.cw_model().map_err(res_err)?;
        let exec = if parallel { Execution::Parallel } else { Execution::Serial };
        let p = dbm_to_mw(power_dbm.unwrap_or(s.power_dbm));
        let r = exp::cw_spectrum(&model, &self.inner.inhomogeneity_spec(), p, &grid, exec).map_err(exp_err)?;
        Ok((r.freqs, r.contrast, r.stderr))
    }

    /// Spot radius, volume, number density and molecule count; triplet
    /// count too when `f_t` is given.
    #[pyo3(signature = (f_t = None))]
    fn estimate(&self, f_t: Option<f64>) -> PyResult<HashMap<&'static str, f64>> {
        let e = exp::estimate_ensemble(&self.inner.optics, &self.inner.film, f_t.unwrap_or(0.0)).map_err(exp_err)?;
        let mut out = HashMap::from([
            ("r_um", e.r),
            ("volume_m3", e.volume),
            ("n_pc_per_m3", e.n_pc),
            ("n_molecules", e.n_molecules),
        ]);
        if f_t.is_some() {
            out.insert("n_triplets", e.n_triplets);
        }
        Ok(out)
    }
}

#[pyfunction]
#[pyo3(signature = (text = "", preset = None))]
fn load_config(text: &str, preset: Option<&str>) -> PyResult<PyRunConfig> {
    Ok(PyRunConfig {
        inner: io::load_config_with(text, preset).map_err(io_err)?,
    })
}

/// `e_ext_mag / Σ all six energies`.
#[pyfunction]
fn coupling_eta(
    e_ext_mag: f64,
    e_int_ela: f64,
    e_int_kin: f64,
    e_int_ele: f64,
    e_int_mag: f64,
    e_ext_ele: f64,
) -> PyResult<f64> {
    exp::coupling_eta(&EnergyBudget {
        e_ext_mag,
        e_int_ela,
        e_int_kin,
        e_int_ele,
        e_int_mag,
        e_ext_ele,
    })
    .map_err(exp_err)
}

#[pyfunction]
fn shot_noise_snr(c: f64, rate_cps: f64, t_s: f64) -> f64 {
    exp::shot_noise_snr(c, rate_cps, t_s)
}

/// `(contrast, capped)`
#[pyfunction]
#[pyo3(signature = (n_t, c1, ceiling = None))]
fn contrast_scaling(n_t: f64, c1: f64, ceiling: Option<f64>) -> (f64, bool) {
    let s = exp::contrast_scaling(n_t, c1, ceiling);
    (s.c, s.capped)
}

/// Run the `hodsar` CLI in-process; returns `(exit_code, stdout, stderr)`.
#[pyfunction]
fn run_cli(args: Vec<String>) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("hodsar".to_string()).chain(args);
    let code = io::cli::run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8_lossy(&out).into_owned(),
        String::from_utf8_lossy(&err).into_owned(),
    )
}

#[pymodule]
fn hodsar(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTripletRates>()?;
    m.add_class::<PySParamRecord>()?;
    m.add_class::<PyRunConfig>()?;
    m.add_function(wrap_pyfunction!(eigensystem, m)?)?;
    m.add_function(wrap_pyfunction!(strain_matrix_element, m)?)?;
    m.add_function(wrap_pyfunction!(steady_state, m)?)?;
    m.add_function(wrap_pyfunction!(propagate_populations, m)?)?;
    m.add_function(wrap_pyfunction!(rabi_trace, m)?)?;
    m.add_function(wrap_pyfunction!(fit_rabi, m)?)?;
    m.add_function(wrap_pyfunction!(parse_touchstone, m)?)?;
    m.add_function(wrap_pyfunction!(synth_s21_modesum, m)?)?;
    m.add_function(wrap_pyfunction!(load_config, m)?)?;
    m.add_function(wrap_pyfunction!(coupling_eta, m)?)?;
    m.add_function(wrap_pyfunction!(shot_noise_snr, m)?)?;
    m.add_function(wrap_pyfunction!(contrast_scaling, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    m.add("PRESETS", io::PRESETS.to_vec())?;
    Ok(())
}
