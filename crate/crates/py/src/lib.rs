//! Python bindings. Matrices cross the boundary as lists of rows of
//! `complex`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use fluxmet_core::dynamics;
use fluxmet_core::estimation::{self, Grid, Strategy, Task};
use fluxmet_core::metrology;
use fluxmet_core::qec;
use fluxmet_core::qmat;
use fluxmet_core::{CMatrix, CVector, DensityMatrix, C64};

type Rows = Vec<Vec<C64>>;

fn py_err(e: fluxmet_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_rows(m: &CMatrix) -> Rows {
    let n = m.dim();
    (0..n)
        .map(|i| (0..n).map(|j| m[(i, j)]).collect())
        .collect()
}

fn from_rows(rows: Rows) -> PyResult<CMatrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    CMatrix::from_vec(n, rows.into_iter().flatten().collect()).map_err(py_err)
}

fn density(rows: Rows) -> PyResult<DensityMatrix> {
    DensityMatrix::new(from_rows(rows)?).map_err(py_err)
}

fn parse_task(name: &str) -> PyResult<Task> {
    match name {
        "theta" => Ok(Task::Theta),
        "omega" => Ok(Task::Omega),
        other => Err(PyValueError::new_err(format!("unknown task '{other}'"))),
    }
}

fn parse_strategy(name: &str) -> PyResult<Strategy> {
    match name {
        "qec_corrected" => Ok(Strategy::QecCorrected),
        "unitary_controlled" => Ok(Strategy::UnitaryControlled),
        other => Err(PyValueError::new_err(format!("unknown strategy '{other}'"))),
    }
}

/// QFI of the error-corrected direction estimate at offset `dtheta`.
#[pyfunction]
#[pyo3(signature = (b, gamma, t, dtheta = 0.0))]
fn qfi_theta_qec(b: f64, gamma: f64, t: f64, dtheta: f64) -> f64 {
    metrology::qfi_theta_qec_closed(b, gamma, t, dtheta).value
}

/// QFI of the error-corrected rotation-frequency estimate at offset `domega`.
#[pyfunction]
#[pyo3(signature = (b, gamma, t, domega = 0.0))]
fn qfi_omega_qec(b: f64, gamma: f64, t: f64, domega: f64) -> f64 {
    metrology::qfi_omega_qec_closed(b, gamma, t, domega).value
}

#[pyfunction]
fn qfi_theta_free(b: f64, gamma: f64, t: f64) -> f64 {
    metrology::qfi_theta_free_closed(b, gamma, t).value
}

#[pyfunction]
#[pyo3(signature = (b, t, dtheta = 0.0))]
fn qfi_theta_unitary(b: f64, t: f64, dtheta: f64) -> f64 {
    metrology::qfi_theta_unitary_controlled(b, t, dtheta).value
}

#[pyfunction]
#[pyo3(signature = (b, t, domega = 0.0))]
fn qfi_omega_unitary(b: f64, t: f64, domega: f64) -> f64 {
    metrology::qfi_omega_unitary_controlled(b, t, domega).value
}

/// Uhlmann fidelity `Tr√(√ρ₁ ρ₂ √ρ₁)`.
#[pyfunction]
fn fidelity(rho1: Rows, rho2: Rows) -> PyResult<f64> {
    metrology::fidelity(&density(rho1)?, &density(rho2)?).map_err(py_err)
}

/// QFI `Tr(ρL²)` from a state and its derivative.
#[pyfunction]
fn qfi_sld(rho: Rows, drho: Rows) -> PyResult<f64> {
    Ok(metrology::qfi_sld(&density(rho)?, &from_rows(drho)?)
        .map_err(py_err)?
        .value)
}

#[pyfunction]
fn outcome_probability_theta(
    theta: f64,
    theta_hat: f64,
    b: f64,
    gamma: f64,
    t: f64,
) -> PyResult<(f64, f64)> {
    let p = estimation::outcome_probability_theta(theta, theta_hat, b, gamma, t)
        .map_err(py_err)?
        .probabilities();
    Ok((p[0], p[1]))
}

#[pyfunction]
fn outcome_probability_omega(
    omega: f64,
    omega_hat: f64,
    b: f64,
    gamma: f64,
    t: f64,
) -> PyResult<(f64, f64)> {
    let p = estimation::outcome_probability_omega(omega, omega_hat, b, gamma, t)
        .map_err(py_err)?
        .probabilities();
    Ok((p[0], p[1]))
}

/// Bell probe after free evolution along `σ_n(θ)`.
#[pyfunction]
fn free_theta_state(b: f64, gamma: f64, t: f64, theta: f64) -> PyResult<Rows> {
    Ok(to_rows(
        dynamics::free_theta_state(b, gamma, t, theta)
            .map_err(py_err)?
            .matrix(),
    ))
}

/// Closed-form error-corrected state of the direction model.
#[pyfunction]
fn corrected_state_theta(b: f64, gamma: f64, theta: f64, theta_hat: f64, t: f64) -> Rows {
    to_rows(&qec::corrected_state_theta_closed(
        b, gamma, theta, theta_hat, t,
    ))
}

/// Error-corrected state of the direction model by stepwise evolution and
/// recovery.
#[pyfunction]
#[pyo3(signature = (b, gamma, theta, theta_hat, t, dt = 1e-3, n_recoveries = 1000))]
fn corrected_evolve_theta(
    b: f64,
    gamma: f64,
    theta: f64,
    theta_hat: f64,
    t: f64,
    dt: f64,
    n_recoveries: usize,
) -> PyResult<Rows> {
    let rho = qec::corrected_evolve_theta(b, gamma, theta, theta_hat, t, dt, n_recoveries)
        .map_err(py_err)?;
    Ok(to_rows(&rho))
}

/// Asymptotic QFI of the direction model from the general engine, probed
/// with the logical plus state.
#[pyfunction]
fn engine_qfi_theta(b: f64, gamma: f64, theta: f64, t: f64) -> PyResult<f64> {
    let model = dynamics::theta_model(b, gamma, theta).map_err(py_err)?;
    let code = qec::theta_code(theta);
    let report = qec::expansion_superoperators(&model, &code, 1e-10).map_err(py_err)?;
    let plus: CVector = code.plus_state(0.0);
    Ok(qec::asymptotic_qfi(&report, &plus, t)
        .map_err(py_err)?
        .value)
}

#[pyfunction]
fn eigvalsh(m: Rows) -> PyResult<Vec<f64>> {
    Ok(qmat::hermitian_eig(&from_rows(m)?).map_err(py_err)?.values)
}

#[pyfunction]
fn expm(m: Rows) -> PyResult<Rows> {
    Ok(to_rows(&qmat::expm(&from_rows(m)?).map_err(py_err)?))
}

/// Settings of an adaptive estimation run. Unset arguments take the task's
/// defaults.
#[pyclass(name = "AdaptiveConfig", from_py_object)]
#[derive(Clone)]
struct PyAdaptiveConfig {
    inner: estimation::AdaptiveConfig,
}

#[pymethods]
impl PyAdaptiveConfig {
    #[new]
    #[pyo3(signature = (task = "theta", strategy = "qec_corrected", *, true_value = None, initial_guess = None,
        m = None, rounds = None, t = None, b = None, gamma = None, grid = None, seed = 0, accumulate = true))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        task: &str,
        strategy: &str,
        true_value: Option<f64>,
        initial_guess: Option<f64>,
        m: Option<usize>,
        rounds: Option<usize>,
        t: Option<f64>,
        b: Option<f64>,
        gamma: Option<f64>,
        grid: Option<(f64, f64, f64)>,
        seed: u64,
        accumulate: bool,
    ) -> PyResult<Self> {
        let base = match parse_task(task)? {
            Task::Theta => estimation::AdaptiveConfig::theta_default(),
            Task::Omega => estimation::AdaptiveConfig::omega_default(),
        };
        let inner = estimation::AdaptiveConfig {
            strategy: parse_strategy(strategy)?,
            true_value: true_value.unwrap_or(base.true_value),
            initial_guess: initial_guess.unwrap_or(base.initial_guess),
            m: m.unwrap_or(base.m),
            rounds: rounds.unwrap_or(base.rounds),
            t: t.unwrap_or(base.t),
            b: b.unwrap_or(base.b),
            gamma: gamma.unwrap_or(base.gamma),
            grid: grid
                .map(|(lo, hi, resolution)| Grid { lo, hi, resolution })
                .unwrap_or(base.grid),
            seed,
            accumulate,
            ..base
        };
        inner.validate().map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn true_value(&self) -> f64 {
        self.inner.true_value
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    /// `1/(m·K·J_max)`
    fn crb(&self) -> f64 {
        self.inner.crb()
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

#[pyclass(name = "EstimationRun", skip_from_py_object)]
struct PyEstimationRun {
    #[pyo3(get)]
    estimates: Vec<f64>,
    #[pyo3(get)]
    outcome_history: Vec<(usize, usize)>,
    #[pyo3(get)]
    log_likelihood_final: f64,
    #[pyo3(get)]
    seed: u64,
}

#[pyclass(name = "CampaignResult", skip_from_py_object)]
struct PyCampaignResult {
    #[pyo3(get)]
    mse: Vec<f64>,
    #[pyo3(get)]
    estimate_mean: Vec<f64>,
    #[pyo3(get)]
    final_squared_errors: Vec<f64>,
    #[pyo3(get)]
    crb: f64,
}

#[pyfunction]
fn run_adaptive(py: Python<'_>, config: PyAdaptiveConfig) -> PyResult<PyEstimationRun> {
    let run = py
        .detach(|| estimation::run_adaptive(&config.inner))
        .map_err(py_err)?;
    Ok(PyEstimationRun {
        estimates: run.estimates,
        outcome_history: run.outcome_history,
        log_likelihood_final: run.log_likelihood_final,
        seed: run.seed,
    })
}

#[pyfunction]
fn mse_campaign(
    py: Python<'_>,
    config: PyAdaptiveConfig,
    repetitions: usize,
) -> PyResult<PyCampaignResult> {
    let r = py
        .detach(|| estimation::mse_campaign(&config.inner, repetitions))
        .map_err(py_err)?;
    Ok(PyCampaignResult {
        mse: r.mse,
        estimate_mean: r.estimate_mean,
        final_squared_errors: r.final_squared_errors,
        crb: r.crb,
    })
}

#[pymodule]
fn fluxmet(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyAdaptiveConfig>()?;
    m.add_class::<PyEstimationRun>()?;
    m.add_class::<PyCampaignResult>()?;
    m.add_function(wrap_pyfunction!(qfi_theta_qec, m)?)?;
    m.add_function(wrap_pyfunction!(qfi_omega_qec, m)?)?;
    m.add_function(wrap_pyfunction!(qfi_theta_free, m)?)?;
    m.add_function(wrap_pyfunction!(qfi_theta_unitary, m)?)?;
    m.add_function(wrap_pyfunction!(qfi_omega_unitary, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(qfi_sld, m)?)?;
    m.add_function(wrap_pyfunction!(outcome_probability_theta, m)?)?;
    m.add_function(wrap_pyfunction!(outcome_probability_omega, m)?)?;
    m.add_function(wrap_pyfunction!(free_theta_state, m)?)?;
    m.add_function(wrap_pyfunction!(corrected_state_theta, m)?)?;
    m.add_function(wrap_pyfunction!(corrected_evolve_theta, m)?)?;
    m.add_function(wrap_pyfunction!(engine_qfi_theta, m)?)?;
    m.add_function(wrap_pyfunction!(eigvalsh, m)?)?;
    m.add_function(wrap_pyfunction!(expm, m)?)?;
    m.add_function(wrap_pyfunction!(run_adaptive, m)?)?;
    m.add_function(wrap_pyfunction!(mse_campaign, m)?)?;
    Ok(())
}
