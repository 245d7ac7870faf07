use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ::transjump::birth_death::{RatioMode, Representation};
use ::transjump::mcmc::ChainSettings;
use ::transjump::oracle::{self, DiscreteToySpec};
use ::transjump::sinusoid::{
    self, ExperimentSpec, HyperSetting, Hyperparameters, SamplerConfig, Signal,
};
use ::transjump::{rng, validate, VarDimState};

fn py_err(e: ::transjump::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyfunction]
fn truncated_poisson_pmf(lam: f64, k_max: usize) -> Vec<f64> {
    sinusoid::truncated_poisson_pmf(lam, k_max)
}

#[pyfunction]
fn accelerated_poisson_pmf(lam: f64, k_max: usize) -> Vec<f64> {
    sinusoid::accelerated_poisson_pmf(lam, k_max)
}

/// Rows of the `N x 2k` cosine/sine design matrix.
#[pyfunction]
fn design_matrix(omega: Vec<f64>, n: usize) -> Vec<Vec<f64>> {
    let d = sinusoid::design_matrix(&omega, n);
    d.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[pyfunction]
fn quad_form(y: Vec<f64>, omega: Vec<f64>, delta2: f64) -> PyResult<f64> {
    sinusoid::quad_form(&y, &omega, delta2).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (y, omega, lam, delta2, k_max = 32))]
fn log_target(y: Vec<f64>, omega: Vec<f64>, lam: f64, delta2: f64, k_max: usize) -> PyResult<f64> {
    let signal = Signal::new(y).map_err(py_err)?;
    let model = sinusoid::SinusoidPosterior::new(
        &signal,
        Hyperparameters {
            lambda: lam,
            delta2,
        },
        k_max,
    );
    Ok(sinusoid::log_target(&omega, &model))
}

#[pyfunction]
#[pyo3(signature = (omega, amp2, snr_db, n, seed = 0))]
fn synth_signal(
    omega: Vec<f64>,
    amp2: Vec<f64>,
    snr_db: f64,
    n: usize,
    seed: u64,
) -> PyResult<Vec<f64>> {
    let spec = ExperimentSpec {
        true_omega: omega,
        true_amp2: amp2,
        snr_db,
        n,
        replications: 1,
        base_seed: seed,
    };
    let mut r = rng::stream(seed, rng::SIGNAL_STREAM);
    Ok(sinusoid::synth_signal(&spec, &mut r).map_err(py_err)?.y)
}

#[pyfunction]
#[pyo3(signature = (y, delta2, lam, k_max = 2, grid = 200))]
fn quadrature_posterior_k(
    y: Vec<f64>,
    delta2: f64,
    lam: f64,
    k_max: usize,
    grid: usize,
) -> PyResult<Vec<f64>> {
    oracle::quadrature_posterior_k(&y, delta2, lam, k_max, grid).map_err(py_err)
}

#[pyfunction]
fn tv_distance(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    oracle::tv_distance(&p, &q).map_err(py_err)
}

/// Runs the sinusoid sampler; `lam` / `delta2` fix a hyperparameter, `None`
/// samples it under the default prior.
#[pyfunction]
#[pyo3(signature = (
    y, n_iter, burn_in, seed = 0, k_max = 32, ratio_mode = "corrected",
    representation = "unsorted", lam = None, delta2 = None, flat_likelihood = false
))]
#[allow(clippy::too_many_arguments)]
fn run_sampler<'py>(
    py: Python<'py>,
    y: Vec<f64>,
    n_iter: usize,
    burn_in: usize,
    seed: u64,
    k_max: usize,
    ratio_mode: &str,
    representation: &str,
    lam: Option<f64>,
    delta2: Option<f64>,
    flat_likelihood: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let signal = Signal::new(y).map_err(py_err)?;
    let defaults = SamplerConfig::default();
    let cfg = SamplerConfig {
        k_max,
        ratio_mode: ratio_mode.parse::<RatioMode>().map_err(py_err)?,
        representation: representation.parse::<Representation>().map_err(py_err)?,
        lambda: lam.map_or(defaults.lambda, HyperSetting::Fixed),
        delta2: delta2.map_or(defaults.delta2, HyperSetting::Fixed),
        flat_likelihood,
        ..defaults
    };
    let out = py
        .allow_threads(|| {
            sinusoid::run_sampler(
                &signal,
                &cfg,
                VarDimState::empty(),
                ChainSettings::new(n_iter, burn_in, seed),
            )
        })
        .map_err(py_err)?;
    let dict = PyDict::new(py);
    dict.set_item("order_frequencies", out.order_frequencies(k_max))?;
    dict.set_item("mean_order", out.mean_order())?;
    dict.set_item(
        "k",
        out.records
            .iter()
            .map(|r| r.state.freqs.order())
            .collect::<Vec<_>>(),
    )?;
    dict.set_item(
        "lambda",
        out.records
            .iter()
            .map(|r| r.state.lambda)
            .collect::<Vec<_>>(),
    )?;
    dict.set_item(
        "delta2",
        out.records
            .iter()
            .map(|r| r.state.delta2)
            .collect::<Vec<_>>(),
    )?;
    Ok(dict)
}

/// `(TV(stationary, target), detailed-balance residual)` of the exact
/// kernel on a random discrete toy.
#[pyfunction]
#[pyo3(signature = (points, k_max, seed = 0, ratio_mode = "corrected", representation = "unsorted"))]
fn toy_residuals(
    points: usize,
    k_max: usize,
    seed: u64,
    ratio_mode: &str,
    representation: &str,
) -> PyResult<(f64, f64)> {
    let mode = ratio_mode.parse::<RatioMode>().map_err(py_err)?;
    let repr = representation.parse::<Representation>().map_err(py_err)?;
    let spec =
        DiscreteToySpec::random(points, k_max, repr, &mut rng::stream(seed, 0)).map_err(py_err)?;
    let p = oracle::build_transition_matrix(&spec, mode).map_err(py_err)?;
    let pi = oracle::stationary_distribution(&p).map_err(py_err)?;
    let target = spec.target_pmf();
    Ok((
        oracle::tv_distance(&pi, &target).map_err(py_err)?,
        oracle::detailed_balance_residual(&p, &target),
    ))
}

/// Runs a validation suite and returns `(passed, report)`.
#[pyfunction]
fn run_suite(py: Python<'_>, name: &str) -> PyResult<(bool, String)> {
    let suite: validate::Suite = name.parse().map_err(py_err)?;
    let report = py
        .allow_threads(|| validate::run_suite(suite))
        .map_err(py_err)?;
    Ok((report.pass(), report.to_string()))
}

#[pymodule]
fn transjump(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(truncated_poisson_pmf, m)?)?;
    m.add_function(wrap_pyfunction!(accelerated_poisson_pmf, m)?)?;
    m.add_function(wrap_pyfunction!(design_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(quad_form, m)?)?;
    m.add_function(wrap_pyfunction!(log_target, m)?)?;
    m.add_function(wrap_pyfunction!(synth_signal, m)?)?;
    m.add_function(wrap_pyfunction!(quadrature_posterior_k, m)?)?;
    m.add_function(wrap_pyfunction!(tv_distance, m)?)?;
    m.add_function(wrap_pyfunction!(run_sampler, m)?)?;
    m.add_function(wrap_pyfunction!(toy_residuals, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    Ok(())
}
