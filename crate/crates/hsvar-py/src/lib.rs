//! Python bindings for a thin slice of the `hsvar` toolkit: the special
//! densities, preset simulation, and a small end-to-end estimate.  Build
//! with `--features extension-module`; without it this crate is empty so
//! that plain workspace builds never link against libpython.
#![cfg(feature = "extension-module")]

use hsvar::gibbs::{run_chain, GibbsConfig};
use hsvar::model::{ModelConfig, PriorConfig};
use hsvar::sddr::{compute_sddr, evidence_category};
use hsvar::simulate::{generate, preset};
use hsvar::special::{
    lognp_pdf as lognp_pdf_impl, marginal_omega_at_zero as marginal_omega_at_zero_impl,
    np_pdf as np_pdf_impl, MarginalOmegaParams, NormalProductParams,
};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err(e: hsvar::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Density of the product of two independent standard-normal-like factors,
/// one with variance `sigma2`, evaluated at `z`.
#[pyfunction]
fn np_pdf(z: f64, sigma2: f64) -> PyResult<f64> {
    let p = NormalProductParams::new(sigma2).map_err(value_err)?;
    np_pdf_impl(z, p).map_err(value_err)
}

/// Density of the exponential of the normal product, evaluated at `q > 0`.
#[pyfunction]
fn lognp_pdf(q: f64, sigma2: f64) -> PyResult<f64> {
    let p = NormalProductParams::new(sigma2).map_err(value_err)?;
    lognp_pdf_impl(q, p).map_err(value_err)
}

/// Peak of the marginal volatility-scale prior with Gamma(scale `s`,
/// shape `a`) conditional variance; finite only for `a > 0.5`.
#[pyfunction]
fn marginal_omega_at_zero(s: f64, a: f64) -> PyResult<f64> {
    let p = MarginalOmegaParams::new(s, a).map_err(value_err)?;
    marginal_omega_at_zero_impl(p).map_err(value_err)
}

/// Simulates a named preset (`desk`, `desk-homoskedastic`, `desk-recovery`)
/// and returns `(rows, column_names)` with deterministic terms appended
/// after the endogenous variables, exactly like the CLI's CSV output.
#[pyfunction]
fn simulate_preset(name: &str, seed: u64) -> PyResult<(Vec<Vec<f64>>, Vec<String>)> {
    let spec = preset(name, seed).map_err(value_err)?;
    let out = generate(&spec).map_err(value_err)?;
    let data = &out.data;
    let (t, n, d) = (data.t(), data.n(), data.n_det());
    let rows = (0..t)
        .map(|r| {
            (0..n)
                .map(|c| data.y[(r, c)])
                .chain((0..d).map(|c| data.d[(r, c)]))
                .collect()
        })
        .collect();
    let mut names = data.names.clone();
    names.extend(spec.det_names.iter().cloned());
    Ok((rows, names))
}

/// Simulates a preset, runs a short chain on it, and returns a dict with
/// the posterior mean of the structural matrix and the per-equation
/// homoskedasticity test (`log_sddr`, `category`).
#[pyfunction]
fn estimate_preset<'py>(
    py: Python<'py>,
    name: &str,
    seed: u64,
    n_burn: usize,
    n_keep: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = preset(name, seed).map_err(value_err)?;
    let out = generate(&spec).map_err(value_err)?;
    let n = out.data.n();

    let model = ModelConfig {
        p: spec.p,
        stationary_flags: vec![true; n],
    };
    let priors = PriorConfig::default();
    let gibbs = GibbsConfig {
        n_burn,
        n_keep,
        seed,
        ..GibbsConfig::default()
    };
    let sample = run_chain(&out.data, &model, &priors, &gibbs).map_err(value_err)?;

    let mut b0_mean = vec![vec![0.0f64; n]; n];
    for draw in &sample.draws {
        for i in 0..n {
            for j in 0..n {
                b0_mean[i][j] += draw.b0[(i, j)];
            }
        }
    }
    let scale = 1.0 / sample.draws.len() as f64;
    b0_mean.iter_mut().flatten().for_each(|v| *v *= scale);

    let mut log_sddr = Vec::with_capacity(n);
    let mut category = Vec::with_capacity(n);
    for eq in 0..n {
        let r = compute_sddr(&sample, eq, &priors).map_err(value_err)?;
        log_sddr.push(r.log_sddr);
        category.push(evidence_category(r.log_sddr));
    }

    let dict = PyDict::new(py);
    dict.set_item("b0_mean", b0_mean)?;
    dict.set_item("log_sddr", log_sddr)?;
    dict.set_item("category", category)?;
    dict.set_item("n_draws", sample.draws.len())?;
    Ok(dict)
}

#[pymodule]
fn _hsvar(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(np_pdf, m)?)?;
    m.add_function(wrap_pyfunction!(lognp_pdf, m)?)?;
    m.add_function(wrap_pyfunction!(marginal_omega_at_zero, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_preset, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_preset, m)?)?;
    Ok(())
}
