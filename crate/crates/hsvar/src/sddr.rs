//! Savage-Dickey density ratios for testing per-shock homoskedasticity.
//!
//! Equation `n` of the structural model is homoskedastic exactly when its
//! volatility loading `omega_n` is zero, so the Bayes factor of that point
//! restriction is the ratio of posterior to prior density ordinates at
//! `omega_n = 0` (Verdinelli & Wasserman 1995).  The posterior ordinate is the
//! Rao-Blackwellised average of the full-conditional normal ordinates stored
//! with every kept draw (Gelfand & Smith 1990); the prior ordinate is the
//! closed-form marginal density of `omega` at zero under the hierarchical
//! volatility prior.  A strongly negative log ratio means the data pull
//! `omega_n` away from zero, i.e. the shock is heteroskedastic and its column
//! of `B` is identified.
//!
//! Everything is computed in log space: realistic runs produce ratios of
//! order `exp(-20)` and smaller, which underflow long before they become
//! uninteresting.  Numerical standard errors follow the batch-means
//! convention, splitting the kept draws into contiguous subsamples.

use crate::error::{Error, Result};
use crate::model::{PosteriorSample, PriorConfig};
use crate::special::{marginal_omega_at_zero, MarginalOmegaParams};
use serde::Serialize;

/// Number of contiguous batches used for the numerical standard error when
/// the caller does not choose one.
pub const DEFAULT_N_SUBSAMPLES: usize = 30;

/// Log Bayes factor of `omega_n = 0` for one equation, with its ingredients
/// and a batch-means numerical standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SddrResult {
    /// Log posterior ordinate of `omega` at zero.
    pub log_numerator: f64,
    /// Log prior ordinate of `omega` at zero.
    pub log_denominator: f64,
    /// `log_numerator - log_denominator`; negative values are evidence
    /// against homoskedasticity.
    pub log_sddr: f64,
    /// Batch-means standard error of `log_sddr`.
    pub nse: f64,
    /// Standard deviation of the per-batch log ratios (the NSE before the
    /// `1/sqrt(n_subsamples)` reduction); a mixing diagnostic in its own
    /// right.
    pub batch_sd: f64,
    /// Number of posterior draws that entered the estimate.
    pub n_draws: usize,
    /// Number of contiguous batches behind `nse`.
    pub n_subsamples: usize,
}

/// Log of the Rao-Blackwellised posterior ordinate of `omega` at zero:
/// `ln[(1/S) sum_s f_N(0; mean_s, var_s)]`, evaluated in log-sum-exp form so
/// that ordinates as small as `exp(-5000)` survive.
pub fn log_posterior_ordinate_at_zero(moments: &[(f64, f64)]) -> Result<f64> {
    if moments.is_empty() {
        return Err(Error::InvalidData(
            "no omega moments to average for the posterior ordinate".into(),
        ));
    }
    let mut terms = Vec::with_capacity(moments.len());
    for &(mean, var) in moments {
        if !(var > 0.0) || !var.is_finite() || !mean.is_finite() {
            return Err(Error::Domain(format!(
                "omega moment (mean = {mean}, variance = {var}) is not a valid normal"
            )));
        }
        terms.push(-0.5 * ((2.0 * std::f64::consts::PI * var).ln() + mean * mean / var));
    }
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        // Every single ordinate underflows even in log space; the average is
        // an honest zero.
        return Ok(f64::NEG_INFINITY);
    }
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    Ok(max + sum.ln() - (terms.len() as f64).ln())
}

/// Linear-space wrapper around [`log_posterior_ordinate_at_zero`].
pub fn posterior_ordinate_at_zero(moments: &[(f64, f64)]) -> Result<f64> {
    Ok(log_posterior_ordinate_at_zero(moments)?.exp())
}

/// Prior density of `omega` at zero under the hierarchical volatility prior
/// with the variance component integrated out.
///
/// The ordinate is finite only when the gamma shape exceeds one half; below
/// that the prior density diverges at the origin, the ratio degenerates to
/// zero regardless of the data, and verification is impossible by
/// construction, so the configuration is rejected.
pub fn prior_ordinate_at_zero(priors: &PriorConfig) -> Result<f64> {
    if !(priors.a_omega > 0.5) {
        return Err(Error::InvalidConfig(format!(
            "a_omega = {} makes the prior ordinate of omega at zero unbounded, \
             so SDDR verification infeasible; it requires a_omega > 0.5",
            priors.a_omega
        )));
    }
    marginal_omega_at_zero(MarginalOmegaParams::new(priors.s_omega, priors.a_omega)?)
}

/// Log Savage-Dickey density ratio for `equation`, with a batch-means
/// numerical standard error over [`DEFAULT_N_SUBSAMPLES`] contiguous batches.
pub fn compute_sddr(
    sample: &PosteriorSample,
    equation: usize,
    priors: &PriorConfig,
) -> Result<SddrResult> {
    let moments = equation_moments(sample, equation)?;
    let log_denominator = prior_ordinate_at_zero(priors)?.ln();
    let log_numerator = log_posterior_ordinate_at_zero(&moments)?;
    let batches = batch_log_sddrs(&moments, DEFAULT_N_SUBSAMPLES, log_denominator)?;
    let batch_sd = sample_sd(&batches);
    Ok(SddrResult {
        log_numerator,
        log_denominator,
        log_sddr: log_numerator - log_denominator,
        nse: batch_sd / (batches.len() as f64).sqrt(),
        batch_sd,
        n_draws: moments.len(),
        n_subsamples: batches.len(),
    })
}

/// Batch-means numerical standard error of the log-SDDR: the moment sequence
/// is split into `n_subsamples` contiguous equal-length batches (a trailing
/// remainder is dropped), the log ratio is recomputed on each batch, and the
/// standard deviation across batches is divided by `sqrt(n_subsamples)`.
pub fn sddr_nse(
    moments: &[(f64, f64)],
    n_subsamples: usize,
    priors: &PriorConfig,
) -> Result<f64> {
    let log_denominator = prior_ordinate_at_zero(priors)?.ln();
    let batches = batch_log_sddrs(moments, n_subsamples, log_denominator)?;
    Ok(sample_sd(&batches) / (n_subsamples as f64).sqrt())
}

/// Kass-Raftery style reading of a log-SDDR, with the thresholds used for
/// reporting: `exp(3)` ("positive evidence", Kass & Raftery 1995) and
/// `exp(20)` for ratios so extreme that sampling noise is immaterial.  The
/// ratio tests the *restriction* `omega = 0`, so negative values count
/// against homoskedasticity.
pub fn evidence_category(log_sddr: f64) -> &'static str {
    if log_sddr.is_nan() {
        "inconclusive"
    } else if log_sddr <= -20.0 {
        "strong evidence against homoskedasticity"
    } else if log_sddr <= -3.0 {
        "positive evidence against homoskedasticity"
    } else if log_sddr < 3.0 {
        "inconclusive"
    } else {
        "evidence for homoskedasticity"
    }
}

/// Pulls the `(mean, variance)` sequence of one equation out of the stored
/// per-draw moment records.
fn equation_moments(sample: &PosteriorSample, equation: usize) -> Result<Vec<(f64, f64)>> {
    if sample.sddr_moments.is_empty() {
        return Err(Error::InvalidData(
            "posterior sample stores no omega moments".into(),
        ));
    }
    sample
        .sddr_moments
        .iter()
        .enumerate()
        .map(|(s, per_eq)| {
            per_eq.get(equation).copied().ok_or_else(|| {
                Error::Dimension(format!(
                    "draw {s} stores omega moments for {} equations, so there is \
                     no equation {equation}",
                    per_eq.len()
                ))
            })
        })
        .collect()
}

fn batch_log_sddrs(
    moments: &[(f64, f64)],
    n_subsamples: usize,
    log_denominator: f64,
) -> Result<Vec<f64>> {
    if n_subsamples < 2 {
        return Err(Error::InvalidConfig(format!(
            "a batch-means standard error needs at least 2 subsamples, got {n_subsamples}"
        )));
    }
    if moments.len() < n_subsamples {
        return Err(Error::InvalidData(format!(
            "{} draws cannot fill {n_subsamples} subsamples",
            moments.len()
        )));
    }
    let len = moments.len() / n_subsamples;
    (0..n_subsamples)
        .map(|b| {
            Ok(log_posterior_ordinate_at_zero(&moments[b * len..(b + 1) * len])?
                - log_denominator)
        })
        .collect()
}

fn sample_sd(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}
