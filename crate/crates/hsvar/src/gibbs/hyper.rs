//! Conjugate updates for the two shrinkage hierarchies.
//!
//! Both the impact rows and the coefficient rows sit under a three-level
//! scale hierarchy: a per-row variance `γ` with an inverse-gamma-2
//! conditional, a per-row scale `s` with a gamma conditional, and one
//! common scale with another inverse-gamma-2 conditional. The two sides
//! differ only in their quadratic forms and degrees of freedom.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use super::ChainContext;
use crate::error::{Error, Result};
use crate::model::StructuralState;

/// Draw from the inverse-gamma-2 distribution with scale `s` and degrees of
/// freedom `nu`: `x ∝ x^{−(ν+2)/2} exp(−s/(2x))`, i.e. `x = s / χ²_ν`.
pub(crate) fn sample_ig2<R: Rng + ?Sized>(s: f64, nu: f64, rng: &mut R) -> Result<f64> {
    if !(s > 0.0) || !(nu > 0.0) {
        return Err(Error::Domain(format!(
            "inverse-gamma-2 needs positive scale and dof, got s={s}, nu={nu}"
        )));
    }
    let chi2 = Gamma::new(nu / 2.0, 2.0)
        .map_err(|e| Error::Domain(format!("chi-square draw: {e}")))?;
    Ok(s / chi2.sample(rng))
}

/// Draw from the gamma distribution parameterized by `scale a` and
/// `shape ν`: `x ∝ x^{ν−1} exp(−x/a)`, mean `aν`.
pub(crate) fn sample_gamma_scale_shape<R: Rng + ?Sized>(
    a: f64,
    nu: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(a > 0.0) || !(nu > 0.0) {
        return Err(Error::Domain(format!(
            "gamma needs positive scale and shape, got a={a}, nu={nu}"
        )));
    }
    let g = Gamma::new(nu, a).map_err(|e| Error::Domain(format!("gamma draw: {e}")))?;
    Ok(g.sample(rng))
}

/// Sweep the impact-side hierarchy: `γ_{0,n}`, then `s̲_{0,n}`, then the
/// common scale `s̲_{γ0}`. None of these touch the data directly, so the
/// same update serves prior-only runs.
pub fn sample_hyper_b0<R: Rng + ?Sized>(
    state: &mut StructuralState,
    ctx: &ChainContext,
    rng: &mut R,
) -> Result<()> {
    let n = state.b0.nrows();
    let pr = &ctx.priors;
    for eq in 0..n {
        let q = state.b0.row(eq).norm_squared();
        state.hyper.gamma_0[eq] =
            sample_ig2(state.hyper.s_0[eq] + q, pr.nu_0 + n as f64, rng)?;
    }
    for eq in 0..n {
        let scale = 1.0 / (1.0 / state.hyper.s_gamma0 + 0.5 / state.hyper.gamma_0[eq]);
        state.hyper.s_0[eq] =
            sample_gamma_scale_shape(scale, pr.nu_gamma0 + 0.5 * pr.nu_0, rng)?;
    }
    state.hyper.s_gamma0 = sample_ig2(
        pr.s_s0 + 2.0 * state.hyper.s_0.sum(),
        pr.nu_s0 + 2.0 * n as f64 * pr.nu_gamma0,
        rng,
    )?;
    Ok(())
}

/// Sweep the coefficient-side hierarchy: `γ_{A,n}`, `s̲_{A,n}`, `s̲_{γA}`.
/// The quadratic form weights each deviation from the prior mean by the
/// fixed scaling `ω̄`, so tightly scaled coordinates count more.
pub fn sample_hyper_a<R: Rng + ?Sized>(
    state: &mut StructuralState,
    ctx: &ChainContext,
    rng: &mut R,
) -> Result<()> {
    let n = state.a.nrows();
    let k = state.a.ncols();
    let pr = &ctx.priors;
    for eq in 0..n {
        let mut q = 0.0;
        for i in 0..k {
            let dev = state.a[(eq, i)] - ctx.a_bar[(eq, i)];
            q += dev * dev / ctx.omega_bar[i];
        }
        state.hyper.gamma_a[eq] =
            sample_ig2(state.hyper.s_a[eq] + q, pr.nu_a + k as f64, rng)?;
    }
    for eq in 0..n {
        let scale = 1.0 / (1.0 / state.hyper.s_gamma_a + 0.5 / state.hyper.gamma_a[eq]);
        state.hyper.s_a[eq] =
            sample_gamma_scale_shape(scale, pr.nu_gamma_a + 0.5 * pr.nu_a, rng)?;
    }
    state.hyper.s_gamma_a = sample_ig2(
        pr.s_s_a + 2.0 * state.hyper.s_a.sum(),
        pr.nu_s_a + 2.0 * n as f64 * pr.nu_gamma_a,
        rng,
    )?;
    Ok(())
}
