//! Per-equation stochastic-volatility updates.
//!
//! Each structural shock n follows the non-centred parameterization
//! `w_{n,t} = exp(ω_n h_{n,t} / 2) ε_t` with `h_t = ρ h_{t−1} + v_t`,
//! `v_t ~ N(0,1)`, `h_0 = 0`. Squaring and taking logs gives a linear state
//! space with a log-χ²₁ measurement error, which we replace by the
//! ten-component normal mixture of Omori, Chib, Shephard & Nakajima (2007).
//! Conditional on the mixture indicators everything is Gaussian, so the path
//! draw reduces to one banded Cholesky sweep.
//!
//! The sweep for one equation runs: indicators → path → loading ω → an
//! ancillarity-sufficiency interweaving move on (ω, h) → persistence ρ →
//! hierarchy variance σ²_ω.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use super::ChainContext;
use crate::error::{Error, Result};
use crate::model::{MixtureTable, StructuralState};
use crate::special::{sample_gig, sample_truncnorm};

/// Diagonal and first subdiagonal of `H′H`, where `H` is the unit lower
/// bidiagonal matrix with `−ρ` on the subdiagonal (the AR(1) prior
/// precision of the path given `h_0 = 0`).
pub(crate) fn hh_tridiagonal(rho: f64, t: usize) -> (Vec<f64>, Vec<f64>) {
    let mut diag = vec![1.0 + rho * rho; t];
    if t > 0 {
        diag[t - 1] = 1.0;
    }
    let off = vec![-rho; t.saturating_sub(1)];
    (diag, off)
}

/// Cholesky factor of a symmetric positive-definite tridiagonal matrix,
/// stored as the main diagonal `ell` of `L` and its subdiagonal `sub`.
#[derive(Debug)]
pub(crate) struct TridiagCholesky {
    ell: Vec<f64>,
    sub: Vec<f64>,
}

impl TridiagCholesky {
    /// Factor the matrix with diagonal `diag` and symmetric first
    /// off-diagonal `off`. Fails when a pivot is non-positive.
    pub(crate) fn factor(diag: &[f64], off: &[f64]) -> Result<Self> {
        let t = diag.len();
        if off.len() + 1 != t && !(t == 0 && off.is_empty()) {
            return Err(Error::Dimension(format!(
                "tridiagonal factor needs {} off-diagonal entries, got {}",
                t.saturating_sub(1),
                off.len()
            )));
        }
        let mut ell = vec![0.0; t];
        let mut sub = vec![0.0; t.saturating_sub(1)];
        let mut carry = 0.0; // m_{t−1}² from the previous column
        for i in 0..t {
            let pivot = diag[i] - carry;
            if !(pivot > 0.0) || !pivot.is_finite() {
                return Err(Error::Singular(format!(
                    "tridiagonal precision is not positive definite at index {i} (pivot {pivot})"
                )));
            }
            ell[i] = pivot.sqrt();
            if i + 1 < t {
                sub[i] = off[i] / ell[i];
                carry = sub[i] * sub[i];
            }
        }
        Ok(Self { ell, sub })
    }

    /// Solve `L x = v` in place.
    pub(crate) fn solve_lower(&self, v: &mut [f64]) {
        for i in 0..v.len() {
            if i > 0 {
                v[i] -= self.sub[i - 1] * v[i - 1];
            }
            v[i] /= self.ell[i];
        }
    }

    /// Solve `L′ x = v` in place.
    pub(crate) fn solve_upper(&self, v: &mut [f64]) {
        for i in (0..v.len()).rev() {
            if i + 1 < v.len() {
                v[i] -= self.sub[i] * v[i + 1];
            }
            v[i] /= self.ell[i];
        }
    }
}

/// Draw from `N(Q⁻¹ lin, Q⁻¹)` where `Q` is tridiagonal with diagonal
/// `diag` and symmetric off-diagonal `off` (McCausland, Miller & Pelletier
/// 2011). One factorization serves both the mean solve and the noise solve.
pub(crate) fn sample_gaussian_tridiag<R: Rng + ?Sized>(
    diag: &[f64],
    off: &[f64],
    lin: &[f64],
    rng: &mut R,
) -> Result<DVector<f64>> {
    let chol = TridiagCholesky::factor(diag, off)?;
    let mut mean = lin.to_vec();
    chol.solve_lower(&mut mean);
    chol.solve_upper(&mut mean);
    let mut noise: Vec<f64> = (0..diag.len())
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    chol.solve_upper(&mut noise);
    for (m, z) in mean.iter_mut().zip(noise.iter()) {
        *m += z;
    }
    Ok(DVector::from_vec(mean))
}

/// Exact mean of the tridiagonal Gaussian above, for reference checks.
#[cfg(test)]
pub(crate) fn tridiag_mean(diag: &[f64], off: &[f64], lin: &[f64]) -> Result<DVector<f64>> {
    let chol = TridiagCholesky::factor(diag, off)?;
    let mut mean = lin.to_vec();
    chol.solve_lower(&mut mean);
    chol.solve_upper(&mut mean);
    Ok(DVector::from_vec(mean))
}

/// Update the mixture indicators of equation `eq` given the transformed
/// observations `w̃_t = log(w_t² + offset)`.
///
/// Each indicator is conditionally independent with posterior mass
/// `∝ π_j N(w̃_t; ω h_t + μ_j, σ²_j)`; weights are accumulated in log space
/// and inverted through the cumulative sum. In prior-only mode the data
/// term is dropped and indicators are drawn from the mixture weights.
pub fn sample_mixture_indicators<R: Rng + ?Sized>(
    eq: usize,
    state: &mut StructuralState,
    w_tilde_eq: &[f64],
    ctx: &ChainContext,
    rng: &mut R,
) -> Result<()> {
    let table = MixtureTable::omori();
    let sv = &mut state.sv[eq];
    let t_eff = sv.h.len();
    if !ctx.prior_only && w_tilde_eq.len() != t_eff {
        return Err(Error::Dimension(format!(
            "equation {eq}: {} transformed observations for a path of length {t_eff}",
            w_tilde_eq.len()
        )));
    }

    if ctx.prior_only {
        for s in sv.s.iter_mut() {
            *s = sample_categorical(|j| table.pi(j), table.len(), rng);
        }
        return Ok(());
    }

    // ln π_j − ½ ln σ²_j, shared across t. The −½ln(2π) cancels in the
    // normalization.
    let base: Vec<f64> = (0..table.len())
        .map(|j| table.pi(j).ln() - 0.5 * table.sigma2(j).ln())
        .collect();
    let mut logw = [0.0f64; 10];
    for t in 0..t_eff {
        let level = sv.omega * sv.h[t];
        let mut max = f64::NEG_INFINITY;
        for j in 0..table.len() {
            let resid = w_tilde_eq[t] - level - table.mu(j);
            logw[j] = base[j] - 0.5 * resid * resid / table.sigma2(j);
            max = max.max(logw[j]);
        }
        let mut cum = 0.0;
        for w in logw.iter_mut() {
            *w = (*w - max).exp();
            cum += *w;
        }
        let target = rng.random::<f64>() * cum;
        let mut acc = 0.0;
        let mut pick = table.len() - 1;
        for (j, w) in logw.iter().enumerate() {
            acc += w;
            if target <= acc {
                pick = j;
                break;
            }
        }
        sv.s[t] = pick;
    }
    Ok(())
}

fn sample_categorical<R: Rng + ?Sized>(
    weight: impl Fn(usize) -> f64,
    len: usize,
    rng: &mut R,
) -> usize {
    let target = rng.random::<f64>();
    let mut acc = 0.0;
    for j in 0..len {
        acc += weight(j);
        if target <= acc {
            return j;
        }
    }
    len - 1
}

/// Draw the full volatility path of equation `eq` in one block.
///
/// The conditional precision is `ω² diag(1/σ²_{s_t}) + H′H` — tridiagonal —
/// and the linear term is `ω (w̃_t − μ_{s_t}) / σ²_{s_t}`. With `ω = 0` the
/// data terms vanish and the draw falls back to the AR(1) prior without any
/// special casing. Prior-only mode forces that same reduction.
pub fn sample_h<R: Rng + ?Sized>(
    eq: usize,
    state: &mut StructuralState,
    w_tilde_eq: &[f64],
    ctx: &ChainContext,
    rng: &mut R,
) -> Result<()> {
    let table = MixtureTable::omori();
    let sv = &mut state.sv[eq];
    let t_eff = sv.h.len();
    let (mut diag, off) = hh_tridiagonal(sv.rho, t_eff);
    let mut lin = vec![0.0; t_eff];
    if !ctx.prior_only {
        if w_tilde_eq.len() != t_eff {
            return Err(Error::Dimension(format!(
                "equation {eq}: {} transformed observations for a path of length {t_eff}",
                w_tilde_eq.len()
            )));
        }
        let om = sv.omega;
        for t in 0..t_eff {
            let s2 = table.sigma2(sv.s[t]);
            diag[t] += om * om / s2;
            lin[t] = om * (w_tilde_eq[t] - table.mu(sv.s[t])) / s2;
        }
    }
    sv.h = sample_gaussian_tridiag(&diag, &off, &lin, rng)?;
    Ok(())
}

/// Conditional mean and variance of the loading ω for equation `eq`
/// (conjugate normal given the path, the indicators and the prior
/// `ω ~ N(0, σ²_ω)`). In prior-only mode the data terms drop and the pair
/// is `(0, σ²_ω)`.
pub(crate) fn omega_full_conditional(
    eq: usize,
    state: &StructuralState,
    w_tilde_eq: &[f64],
    ctx: &ChainContext,
) -> Result<(f64, f64)> {
    let table = MixtureTable::omori();
    let sv = &state.sv[eq];
    if ctx.prior_only {
        return Ok((0.0, sv.sigma2_omega));
    }
    if w_tilde_eq.len() != sv.h.len() {
        return Err(Error::Dimension(format!(
            "equation {eq}: {} transformed observations for a path of length {}",
            w_tilde_eq.len(),
            sv.h.len()
        )));
    }
    let mut prec = 1.0 / sv.sigma2_omega;
    let mut loc = 0.0;
    for t in 0..sv.h.len() {
        let s2 = table.sigma2(sv.s[t]);
        prec += sv.h[t] * sv.h[t] / s2;
        loc += sv.h[t] * (w_tilde_eq[t] - table.mu(sv.s[t])) / s2;
    }
    let var = 1.0 / prec;
    Ok((var * loc, var))
}

/// Draw the loading ω of equation `eq` and return the conditional
/// `(mean, variance)` pair that produced it. The pairs are accumulated per
/// retained sweep; the density-ratio evidence for `ω_n = 0` averages normal
/// ordinates over them, so they must be recorded even when the draw itself
/// is discarded by thinning.
pub fn sample_omega<R: Rng + ?Sized>(
    eq: usize,
    state: &mut StructuralState,
    w_tilde_eq: &[f64],
    ctx: &ChainContext,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let (mean, var) = omega_full_conditional(eq, state, w_tilde_eq, ctx)?;
    let z: f64 = rng.sample(StandardNormal);
    state.sv[eq].omega = mean + var.sqrt() * z;
    Ok((mean, var))
}

/// GIG order of the interweaving draw for a path of length `t_eff`.
pub(crate) fn asis_gig_order(t_eff: usize) -> f64 {
    -((t_eff as f64 - 1.0) / 2.0)
}

/// Ancillarity-sufficiency interweaving step on `(ω, h)` for equation `eq`
/// (Kastner & Frühwirth-Schnatter 2014).
///
/// Move to the centred path `h̃ = ω h`, redraw the centred innovation
/// variance `σ²_υ ~ GIG(−(T−1)/2, h̃′H′H h̃, 1/σ²_ω)`, set
/// `ω ← sign(ω)·√σ²_υ`, and map back `h ← h̃/ω`. The product `ω h` is left
/// exactly invariant, which is what breaks the ω–h posterior ridge.
///
/// At `ω = 0` the centred path is identically zero and carries no scale
/// information (the centred full conditional is improper), so the step is
/// undefined; we fail rather than guess. The preceding conjugate update
/// draws ω from a continuous distribution, so this cannot occur in a
/// running chain.
pub fn asis_interweave<R: Rng + ?Sized>(
    eq: usize,
    state: &mut StructuralState,
    rng: &mut R,
) -> Result<()> {
    let sv = &mut state.sv[eq];
    if sv.omega == 0.0 {
        return Err(Error::Domain(format!(
            "equation {eq}: interweaving is undefined at omega = 0; the centred path carries no scale information"
        )));
    }
    let t_eff = sv.h.len();
    // h̃′H′Hh̃ = Σ_t (h̃_t − ρ h̃_{t−1})², with h̃_0 = 0.
    let mut chi = 0.0;
    let mut prev = 0.0;
    for t in 0..t_eff {
        let ht = sv.omega * sv.h[t];
        let innov = ht - sv.rho * prev;
        chi += innov * innov;
        prev = ht;
    }
    let sigma2_upsilon = sample_gig(
        asis_gig_order(t_eff),
        chi,
        1.0 / sv.sigma2_omega,
        rng,
    )?;
    let omega_new = sv.omega.signum() * sigma2_upsilon.sqrt();
    let ratio = sv.omega / omega_new;
    for t in 0..t_eff {
        sv.h[t] *= ratio;
    }
    sv.omega = omega_new;
    Ok(())
}

/// Draw the persistence ρ of equation `eq` from its conditional
/// `N(Σ h_t h_{t−1} / Σ h²_{t−1}, 1/Σ h²_{t−1})` truncated to
/// `|ρ| < √(1−σ²_ω)`, the support of the joint (ρ, σ²_ω) prior.
///
/// A degenerate path (all lagged terms zero) leaves the likelihood flat, in
/// which case ρ is refreshed from the uniform prior slice. A state with
/// `σ²_ω ≥ 1` admits no ρ at all and is rejected loudly.
pub fn sample_rho<R: Rng + ?Sized>(
    eq: usize,
    state: &mut StructuralState,
    rng: &mut R,
) -> Result<()> {
    let sv = &mut state.sv[eq];
    if !(sv.sigma2_omega < 1.0) {
        return Err(Error::Domain(format!(
            "equation {eq}: sigma2_omega = {} leaves no admissible rho (the joint prior needs rho² + sigma2_omega < 1)",
            sv.sigma2_omega
        )));
    }
    let bound = (1.0 - sv.sigma2_omega).sqrt();
    let t_eff = sv.h.len();
    let mut num = 0.0;
    let mut den = 0.0;
    for t in 1..t_eff {
        num += sv.h[t - 1] * sv.h[t];
        den += sv.h[t - 1] * sv.h[t - 1];
    }
    sv.rho = if den > 0.0 {
        sample_truncnorm(num / den, 1.0 / den, -bound, bound, rng)?
    } else {
        -bound + 2.0 * bound * rng.random::<f64>()
    };
    Ok(())
}

/// Draw σ²_ω for equation `eq` from `GIG(A̲ − ½, ω², 2/S̲)` — the
/// `G(S̲, A̲)` prior times the `N(0, σ²_ω)` likelihood of the single
/// observation ω.
///
/// The prior truncation `σ²_ω < 1 − ρ²` is enforced softly: at the default
/// hyperparameters the GIG mass beyond the boundary is negligible, and a
/// transiently incompatible pair is healed by the next ρ update, which does
/// truncate. Taking the draw untruncated keeps the GIG sampler exact.
pub fn sample_sigma2_omega<R: Rng + ?Sized>(
    eq: usize,
    state: &mut StructuralState,
    ctx: &ChainContext,
    rng: &mut R,
) -> Result<()> {
    let sv = &mut state.sv[eq];
    sv.sigma2_omega = sample_gig(
        ctx.priors.a_omega - 0.5,
        sv.omega * sv.omega,
        2.0 / ctx.priors.s_omega,
        rng,
    )?;
    Ok(())
}
