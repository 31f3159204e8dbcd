//! Full-conditional draws for the impact matrix `B0` and the reduced-form
//! coefficient matrix `A`.
//!
//! With `B0 u_t = w_t` and `w_{n,t} ~ N(0, σ²_{n,t})`, each row of `B0` has
//! a generalized-normal conditional (Gaussian kernel times a power of
//! `|det B0|`), drawn exactly by the Waggoner–Zha rotation in
//! `special::gen_normal`. Each row of `A` stays conditionally Gaussian once
//! the other rows are held fixed, because the structural rotation mixes all
//! reduced-form residuals into every shock.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use super::ChainContext;
use crate::error::{Error, Result};
use crate::model::StructuralState;
use crate::special::sample_generalized_normal_row;

/// Degrees of freedom of the row conditional: effective sample size plus
/// the prior contribution `ν̲ = N`. Prior-only mode drops the data term.
pub(crate) fn b0_nu_bar(t_eff: usize, n: usize, prior_only: bool) -> f64 {
    if prior_only {
        n as f64
    } else {
        (t_eff + n) as f64
    }
}

/// Conditional precision `S̄ₙ⁻¹ = I/γ_{0,n} + Σ_t u_t u_t′ / σ²_{n,t}` of
/// row `n` of `B0`, given the reduced-form residuals `u = Yt − X A′`.
pub(crate) fn b0_row_precision(
    eq: usize,
    state: &StructuralState,
    u: &DMatrix<f64>,
    prior_only: bool,
) -> DMatrix<f64> {
    let n = state.b0.nrows();
    let mut prec = DMatrix::identity(n, n) / state.hyper.gamma_0[eq];
    if prior_only {
        return prec;
    }
    let sv = &state.sv[eq];
    for t in 0..u.nrows() {
        let inv_var = (-sv.omega * sv.h[t]).exp();
        for i in 0..n {
            let ui = u[(t, i)] * inv_var;
            for j in 0..n {
                prec[(i, j)] += ui * u[(t, j)];
            }
        }
    }
    prec
}

/// Redraw every row of `B0` in turn from its generalized-normal full
/// conditional. The residuals are shared across rows (they depend only on
/// `A`), while the weighting by `1/σ²_{n,t}` is row specific.
pub fn sample_b0<R: Rng + ?Sized>(
    state: &mut StructuralState,
    yt: &DMatrix<f64>,
    x: &DMatrix<f64>,
    ctx: &ChainContext,
    rng: &mut R,
) -> Result<()> {
    let n = state.b0.nrows();
    let t_eff = yt.nrows();
    let nu_bar = b0_nu_bar(t_eff, n, ctx.prior_only);
    let u = yt - x * state.a.transpose();
    for eq in 0..n {
        let prec = b0_row_precision(eq, state, &u, ctx.prior_only);
        let others = state.b0.clone().remove_row(eq);
        let row = sample_generalized_normal_row(&prec, nu_bar, &others, rng)?;
        state.b0.row_mut(eq).copy_from(&row.transpose());
    }
    Ok(())
}

/// Posterior mean and precision Cholesky of row `eq` of `A`.
///
/// Write `z_t = B0 (y_t − A₀ x_t)` with row `eq` of `A₀` zeroed: the
/// structural innovations become `w_{i,t} = z_{i,t} − B0_{i,eq}·a_eq′x_t`,
/// so the likelihood in `a_eq` is a weighted least-squares problem with
/// scalar weights `c_t = Σ_i B0²_{i,eq}/σ²_{i,t}` and targets
/// `d_t = Σ_i B0_{i,eq} z_{i,t}/σ²_{i,t}`. The prior is
/// `N(Ā_eq, γ_{A,eq}·diag(ω̄))`.
pub(crate) fn a_row_full_conditional(
    eq: usize,
    state: &StructuralState,
    yt: &DMatrix<f64>,
    x: &DMatrix<f64>,
    ctx: &ChainContext,
) -> Result<(DVector<f64>, Cholesky<f64, Dyn>)> {
    let n = state.b0.nrows();
    let k = x.ncols();
    let gamma = state.hyper.gamma_a[eq];

    let mut v_inv = DMatrix::zeros(k, k);
    let mut loc = DVector::zeros(k);
    for i in 0..k {
        let prior_prec = 1.0 / (gamma * ctx.omega_bar[i]);
        v_inv[(i, i)] = prior_prec;
        loc[i] = prior_prec * ctx.a_bar[(eq, i)];
    }

    if !ctx.prior_only {
        let mut a0 = state.a.clone();
        a0.row_mut(eq).fill(0.0);
        let z = (yt - x * a0.transpose()) * state.b0.transpose();
        for t in 0..yt.nrows() {
            let mut c_t = 0.0;
            let mut d_t = 0.0;
            for i in 0..n {
                let sv = &state.sv[i];
                let inv_var = (-sv.omega * sv.h[t]).exp();
                let b = state.b0[(i, eq)];
                c_t += b * b * inv_var;
                d_t += b * z[(t, i)] * inv_var;
            }
            let xt = x.row(t);
            for i in 0..k {
                loc[i] += d_t * xt[i];
                let ci = c_t * xt[i];
                for j in 0..k {
                    v_inv[(i, j)] += ci * xt[j];
                }
            }
        }
    }

    let chol = Cholesky::new(v_inv).ok_or_else(|| {
        Error::Singular(format!("row {eq} of A: conditional precision is not positive definite"))
    })?;
    let mean = chol.solve(&loc);
    Ok((mean, chol))
}

/// Redraw row `eq` of `A` from its Gaussian full conditional.
pub fn sample_a_row<R: Rng + ?Sized>(
    eq: usize,
    state: &mut StructuralState,
    yt: &DMatrix<f64>,
    x: &DMatrix<f64>,
    ctx: &ChainContext,
    rng: &mut R,
) -> Result<()> {
    let (mean, chol) = a_row_full_conditional(eq, state, yt, x, ctx)?;
    let k = mean.len();
    let z = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
    let noise = chol
        .l()
        .transpose()
        .solve_upper_triangular(&z)
        .ok_or_else(|| Error::Singular("triangular solve failed in A row draw".into()))?;
    let draw = mean + noise;
    state.a.row_mut(eq).copy_from(&draw.transpose());
    Ok(())
}
