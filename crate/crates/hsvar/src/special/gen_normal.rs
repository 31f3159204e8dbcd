//! Gibbs step for one row of a structural impact matrix under a
//! generalized-normal full conditional.
//!
//! The conditional density of row `b` given the other rows of `B0` is
//! `∝ |det(B0)|^{ν̄−N} · exp(−½ b S̄⁻¹ b′)`, which is not any textbook
//! family: the determinant is linear in `b`, so the kernel mixes a Gaussian
//! with a `|·|^power` factor along one direction. Waggoner & Zha (2003)
//! showed the draw is exact after rotating into the right frame: write
//! `S̄ = T T′`, map `b′ = T α`, and split `α` along the unit vector pointing
//! at `T′c` where `c` is the cofactor vector of the sampled row. The
//! component along that axis is a signed square-root of a Gamma variate;
//! the orthogonal components are iid standard normal.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};

/// Cofactor direction of the omitted row: a vector orthogonal to every row
/// of `others` whose inner product with a candidate row equals (up to a
/// fixed sign) the determinant of the stacked matrix.
fn cofactor_direction(others: &DMatrix<f64>) -> DVector<f64> {
    let n = others.ncols();
    if n == 1 {
        return DVector::from_element(1, 1.0);
    }
    let mut c = DVector::zeros(n);
    for j in 0..n {
        let minor = others.clone().remove_column(j);
        let det = minor.determinant();
        c[j] = if j % 2 == 0 { det } else { -det };
    }
    c
}

/// Draw one row of `B0` from its full conditional
/// `∝ |det(B0)|^{ν̄−N} exp(−½ b S̄⁻¹ b′)` given the other `N−1` rows.
///
/// `s_bar_inv` is the (SPD) precision of the Gaussian factor, `nu_bar` the
/// degrees-of-freedom parameter (must exceed `N−1` so the Gamma shape is
/// positive), and `b0_others` stacks the conditioning rows in any order.
/// Fails with [`Error::Singular`] when the conditioning rows are rank
/// deficient, in which case the determinant factor is identically zero and
/// the conditional does not exist.
pub fn sample_generalized_normal_row<R: Rng + ?Sized>(
    s_bar_inv: &DMatrix<f64>,
    nu_bar: f64,
    b0_others: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let n = s_bar_inv.nrows();
    if !s_bar_inv.is_square() || n == 0 {
        return Err(Error::Dimension(format!(
            "precision must be square and nonempty, got {}×{}",
            s_bar_inv.nrows(),
            s_bar_inv.ncols()
        )));
    }
    if b0_others.nrows() + 1 != n || b0_others.ncols() != n {
        return Err(Error::Dimension(format!(
            "conditioning rows must be {}×{n}, got {}×{}",
            n - 1,
            b0_others.nrows(),
            b0_others.ncols()
        )));
    }
    if !(nu_bar > (n - 1) as f64) {
        return Err(Error::Domain(format!(
            "degrees of freedom must exceed N−1 = {}, got {nu_bar}",
            n - 1
        )));
    }

    let chol = Cholesky::new(s_bar_inv.clone())
        .ok_or_else(|| Error::Singular("row precision is not positive definite".into()))?;
    let l = chol.l();

    // v ∝ T′c with T = L′⁻¹ (so that TT′ = S̄); only its direction matters,
    // the magnitude is constant in the draw.
    let c = cofactor_direction(b0_others);
    let v = l
        .solve_lower_triangular(&c)
        .ok_or_else(|| Error::Singular("triangular solve failed".into()))?;
    let scale: f64 = (0..n - 1)
        .map(|i| b0_others.row(i).norm())
        .product::<f64>()
        .max(f64::MIN_POSITIVE);
    if v.norm() <= 1e-10 * scale {
        return Err(Error::Singular(
            "conditioning rows are rank deficient; the determinant factor vanishes".into(),
        ));
    }
    let w1 = &v / v.norm();

    // Coordinates in an orthonormal basis whose first axis is w1: the axial
    // component is ±√Gamma((ν̄−N+1)/2, 2), the rest standard normal. The
    // basis itself is the Householder reflection sending e₁ to w1, so we
    // never materialize the completion explicitly.
    let shape = (nu_bar - n as f64 + 1.0) / 2.0;
    let gamma = Gamma::new(shape, 2.0)
        .map_err(|e| Error::Domain(format!("axial gamma component: {e}")))?;
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let mut beta = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    beta[0] = sign * gamma.sample(rng).sqrt();

    let mut e1 = DVector::zeros(n);
    e1[0] = 1.0;
    let u = &w1 - &e1;
    let uu = u.dot(&u);
    let alpha = if uu < 1e-24 {
        beta
    } else {
        &beta - &u * (2.0 * u.dot(&beta) / uu)
    };

    // Row = (Tα)′ with T = L′⁻¹.
    l.transpose()
        .solve_upper_triangular(&alpha)
        .ok_or_else(|| Error::Singular("triangular solve failed".into()))
}
