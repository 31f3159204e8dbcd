//! Normal-product density family: the implied priors of log-volatility
//! levels and of the volatility-scale parameter.
//!
//! If `ω ~ N(0, σ²_z)` scales a standard-normal log-volatility state, the
//! product `z = ω·h` has the symmetric "normal product" density
//! `(1/(π√σ²_z)) K₀(|z|/√σ²_z)`, with a logarithmic pole at the origin.
//! Exponentiating gives the distribution of a variance level `q = e^z`,
//! which has its pole at `q = 1` and — notably — approaches 0 as `q → 0⁺`
//! only when `σ²_z ≤ 1`, at the slow rate `q^{1/σ_z − 1}/√|log q|`; for
//! `σ²_z > 1` the density is unbounded at the origin as well. The
//! multivariate extension replaces `K₀` with `K_{(T−1)/2}` and a quadratic
//! form in a correlation matrix.
//!
//! The same Bessel-K machinery yields the marginal prior of `ω` itself when
//! its conditional variance carries a Gamma(scale S, shape A) prior: a
//! density that is bounded at 0 exactly when `A > 0.5`, with closed-form
//! peak value `Γ(A−1/2)/(√(2πS)·Γ(A))`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::special::bessel::{bessel_k, ln_bessel_k};

const LN_PI: f64 = 1.1447298858494001741; // ln(π)
const LN_2: f64 = std::f64::consts::LN_2;

/// Scale parameter of the univariate normal-product family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalProductParams {
    /// Variance σ²_z of the normal factor; must be strictly positive.
    pub sigma2: f64,
}

impl NormalProductParams {
    pub fn new(sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::Domain(format!(
                "normal-product variance must be finite and positive, got {sigma2}"
            )));
        }
        Ok(Self { sigma2 })
    }
}

/// Density of the symmetric normal-product distribution at `z`.
///
/// Returns `+∞` at `z = 0` (the K₀ pole is integrable).
pub fn np_pdf(z: f64, p: NormalProductParams) -> Result<f64> {
    let p = NormalProductParams::new(p.sigma2)?; // re-validate public fields
    let sigma = p.sigma2.sqrt();
    if z == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(bessel_k(0.0, z.abs() / sigma)? / (std::f64::consts::PI * sigma))
}

/// Density of `q = exp(z)` where `z` is normal-product distributed.
///
/// Support is `q > 0` (a nonpositive `q` is a domain error); the pole sits
/// at `q = 1` where `+∞` is returned.
pub fn lognp_pdf(q: f64, p: NormalProductParams) -> Result<f64> {
    if !(q > 0.0) {
        return Err(Error::Domain(format!(
            "log-normal-product support is q > 0, got {q}"
        )));
    }
    Ok(np_pdf(q.ln(), p)? / q)
}

/// Parameters of the multivariate normal-product family: an overall scale
/// `σ²` and a T×T symmetric positive-definite matrix `Σ`.
///
/// The Cholesky factor is computed once at construction.
#[derive(Debug, Clone)]
pub struct MvNormalProductParams {
    sigma2: f64,
    chol: Cholesky<f64, Dyn>,
    ln_det_sigma: f64,
    dim: usize,
}

impl MvNormalProductParams {
    pub fn new(sigma2: f64, sigma_mat: DMatrix<f64>) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::Domain(format!(
                "scale σ² must be finite and positive, got {sigma2}"
            )));
        }
        if !sigma_mat.is_square() || sigma_mat.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "Σ must be square and nonempty, got {}×{}",
                sigma_mat.nrows(),
                sigma_mat.ncols()
            )));
        }
        let dim = sigma_mat.nrows();
        let chol = Cholesky::new(sigma_mat).ok_or_else(|| {
            Error::Singular("Σ is not symmetric positive definite".into())
        })?;
        let ln_det_sigma = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Ok(Self {
            sigma2,
            chol,
            ln_det_sigma,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Log-density of the multivariate normal-product distribution at `Z`.
///
/// For a T-vector with quadratic form `Q = Z'Σ⁻¹Z/σ²` the density is
/// `2^{−(T−1)/2} π^{−(T+1)/2} det(σ²Σ)^{−1/2} Q^{−(T−1)/4} K_{(T−1)/2}(√Q)`,
/// i.e. the scale mixture `∫ N(Z; 0, v·σ²Σ) f_{χ²₁}(v) dv` written in closed
/// form. At `T = 1` this reduces exactly to `ln np_pdf`. `Z = 0` is a pole
/// and returns `+∞`.
pub fn mnp_logpdf(z: &DVector<f64>, p: &MvNormalProductParams) -> Result<f64> {
    let t = p.dim;
    if z.len() != t {
        return Err(Error::Dimension(format!(
            "Z has length {} but Σ is {t}×{t}",
            z.len()
        )));
    }
    let solved = p.chol.solve(z);
    let qform = z.dot(&solved) / p.sigma2;
    if qform == 0.0 {
        return Ok(f64::INFINITY);
    }
    let tf = t as f64;
    let order = (tf - 1.0) / 2.0;
    let ln_det_scaled = tf * p.sigma2.ln() + p.ln_det_sigma;
    Ok(-order * LN_2 - (tf + 1.0) / 2.0 * LN_PI - 0.5 * ln_det_scaled
        - 0.5 * order * qform.ln()
        + ln_bessel_k(order, qform.sqrt())?)
}

/// Log-density of the entrywise exponential of a multivariate
/// normal-product vector: `mnp_logpdf(log Q) − Σ_t log q_t`.
///
/// All entries of `Q` must be strictly positive.
pub fn mlognp_logpdf(q: &DVector<f64>, p: &MvNormalProductParams) -> Result<f64> {
    if let Some(bad) = q.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::Domain(format!(
            "all entries must be strictly positive, got {bad}"
        )));
    }
    let logs = q.map(|v| v.ln());
    Ok(mnp_logpdf(&logs, p)? - logs.sum())
}

/// Hyperparameters of the marginal prior for the volatility scale ω:
/// the conditional variance of ω is Gamma with scale `s` and shape `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalOmegaParams {
    /// Gamma scale S > 0 of the variance prior.
    pub s: f64,
    /// Gamma shape A > 0 of the variance prior.
    pub a: f64,
}

impl MarginalOmegaParams {
    pub fn new(s: f64, a: f64) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() || !(a > 0.0) || !a.is_finite() {
            return Err(Error::Domain(format!(
                "marginal-ω hyperparameters must be finite and positive, got S={s}, A={a}"
            )));
        }
        Ok(Self { s, a })
    }
}

/// Marginal prior density of ω after integrating its Gamma-distributed
/// conditional variance:
/// `p(ω) = |ω|^{A−1/2} K_{A−1/2}(√(2/S)|ω|) / (√π 2^{(A−3/2)/2} Γ(A) S^{(A+1/2)/2})`.
///
/// Symmetric in ω; at ω = 0 returns the closed-form limit when `A > 0.5`
/// and `+∞` otherwise (the prior is unbounded at the origin for `A ≤ 0.5`).
pub fn marginal_omega_pdf(omega: f64, p: MarginalOmegaParams) -> Result<f64> {
    let p = MarginalOmegaParams::new(p.s, p.a)?;
    if omega == 0.0 {
        return marginal_omega_at_zero(p);
    }
    let order = p.a - 0.5;
    let x = (2.0 / p.s).sqrt() * omega.abs();
    let ln_num = order * omega.abs().ln() + ln_bessel_k(order, x)?;
    let ln_den = 0.5 * LN_PI + (p.a - 1.5) / 2.0 * LN_2 + ln_gamma(p.a)
        + (p.a + 0.5) / 2.0 * p.s.ln();
    Ok((ln_num - ln_den).exp())
}

/// Peak of the marginal ω prior: `Γ(A−1/2)/(√(2πS)·Γ(A))` for `A > 0.5`,
/// `+∞` for `0 < A ≤ 0.5` where the density is unbounded at the origin.
pub fn marginal_omega_at_zero(p: MarginalOmegaParams) -> Result<f64> {
    let p = MarginalOmegaParams::new(p.s, p.a)?;
    if p.a <= 0.5 {
        return Ok(f64::INFINITY);
    }
    Ok((ln_gamma(p.a - 0.5) - ln_gamma(p.a) - 0.5 * (2.0 * std::f64::consts::PI * p.s).ln())
        .exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::quad::integrate;
    use approx::assert_relative_eq;

    fn np1() -> NormalProductParams {
        NormalProductParams::new(1.0).unwrap()
    }

    #[test]
    fn np_reference_values() {
        // 50-digit quadrature oracle for the product of two standard normals.
        assert_relative_eq!(
            np_pdf(1.0, np1()).unwrap(),
            0.13401624101699427438,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            np_pdf(0.5, np1()).unwrap(),
            0.29425172934860380239,
            max_relative = 1e-13
        );
        assert!(np_pdf(0.0, np1()).unwrap().is_infinite());
    }

    #[test]
    fn np_even_symmetry() {
        let p = NormalProductParams::new(2.0).unwrap();
        assert_eq!(np_pdf(0.37, p).unwrap(), np_pdf(-0.37, p).unwrap());
        assert_relative_eq!(
            np_pdf(0.37, p).unwrap(),
            0.3373970419167668537,
            max_relative = 1e-13
        );
    }

    #[test]
    fn np_integrates_to_one() {
        // Pole at 0 handled by splitting the domain there; tails are
        // exponential so ±60σ leaves mass far below the tolerance.
        for &s2 in &[0.25, 1.0, 4.0] {
            let p = NormalProductParams::new(s2).unwrap();
            let half = integrate(
                |z| np_pdf(z, p).unwrap(),
                1e-280,
                60.0 * s2.sqrt() + 60.0,
                1e-9,
                0.0,
                8192,
            )
            .unwrap();
            assert_relative_eq!(2.0 * half.value, 1.0, epsilon = 1e-7);
        }
    }

    #[test]
    fn lognp_pole_and_domain() {
        for &s2 in &[0.3, 1.0, 2.5] {
            let p = NormalProductParams::new(s2).unwrap();
            assert!(lognp_pdf(1.0, p).unwrap().is_infinite());
        }
        assert!(lognp_pdf(0.0, np1()).is_err());
        assert!(lognp_pdf(-1.0, np1()).is_err());
    }

    #[test]
    fn lognp_reference_values() {
        assert_relative_eq!(
            lognp_pdf(2.0, np1()).unwrap(),
            0.10627863252933534186,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            lognp_pdf(0.5, NormalProductParams::new(0.25).unwrap()).unwrap(),
            0.31588702122621907602,
            max_relative = 1e-13
        );
        // Sub-unit variance: mass near the origin decays, but only like
        // q^{1/σ−1}/√|log q|, so the value at 1e-8 is still ~1e-2.
        assert_relative_eq!(
            lognp_pdf(1e-8, NormalProductParams::new(0.8).unwrap()).unwrap(),
            0.011108051221064580703,
            max_relative = 1e-12
        );
    }

    #[test]
    fn lognp_origin_trichotomy() {
        let grid = [1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12];
        // σ² ≤ 1: decreasing toward 0 along the geometric grid.
        let p_sub = NormalProductParams::new(0.8).unwrap();
        let sub: Vec<f64> = grid.iter().map(|&q| lognp_pdf(q, p_sub).unwrap()).collect();
        assert!(sub.windows(2).all(|w| w[1] < w[0]));
        // σ² > 1: increasing without bound along the same grid.
        let p_super = NormalProductParams::new(1.5).unwrap();
        let sup: Vec<f64> = grid
            .iter()
            .map(|&q| lognp_pdf(q, p_super).unwrap())
            .collect();
        assert!(sup.windows(2).all(|w| w[1] > w[0]));
        // Divergence is slow (like q^{1/σ−1}/√|log q|), but the growth over
        // ten decades is still more than an order of magnitude.
        assert!(sup[grid.len() - 1] > 10.0 * sup[0]);
    }

    #[test]
    fn mnp_frozen_value() {
        let sigma = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.5, 0.25, 0.5, 1.0, 0.5, 0.25, 0.5, 1.0],
        );
        let p = MvNormalProductParams::new(0.7, sigma).unwrap();
        let z = DVector::from_row_slice(&[0.3, -0.2, 0.5]);
        assert_relative_eq!(
            mnp_logpdf(&z, &p).unwrap(),
            -2.7305968626688509,
            max_relative = 1e-12
        );
        // Quadratic form: even in Z.
        assert_eq!(mnp_logpdf(&z, &p).unwrap(), mnp_logpdf(&(-&z), &p).unwrap());
    }

    #[test]
    fn mnp_t1_reduces_to_np() {
        let p1 = MvNormalProductParams::new(1.0, DMatrix::identity(1, 1)).unwrap();
        let lhs = mnp_logpdf(&DVector::from_row_slice(&[0.5]), &p1).unwrap();
        let rhs = np_pdf(0.5, np1()).unwrap().ln();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-13);

        let p2 = MvNormalProductParams::new(0.5, DMatrix::identity(1, 1)).unwrap();
        let lhs2 = mnp_logpdf(&DVector::from_row_slice(&[0.8]), &p2).unwrap();
        let rhs2 = np_pdf(0.8, NormalProductParams::new(0.5).unwrap())
            .unwrap()
            .ln();
        assert_relative_eq!(lhs2, rhs2, max_relative = 1e-13);
    }

    #[test]
    fn mnp_integrates_to_one_t2() {
        // 2-D product quadrature over a symmetric box; tails exponential.
        let p = MvNormalProductParams::new(1.0, DMatrix::identity(2, 2)).unwrap();
        let inner = |z1: f64| {
            integrate(
                |z2| {
                    mnp_logpdf(&DVector::from_row_slice(&[z1, z2]), &p)
                        .unwrap()
                        .exp()
                },
                -40.0,
                40.0,
                1e-8,
                0.0,
                4096,
            )
            .unwrap()
            .value
        };
        let total = integrate(inner, -40.0, 40.0, 1e-6, 0.0, 2048).unwrap();
        assert_relative_eq!(total.value, 1.0, epsilon = 2e-4);
    }

    #[test]
    fn mlognp_change_of_variables() {
        let p = MvNormalProductParams::new(1.0, DMatrix::identity(2, 2)).unwrap();
        let q = DVector::from_row_slice(&[1.2, 0.7]);
        let logs = q.map(|v: f64| v.ln());
        let expected = mnp_logpdf(&logs, &p).unwrap() - logs.sum();
        assert_eq!(mlognp_logpdf(&q, &p).unwrap(), expected);
    }

    #[test]
    fn mlognp_frozen_value_and_t1() {
        let sigma = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.5, 0.25, 0.5, 1.0, 0.5, 0.25, 0.5, 1.0],
        );
        let p = MvNormalProductParams::new(0.7, sigma).unwrap();
        let q = DVector::from_row_slice(&[1.2, 0.8, 1.5]);
        assert_relative_eq!(
            mlognp_logpdf(&q, &p).unwrap(),
            -2.6437189841700792,
            max_relative = 1e-12
        );

        let p1 = MvNormalProductParams::new(1.0, DMatrix::identity(1, 1)).unwrap();
        assert_relative_eq!(
            mlognp_logpdf(&DVector::from_row_slice(&[2.0]), &p1).unwrap(),
            lognp_pdf(2.0, np1()).unwrap().ln(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn mlognp_rejects_nonpositive_entries() {
        let p = MvNormalProductParams::new(1.0, DMatrix::identity(2, 2)).unwrap();
        assert!(mlognp_logpdf(&DVector::from_row_slice(&[1.0, 0.0]), &p).is_err());
        assert!(mlognp_logpdf(&DVector::from_row_slice(&[-0.2, 1.0]), &p).is_err());
    }

    #[test]
    fn mv_params_reject_bad_sigma() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.9, 0.2, 1.0]);
        // Not SPD-compatible: Cholesky of the asymmetric lower triangle may
        // pass, but a genuinely indefinite matrix must fail.
        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(MvNormalProductParams::new(1.0, indef).is_err());
        assert!(MvNormalProductParams::new(-1.0, asym).is_err());
    }

    #[test]
    fn marginal_omega_reference_values() {
        let p = MarginalOmegaParams::new(0.05, 1.0).unwrap();
        assert_relative_eq!(
            marginal_omega_pdf(0.3, p).unwrap(),
            0.47422468547765036623,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            marginal_omega_pdf(0.05, p).unwrap(),
            2.304963360083990167,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            marginal_omega_pdf(1.0, p).unwrap(),
            0.0056660515819920710152,
            max_relative = 1e-12
        );
        let p2 = MarginalOmegaParams::new(0.2, 3.0).unwrap();
        assert_relative_eq!(
            marginal_omega_pdf(0.1, p2).unwrap(),
            0.58325416616190270773,
            max_relative = 1e-12
        );
        // Symmetry.
        assert_eq!(
            marginal_omega_pdf(0.3, p).unwrap(),
            marginal_omega_pdf(-0.3, p).unwrap()
        );
    }

    #[test]
    fn marginal_omega_at_zero_closed_form() {
        let p = MarginalOmegaParams::new(0.05, 1.0).unwrap();
        assert_relative_eq!(
            marginal_omega_at_zero(p).unwrap(),
            3.162277660168379332,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            marginal_omega_at_zero(MarginalOmegaParams::new(0.2, 0.75).unwrap()).unwrap(),
            2.6393218160028125483,
            max_relative = 1e-13
        );
        // Halving rule: scaling S by 4 halves the peak.
        let base = marginal_omega_at_zero(MarginalOmegaParams::new(0.1, 2.0).unwrap()).unwrap();
        let quad = marginal_omega_at_zero(MarginalOmegaParams::new(0.4, 2.0).unwrap()).unwrap();
        assert_relative_eq!(quad, 0.5 * base, max_relative = 1e-13);
        // Unbounded-at-origin branch.
        assert!(
            marginal_omega_at_zero(MarginalOmegaParams::new(1.0, 0.5).unwrap())
                .unwrap()
                .is_infinite()
        );
        assert!(
            marginal_omega_pdf(0.0, MarginalOmegaParams::new(1.0, 0.4).unwrap())
                .unwrap()
                .is_infinite()
        );
    }

    #[test]
    fn marginal_omega_integrates_to_one() {
        let p = MarginalOmegaParams::new(0.05, 1.0).unwrap();
        // Tail: p(ω) ~ C|ω|^{A−1} e^{−√(2/S)|ω|}; √(2/0.05) ≈ 6.3 per unit.
        let half = integrate(
            |w| marginal_omega_pdf(w, p).unwrap(),
            1e-290,
            30.0,
            1e-9,
            0.0,
            8192,
        )
        .unwrap();
        assert_relative_eq!(2.0 * half.value, 1.0, epsilon = 1e-7);
    }
}
