//! Synthetic data generation from the exact structural model with known
//! parameters, plus a distributional check tying simulated conditional
//! variances back to the normal-product law.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::model::TimeSeriesData;
use crate::special::normal_product::{np_pdf, NormalProductParams};
use crate::special::quad::{integrate, qk15};
use crate::{Error, Result};

/// Complete description of a data-generating process.
///
/// `a` stacks the lag blocks and deterministic coefficients exactly like the
/// estimated coefficient matrix: `N x (N p + d)`. Pre-sample values of `y`
/// are zero and the latent log-volatility starts at `h_0 = 0`, so the first
/// conditional variance of every shock is exactly 1.
#[derive(Clone, Debug)]
pub struct DgpSpec {
    /// Structural matrix mapping reduced-form residuals to shocks.
    pub b0: DMatrix<f64>,
    /// Autoregressive and deterministic coefficients, `N x (N p + d)`.
    pub a: DMatrix<f64>,
    /// Lag order.
    pub p: usize,
    /// Deterministic terms for every period, `T x d` (zero columns allowed).
    pub det: DMatrix<f64>,
    /// Labels for the deterministic columns.
    pub det_names: Vec<String>,
    /// Labels for the endogenous variables.
    pub var_names: Vec<String>,
    /// Volatility-of-volatility loading per equation; 0 = homoskedastic.
    pub omega: Vec<f64>,
    /// AR(1) coefficient of each latent log-volatility path, |rho| < 1.
    pub rho: Vec<f64>,
    /// Sample length.
    pub t: usize,
    /// Seed for the generator; output is a deterministic function of it.
    pub seed: u64,
    /// Permit a companion matrix with spectral radius >= 1.
    pub allow_unstable: bool,
}

/// Simulated sample plus the ground truth that produced it.
///
/// Latent state matrices `h` and `sigma2` have `T + 1` rows: row `t` is time
/// `t`, with row 0 holding the initial condition (`h = 0`, variance 1). The
/// shock matrix `w` and the observations have `T` rows covering times
/// `1..=T`.
#[derive(Clone, Debug)]
pub struct SimulationOutput {
    /// Observations and deterministic terms, times `1..=T`.
    pub data: TimeSeriesData,
    /// Latent log-volatility paths, `(T+1) x N`.
    pub h: DMatrix<f64>,
    /// Conditional shock variances `exp(omega h)`, `(T+1) x N`.
    pub sigma2: DMatrix<f64>,
    /// Structural shocks, `T x N`.
    pub w: DMatrix<f64>,
}

impl DgpSpec {
    /// Validates dimensions, stationarity bounds, and invertibility.
    pub fn validate(&self) -> Result<()> {
        let n = self.b0.nrows();
        if self.b0.ncols() != n || n == 0 {
            return Err(Error::Dimension("b0 must be square and nonempty".into()));
        }
        if self.p == 0 {
            return Err(Error::InvalidConfig("lag order p must be at least 1".into()));
        }
        let k = n * self.p + self.det.ncols();
        if self.a.nrows() != n || self.a.ncols() != k {
            return Err(Error::Dimension(format!(
                "a must be {n} x {k}, got {} x {}",
                self.a.nrows(),
                self.a.ncols()
            )));
        }
        if self.det.nrows() != self.t {
            return Err(Error::Dimension(format!(
                "deterministic matrix has {} rows for t = {}",
                self.det.nrows(),
                self.t
            )));
        }
        if self.det_names.len() != self.det.ncols() || self.var_names.len() != n {
            return Err(Error::Dimension("name lists do not match matrix shapes".into()));
        }
        if self.omega.len() != n || self.rho.len() != n {
            return Err(Error::Dimension(
                "omega and rho need one entry per equation".into(),
            ));
        }
        if self.rho.iter().any(|r| r.abs() >= 1.0) {
            return Err(Error::InvalidConfig("every |rho| must be below 1".into()));
        }
        if self.t <= self.p {
            return Err(Error::InvalidConfig(format!(
                "sample length {} must exceed lag order {}",
                self.t, self.p
            )));
        }
        if !self.b0.clone().lu().is_invertible() {
            return Err(Error::Singular("b0 is not invertible".into()));
        }
        let radius = self.companion_spectral_radius();
        if !self.allow_unstable && radius >= 1.0 {
            return Err(Error::InvalidConfig(format!(
                "companion matrix has spectral radius {radius:.6} >= 1; \
                 set allow_unstable to simulate anyway"
            )));
        }
        Ok(())
    }

    /// Number of endogenous variables.
    pub fn n(&self) -> usize {
        self.b0.nrows()
    }

    /// Spectral radius of the companion matrix of the lag polynomial.
    pub fn companion_spectral_radius(&self) -> f64 {
        let n = self.n();
        let np = n * self.p;
        let mut companion = DMatrix::zeros(np, np);
        companion
            .view_mut((0, 0), (n, np))
            .copy_from(&self.a.columns(0, np));
        for i in 0..np - n {
            companion[(n + i, i)] = 1.0;
        }
        companion
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// Two-variable benchmark process used throughout the test suite: one
/// strongly heteroskedastic shock and one homoskedastic shock, with a
/// constant term.
pub fn desk(seed: u64) -> DgpSpec {
    let t = 300;
    DgpSpec {
        b0: DMatrix::from_row_slice(2, 2, &[1.0, -0.5, 0.0, 1.0]),
        a: DMatrix::from_row_slice(2, 3, &[0.5, 0.1, 0.1, 0.0, 0.4, -0.1]),
        p: 1,
        det: DMatrix::from_element(t, 1, 1.0),
        det_names: vec!["const".into()],
        var_names: vec!["y1".into(), "y2".into()],
        omega: vec![0.8, 0.0],
        rho: vec![0.9, 0.9],
        t,
        seed,
        allow_unstable: false,
    }
}

/// The desk process with both shocks homoskedastic.
pub fn desk_homoskedastic(seed: u64) -> DgpSpec {
    let mut spec = desk(seed);
    spec.omega = vec![0.0, 0.0];
    spec
}

/// A longer desk sample with both shocks heteroskedastic, used for posterior
/// recovery checks.
pub fn desk_recovery(seed: u64) -> DgpSpec {
    let mut spec = desk(seed);
    spec.t = 500;
    spec.det = DMatrix::from_element(spec.t, 1, 1.0);
    spec.omega = vec![0.8, 0.8];
    spec
}

/// Builds a preset by name; see [`desk`], [`desk_homoskedastic`],
/// [`desk_recovery`].
pub fn preset(name: &str, seed: u64) -> Result<DgpSpec> {
    match name {
        "desk" => Ok(desk(seed)),
        "desk-homoskedastic" => Ok(desk_homoskedastic(seed)),
        "desk-recovery" => Ok(desk_recovery(seed)),
        other => Err(Error::InvalidConfig(format!(
            "unknown preset '{other}'; available: desk, desk-homoskedastic, desk-recovery"
        ))),
    }
}

/// Simulates a sample from a process description.
///
/// Per period the generator first advances the `N` log-volatility paths in
/// equation order, then draws the `N` standardized shocks, so output is a
/// fixed deterministic function of the seed.
pub fn generate(spec: &DgpSpec) -> Result<SimulationOutput> {
    spec.validate()?;
    let n = spec.n();
    let t = spec.t;
    let p = spec.p;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let b0_inv = spec
        .b0
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("b0 is not invertible".into()))?;

    let mut h: DMatrix<f64> = DMatrix::zeros(t + 1, n);
    let mut sigma2: DMatrix<f64> = DMatrix::zeros(t + 1, n);
    for eq in 0..n {
        sigma2[(0, eq)] = 1.0;
    }
    let mut w = DMatrix::zeros(t, n);
    let mut y = DMatrix::zeros(t, n);

    // x_t needs lags y_{t-1}..y_{t-p}; pre-sample values are zero.
    let lag_value = |y: &DMatrix<f64>, time: usize, lag: usize, var: usize| -> f64 {
        if time > lag {
            y[(time - lag - 1, var)] // row time-lag-1 holds y_{time-lag}
        } else {
            0.0
        }
    };

    for time in 1..=t {
        for eq in 0..n {
            let innovation: f64 = rng.sample(StandardNormal);
            h[(time, eq)] = spec.rho[eq] * h[(time - 1, eq)] + innovation;
            sigma2[(time, eq)] = (spec.omega[eq] * h[(time, eq)]).exp();
        }
        let mut w_t = DVector::zeros(n);
        for eq in 0..n {
            let eps: f64 = rng.sample(StandardNormal);
            w_t[eq] = sigma2[(time, eq)].sqrt() * eps;
            w[(time - 1, eq)] = w_t[eq];
        }
        let u_t = &b0_inv * &w_t;
        for var in 0..n {
            let mut mean = 0.0;
            for lag in 1..=p {
                for src in 0..n {
                    mean += spec.a[(var, (lag - 1) * n + src)] * lag_value(&y, time, lag, src);
                }
            }
            for col in 0..spec.det.ncols() {
                mean += spec.a[(var, n * p + col)] * spec.det[(time - 1, col)];
            }
            y[(time - 1, var)] = mean + u_t[var];
        }
    }

    let data = TimeSeriesData::new(y, spec.det.clone(), spec.var_names.clone())?;
    Ok(SimulationOutput { data, h, sigma2, w })
}

/// Result of [`empirical_sigma_check`].
#[derive(Clone, Copy, Debug)]
pub struct SigmaCheck {
    /// Kolmogorov distance between the simulated log-variances and the
    /// normal-product law they should follow.
    pub ks_distance: f64,
    /// Number of Monte-Carlo replications used.
    pub n_rep: usize,
}

/// Monte-Carlo check of the marginal law of the conditional variance.
///
/// Draws `omega ~ N(0, sigma2_omega)` and an AR(1) path up to time `t` in
/// each replication, forms `log sigma2_t = omega h_t`, and reports the
/// Kolmogorov distance of the simulated values from the normal-product
/// distribution with parameter `sigma2_omega (1 - rho^{2t}) / (1 - rho^2)`.
pub fn empirical_sigma_check(
    rho: f64,
    sigma2_omega: f64,
    t: usize,
    n_rep: usize,
    seed: u64,
) -> Result<SigmaCheck> {
    if t == 0 {
        return Err(Error::Domain("t must be at least 1".into()));
    }
    if rho.abs() >= 1.0 {
        return Err(Error::Domain("|rho| must be below 1".into()));
    }
    if n_rep < 100 {
        return Err(Error::Domain("need at least 100 replications".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega_sd = sigma2_omega.sqrt();
    let mut z = Vec::with_capacity(n_rep);
    for _ in 0..n_rep {
        let omega = omega_sd * rng.sample::<f64, _>(StandardNormal);
        let mut h = 0.0;
        for _ in 0..t {
            h = rho * h + rng.sample::<f64, _>(StandardNormal);
        }
        z.push(omega * h);
    }

    let variance = sigma2_omega * (1.0 - rho.powi(2 * t as i32)) / (1.0 - rho * rho);
    let params = NormalProductParams::new(variance)?;
    Ok(SigmaCheck {
        ks_distance: ks_distance_normal_product(&mut z, params)?,
        n_rep,
    })
}

/// Kolmogorov distance of a sample from the (symmetric) normal-product law,
/// evaluating the reference CDF by cumulative quadrature over the sorted
/// absolute values.
pub(crate) fn ks_distance_normal_product(
    sample: &mut [f64],
    params: NormalProductParams,
) -> Result<f64> {
    let m = sample.len();
    let density = move |v: f64| np_pdf(v, params).expect("params validated at construction");
    sample.sort_by(|a, b| a.partial_cmp(b).expect("non-finite sample value"));

    // Order the absolute values, integrate the density over successive gaps,
    // and map the cumulative integrals back to the signed sample.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| {
        sample[i]
            .abs()
            .partial_cmp(&sample[j].abs())
            .expect("non-finite sample value")
    });
    let mut half_integral = vec![0.0; m];
    let mut acc = 0.0;
    let mut prev = 0.0;
    for (k, &idx) in order.iter().enumerate() {
        let x = sample[idx].abs();
        if x > prev {
            if k == 0 || prev == 0.0 {
                // The density has a logarithmic singularity at 0; let the
                // adaptive rule resolve the first gap.
                acc += integrate(density, prev, x, 1e-11, 1e-9, 200)?.value;
            } else {
                acc += qk15(&density, prev, x).0;
            }
            prev = x;
        }
        half_integral[idx] = acc;
    }

    let mut ks: f64 = 0.0;
    for (i, &value) in sample.iter().enumerate() {
        let cdf = if value >= 0.0 {
            0.5 + half_integral[i]
        } else {
            0.5 - half_integral[i]
        };
        let upper = (i + 1) as f64 / m as f64;
        let lower = i as f64 / m as f64;
        ks = ks.max((cdf - upper).abs()).max((cdf - lower).abs());
    }
    Ok(ks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn homoskedastic_reduction() {
        let out = generate(&desk_homoskedastic(42)).unwrap();
        assert!(out.sigma2.iter().all(|&v| v == 1.0));
        let t = out.w.nrows() as f64;
        for eq in 0..2 {
            let col = out.w.column(eq);
            let mean = col.sum() / t;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (t - 1.0);
            // Sampling SE of a normal variance estimate is sqrt(2/(T-1)).
            let se = (2.0 / (t - 1.0)).sqrt();
            assert!(
                (var - 1.0).abs() < 3.0 * se,
                "equation {eq}: sample variance {var} too far from 1"
            );
        }
    }

    #[test]
    fn latent_path_autocorrelation_matches_rho() {
        let t = 5000;
        let spec = DgpSpec {
            b0: DMatrix::identity(1, 1),
            a: DMatrix::from_row_slice(1, 1, &[0.5]),
            p: 1,
            det: DMatrix::zeros(t, 0),
            det_names: vec![],
            var_names: vec!["y".into()],
            omega: vec![0.3],
            rho: vec![0.9],
            t,
            seed: 7,
            allow_unstable: false,
        };
        let out = generate(&spec).unwrap();
        let h: Vec<f64> = (1..=t).map(|time| out.h[(time, 0)]).collect();
        let mean = h.iter().sum::<f64>() / t as f64;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 1..t {
            num += (h[i] - mean) * (h[i - 1] - mean);
        }
        for value in &h {
            den += (value - mean).powi(2);
        }
        let rho_hat = num / den;
        let se = ((1.0 - 0.81) / t as f64).sqrt();
        assert!(
            (rho_hat - 0.9).abs() < 3.0 * se,
            "lag-1 autocorrelation {rho_hat} too far from 0.9"
        );
    }

    #[test]
    fn initial_conditions_are_exact() {
        let out = generate(&desk(3)).unwrap();
        for eq in 0..2 {
            assert_eq!(out.h[(0, eq)], 0.0);
            assert_eq!(out.sigma2[(0, eq)], 1.0);
        }
    }

    #[test]
    fn deterministic_under_fixed_seed() {
        let a = generate(&desk(99)).unwrap();
        let b = generate(&desk(99)).unwrap();
        assert_eq!(a.data.y, b.data.y);
        assert_eq!(a.h, b.h);
        assert_eq!(a.w, b.w);
        let c = generate(&desk(100)).unwrap();
        assert_ne!(a.data.y, c.data.y);
    }

    #[test]
    fn explosive_spec_needs_override() {
        let mut spec = desk(1);
        spec.a[(0, 0)] = 1.2;
        spec.a[(1, 1)] = 1.1;
        spec.a[(0, 1)] = 0.0;
        let err = generate(&spec).unwrap_err();
        assert!(err.to_string().contains("spectral radius"));
        spec.allow_unstable = true;
        assert!(generate(&spec).is_ok());
    }

    #[test]
    fn preset_lookup() {
        assert!(preset("desk", 1).is_ok());
        assert!(preset("desk-homoskedastic", 1).is_ok());
        assert!(preset("desk-recovery", 1).is_ok());
        assert!(preset("dusk", 1).is_err());
        assert_eq!(preset("desk-recovery", 1).unwrap().t, 500);
    }

    #[test]
    fn sigma_check_matches_normal_product_law() {
        let check = empirical_sigma_check(0.7, 0.36, 5, 20_000, 21).unwrap();
        assert!(
            check.ks_distance < 0.02,
            "KS distance {} exceeds 0.02",
            check.ks_distance
        );
    }

    #[test]
    fn sigma_check_at_t_one_is_rho_free() {
        // At t = 1 the variance factor collapses to 1 for every rho.
        let a = empirical_sigma_check(0.3, 0.25, 1, 5_000, 5).unwrap();
        let b = empirical_sigma_check(0.9, 0.25, 1, 5_000, 5).unwrap();
        assert!(a.ks_distance < 0.03, "KS {} too large", a.ks_distance);
        assert!(b.ks_distance < 0.03, "KS {} too large", b.ks_distance);
    }

    #[test]
    fn fixed_omega_path_is_exactly_normal() {
        use statrs::distribution::{ContinuousCDF, Normal};
        let (rho, omega, t, n_rep) = (0.7_f64, 0.8_f64, 5, 100_000);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut z: Vec<f64> = (0..n_rep)
            .map(|_| {
                let mut h = 0.0;
                for _ in 0..t {
                    h = rho * h + rng.sample::<f64, _>(StandardNormal);
                }
                omega * h
            })
            .collect();
        z.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let variance = omega * omega * (1.0 - rho.powi(2 * t)) / (1.0 - rho * rho);
        let law = Normal::new(0.0, variance.sqrt()).unwrap();
        let mut ks: f64 = 0.0;
        for (i, &value) in z.iter().enumerate() {
            let cdf = law.cdf(value);
            ks = ks
                .max((cdf - (i + 1) as f64 / n_rep as f64).abs())
                .max((cdf - i as f64 / n_rep as f64).abs());
        }
        // 1% Kolmogorov critical value.
        assert!(
            ks < 1.628 / (n_rep as f64).sqrt(),
            "KS statistic {ks} rejects normality"
        );
    }

    #[test]
    fn spec_validation_errors() {
        let mut spec = desk(1);
        spec.rho = vec![1.0, 0.5];
        assert!(spec.validate().is_err());

        let mut spec = desk(1);
        spec.b0[(0, 0)] = 0.0;
        spec.b0[(0, 1)] = 0.0;
        assert!(spec.validate().is_err());

        let mut spec = desk(1);
        spec.omega = vec![0.1];
        assert!(spec.validate().is_err());
    }

    #[test]
    fn desk_preset_shapes() {
        let spec = desk(0);
        assert_eq!(spec.n(), 2);
        assert_eq!(spec.t, 300);
        assert_abs_diff_eq!(spec.companion_spectral_radius(), 0.5, epsilon = 1e-12);
        let out = generate(&spec).unwrap();
        assert_eq!(out.data.y.nrows(), 300);
        assert_eq!(out.data.d.ncols(), 1);
        assert_eq!(out.h.nrows(), 301);
        assert_eq!(out.w.nrows(), 300);
    }
}
