//! Shared data model: observations, model/prior configuration, sampler state,
//! and posterior storage.
//!
//! Everything estimation-related flows through the types here. The structural
//! model is
//!
//! ```text
//! y_t = A x_t + u_t,        x_t = [y'_{t-1} ... y'_{t-p}  d_t']'
//! B0 u_t = w_t,             w_{n.t} ~ N(0, exp(omega_n h_{n.t}))
//! ```
//!
//! with `h_{n.t}` a standardized stationary AR(1) log-volatility path started
//! at `h_{n.0} = 0`, so every conditional variance path begins at 1.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Observed data: endogenous variables and deterministic terms, time in rows.
///
/// `y` is `T x N` with one row per period, `d` is `T x d` and holds whatever
/// constant/trend/dummy columns the caller declares (possibly zero columns).
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeriesData {
    /// Endogenous observations, `T x N`.
    pub y: DMatrix<f64>,
    /// Deterministic terms aligned with `y`, `T x d`.
    pub d: DMatrix<f64>,
    /// One label per endogenous variable.
    pub names: Vec<String>,
}

impl TimeSeriesData {
    /// Validates shapes and finiteness. `d` may have zero columns but must
    /// have one row per observation.
    pub fn new(y: DMatrix<f64>, d: DMatrix<f64>, names: Vec<String>) -> Result<Self> {
        if y.nrows() == 0 || y.ncols() == 0 {
            return Err(Error::InvalidData("observation matrix is empty".into()));
        }
        if d.nrows() != y.nrows() {
            return Err(Error::Dimension(format!(
                "deterministic terms have {} rows but observations have {}",
                d.nrows(),
                y.nrows()
            )));
        }
        if names.len() != y.ncols() {
            return Err(Error::Dimension(format!(
                "{} variable names for {} columns",
                names.len(),
                y.ncols()
            )));
        }
        if let Some((r, c)) = first_nonfinite(&y) {
            return Err(Error::InvalidData(format!(
                "non-finite observation at row {r}, column {c}"
            )));
        }
        if let Some((r, c)) = first_nonfinite(&d) {
            return Err(Error::InvalidData(format!(
                "non-finite deterministic term at row {r}, column {c}"
            )));
        }
        Ok(Self { y, d, names })
    }

    /// Number of observations `T`.
    pub fn t(&self) -> usize {
        self.y.nrows()
    }

    /// Number of endogenous variables `N`.
    pub fn n(&self) -> usize {
        self.y.ncols()
    }

    /// Number of deterministic columns `d`.
    pub fn n_det(&self) -> usize {
        self.d.ncols()
    }
}

fn first_nonfinite(m: &DMatrix<f64>) -> Option<(usize, usize)> {
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            if !m[(r, c)].is_finite() {
                return Some((r, c));
            }
        }
    }
    None
}

/// Lag order and per-variable stationarity flags.
///
/// The flags select the diagonal of the prior mean of `A`: a variable marked
/// stationary gets prior mean 0 on its own first lag, a non-stationary one
/// gets 1 (random-walk centering).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// VAR lag order, at least 1.
    pub p: usize,
    /// One flag per endogenous variable; `true` = treat as stationary.
    pub stationary_flags: Vec<bool>,
}

impl ModelConfig {
    /// Checks internal consistency against a variable count.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.p == 0 {
            return Err(Error::InvalidConfig("lag order p must be at least 1".into()));
        }
        if self.stationary_flags.len() != n {
            return Err(Error::InvalidConfig(format!(
                "{} stationary flags for {} variables",
                self.stationary_flags.len(),
                n
            )));
        }
        Ok(())
    }
}

/// Hyperparameters of the hierarchical prior.
///
/// Scale/shape pairs follow the conventions used throughout the sampler:
/// `G(a, nu)` has density proportional to `x^(nu-1) exp(-x/a)` (mean `a nu`)
/// and `IG2(s, nu)` has density proportional to
/// `x^-((nu+2)/2) exp(-s/(2x))` (mean `s/(nu-2)` for `nu > 2`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorConfig {
    /// Scale of the gamma prior on the volatility-of-volatility variance.
    pub s_omega: f64,
    /// Shape of the same prior; must exceed 0.5 for SDDR verification.
    pub a_omega: f64,
    /// Degrees of freedom of the IG2 prior on each B0 row scale.
    pub nu_0: f64,
    /// Shape of the gamma hyperprior on the B0-row scale's scale.
    pub nu_gamma0: f64,
    /// Scale of the top-level IG2 prior closing the B0 hierarchy.
    pub s_s0: f64,
    /// Degrees of freedom of the top-level IG2 prior on the B0 side.
    pub nu_s0: f64,
    /// Degrees of freedom of the IG2 prior on each A row scale.
    pub nu_a: f64,
    /// Shape of the gamma hyperprior on the A-row scale's scale.
    pub nu_gamma_a: f64,
    /// Scale of the top-level IG2 prior closing the A hierarchy.
    pub s_s_a: f64,
    /// Degrees of freedom of the top-level IG2 prior on the A side.
    pub nu_s_a: f64,
    /// Optional override of the diagonal of the A-prior scaling matrix.
    /// When absent it is built as `(1, 1/2, ..., 1/p)` per lag block times
    /// each variable, followed by 100 for every deterministic column.
    pub omega_bar: Option<Vec<f64>>,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            s_omega: 0.05,
            a_omega: 1.0,
            nu_0: 10.0,
            nu_gamma0: 10.0,
            s_s0: 100.0,
            nu_s0: 1.0,
            nu_a: 10.0,
            nu_gamma_a: 10.0,
            s_s_a: 10.0,
            nu_s_a: 10.0,
            omega_bar: None,
        }
    }
}

impl PriorConfig {
    /// Checks positivity of every scale and shape.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("s_omega", self.s_omega),
            ("a_omega", self.a_omega),
            ("nu_0", self.nu_0),
            ("nu_gamma0", self.nu_gamma0),
            ("s_s0", self.s_s0),
            ("nu_s0", self.nu_s0),
            ("nu_a", self.nu_a),
            ("nu_gamma_a", self.nu_gamma_a),
            ("s_s_a", self.s_s_a),
            ("nu_s_a", self.nu_s_a),
        ];
        for (name, value) in fields {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "prior hyperparameter {name} must be positive and finite, got {value}"
                )));
            }
        }
        if let Some(ob) = &self.omega_bar {
            if ob.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                return Err(Error::InvalidConfig(
                    "omega_bar entries must be positive and finite".into(),
                ));
            }
        }
        Ok(())
    }

    /// Diagonal of the A-prior scaling matrix for a model of `n` variables,
    /// `p` lags, and `n_det` deterministic columns.
    ///
    /// Lag blocks shrink harder with increasing lag (`1/lag` per block);
    /// deterministic columns get a deliberately loose factor of 100.
    pub fn resolve_omega_bar(&self, n: usize, p: usize, n_det: usize) -> Result<DVector<f64>> {
        let k = n * p + n_det;
        if let Some(ob) = &self.omega_bar {
            if ob.len() != k {
                return Err(Error::InvalidConfig(format!(
                    "omega_bar has {} entries but the model needs {k}",
                    ob.len()
                )));
            }
            return Ok(DVector::from_column_slice(ob));
        }
        let mut diag = Vec::with_capacity(k);
        for lag in 1..=p {
            diag.extend(std::iter::repeat(1.0 / lag as f64).take(n));
        }
        diag.extend(std::iter::repeat(100.0).take(n_det));
        Ok(DVector::from_vec(diag))
    }
}

/// Per-equation stochastic-volatility state.
///
/// The path `h` covers the estimation sample (`t = 1..T'`); `h_{n.0} = 0` is
/// implicit and never stored. Mixture indicators are zero-based indices into
/// the ten-component table.
#[derive(Clone, Debug, PartialEq)]
pub struct SvEquationState {
    /// Latent standardized log-volatility path, length `T'`.
    pub h: DVector<f64>,
    /// Volatility-of-volatility loading; 0 means homoskedastic.
    pub omega: f64,
    /// AR(1) coefficient of the latent path.
    pub rho: f64,
    /// Variance of the normal prior on `omega`.
    pub sigma2_omega: f64,
    /// Mixture-component indicators, length `T'`, entries in `0..10`.
    pub s: Vec<usize>,
}

/// Hyperparameters of the two shrinkage hierarchies, one entry per equation
/// for the local levels plus one global scale each.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperState {
    /// Row-specific prior variances for B0 rows.
    pub gamma_0: DVector<f64>,
    /// IG2 scales feeding each `gamma_0`.
    pub s_0: DVector<f64>,
    /// Global scale closing the B0 hierarchy.
    pub s_gamma0: f64,
    /// Row-specific prior variance multipliers for A rows.
    pub gamma_a: DVector<f64>,
    /// IG2 scales feeding each `gamma_a`.
    pub s_a: DVector<f64>,
    /// Global scale closing the A hierarchy.
    pub s_gamma_a: f64,
}

/// One full parameter draw: structural matrix, autoregressive coefficients,
/// per-equation volatility states, and shrinkage hyperparameters.
#[derive(Clone, Debug, PartialEq)]
pub struct StructuralState {
    /// Contemporaneous structural matrix, `N x N`.
    pub b0: DMatrix<f64>,
    /// Autoregressive/deterministic coefficients, `N x (N p + d)`.
    pub a: DMatrix<f64>,
    /// Per-equation stochastic-volatility blocks, length `N`.
    pub sv: Vec<SvEquationState>,
    /// Shrinkage hyperparameters.
    pub hyper: HyperState,
}

/// Chain provenance attached to a posterior sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    /// Seed the chain was run with.
    pub seed: u64,
    /// Index of the chain within a multi-chain run.
    pub chain_id: usize,
    /// Discarded warm-up sweeps.
    pub n_burn: usize,
    /// Thinning interval between stored draws.
    pub thin: usize,
}

/// Stored posterior draws plus, per draw and equation, the conditional
/// posterior mean and variance of `omega` used by the Savage-Dickey ratio.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorSample {
    /// Kept draws in chain order.
    pub draws: Vec<StructuralState>,
    /// For draw `s` and equation `n`, `sddr_moments[s][n] = (mean, variance)`
    /// of the full-conditional normal posterior of `omega_n`.
    pub sddr_moments: Vec<Vec<(f64, f64)>>,
    /// Chain provenance.
    pub meta: SampleMeta,
}

impl PosteriorSample {
    /// Checks the draw/moment bookkeeping invariants.
    pub fn validate(&self) -> Result<()> {
        if self.sddr_moments.len() != self.draws.len() {
            return Err(Error::InvalidData(format!(
                "{} moment records for {} draws",
                self.sddr_moments.len(),
                self.draws.len()
            )));
        }
        for (i, per_eq) in self.sddr_moments.iter().enumerate() {
            if per_eq.iter().any(|&(_, v)| !(v > 0.0)) {
                return Err(Error::InvalidData(format!(
                    "nonpositive conditional variance in moment record {i}"
                )));
            }
        }
        Ok(())
    }

    /// Number of equations, 0 for an empty sample.
    pub fn n_equations(&self) -> usize {
        self.draws.first().map_or(0, |d| d.b0.nrows())
    }
}

// Ten-component normal mixture approximating the log chi-squared(1)
// distribution, from Omori, Chib, Shephard & Nakajima (2007), Table 1.
const OMORI_PI: [f64; 10] = [
    0.006_09, 0.047_75, 0.130_57, 0.206_74, 0.227_15, 0.188_42, 0.120_47, 0.055_91, 0.015_75,
    0.001_15,
];
const OMORI_MU: [f64; 10] = [
    1.926_77, 1.347_44, 0.735_04, 0.022_66, -0.851_73, -1.972_78, -3.467_88, -5.552_46,
    -8.683_84, -14.650_00,
];
const OMORI_SIGMA2: [f64; 10] = [
    0.112_65, 0.177_88, 0.267_68, 0.406_11, 0.626_99, 0.985_83, 1.574_69, 2.544_98, 4.165_91,
    7.333_42,
];

/// Normal-mixture approximation to the log of a squared standard normal,
/// used to linearize the volatility measurement equation.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureTable {
    pi: [f64; 10],
    mu: [f64; 10],
    sigma2: [f64; 10],
}

impl MixtureTable {
    /// Builds a table after checking it actually approximates log chi²(1):
    /// weights sum to one, variances are positive, and the first two moments
    /// match `digamma(1/2) + log 2` and `pi²/2` within the documented
    /// tolerances. The moment gate catches transcription errors in the
    /// embedded constants.
    pub fn new(pi: [f64; 10], mu: [f64; 10], sigma2: [f64; 10]) -> Result<Self> {
        let weight_sum: f64 = pi.iter().sum();
        if (weight_sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "mixture weights sum to {weight_sum}, expected 1"
            )));
        }
        if pi.iter().any(|&w| w <= 0.0) || sigma2.iter().any(|&v| v <= 0.0) {
            return Err(Error::InvalidConfig(
                "mixture weights and variances must be positive".into(),
            ));
        }
        let table = Self { pi, mu, sigma2 };
        // log chi-squared(1) moments: mean digamma(1/2) + log 2, variance pi^2/2.
        let target_mean = -1.270_362_845_461_478;
        let target_var = std::f64::consts::PI.powi(2) / 2.0;
        if (table.mean() - target_mean).abs() > 1e-2 {
            return Err(Error::InvalidConfig(format!(
                "mixture mean {} is not within 1e-2 of {target_mean}",
                table.mean()
            )));
        }
        if (table.variance() - target_var).abs() > 1e-1 {
            return Err(Error::InvalidConfig(format!(
                "mixture variance {} is not within 1e-1 of {target_var}",
                table.variance()
            )));
        }
        Ok(table)
    }

    /// The ten-component table of Omori et al. (2007).
    pub fn omori() -> &'static MixtureTable {
        static TABLE: OnceLock<MixtureTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            MixtureTable::new(OMORI_PI, OMORI_MU, OMORI_SIGMA2)
                .expect("embedded mixture table satisfies its moment gate")
        })
    }

    /// Component weight.
    pub fn pi(&self, j: usize) -> f64 {
        self.pi[j]
    }

    /// Component mean.
    pub fn mu(&self, j: usize) -> f64 {
        self.mu[j]
    }

    /// Component variance.
    pub fn sigma2(&self, j: usize) -> f64 {
        self.sigma2[j]
    }

    /// Number of components.
    pub fn len(&self) -> usize {
        self.pi.len()
    }

    /// Always false; the table is never empty.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Mixture mean.
    pub fn mean(&self) -> f64 {
        (0..10).map(|j| self.pi[j] * self.mu[j]).sum()
    }

    /// Mixture variance.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        let second: f64 = (0..10)
            .map(|j| self.pi[j] * (self.sigma2[j] + self.mu[j] * self.mu[j]))
            .sum();
        second - mean * mean
    }

    /// Index of the highest-weight component (the prior mode of the
    /// indicators, used to initialize chains).
    pub fn max_weight_component(&self) -> usize {
        let mut best = 0;
        for j in 1..self.pi.len() {
            if self.pi[j] > self.pi[best] {
                best = j;
            }
        }
        best
    }
}

/// Builds the lagged regressor system: returns `(Yt, X)` where `Yt` drops the
/// first `p` observations and row `t` of `X` stacks
/// `(y_{t-1}, ..., y_{t-p}, d_t)` aligned with row `t` of `Yt`.
pub fn build_regressors(
    data: &TimeSeriesData,
    cfg: &ModelConfig,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    cfg.validate(data.n())?;
    let t = data.t();
    let n = data.n();
    let n_det = data.n_det();
    let p = cfg.p;
    if t <= p {
        return Err(Error::InvalidData(format!(
            "need more than p = {p} observations, got {t}"
        )));
    }
    let t_eff = t - p;
    let k = n * p + n_det;
    let yt = data.y.rows(p, t_eff).into_owned();
    let mut x = DMatrix::zeros(t_eff, k);
    for row in 0..t_eff {
        let tau = p + row; // time index of the regressand
        for lag in 1..=p {
            for var in 0..n {
                x[(row, (lag - 1) * n + var)] = data.y[(tau - lag, var)];
            }
        }
        for col in 0..n_det {
            x[(row, n * p + col)] = data.d[(tau, col)];
        }
    }
    Ok((yt, x))
}

/// Prior mean of the autoregressive coefficients: the first-own-lag diagonal
/// carries 1 for variables flagged non-stationary and 0 for stationary ones;
/// everything else (cross terms, higher lags, deterministic columns) is 0.
pub fn prior_mean_a(cfg: &ModelConfig, n_det: usize) -> DMatrix<f64> {
    let n = cfg.stationary_flags.len();
    let mut a_bar = DMatrix::zeros(n, n * cfg.p + n_det);
    for (i, stationary) in cfg.stationary_flags.iter().enumerate() {
        a_bar[(i, i)] = if *stationary { 0.0 } else { 1.0 };
    }
    a_bar
}

/// Checks every `StructuralState` invariant; returns one human-readable
/// violation per broken bound (empty means the state is valid).
pub fn validate_state(state: &StructuralState) -> Vec<String> {
    let mut violations = Vec::new();
    let n = state.b0.nrows();

    if state.b0.ncols() != n {
        violations.push(format!(
            "b0: expected square matrix, got {}x{}",
            state.b0.nrows(),
            state.b0.ncols()
        ));
        return violations;
    }
    if state.a.nrows() != n {
        violations.push(format!("a: {} rows for {} equations", state.a.nrows(), n));
    }
    if state.sv.len() != n {
        violations.push(format!("sv: {} blocks for {} equations", state.sv.len(), n));
    }

    if first_nonfinite(&state.b0).is_some() {
        violations.push("b0: contains non-finite entries".into());
    } else {
        // Hadamard bound keeps the singularity threshold scale-invariant.
        let row_norm_product: f64 = (0..n).map(|i| state.b0.row(i).norm()).product();
        let threshold = f64::EPSILON * row_norm_product.max(f64::MIN_POSITIVE);
        let det = state.b0.determinant();
        if det.abs() <= threshold {
            violations.push(format!(
                "b0: |determinant| = {:.3e} at or below machine-scaled threshold {:.3e}",
                det.abs(),
                threshold
            ));
        }
    }
    if first_nonfinite(&state.a).is_some() {
        violations.push("a: contains non-finite entries".into());
    }

    for (label, value) in [
        ("hyper.s_gamma0", state.hyper.s_gamma0),
        ("hyper.s_gamma_a", state.hyper.s_gamma_a),
    ] {
        if !(value > 0.0) || !value.is_finite() {
            violations.push(format!("{label}: must be positive, got {value}"));
        }
    }
    for (label, vec) in [
        ("hyper.gamma_0", &state.hyper.gamma_0),
        ("hyper.s_0", &state.hyper.s_0),
        ("hyper.gamma_a", &state.hyper.gamma_a),
        ("hyper.s_a", &state.hyper.s_a),
    ] {
        if vec.len() != n {
            violations.push(format!("{label}: {} entries for {} equations", vec.len(), n));
        } else if vec.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            violations.push(format!("{label}: entries must be positive and finite"));
        }
    }

    for (i, sv) in state.sv.iter().enumerate() {
        if !(sv.sigma2_omega > 0.0 && sv.sigma2_omega < 1.0) {
            violations.push(format!(
                "sv[{i}].sigma2_omega: must lie in (0, 1), got {}",
                sv.sigma2_omega
            ));
        }
        let rho_bound = (1.0 - sv.sigma2_omega).max(0.0).sqrt();
        if !(sv.rho.abs() < rho_bound) {
            violations.push(format!(
                "sv[{i}].rho: |rho| = {} must be below sqrt(1 - sigma2_omega) = {rho_bound}",
                sv.rho.abs()
            ));
        }
        if !sv.omega.is_finite() {
            violations.push(format!("sv[{i}].omega: must be finite, got {}", sv.omega));
        }
        if sv.h.iter().any(|v| !v.is_finite()) {
            violations.push(format!("sv[{i}].h: contains non-finite entries"));
        }
        if sv.s.len() != sv.h.len() {
            violations.push(format!(
                "sv[{i}].s: {} indicators for {} path entries",
                sv.s.len(),
                sv.h.len()
            ));
        }
        if sv.s.iter().any(|&j| j >= 10) {
            violations.push(format!("sv[{i}].s: indicator out of range 0..10"));
        }
    }

    violations
}
