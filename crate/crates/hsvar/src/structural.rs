//! Post-sampling structural analysis.
//!
//! Everything here consumes finished posterior draws: moving-average impulse
//! responses `Theta_i = Phi_i B0^-1`, the sign/permutation normalization that
//! maps each draw onto a benchmark labelling before averaging, pointwise
//! summaries of the conditional variance paths `exp(omega h_t)`, and the
//! correlation of posterior-mean structural shocks with an external
//! instrument series.  All operations are pure; none of them feed back into
//! the sampler.

use crate::error::{Error, Result};
use crate::model::{PosteriorSample, StructuralState};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// Coverage used for highest-posterior-density intervals when the caller
/// does not choose one.
pub const DEFAULT_HPD_LEVEL: f64 = 0.90;

/// Exhaustive sign/permutation search is exact but factorial; above this
/// dimension the caller has outgrown the method.
const MAX_NORMALIZATION_DIM: usize = 8;

/// Structural impulse responses `Theta_0..Theta_H` for one parameter draw.
#[derive(Clone, Debug, PartialEq)]
pub struct IrfResult {
    /// `theta[i][(k, j)]` is the response of variable `k` to shock `j` at
    /// horizon `i`; `theta[0]` equals `B0^-1` of the draw.
    pub theta: Vec<DMatrix<f64>>,
    /// Largest horizon, so `theta.len() == horizon + 1`.
    pub horizon: usize,
}

/// Reference labelling that draws are normalized against: a benchmark
/// structural matrix and an optional positive-definite weighting of the
/// elementwise discrepancies (row-major vectorization).  `None` weighting
/// means the identity, under which the search reduces to a per-row
/// assignment problem.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizationBenchmark {
    /// Benchmark `N x N` structural matrix.
    pub b0_hat: DMatrix<f64>,
    /// Optional `N^2 x N^2` SPD weighting; `None` = identity.
    pub omega_hat: Option<DMatrix<f64>>,
}

/// The sign/permutation transform selected for one draw: output row `i` is
/// `signs[i]` times draw row `permutation[i]`, at weighted squared distance
/// `distance` from the benchmark.
#[derive(Clone, Debug, PartialEq)]
pub struct Normalization {
    pub permutation: Vec<usize>,
    pub signs: Vec<f64>,
    pub distance: f64,
}

/// Pointwise summary of one equation's conditional variance path, with the
/// deterministic `t = 0` value (always exactly 1) prepended.
#[derive(Clone, Debug, PartialEq)]
pub struct EquationVariancePath {
    pub mean: Vec<f64>,
    pub hpd_lower: Vec<f64>,
    pub hpd_upper: Vec<f64>,
}

impl NormalizationBenchmark {
    /// Benchmark with identity weighting.
    pub fn identity_weighted(b0_hat: DMatrix<f64>) -> Result<Self> {
        validate_benchmark_matrix(&b0_hat)?;
        Ok(Self {
            b0_hat,
            omega_hat: None,
        })
    }

    /// Benchmark with an explicit SPD weighting of the row-major
    /// vectorization of the discrepancy.
    pub fn weighted(b0_hat: DMatrix<f64>, omega_hat: DMatrix<f64>) -> Result<Self> {
        validate_benchmark_matrix(&b0_hat)?;
        let d = b0_hat.nrows() * b0_hat.nrows();
        if omega_hat.nrows() != d || omega_hat.ncols() != d {
            return Err(Error::Dimension(format!(
                "weighting matrix is {}x{}, expected {d}x{d}",
                omega_hat.nrows(),
                omega_hat.ncols()
            )));
        }
        let asym = (&omega_hat - omega_hat.transpose()).abs().max();
        if asym > 1e-10 * (1.0 + omega_hat.abs().max()) {
            return Err(Error::InvalidData(format!(
                "weighting matrix is not symmetric (asymmetry {asym:.3e})"
            )));
        }
        if omega_hat.clone().cholesky().is_none() {
            return Err(Error::Domain(
                "weighting matrix is not positive definite".into(),
            ));
        }
        Ok(Self {
            b0_hat,
            omega_hat: Some(omega_hat),
        })
    }
}

fn validate_benchmark_matrix(b0_hat: &DMatrix<f64>) -> Result<()> {
    if b0_hat.nrows() != b0_hat.ncols() || b0_hat.is_empty() {
        return Err(Error::Dimension(format!(
            "benchmark must be square and nonempty, got {}x{}",
            b0_hat.nrows(),
            b0_hat.ncols()
        )));
    }
    if b0_hat.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidData("benchmark has nonfinite entries".into()));
    }
    if b0_hat.clone().try_inverse().is_none() {
        return Err(Error::Singular("benchmark matrix is singular".into()));
    }
    Ok(())
}

/// Reduced-form moving-average matrices `Phi_0..Phi_H` from the lag
/// coefficient blocks: `Phi_0 = I` and
/// `Phi_i = sum_{j=1..min(i,p)} A_j Phi_{i-j}`.
pub fn compute_phi(a_lags: &[DMatrix<f64>], horizon: usize) -> Result<Vec<DMatrix<f64>>> {
    let first = a_lags.first().ok_or_else(|| {
        Error::InvalidData("no lag coefficient blocks; the dimension cannot be inferred".into())
    })?;
    let n = first.nrows();
    for (j, a) in a_lags.iter().enumerate() {
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::Dimension(format!(
                "lag block {} is {}x{}, expected {n}x{n}",
                j + 1,
                a.nrows(),
                a.ncols()
            )));
        }
    }
    let p = a_lags.len();
    let mut phi = Vec::with_capacity(horizon + 1);
    phi.push(DMatrix::identity(n, n));
    for i in 1..=horizon {
        let mut acc = DMatrix::zeros(n, n);
        for j in 1..=i.min(p) {
            acc += &a_lags[j - 1] * &phi[i - j];
        }
        phi.push(acc);
    }
    Ok(phi)
}

/// Structural impulse responses of one draw: `Theta_i = Phi_i B0^-1`, with
/// the lag blocks taken from the first `n_lags * N` columns of the draw's
/// coefficient matrix (deterministic columns do not enter the recursion).
pub fn compute_irf(draw: &StructuralState, n_lags: usize, horizon: usize) -> Result<IrfResult> {
    let n = draw.b0.nrows();
    if n_lags == 0 {
        return Err(Error::InvalidConfig(
            "impulse responses need at least one lag block".into(),
        ));
    }
    if draw.a.nrows() != n || draw.a.ncols() < n_lags * n {
        return Err(Error::Dimension(format!(
            "coefficient matrix is {}x{}, too small for {n_lags} lags of {n} variables",
            draw.a.nrows(),
            draw.a.ncols()
        )));
    }
    let blocks: Vec<DMatrix<f64>> = (0..n_lags)
        .map(|j| draw.a.columns(j * n, n).into_owned())
        .collect();
    let phi = compute_phi(&blocks, horizon)?;
    let b0_inv = draw
        .b0
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("B0 of the draw is singular".into()))?;
    let mut theta: Vec<DMatrix<f64>> = Vec::with_capacity(horizon + 1);
    theta.push(b0_inv.clone());
    theta.extend(phi.iter().skip(1).map(|f| f * &b0_inv));
    Ok(IrfResult { theta, horizon })
}

/// Rescales one shock so that `variable` moves by `target` at impact;
/// the same factor multiplies that shock's column at every horizon.
pub fn rescale_irf(
    irf: &IrfResult,
    shock: usize,
    variable: usize,
    target: f64,
) -> Result<IrfResult> {
    let n = irf
        .theta
        .first()
        .map(|m| m.nrows())
        .ok_or_else(|| Error::InvalidData("impulse responses are empty".into()))?;
    if shock >= n || variable >= n {
        return Err(Error::Dimension(format!(
            "shock {shock} / variable {variable} out of range for {n} equations"
        )));
    }
    if !target.is_finite() {
        return Err(Error::Domain(format!("rescale target {target} is not finite")));
    }
    let impact = irf.theta[0][(variable, shock)];
    if impact == 0.0 || !impact.is_finite() {
        return Err(Error::Domain(format!(
            "impact of shock {shock} on variable {variable} is {impact}; cannot rescale"
        )));
    }
    let factor = target / impact;
    let mut out = irf.clone();
    for theta in &mut out.theta {
        theta.column_mut(shock).scale_mut(factor);
    }
    Ok(out)
}

/// Finds the sign/permutation transform of `b0`'s rows closest to the
/// benchmark under its weighting.
///
/// Identity weighting separates across rows, so the search collapses to an
/// assignment problem with analytically optimal signs (zero inner products
/// resolve to `+1`).  An explicit weighting couples the rows and all
/// `2^N N!` candidates are scored.  Both searches enumerate candidates with
/// the identity transform first and accept strictly better scores only,
/// which makes normalization idempotent: a draw already in benchmark order
/// keeps its exact bits.
pub fn best_transform(
    b0: &DMatrix<f64>,
    bench: &NormalizationBenchmark,
) -> Result<Normalization> {
    let n = b0.nrows();
    if b0.ncols() != n || n != bench.b0_hat.nrows() {
        return Err(Error::Dimension(format!(
            "draw matrix is {}x{}, benchmark is {}x{}",
            b0.nrows(),
            b0.ncols(),
            bench.b0_hat.nrows(),
            bench.b0_hat.ncols()
        )));
    }
    if n > MAX_NORMALIZATION_DIM {
        return Err(Error::InvalidConfig(format!(
            "normalization enumerates 2^N N! candidates and is capped at \
             N = {MAX_NORMALIZATION_DIM}, got N = {n}"
        )));
    }
    match &bench.omega_hat {
        None => best_transform_identity(b0, &bench.b0_hat),
        Some(omega) => best_transform_weighted(b0, &bench.b0_hat, omega),
    }
}

fn best_transform_identity(b0: &DMatrix<f64>, b0_hat: &DMatrix<f64>) -> Result<Normalization> {
    let n = b0.nrows();
    // dot[(i, j)] = <benchmark row i, draw row j>.
    let dot = b0_hat * b0.transpose();
    let bench_norm2: Vec<f64> = (0..n).map(|i| b0_hat.row(i).norm_squared()).collect();
    let draw_norm2: Vec<f64> = (0..n).map(|j| b0.row(j).norm_squared()).collect();
    let cost = |i: usize, j: usize| bench_norm2[i] + draw_norm2[j] - 2.0 * dot[(i, j)].abs();

    let mut best: Option<(Vec<usize>, f64)> = None;
    for perm in permutations(n) {
        let total: f64 = perm.iter().enumerate().map(|(i, &j)| cost(i, j)).sum();
        if best.as_ref().is_none_or(|(_, c)| total < *c) {
            best = Some((perm, total));
        }
    }
    let (permutation, distance) = best.expect("permutation enumeration is nonempty");
    let signs = permutation
        .iter()
        .enumerate()
        .map(|(i, &j)| if dot[(i, j)] < 0.0 { -1.0 } else { 1.0 })
        .collect();
    Ok(Normalization {
        permutation,
        signs,
        distance: distance.max(0.0),
    })
}

fn best_transform_weighted(
    b0: &DMatrix<f64>,
    b0_hat: &DMatrix<f64>,
    omega: &DMatrix<f64>,
) -> Result<Normalization> {
    let n = b0.nrows();
    let chol: Cholesky<f64, Dyn> = omega
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Domain("weighting matrix is not positive definite".into()))?;
    let mut best: Option<(Vec<usize>, usize, f64)> = None;
    let mut residual = DVector::<f64>::zeros(n * n);
    for perm in permutations(n) {
        for mask in 0..(1usize << n) {
            for i in 0..n {
                let sign = if mask >> i & 1 == 1 { -1.0 } else { 1.0 };
                for col in 0..n {
                    residual[i * n + col] = sign * b0[(perm[i], col)] - b0_hat[(i, col)];
                }
            }
            let weighted = chol.solve(&residual);
            let score = residual.dot(&weighted);
            if best.as_ref().is_none_or(|&(_, _, c)| score < c) {
                best = Some((perm.clone(), mask, score));
            }
        }
    }
    let (permutation, mask, distance) = best.expect("candidate enumeration is nonempty");
    let signs = (0..n)
        .map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 })
        .collect();
    Ok(Normalization {
        permutation,
        signs,
        distance: distance.max(0.0),
    })
}

/// Maps one draw onto the benchmark labelling: `B0` rows are permuted and
/// sign-flipped by the optimal transform, and everything indexed by equation
/// follows its row — the stochastic-volatility block and the row-level
/// shrinkage scales.  The autoregressive coefficients parameterize the
/// reduced form, which is invariant to relabelling structural shocks, so
/// they are untouched.
pub fn normalize_draw(
    draw: &StructuralState,
    bench: &NormalizationBenchmark,
) -> Result<StructuralState> {
    let n = draw.b0.nrows();
    if draw.sv.len() != n || draw.hyper.gamma_0.len() != n || draw.hyper.s_0.len() != n {
        return Err(Error::Dimension(format!(
            "draw bookkeeping is inconsistent: {} equations, {} sv blocks, {} row scales",
            n,
            draw.sv.len(),
            draw.hyper.gamma_0.len()
        )));
    }
    let transform = best_transform(&draw.b0, bench)?;
    let mut out = draw.clone();
    for (i, &j) in transform.permutation.iter().enumerate() {
        out.b0.row_mut(i).copy_from(&(draw.b0.row(j) * transform.signs[i]));
        out.sv[i] = draw.sv[j].clone();
        out.hyper.gamma_0[i] = draw.hyper.gamma_0[j];
        out.hyper.s_0[i] = draw.hyper.s_0[j];
    }
    Ok(out)
}

/// Pointwise posterior mean and shortest highest-density interval of the
/// conditional variances `sigma2_{n,t} = exp(omega_n h_{n,t})`, one summary
/// per equation with the deterministic `t = 0` value prepended.
pub fn conditional_variance_paths(
    sample: &PosteriorSample,
    level: f64,
) -> Result<Vec<EquationVariancePath>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "HPD level must lie strictly between 0 and 1, got {level}"
        )));
    }
    let first = sample
        .draws
        .first()
        .ok_or_else(|| Error::InvalidData("posterior sample holds no draws".into()))?;
    let n = first.sv.len();
    let t_eff = first.sv.first().map_or(0, |sv| sv.h.len());
    if n == 0 || t_eff == 0 {
        return Err(Error::InvalidData(
            "draws carry no volatility paths; variance summaries need stored h".into(),
        ));
    }
    for (s, draw) in sample.draws.iter().enumerate() {
        if draw.sv.len() != n || draw.sv.iter().any(|sv| sv.h.len() != t_eff) {
            return Err(Error::Dimension(format!(
                "draw {s} has a different equation count or path length than draw 0"
            )));
        }
    }

    let mut out = Vec::with_capacity(n);
    for eq in 0..n {
        let mut path = EquationVariancePath {
            mean: Vec::with_capacity(t_eff + 1),
            hpd_lower: Vec::with_capacity(t_eff + 1),
            hpd_upper: Vec::with_capacity(t_eff + 1),
        };
        // h_0 = 0 by construction, so the variance at t = 0 is exactly one.
        path.mean.push(1.0);
        path.hpd_lower.push(1.0);
        path.hpd_upper.push(1.0);
        for t in 0..t_eff {
            let mut values: Vec<f64> = sample
                .draws
                .iter()
                .map(|d| (d.sv[eq].omega * d.sv[eq].h[t]).exp())
                .collect();
            path.mean
                .push(values.iter().sum::<f64>() / values.len() as f64);
            values.sort_by(|a, b| a.partial_cmp(b).expect("variances are not NaN"));
            let (lo, hi) = shortest_window(&values, level);
            path.hpd_lower.push(lo);
            path.hpd_upper.push(hi);
        }
        out.push(path);
    }
    Ok(out)
}

/// Shortest interval over a sorted sample that contains at least `level` of
/// the points.  Ties go to the leftmost window, which keeps the result
/// deterministic.
fn shortest_window(sorted: &[f64], level: f64) -> (f64, f64) {
    let s = sorted.len();
    let m = ((level * s as f64).ceil() as usize).clamp(1, s);
    let mut best = (sorted[0], sorted[s - 1]);
    let mut width = f64::INFINITY;
    for i in 0..=(s - m) {
        let w = sorted[i + m - 1] - sorted[i];
        if w < width {
            width = w;
            best = (sorted[i], sorted[i + m - 1]);
        }
    }
    best
}

/// Pearson correlation between each equation's posterior-mean structural
/// shock path `w_t = B0 (y_t - A x_t)` and an external instrument, skipping
/// time points where the instrument is missing (marked `NaN`).
pub fn shock_instrument_correlation(
    sample: &PosteriorSample,
    yt: &DMatrix<f64>,
    x: &DMatrix<f64>,
    instrument: &[f64],
) -> Result<Vec<f64>> {
    let first = sample
        .draws
        .first()
        .ok_or_else(|| Error::InvalidData("posterior sample holds no draws".into()))?;
    let n = first.b0.nrows();
    let t_eff = yt.nrows();
    if x.nrows() != t_eff || yt.ncols() != n {
        return Err(Error::Dimension(format!(
            "regression blocks are {}x{} and {}x{}, inconsistent with {n} equations",
            yt.nrows(),
            yt.ncols(),
            x.nrows(),
            x.ncols()
        )));
    }
    if instrument.len() != t_eff {
        return Err(Error::Dimension(format!(
            "instrument has {} observations, sample has {t_eff}",
            instrument.len()
        )));
    }

    let mut shocks = DMatrix::<f64>::zeros(t_eff, n);
    for (s, draw) in sample.draws.iter().enumerate() {
        if draw.b0.nrows() != n || draw.a.nrows() != n || draw.a.ncols() != x.ncols() {
            return Err(Error::Dimension(format!(
                "draw {s} has different dimensions than draw 0"
            )));
        }
        shocks += (yt - x * draw.a.transpose()) * draw.b0.transpose();
    }
    shocks /= sample.draws.len() as f64;

    let keep: Vec<usize> = (0..t_eff).filter(|&t| instrument[t].is_finite()).collect();
    if keep.len() < 3 {
        return Err(Error::InvalidData(format!(
            "only {} overlapping observations between shocks and instrument; need at least 3",
            keep.len()
        )));
    }
    let m = keep.len() as f64;
    let z_mean = keep.iter().map(|&t| instrument[t]).sum::<f64>() / m;
    let z_var = keep
        .iter()
        .map(|&t| (instrument[t] - z_mean).powi(2))
        .sum::<f64>();
    if z_var == 0.0 {
        return Err(Error::Domain(
            "instrument is constant over the overlap; correlation undefined".into(),
        ));
    }

    let mut out = Vec::with_capacity(n);
    for eq in 0..n {
        let w_mean = keep.iter().map(|&t| shocks[(t, eq)]).sum::<f64>() / m;
        let mut cov = 0.0;
        let mut w_var = 0.0;
        for &t in &keep {
            let dw = shocks[(t, eq)] - w_mean;
            cov += dw * (instrument[t] - z_mean);
            w_var += dw * dw;
        }
        if w_var == 0.0 {
            return Err(Error::Domain(format!(
                "posterior-mean shock {eq} is constant over the overlap; correlation undefined"
            )));
        }
        out.push(cov / (w_var * z_var).sqrt());
    }
    Ok(out)
}

/// All permutations of `0..n` in lexicographic order, identity first.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for j in 0..n {
            if !used[j] {
                used[j] = true;
                cur.push(j);
                rec(n, cur, used, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(n, &mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{HyperState, SampleMeta, SvEquationState};
    use crate::theory::block_rotation_fixing;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_state(n: usize, p: usize, n_det: usize, t_eff: usize, rng: &mut ChaCha8Rng) -> StructuralState {
        let b0 = loop {
            let m = DMatrix::<f64>::from_fn(n, n, |i, j| {
                let x: f64 = rng.sample(StandardNormal);
                if i == j {
                    x + 2.0
                } else {
                    0.5 * x
                }
            });
            if m.determinant().abs() > 0.1 {
                break m;
            }
        };
        let a = DMatrix::<f64>::from_fn(n, n * p + n_det, |_, _| {
            0.3 * rng.sample::<f64, _>(StandardNormal)
        });
        let sv = (0..n)
            .map(|_| SvEquationState {
                h: DVector::from_fn(t_eff, |_, _| rng.sample(StandardNormal)),
                omega: 0.2 * rng.sample::<f64, _>(StandardNormal),
                rho: rng.random::<f64>() * 0.8,
                sigma2_omega: 0.02 + 0.1 * rng.random::<f64>(),
                s: (0..t_eff).map(|_| rng.random_range(0..10)).collect(),
            })
            .collect();
        let hyper = HyperState {
            gamma_0: DVector::from_fn(n, |_, _| 0.5 + rng.random::<f64>()),
            s_0: DVector::from_fn(n, |_, _| 5.0 + rng.random::<f64>()),
            s_gamma0: 30.0,
            gamma_a: DVector::from_fn(n, |_, _| 0.5 + rng.random::<f64>()),
            s_a: DVector::from_fn(n, |_, _| 5.0 + rng.random::<f64>()),
            s_gamma_a: 10.0,
        };
        StructuralState { b0, a, sv, hyper }
    }

    fn sample_from_states(draws: Vec<StructuralState>) -> PosteriorSample {
        let moments = vec![vec![(0.0, 1.0); draws[0].sv.len()]; draws.len()];
        PosteriorSample {
            draws,
            sddr_moments: moments,
            meta: SampleMeta {
                seed: 0,
                chain_id: 0,
                n_burn: 0,
                thin: 1,
            },
        }
    }

    #[test]
    fn phi_recursion_matches_the_hand_example() {
        let a1 = DMatrix::<f64>::identity(2, 2) * 0.5;
        let phi = compute_phi(&[a1], 2).unwrap();
        assert_eq!(phi[0], DMatrix::identity(2, 2));
        assert_relative_eq!(phi[1], DMatrix::identity(2, 2) * 0.5, epsilon = 1e-15);
        assert_relative_eq!(phi[2], DMatrix::identity(2, 2) * 0.25, epsilon = 1e-15);
    }

    #[test]
    fn phi_recursion_matches_companion_matrix_powers() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        // One stable and one explosive coefficient set.
        for scale in [0.3, 1.2] {
            let n = 2;
            let p = 2;
            let blocks: Vec<DMatrix<f64>> = (0..p)
                .map(|_| {
                    DMatrix::from_fn(n, n, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
                })
                .collect();
            let phi = compute_phi(&blocks, 10).unwrap();

            let mut companion = DMatrix::<f64>::zeros(n * p, n * p);
            for (j, block) in blocks.iter().enumerate() {
                companion.view_mut((0, j * n), (n, n)).copy_from(block);
            }
            companion
                .view_mut((n, 0), (n * (p - 1), n * (p - 1)))
                .copy_from(&DMatrix::identity(n * (p - 1), n * (p - 1)));

            let mut power = DMatrix::<f64>::identity(n * p, n * p);
            for i in 0..=10usize {
                let top = power.view((0, 0), (n, n)).into_owned();
                let err = (&top - &phi[i]).abs().max();
                assert!(err < 1e-12, "horizon {i}, scale {scale}: deviation {err:.3e}");
                power = &companion * power;
            }
        }
    }

    #[test]
    fn irf_reduces_to_known_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let mut draw = random_state(3, 2, 1, 5, &mut rng);

        // Zero coefficients: impact only.
        draw.a.fill(0.0);
        let irf = compute_irf(&draw, 2, 4).unwrap();
        let b0_inv = draw.b0.clone().try_inverse().unwrap();
        assert_eq!(irf.theta[0], b0_inv);
        for theta in &irf.theta[1..] {
            assert_eq!(theta.abs().max(), 0.0);
        }

        // Identity rotation: responses are the reduced-form matrices.
        let mut ident = random_state(3, 2, 0, 5, &mut rng);
        ident.b0 = DMatrix::identity(3, 3);
        let irf = compute_irf(&ident, 2, 6).unwrap();
        let blocks: Vec<DMatrix<f64>> = (0..2).map(|j| ident.a.columns(j * 3, 3).into_owned()).collect();
        let phi = compute_phi(&blocks, 6).unwrap();
        for (theta, phi_i) in irf.theta.iter().zip(&phi) {
            assert!((theta - phi_i).abs().max() < 1e-14);
        }

        // Singular rotation errors.
        let mut singular = random_state(2, 1, 0, 5, &mut rng);
        singular.b0.row_mut(1).fill(0.0);
        assert!(matches!(
            compute_irf(&singular, 1, 3),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn identified_irf_column_is_invariant_to_block_rotations() {
        // Rotating the shock space by any orthogonal matrix that fixes
        // coordinate n rotates B0 but leaves column n of every Theta_i
        // unchanged; the other columns move.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let draw = random_state(3, 2, 1, 5, &mut rng);
        let base = compute_irf(&draw, 2, 8).unwrap();
        let fixed = 1usize;

        let mut max_fixed_dev = 0.0f64;
        let mut max_other_dev = 0.0f64;
        for _ in 0..20 {
            let q = block_rotation_fixing(3, fixed, &mut rng).unwrap();
            let mut rotated = draw.clone();
            rotated.b0 = &q * &draw.b0;
            let irf = compute_irf(&rotated, 2, 8).unwrap();
            for (theta, base_theta) in irf.theta.iter().zip(&base.theta) {
                for col in 0..3 {
                    let dev = (theta.column(col) - base_theta.column(col)).abs().max();
                    if col == fixed {
                        max_fixed_dev = max_fixed_dev.max(dev);
                    } else {
                        max_other_dev = max_other_dev.max(dev);
                    }
                }
            }
        }
        assert!(max_fixed_dev < 1e-10, "fixed column moved by {max_fixed_dev:.3e}");
        assert!(max_other_dev > 0.1, "rotations barely moved other columns");
    }

    #[test]
    fn rescaling_pins_the_impact_and_scales_whole_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let draw = random_state(3, 1, 0, 5, &mut rng);
        let irf = compute_irf(&draw, 1, 5).unwrap();
        let scaled = rescale_irf(&irf, 2, 0, -1.0).unwrap();
        assert_relative_eq!(scaled.theta[0][(0, 2)], -1.0, max_relative = 1e-14);
        let factor = -1.0 / irf.theta[0][(0, 2)];
        for (orig, new) in irf.theta.iter().zip(&scaled.theta) {
            for col in 0..3 {
                for row in 0..3 {
                    let want = if col == 2 {
                        orig[(row, col)] * factor
                    } else {
                        orig[(row, col)]
                    };
                    assert_relative_eq!(new[(row, col)], want, max_relative = 1e-14);
                }
            }
        }

        let mut flat = irf.clone();
        flat.theta[0][(0, 2)] = 0.0;
        assert!(rescale_irf(&flat, 2, 0, 1.0).is_err());
    }

    #[test]
    fn normalization_is_an_exact_fixed_point_on_the_benchmark() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let draw = random_state(3, 1, 1, 4, &mut rng);
        let bench = NormalizationBenchmark::identity_weighted(draw.b0.clone()).unwrap();
        let normalized = normalize_draw(&draw, &bench).unwrap();
        assert_eq!(normalized, draw);
        let transform = best_transform(&draw.b0, &bench).unwrap();
        assert_eq!(transform.permutation, vec![0, 1, 2]);
        assert_eq!(transform.signs, vec![1.0, 1.0, 1.0]);
        assert!(transform.distance < 1e-12);
    }

    #[test]
    fn normalization_undoes_a_row_swap_and_sign_flip_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let base = random_state(3, 1, 0, 4, &mut rng);
        let bench = NormalizationBenchmark::identity_weighted(base.b0.clone()).unwrap();

        // Scramble: swap equations 0 and 1, negate row 2's loading.
        let mut scrambled = base.clone();
        let perm = [1usize, 0, 2];
        for (i, &j) in perm.iter().enumerate() {
            let sign = if i == 2 { -1.0 } else { 1.0 };
            scrambled.b0.row_mut(i).copy_from(&(base.b0.row(j) * sign));
            scrambled.sv[i] = base.sv[j].clone();
            scrambled.hyper.gamma_0[i] = base.hyper.gamma_0[j];
            scrambled.hyper.s_0[i] = base.hyper.s_0[j];
        }

        let recovered = normalize_draw(&scrambled, &bench).unwrap();
        assert_eq!(recovered.b0, base.b0);
        assert_eq!(recovered.sv, base.sv);
        assert_eq!(recovered.hyper.gamma_0, base.hyper.gamma_0);
        assert_eq!(recovered.hyper.s_0, base.hyper.s_0);
        // Reduced-form coefficients and their hierarchy never move.
        assert_eq!(recovered.a, scrambled.a);
        assert_eq!(recovered.hyper.gamma_a, scrambled.hyper.gamma_a);
    }

    #[test]
    fn assignment_fast_path_matches_full_enumeration() {
        // The identity-weighted search solves an assignment problem; scoring
        // all 2^N N! candidates through the weighted path with an identity
        // matrix must select an equally good transform.
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        for trial in 0..100 {
            let n = 2 + trial % 3;
            let draw = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
            let target = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
            if target.clone().try_inverse().is_none() {
                continue;
            }
            let fast = best_transform(
                &draw,
                &NormalizationBenchmark::identity_weighted(target.clone()).unwrap(),
            )
            .unwrap();
            let naive = best_transform(
                &draw,
                &NormalizationBenchmark::weighted(
                    target.clone(),
                    DMatrix::identity(n * n, n * n),
                )
                .unwrap(),
            )
            .unwrap();
            assert_relative_eq!(fast.distance, naive.distance, epsilon = 1e-12);
            assert_eq!(fast.permutation, naive.permutation);
            assert_eq!(fast.signs, naive.signs);
        }
    }

    #[test]
    fn normalization_is_idempotent_bit_for_bit() {
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        let target = random_state(3, 1, 0, 4, &mut rng).b0;
        let bench = NormalizationBenchmark::identity_weighted(target).unwrap();
        for _ in 0..200 {
            let draw = random_state(3, 1, 0, 4, &mut rng);
            let once = normalize_draw(&draw, &bench).unwrap();
            let twice = normalize_draw(&once, &bench).unwrap();
            assert_eq!(once, twice);
        }
    }

    #[test]
    fn a_weighted_benchmark_can_select_a_different_transform() {
        // The objective weights residuals by the *inverse* of Omega_hat, so
        // a large diagonal entry makes that residual coordinate nearly free.
        // Here the draw's first row fits the first benchmark row perfectly in
        // column 0 and badly in column 1; once column-1 discrepancies are
        // forgiven, the identity assignment beats the swap that identity
        // weighting selects.
        let target = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let draw = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.6, 0.0]);
        let ident = best_transform(
            &draw,
            &NormalizationBenchmark::identity_weighted(target.clone()).unwrap(),
        )
        .unwrap();
        assert_eq!(ident.permutation, vec![1, 0]);

        // Row-major vectorization: indices 1 and 3 are the second column.
        let mut omega = DMatrix::<f64>::identity(4, 4);
        omega[(1, 1)] = 1e6;
        omega[(3, 3)] = 1e6;
        let weighted = best_transform(
            &draw,
            &NormalizationBenchmark::weighted(target, omega).unwrap(),
        )
        .unwrap();
        assert_eq!(weighted.permutation, vec![0, 1]);
    }

    #[test]
    fn oversized_systems_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let b0 = DMatrix::<f64>::from_fn(9, 9, |i, j| {
            if i == j {
                2.0
            } else {
                0.1 * rng.sample::<f64, _>(StandardNormal)
            }
        });
        let bench = NormalizationBenchmark::identity_weighted(b0.clone()).unwrap();
        assert!(matches!(
            best_transform(&b0, &bench),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn benchmark_validation_rejects_bad_inputs() {
        assert!(NormalizationBenchmark::identity_weighted(DMatrix::zeros(2, 2)).is_err());
        assert!(NormalizationBenchmark::identity_weighted(DMatrix::zeros(2, 3)).is_err());
        let ok = DMatrix::<f64>::identity(2, 2);
        assert!(NormalizationBenchmark::weighted(ok.clone(), DMatrix::identity(3, 3)).is_err());
        let mut asym = DMatrix::<f64>::identity(4, 4);
        asym[(0, 1)] = 0.5;
        assert!(NormalizationBenchmark::weighted(ok.clone(), asym).is_err());
        let indefinite = DMatrix::<f64>::identity(4, 4) * -1.0;
        assert!(NormalizationBenchmark::weighted(ok, indefinite).is_err());
    }

    #[test]
    fn homoskedastic_draws_give_unit_variance_paths() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let draws: Vec<StructuralState> = (0..40)
            .map(|_| {
                let mut d = random_state(2, 1, 0, 6, &mut rng);
                for sv in &mut d.sv {
                    sv.omega = 0.0;
                }
                d
            })
            .collect();
        let sample = sample_from_states(draws);
        let paths = conditional_variance_paths(&sample, 0.9).unwrap();
        assert_eq!(paths.len(), 2);
        for path in &paths {
            assert_eq!(path.mean.len(), 7);
            for t in 0..7 {
                assert_eq!(path.mean[t], 1.0);
                assert_eq!(path.hpd_lower[t], 1.0);
                assert_eq!(path.hpd_upper[t], 1.0);
            }
        }
    }

    #[test]
    fn variance_paths_start_at_one_and_match_draw_averages() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let draws: Vec<StructuralState> =
            (0..50).map(|_| random_state(2, 1, 0, 4, &mut rng)).collect();
        let expected_t2: f64 = draws
            .iter()
            .map(|d| (d.sv[1].omega * d.sv[1].h[1]).exp())
            .sum::<f64>()
            / 50.0;
        let sample = sample_from_states(draws);
        let paths = conditional_variance_paths(&sample, 0.9).unwrap();
        for path in &paths {
            assert_eq!(path.mean[0], 1.0);
            assert_eq!(path.hpd_lower[0], path.hpd_upper[0]);
        }
        assert_relative_eq!(paths[1].mean[2], expected_t2, max_relative = 1e-13);
        // Intervals are ordered and contain the bulk of the draws.
        for path in &paths {
            for t in 0..path.mean.len() {
                assert!(path.hpd_lower[t] <= path.hpd_upper[t]);
            }
        }
    }

    #[test]
    fn hpd_matches_an_exhaustive_window_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        // A skewed (log-normal) draw set, where equal-tail and HPD intervals
        // genuinely differ.
        let mut values: Vec<f64> = (0..500)
            .map(|_| (0.8 * rng.sample::<f64, _>(StandardNormal)).exp())
            .collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (lo, hi) = shortest_window(&values, 0.9);

        let m = (0.9f64 * 500.0).ceil() as usize;
        let mut best = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..values.len() {
            for j in i..values.len() {
                if j - i + 1 >= m && values[j] - values[i] < best.1 - best.0 {
                    best = (values[i], values[j]);
                }
            }
        }
        assert!((lo - best.0).abs() < 1e-12 && (hi - best.1).abs() < 1e-12);
        // The window is genuinely asymmetric for skewed data.
        assert!(lo < values[24] || hi < values[474]);
    }

    #[test]
    fn variance_path_validation_rejects_malformed_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let draws: Vec<StructuralState> =
            (0..5).map(|_| random_state(2, 1, 0, 4, &mut rng)).collect();
        let sample = sample_from_states(draws);
        assert!(conditional_variance_paths(&sample, 0.0).is_err());
        assert!(conditional_variance_paths(&sample, 1.0).is_err());

        let mut empty_h = sample.clone();
        for draw in &mut empty_h.draws {
            for sv in &mut draw.sv {
                sv.h = DVector::zeros(0);
            }
        }
        assert!(conditional_variance_paths(&empty_h, 0.9).is_err());

        let mut ragged = sample.clone();
        ragged.draws[3].sv[0].h = DVector::zeros(2);
        assert!(conditional_variance_paths(&ragged, 0.9).is_err());
    }

    #[test]
    fn instrument_correlation_recovers_a_perfect_instrument() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let t_eff = 60;
        let draw = random_state(2, 1, 1, t_eff, &mut rng);
        let x = DMatrix::<f64>::from_fn(t_eff, 3, |_, j| {
            if j == 2 {
                1.0
            } else {
                rng.sample(StandardNormal)
            }
        });
        let yt = DMatrix::<f64>::from_fn(t_eff, 2, |_, _| rng.sample(StandardNormal));
        let shocks = (&yt - &x * draw.a.transpose()) * draw.b0.transpose();

        let instrument: Vec<f64> = (0..t_eff).map(|t| shocks[(t, 0)]).collect();
        let sample = sample_from_states(vec![draw]);
        let corr = shock_instrument_correlation(&sample, &yt, &x, &instrument).unwrap();
        assert_relative_eq!(corr[0], 1.0, max_relative = 1e-12);
        assert!(corr[1].abs() < 1.0);
    }

    #[test]
    fn instrument_correlation_skips_missing_entries_pairwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let t_eff = 40;
        let draw = random_state(2, 1, 0, t_eff, &mut rng);
        let x = DMatrix::<f64>::from_fn(t_eff, 2, |_, _| rng.sample(StandardNormal));
        let yt = DMatrix::<f64>::from_fn(t_eff, 2, |_, _| rng.sample(StandardNormal));
        let shocks = (&yt - &x * draw.a.transpose()) * draw.b0.transpose();

        // Instrument tracks shock 0 on even periods and is missing on odd
        // ones.
        let instrument: Vec<f64> = (0..t_eff)
            .map(|t| if t % 2 == 0 { shocks[(t, 0)] } else { f64::NAN })
            .collect();
        let sample = sample_from_states(vec![draw]);
        let corr = shock_instrument_correlation(&sample, &yt, &x, &instrument).unwrap();
        assert_relative_eq!(corr[0], 1.0, max_relative = 1e-12);

        // Independent noise stays inside the null band.
        let noise: Vec<f64> = (0..t_eff).map(|_| rng.sample(StandardNormal)).collect();
        let corr = shock_instrument_correlation(&sample, &yt, &x, &noise).unwrap();
        for c in corr {
            assert!(c.abs() < 3.0 / (t_eff as f64).sqrt(), "corr {c}");
        }
    }

    #[test]
    fn instrument_correlation_needs_three_overlapping_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let draw = random_state(2, 1, 0, 10, &mut rng);
        let x = DMatrix::<f64>::from_fn(10, 2, |_, _| rng.sample(StandardNormal));
        let yt = DMatrix::<f64>::from_fn(10, 2, |_, _| rng.sample(StandardNormal));
        let sample = sample_from_states(vec![draw]);

        let mut instrument = vec![f64::NAN; 10];
        instrument[0] = 1.0;
        instrument[5] = -1.0;
        assert!(shock_instrument_correlation(&sample, &yt, &x, &instrument).is_err());

        let wrong_len = vec![0.0; 9];
        assert!(shock_instrument_correlation(&sample, &yt, &x, &wrong_len).is_err());

        let constant = vec![2.5; 10];
        assert!(shock_instrument_correlation(&sample, &yt, &x, &constant).is_err());
    }
}
