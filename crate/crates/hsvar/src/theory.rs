//! Brute-force oracles for identification through heteroskedasticity.
//!
//! The estimation stack asserts that a structural column is identified when
//! its relative variance path differs from every other equation's path.  This
//! module proves that claim numerically on small instances: given a sequence
//! of covariance matrices `Sigma_t = B diag(lambda_t) B'` with
//! `lambda_0 = 1`, it reconstructs `B` up to column signs by simultaneous
//! diagonalization, checks the distinctness condition, and probes the
//! ambiguity left by orthogonal rotations that fix one coordinate.  Nothing
//! here is used by the sampler; it exists so the identification logic can be
//! regression-tested against constructions with known answers, and to back
//! the CLI's `check-identification` command.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Per-coordinate tolerance under which two variance paths count as equal.
pub const IDENTIFICATION_TOL: f64 = 1e-12;

/// Relative residual above which a covariance sequence is rejected as not
/// simultaneously diagonalizable (i.e. inconsistent with a common loading).
const FIT_TOL: f64 = 1e-6;

/// Relative-variance paths of all equations: `lambdas[t][n]` is the variance
/// of structural shock `n` at time `t`, standardized so `lambdas[0]` is the
/// unit vector.
#[derive(Clone, Debug, PartialEq)]
pub struct VarianceSequence {
    /// One strictly positive `N`-vector per period, `t = 0..=K`.
    pub lambdas: Vec<DVector<f64>>,
}

impl VarianceSequence {
    /// Validates positivity, a common dimension, and the `lambda_0 = 1`
    /// standardization (to 1e-8; exact ones are stored as given).
    pub fn new(lambdas: Vec<DVector<f64>>) -> Result<Self> {
        let first = lambdas
            .first()
            .ok_or_else(|| Error::InvalidData("variance sequence is empty".into()))?;
        let n = first.len();
        if n == 0 {
            return Err(Error::InvalidData(
                "variance sequence has zero equations".into(),
            ));
        }
        if first.iter().any(|&x| (x - 1.0).abs() > 1e-8) {
            return Err(Error::InvalidData(
                "variance sequence is not standardized: lambda_0 must be the unit vector".into(),
            ));
        }
        for (t, lam) in lambdas.iter().enumerate() {
            if lam.len() != n {
                return Err(Error::Dimension(format!(
                    "variance vector at t = {t} has length {} instead of {n}",
                    lam.len()
                )));
            }
            if lam.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                return Err(Error::Domain(format!(
                    "variance vector at t = {t} has a nonpositive or nonfinite entry"
                )));
            }
        }
        Ok(Self { lambdas })
    }

    /// Number of equations `N`.
    pub fn n_equations(&self) -> usize {
        self.lambdas[0].len()
    }

    /// Number of periods including `t = 0`.
    pub fn n_periods(&self) -> usize {
        self.lambdas.len()
    }

    /// Variance path of one equation across `t = 0..=K`.
    pub fn path(&self, n: usize) -> Vec<f64> {
        self.lambdas.iter().map(|lam| lam[n]).collect()
    }
}

/// Sufficient condition for column `n` of the loading to be unique up to
/// sign: its variance path differs from every other equation's path in at
/// least one coordinate by more than [`IDENTIFICATION_TOL`].
///
/// Proportional-but-unequal paths count as distinct: the `lambda_0 = 1`
/// standardization has already absorbed scale, so proportionality would
/// require equality.
pub fn check_condition(seq: &VarianceSequence, n: usize) -> bool {
    let paths_equal = |a: usize, b: usize| {
        seq.lambdas
            .iter()
            .all(|lam| (lam[a] - lam[b]).abs() <= IDENTIFICATION_TOL)
    };
    (0..seq.n_equations()).all(|m| m == n || !paths_equal(n, m))
}

/// Reconstructs a loading matrix `B` and the standardized variance paths
/// from covariances `Sigma_t = B diag(lambda_t) B'` with `lambda_0 = 1`.
///
/// Procedure: factor `Sigma_0 = L L'`, whiten the remaining covariances to
/// `M_t = L^-1 Sigma_t L^-T`, and eigendecompose a random convex combination
/// of the `M_t` — the proof of uniqueness is non-constructive, and a generic
/// combination separates exactly the eigenvectors that are separable.  The
/// combination is redrawn (deterministically) when its spectrum is nearly
/// degenerate; if no combination separates, the paths genuinely tie and any
/// orthonormal basis of the tied block reproduces the data, so the last
/// decomposition is accepted.
///
/// Columns are returned in lexicographically decreasing order of their
/// variance paths with the first non-negligible coordinate made positive,
/// which fixes the permutation/sign ambiguity of the factorization.
pub fn recover_structure(sigmas: &[DMatrix<f64>]) -> Result<(DMatrix<f64>, VarianceSequence)> {
    let (l, whitened) = whiten(sigmas)?;
    let n = l.nrows();
    let k = whitened.len();

    let mut rng = ChaCha8Rng::seed_from_u64(0x1d_5eed);
    let mut eigen = None;
    for _ in 0..32 {
        let mut weights: Vec<f64> = (0..k).map(|_| 0.1 + rng.random::<f64>()).collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        let mut combo = DMatrix::<f64>::zeros(n, n);
        for (w, m) in weights.iter().zip(&whitened) {
            combo += m * *w;
        }
        let decomp = combo.symmetric_eigen();
        let mut values: Vec<f64> = decomp.eigenvalues.iter().copied().collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let min_gap = values
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        let separated = n < 2 || min_gap >= 1e-10;
        eigen = Some(decomp);
        if separated {
            break;
        }
    }
    let eigen = eigen.expect("at least one eigendecomposition attempt");

    // Variance path of each eigenvector across regimes, then the canonical
    // column order.
    let mut columns: Vec<(Vec<f64>, DVector<f64>)> = (0..n)
        .map(|j| {
            let q = eigen.eigenvectors.column(j).into_owned();
            let path: Vec<f64> = whitened
                .iter()
                .map(|m| (q.transpose() * m * &q)[(0, 0)])
                .collect();
            (path, q)
        })
        .collect();
    columns.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .expect("variance paths are finite and comparable")
    });

    let mut b = DMatrix::<f64>::zeros(n, n);
    let mut lambdas = vec![DVector::<f64>::from_element(n, 1.0)];
    lambdas.extend((0..k).map(|_| DVector::<f64>::zeros(n)));
    for (j, (path, q)) in columns.iter().enumerate() {
        let mut col = &l * q;
        // Sign convention: first coordinate that is clearly nonzero (at
        // 1e-9 of the column norm) is made positive.
        let scale = col.norm();
        if let Some(lead) = col.iter().find(|x| x.abs() > 1e-9 * scale) {
            if *lead < 0.0 {
                col.neg_mut();
            }
        }
        b.set_column(j, &col);
        for (t, &lam) in path.iter().enumerate() {
            lambdas[t + 1][j] = lam;
        }
    }
    let seq = VarianceSequence::new(lambdas)?;

    // Guard against inconsistent input: a common loading must reproduce
    // every covariance.
    for (t, sigma) in sigmas.iter().enumerate() {
        let fitted = &b * DMatrix::from_diagonal(&seq.lambdas[t]) * b.transpose();
        let err = (&fitted - sigma).abs().max();
        if err > FIT_TOL * (1.0 + sigma.abs().max()) {
            return Err(Error::InvalidData(format!(
                "covariances are not simultaneously diagonalizable: residual {err:.3e} \
                 at t = {t}"
            )));
        }
    }
    Ok((b, seq))
}

/// Recovers column `n` of the loading behind `sigmas`, matched against the
/// caller's known variance paths `seq` and sign-fixed so the first
/// non-negligible coordinate is positive.
///
/// Errors with `NotIdentified` when equation `n` fails [`check_condition`]:
/// a tied path means the column is only determined up to rotations inside
/// its tie block, so no single vector can be returned.
pub fn recover_column(
    sigmas: &[DMatrix<f64>],
    seq: &VarianceSequence,
    n: usize,
) -> Result<DVector<f64>> {
    if n >= seq.n_equations() {
        return Err(Error::Dimension(format!(
            "equation {n} out of range for {} equations",
            seq.n_equations()
        )));
    }
    if seq.n_periods() != sigmas.len() {
        return Err(Error::Dimension(format!(
            "{} variance periods for {} covariance matrices",
            seq.n_periods(),
            sigmas.len()
        )));
    }
    if !check_condition(seq, n) {
        return Err(Error::NotIdentified(format!(
            "equation {n}: its variance path is within {IDENTIFICATION_TOL:e} of another \
             equation's, so the column is only identified up to rotation"
        )));
    }
    let (b, recovered) = recover_structure(sigmas)?;

    let target = seq.path(n);
    let distance = |j: usize| -> f64 {
        recovered
            .path(j)
            .iter()
            .zip(&target)
            .map(|(a, t)| (a - t).abs())
            .fold(0.0, f64::max)
    };
    let best = (0..recovered.n_equations())
        .min_by(|&x, &y| distance(x).partial_cmp(&distance(y)).unwrap())
        .expect("at least one column");
    let scale = target.iter().fold(1.0f64, |acc, &x| acc.max(x.abs()));
    if distance(best) > FIT_TOL * scale {
        return Err(Error::InvalidData(format!(
            "no recovered variance path matches equation {n}: best max deviation {:.3e}",
            distance(best)
        )));
    }
    Ok(b.column(best).into_owned())
}

/// What random admissible-looking rotations do to a recovered loading.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmbiguityProbe {
    /// Largest sup-norm change of column `n` across all sampled rotations.
    /// Zero by construction of the block form; reported for symmetry.
    pub deviation_n: f64,
    /// Largest sup-norm change of any other column.
    pub max_deviation_other: f64,
    /// Largest sup-norm misfit `max_t |B* diag(lambda_t) B*' - Sigma_t|`
    /// across rotations.  Near zero exactly when the rotated loadings still
    /// explain the data — i.e. when the other columns are genuinely
    /// unidentified; large when the distinctness condition holds for them.
    pub fit_error: f64,
}

/// Samples `n_rotations` random orthogonal matrices of the block form that
/// fixes coordinate `n` (identity on `n`, Haar-random on the complement),
/// applies each to the loading recovered from `sigmas`, and reports how far
/// the columns move and how badly the rotated loading misfits the data.
///
/// `n` indexes the *canonical* column order returned by
/// [`recover_structure`] (variance paths sorted lexicographically
/// decreasing).
pub fn rotation_ambiguity_probe(
    sigmas: &[DMatrix<f64>],
    n: usize,
    n_rotations: usize,
    seed: u64,
) -> Result<AmbiguityProbe> {
    let (b, seq) = recover_structure(sigmas)?;
    let dim = b.nrows();
    if n >= dim {
        return Err(Error::Dimension(format!(
            "coordinate {n} out of range for {dim} equations"
        )));
    }
    if n_rotations == 0 {
        return Err(Error::InvalidConfig(
            "ambiguity probe needs at least one rotation".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probe = AmbiguityProbe {
        deviation_n: 0.0,
        max_deviation_other: 0.0,
        fit_error: 0.0,
    };
    for _ in 0..n_rotations {
        let q = block_rotation_fixing(dim, n, &mut rng)?;
        let rotated = &b * &q;
        for j in 0..dim {
            let dev = (rotated.column(j) - b.column(j)).abs().max();
            if j == n {
                probe.deviation_n = probe.deviation_n.max(dev);
            } else {
                probe.max_deviation_other = probe.max_deviation_other.max(dev);
            }
        }
        for (sigma, lam) in sigmas.iter().zip(&seq.lambdas) {
            let fitted = &rotated * DMatrix::from_diagonal(lam) * rotated.transpose();
            probe.fit_error = probe.fit_error.max((&fitted - sigma).abs().max());
        }
    }
    Ok(probe)
}

/// Haar-distributed orthogonal matrix on the coordinates other than `fixed`,
/// embedded so that row and column `fixed` are the corresponding unit
/// vector.  Built from the QR factorization of a Gaussian matrix with the
/// sign of the `R` diagonal folded into `Q`, which makes the distribution
/// exactly Haar rather than QR-convention-dependent.
pub fn block_rotation_fixing(
    n_total: usize,
    fixed: usize,
    rng: &mut ChaCha8Rng,
) -> Result<DMatrix<f64>> {
    if fixed >= n_total {
        return Err(Error::Dimension(format!(
            "fixed coordinate {fixed} out of range for dimension {n_total}"
        )));
    }
    let k = n_total - 1;
    let mut out = DMatrix::<f64>::zeros(n_total, n_total);
    out[(fixed, fixed)] = 1.0;
    if k == 0 {
        return Ok(out);
    }
    let g = DMatrix::<f64>::from_fn(k, k, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    let complement: Vec<usize> = (0..n_total).filter(|&i| i != fixed).collect();
    for (bi, &i) in complement.iter().enumerate() {
        for (bj, &j) in complement.iter().enumerate() {
            out[(i, j)] = q[(bi, bj)];
        }
    }
    Ok(out)
}

/// Whitens `sigmas[1..]` by the Cholesky factor of `sigmas[0]`, validating
/// shape, symmetry, and positive definiteness along the way.
fn whiten(sigmas: &[DMatrix<f64>]) -> Result<(DMatrix<f64>, Vec<DMatrix<f64>>)> {
    if sigmas.len() < 2 {
        return Err(Error::InvalidData(format!(
            "need the t = 0 covariance plus at least one regime, got {} matrices",
            sigmas.len()
        )));
    }
    let n = sigmas[0].nrows();
    for (t, sigma) in sigmas.iter().enumerate() {
        if sigma.nrows() != n || sigma.ncols() != n {
            return Err(Error::Dimension(format!(
                "covariance at t = {t} is {}x{}, expected {n}x{n}",
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        let asym = (sigma - sigma.transpose()).abs().max();
        if asym > 1e-10 * (1.0 + sigma.abs().max()) {
            return Err(Error::InvalidData(format!(
                "covariance at t = {t} is not symmetric (asymmetry {asym:.3e})"
            )));
        }
    }
    let chol = sigmas[0]
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Domain("covariance at t = 0 is not positive definite".into()))?;
    let l = chol.l();
    let whitened = sigmas[1..]
        .iter()
        .map(|sigma| {
            let half = l
                .solve_lower_triangular(sigma)
                .ok_or_else(|| Error::Singular("Cholesky factor is singular".into()))?;
            let m = l
                .solve_lower_triangular(&half.transpose())
                .ok_or_else(|| Error::Singular("Cholesky factor is singular".into()))?;
            // Symmetrize away the O(eps) drift of the two one-sided solves.
            Ok((&m + m.transpose()) * 0.5)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((l, whitened))
}
