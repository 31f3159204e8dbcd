//! Truncated normal sampling with bounded expected rejection cost.
//!
//! Uses Robert's (1995, *Statistics and Computing*) accept–reject suite:
//! plain rejection near the bulk, translated-exponential proposals for far
//! one-sided tails, and uniform proposals on short intervals, with the
//! standard crossover rules so the expected number of iterations stays
//! bounded for every configuration of the bounds (including the extreme
//! tails, where naive resampling would effectively never terminate).

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal, Uniform};

use crate::error::{Error, Result};

/// Robert's optimal rate for the translated-exponential tail proposal at a.
fn tail_rate(a: f64) -> f64 {
    0.5 * (a + (a * a + 4.0).sqrt())
}

/// Draw from the standard normal truncated to `[a, ∞)` with `a > 0`.
fn lower_tail<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    let alpha = tail_rate(a);
    let exp = Exp::new(alpha).expect("alpha > 0 by construction");
    loop {
        let z = a + exp.sample(rng);
        let d = z - alpha;
        if rng.random::<f64>() <= (-0.5 * d * d).exp() {
            return z;
        }
    }
}

/// Draw from the standard normal truncated to `[a, ∞)` for any `a`.
fn one_sided<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    if a <= 0.0 {
        // At least half of all proposals land in the region.
        loop {
            let z: f64 = rng.sample(StandardNormal);
            if z >= a {
                return z;
            }
        }
    } else {
        lower_tail(a, rng)
    }
}

/// Draw from the standard normal truncated to `[a, b]`, finite bounds.
fn two_sided<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    if a <= 0.0 && b >= 0.0 {
        // Interval straddles the mode: either plain rejection (wide) or a
        // uniform proposal against the peak density (narrow).
        if b - a > (2.0 * std::f64::consts::PI).sqrt() {
            loop {
                let z: f64 = rng.sample(StandardNormal);
                if z >= a && z <= b {
                    return z;
                }
            }
        } else {
            let unif = Uniform::new(a, b).expect("a < b checked by caller");
            loop {
                let z = unif.sample(rng);
                if rng.random::<f64>() <= (-0.5 * z * z).exp() {
                    return z;
                }
            }
        }
    } else if a > 0.0 {
        // Entirely in the upper tail. Robert's rule: a uniform proposal
        // beats the exponential one only while the interval is short.
        let alpha = tail_rate(a);
        let cutoff = a + (2.0 * std::f64::consts::E.sqrt() / alpha)
            * ((a * a - a * (a * a + 4.0).sqrt()) / 4.0).exp();
        if b <= cutoff {
            let unif = Uniform::new(a, b).expect("a < b checked by caller");
            loop {
                let z = unif.sample(rng);
                if rng.random::<f64>() <= (0.5 * (a * a - z * z)).exp() {
                    return z;
                }
            }
        } else {
            loop {
                let z = lower_tail(a, rng);
                if z <= b {
                    return z;
                }
            }
        }
    } else {
        -two_sided(-b, -a, rng)
    }
}

/// Draw from `N(mu, var)` restricted to the interval `(lo, hi)`.
///
/// Either bound may be infinite. Requires `var > 0` and `lo < hi`; the
/// expected number of internal proposals is bounded uniformly in the
/// bounds.
pub fn sample_truncnorm<R: Rng + ?Sized>(
    mu: f64,
    var: f64,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(var > 0.0) || !var.is_finite() || !mu.is_finite() {
        return Err(Error::Domain(format!(
            "truncated normal requires finite mu and var > 0, got mu={mu}, var={var}"
        )));
    }
    if !(lo < hi) {
        return Err(Error::Domain(format!(
            "truncation bounds must satisfy lo < hi, got [{lo}, {hi}]"
        )));
    }
    let sd = var.sqrt();
    let a = (lo - mu) / sd;
    let b = (hi - mu) / sd;
    let z = match (a == f64::NEG_INFINITY, b == f64::INFINITY) {
        (true, true) => rng.sample(StandardNormal),
        (true, false) => -one_sided(-b, rng),
        (false, true) => one_sided(a, rng),
        (false, false) => two_sided(a, b, rng),
    };
    Ok(mu + sd * z)
}
