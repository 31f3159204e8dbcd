//! Bayesian structural vector autoregressions identified through
//! heteroskedasticity.
//!
//! The model is a VAR whose one-step-ahead forecast errors `u_t` are rotated
//! into structural shocks `w_t = B0 u_t` with time-varying variances driven
//! by stationary log-volatility processes. Distinct volatility paths across
//! shocks pin down the rows of `B0` up to sign and ordering; a shock whose
//! relative variance is flat stays rotation-ambiguous. The crate provides:
//!
//! - the Gibbs sampler for the full model (structural matrices, their
//!   shrinkage hierarchies, and the per-shock stochastic-volatility blocks),
//!   with an optional prior-only mode ([`gibbs`]);
//! - Savage–Dickey density ratios for the per-shock homoskedasticity
//!   restriction, with numerical standard errors ([`sddr`]);
//! - the analytical prior for the volatility-scale parameter (a
//!   normal-product / Bessel-K family) and its multivariate extensions
//!   ([`special::normal_product`]);
//! - population-level identification checks and a constructive recovery of
//!   identified structural columns from second moments alone ([`theory`]);
//! - impulse responses, sign/permutation normalization of posterior draws,
//!   and conditional-variance summaries ([`structural`]);
//! - synthetic-data generation for the exact model, plus small presets used
//!   in tests and examples ([`simulate`]);
//! - a compact columnar artifact format for posterior draws ([`artifact`]).
//!
//! Numerical building blocks (Bessel `K_ν`, GIG and truncated-normal
//! samplers, adaptive quadrature) live under [`special`].

pub mod artifact;
pub mod error;
pub mod gibbs;
pub mod model;
pub mod sddr;
pub mod simulate;
pub mod special;
pub mod structural;
pub mod theory;

pub use error::{Error, Result};
