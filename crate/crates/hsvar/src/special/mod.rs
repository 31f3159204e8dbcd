//! Special functions and non-standard samplers used by the model.

pub mod bessel;
pub mod gen_normal;
pub mod gig;
pub mod normal_product;
pub mod quad;
pub mod truncnorm;

pub use bessel::{bessel_k, bessel_k_scaled, ln_bessel_k};
pub use gen_normal::sample_generalized_normal_row;
pub use gig::sample_gig;
pub use normal_product::{
    lognp_pdf, marginal_omega_at_zero, marginal_omega_pdf, mlognp_logpdf, mnp_logpdf, np_pdf,
    MarginalOmegaParams, MvNormalProductParams, NormalProductParams,
};
pub use quad::{integrate, Quadrature};
pub use truncnorm::sample_truncnorm;
