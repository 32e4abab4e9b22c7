//! Numerical kernel: normal functions, the Gaussian product identity,
//! quadrature, the exponential-integral ratio and a 3×3 Cholesky factor.

mod cholesky;
mod expint;
mod gauss;
mod normal;
mod quadrature;

pub use cholesky::{cholesky3, clamp_correlation, CorrMatrix3, CLAMP};
pub use expint::{expint_ratio, expint_ratio_quadrature};
pub use gauss::{gauss_product_split, GaussProduct};
pub use normal::{inv_cdf_rational, norm_cdf, norm_inv_cdf, norm_pdf, normal_positive_part_mean};
pub use quadrature::{
    gauss_legendre_table, integrate, integrate_sampled, QuadratureRule, QuadratureSample,
};
