//! Wrong-way-risk EPE profiles and CVA.
//!
//! Three ways of coupling an exposure with the default of the counterparty are
//! provided: a static Gaussian copula ([`gc`]), a Hull-White stochastic
//! intensity ([`hw`]) and a conic Φ-martingale ([`cm`]). Each has a closed form
//! for the conditional EPE f(t) = E[V_t⁺ | τ = t], and the [`mc`] module
//! simulates the same quantities path by path, together with a shifted
//! square-root (CIR++) intensity that has no closed form.

pub mod cm;
pub mod cva;
pub mod error;
pub mod gc;
pub mod hw;
pub mod market;
pub mod mathkit;
pub mod mc;

pub use cva::{cva_independent, CvaResult, CvaSample, EpeProfile, ModelTag, ProfileSource};
pub use error::{Error, Result};
pub use market::{CreditCurve, ExposureKind, ExposureSpec, GaussianMarginal};
