use super::quadrature::{integrate, QuadratureRule};
use crate::error::{Error, Result};

/// Largest |k·s| on the interval for which the series route is used.
const SERIES_LIMIT: f64 = 4.0;

/// ∫_{lo}^{hi} e^{k s} / s ds on an interval that excludes 0.
///
/// For moderate |k·s| this is the difference Ei(k·hi) − Ei(k·lo), written as
/// ln(hi/lo) + Σ kⁿ (hiⁿ − loⁿ) / (n·n!) so the Euler-gamma and log|k| terms
/// cancel exactly. Otherwise adaptive quadrature is used.
pub fn expint_ratio(lo: f64, hi: f64, k: f64) -> Result<f64> {
    if !(lo.is_finite() && hi.is_finite() && k.is_finite()) {
        return Err(Error::Domain("expint_ratio needs finite arguments".into()));
    }
    if lo * hi <= 0.0 {
        return Err(Error::Singular { lo, hi });
    }
    if lo == hi {
        return Ok(0.0);
    }
    let reach = (k * lo).abs().max((k * hi).abs());
    if reach <= SERIES_LIMIT {
        Ok(ein_difference(lo, hi, k))
    } else {
        expint_ratio_quadrature(lo, hi, k)
    }
}

fn ein_difference(lo: f64, hi: f64, k: f64) -> f64 {
    let mut sum = (hi / lo).ln();
    let (mut ph, mut pl) = (1.0, 1.0);
    for n in 1..200 {
        let nf = n as f64;
        ph *= k * hi / nf;
        pl *= k * lo / nf;
        let term = (ph - pl) / nf;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// Quadrature route for the same integral; also used to cross-check the series.
pub fn expint_ratio_quadrature(lo: f64, hi: f64, k: f64) -> Result<f64> {
    if lo * hi <= 0.0 {
        return Err(Error::Singular { lo, hi });
    }
    let (a, b, sign) = if lo < hi { (lo, hi, 1.0) } else { (hi, lo, -1.0) };
    let f = |s: f64| (k * s).exp() / s;
    // Scale the absolute tolerance to the size of the answer.
    let rough = integrate(f, a, b, &QuadratureRule::gauss_legendre(64)?)?;
    let tol = 1e-15 * rough.abs().max(1e-300);
    let v = integrate(f, a, b, &QuadratureRule::adaptive_simpson(tol)?)?;
    Ok(sign * v)
}
