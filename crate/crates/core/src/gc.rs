//! Static Gaussian-copula wrong-way model.
//!
//! Conditionally on default at t the exposure stays Gaussian,
//! V_t | τ = t ~ N(a + ρ Φ⁻¹(G(t)) b, b²(1 − ρ²)).

use crate::cva::{integrate_cva, CvaResult, ModelTag};
use crate::error::{ensure_correlation, Result};
use crate::market::{marginal, CreditCurve, ExposureSpec, GaussianMarginal};
use crate::mathkit::{normal_positive_part_mean, QuadratureRule};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GcParams {
    pub rho: f64,
}

impl GcParams {
    pub fn new(rho: f64) -> Result<Self> {
        ensure_correlation("rho", rho)?;
        Ok(Self { rho })
    }
}

/// Law of the exposure at t conditional on τ = t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalMarginal {
    pub a_tilde: f64,
    pub b_tilde: f64,
}

pub fn gc_conditional_marginal(
    params: &GcParams,
    spec: &ExposureSpec,
    curve: &CreditCurve,
    t: f64,
) -> Result<ConditionalMarginal> {
    ensure_correlation("rho", params.rho)?;
    let m = marginal(spec, t)?;
    condition(params.rho, &m, curve, t)
}

fn condition(rho: f64, m: &GaussianMarginal, curve: &CreditCurve, t: f64) -> Result<ConditionalMarginal> {
    if m.is_degenerate() || rho == 0.0 {
        return Ok(ConditionalMarginal {
            a_tilde: m.a,
            b_tilde: m.b,
        });
    }
    let q = curve.survival_quantile(t)?;
    let b_tilde = if rho.abs() == 1.0 {
        0.0
    } else {
        m.b * ((1.0 - rho) * (1.0 + rho)).sqrt()
    };
    Ok(ConditionalMarginal {
        a_tilde: m.a + rho * q * m.b,
        b_tilde,
    })
}

/// E[V_t⁺ | τ = t]. At ρ = ±1 the conditional law is the point mass at the
/// G(t)-quantile (resp. 1 − G(t)) of V_t, so the result is that quantile's
/// positive part.
pub fn gc_wwr_epe(params: &GcParams, spec: &ExposureSpec, curve: &CreditCurve, t: f64) -> Result<f64> {
    let c = gc_conditional_marginal(params, spec, curve, t)?;
    if c.b_tilde == 0.0 {
        return Ok(c.a_tilde.max(0.0));
    }
    Ok(normal_positive_part_mean(c.a_tilde, c.b_tilde))
}

/// Quantiles q±(t) = a ± b Φ⁻¹(G(t)) reached at ρ = ±1.
pub fn gc_limit_quantiles(spec: &ExposureSpec, curve: &CreditCurve, t: f64) -> Result<(f64, f64)> {
    let m = marginal(spec, t)?;
    if m.is_degenerate() {
        return Ok((m.a, m.a));
    }
    let q = curve.survival_quantile(t)?;
    Ok((m.a + m.b * q, m.a - m.b * q))
}

pub fn gc_cva(
    params: &GcParams,
    spec: &ExposureSpec,
    curve: &CreditCurve,
    rule: &QuadratureRule,
) -> Result<CvaResult> {
    ensure_correlation("rho", params.rho)?;
    integrate_cva(
        |t| gc_wwr_epe(params, spec, curve, t),
        spec,
        curve,
        rule,
        ModelTag::GaussianCopula,
        params.rho,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cva::cva_independent;
    use crate::market::unconditional_epe;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn fwd() -> ExposureSpec {
        ExposureSpec::forward(0.022, 5.0).unwrap()
    }

    #[test]
    fn zero_correlation_is_unconditional() {
        let curve = CreditCurve::flat(0.05).unwrap();
        let p = GcParams::new(0.0).unwrap();
        let irs = ExposureSpec::irs(0.005, 0.022, 5.0).unwrap();
        for spec in [fwd(), irs] {
            for i in 0..=20 {
                let t = 0.25 * i as f64;
                assert_eq!(
                    gc_wwr_epe(&p, &spec, &curve, t).unwrap(),
                    unconditional_epe(&spec, t).unwrap()
                );
            }
        }
    }

    #[test]
    fn conditional_marginal_anchor() {
        let curve = CreditCurve::flat(0.01).unwrap();
        let c = gc_conditional_marginal(&GcParams::new(0.8).unwrap(), &fwd(), &curve, 2.5).unwrap();
        let q = curve.survival_quantile(2.5).unwrap();
        assert_abs_diff_eq!(c.a_tilde, 0.8 * q * 0.022 * 2.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(c.a_tilde, 0.054_690_297_256_207, epsilon = 1e-12);
        assert_abs_diff_eq!(c.b_tilde, 0.020_871_032_557_111_3, epsilon = 1e-14);
    }

    #[test]
    fn unit_correlation_hits_quantile() {
        let curve = CreditCurve::flat(0.01).unwrap();
        let v = gc_wwr_epe(&GcParams::new(1.0).unwrap(), &fwd(), &curve, 2.5).unwrap();
        let (qp, qm) = gc_limit_quantiles(&fwd(), &curve, 2.5).unwrap();
        assert_eq!(v, qp.max(0.0));
        assert_abs_diff_eq!(v, 0.068_362_871_570_259, epsilon = 1e-12);
        let v = gc_wwr_epe(&GcParams::new(-1.0).unwrap(), &fwd(), &curve, 2.5).unwrap();
        assert_eq!(v, qm.max(0.0));
        // Continuity towards the limit.
        let near = gc_wwr_epe(&GcParams::new(1.0 - 1e-10).unwrap(), &fwd(), &curve, 2.5).unwrap();
        assert_abs_diff_eq!(near, qp, epsilon = 1e-6);
    }

    #[test]
    fn cva_properties() {
        let rule = QuadratureRule::default();
        let curve = CreditCurve::flat(0.01).unwrap();
        let c0 = gc_cva(&GcParams::new(0.0).unwrap(), &fwd(), &curve, &rule).unwrap();
        let ind = cva_independent(&fwd(), &curve, &rule).unwrap();
        assert_relative_eq!(c0.cva, ind.cva, max_relative = 1e-14);
        let c8 = gc_cva(&GcParams::new(0.8).unwrap(), &fwd(), &curve, &rule).unwrap();
        assert!(c8.cva > c0.cva);
        let flat = ExposureSpec::forward(0.0, 5.0).unwrap();
        assert_eq!(gc_cva(&GcParams::new(0.8).unwrap(), &flat, &curve, &rule).unwrap().cva, 0.0);
        assert!(GcParams::new(1.5).is_err());
    }

    #[test]
    fn monotone_in_rho_at_low_hazard() {
        let curve = CreditCurve::flat(0.01).unwrap();
        let irs = ExposureSpec::irs(0.005, 0.022, 5.0).unwrap();
        for spec in [fwd(), irs] {
            for i in 1..50 {
                let t = 0.1 * i as f64;
                let mut prev = f64::NEG_INFINITY;
                for k in -10..=10 {
                    let v = gc_wwr_epe(&GcParams::new(0.1 * k as f64).unwrap(), &spec, &curve, t).unwrap();
                    assert!(v >= prev);
                    prev = v;
                }
            }
        }
    }
}
