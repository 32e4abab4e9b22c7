//! CVA integration against the default density and the profile containers
//! shared by the models.

use crate::error::{Error, Result};
use crate::market::{unconditional_epe, CreditCurve, ExposureSpec};
use crate::mathkit::{integrate_sampled, QuadratureRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelTag {
    Independent,
    GaussianCopula,
    HullWhite,
    ConicMartingale,
    Ssrd,
    GaussianMartingale,
}

impl std::fmt::Display for ModelTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Independent => "independent",
            Self::GaussianCopula => "gc",
            Self::HullWhite => "hw",
            Self::ConicMartingale => "cm",
            Self::Ssrd => "ssrd",
            Self::GaussianMartingale => "gaussian",
        })
    }
}

/// One node of the CVA integral: `cva = Σ weight · f`, where the weight already
/// contains h(t) G(t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvaSample {
    pub t: f64,
    pub f: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvaResult {
    pub cva: f64,
    pub model: ModelTag,
    pub rho: f64,
    pub samples: Vec<CvaSample>,
    /// Present for Monte Carlo estimates only.
    pub standard_error: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileSource {
    Analytic,
    MonteCarlo,
}

/// f(t) = E[V_t⁺ | τ = t] on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EpeProfile {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub std_errors: Option<Vec<f64>>,
    pub source: ProfileSource,
}

impl EpeProfile {
    pub fn analytic<F>(times: &[f64], mut f: F) -> Result<Self>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let values = times
            .iter()
            .map(|&t| match f(t)? {
                v if v.is_finite() => Ok(v),
                v => Err(Error::Domain(format!("EPE is not finite at t = {t} ({v})"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            times: times.to_vec(),
            values,
            std_errors: None,
            source: ProfileSource::Analytic,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// ∫₀ᵀ f(t) h(t) G(t) dt, split at the hazard knots so each panel is smooth.
///
/// Each panel is mapped through t = lo + (hi − lo)(1 − cos πu)/2. The exposure
/// marginals behave like √t at 0 and like √(T − t) at maturity, and the map
/// turns both into smooth functions of u.
pub fn integrate_cva<F>(
    mut f: F,
    spec: &ExposureSpec,
    curve: &CreditCurve,
    rule: &QuadratureRule,
    model: ModelTag,
    rho: f64,
) -> Result<CvaResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    let big_t = spec.maturity;
    let mut edges = vec![0.0];
    edges.extend(curve.knots().iter().copied().filter(|&k| k < big_t));
    edges.push(big_t);

    let mut samples = Vec::new();
    let mut failure = None;
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let map = |u: f64| lo + 0.5 * (hi - lo) * (1.0 - (std::f64::consts::PI * u).cos());
        let (_, nodes) = integrate_sampled(
            |u| match f(map(u)) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            0.0,
            1.0,
            rule,
        )?;
        if let Some(e) = failure.take() {
            return Err(e);
        }
        let jac = 0.5 * (hi - lo) * std::f64::consts::PI;
        for n in nodes {
            let t = map(n.x);
            samples.push(CvaSample {
                t,
                f: n.fx,
                weight: n.weight * jac * (std::f64::consts::PI * n.x).sin() * curve.default_density(t)?,
            });
        }
    }
    let cva = samples.iter().map(|s| s.weight * s.f).sum();
    Ok(CvaResult {
        cva,
        model,
        rho,
        samples,
        standard_error: None,
    })
}

/// CVA without wrong-way risk, ∫ E[V_t⁺] h G dt.
pub fn cva_independent(
    spec: &ExposureSpec,
    curve: &CreditCurve,
    rule: &QuadratureRule,
) -> Result<CvaResult> {
    integrate_cva(
        |t| unconditional_epe(spec, t),
        spec,
        curve,
        rule,
        ModelTag::Independent,
        0.0,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn samples_reproduce_value() {
        let spec = ExposureSpec::forward(0.022, 5.0).unwrap();
        let curve = CreditCurve::flat(0.05).unwrap();
        let r = cva_independent(&spec, &curve, &QuadratureRule::default()).unwrap();
        let sum: f64 = r.samples.iter().map(|s| s.weight * s.f).sum();
        assert_eq!(r.cva, sum);
        assert!(r.samples.iter().all(|s| s.t > 0.0 && s.t < 5.0 && s.weight > 0.0));
    }

    #[test]
    fn unit_integrand_gives_default_probability() {
        let spec = ExposureSpec::forward(0.022, 5.0).unwrap();
        let curve = CreditCurve::piecewise(vec![1.0, 2.5], vec![0.01, 0.04, 0.02]).unwrap();
        let r = integrate_cva(
            |_| Ok(1.0),
            &spec,
            &curve,
            &QuadratureRule::gauss_legendre(16).unwrap(),
            ModelTag::Independent,
            0.0,
        )
        .unwrap();
        assert_relative_eq!(r.cva, curve.default_probability(5.0).unwrap(), max_relative = 1e-13);
    }

    #[test]
    fn rules_agree_on_square_root_endpoints() {
        let curve = CreditCurve::flat(0.3).unwrap();
        for spec in [
            ExposureSpec::forward(0.022, 5.0).unwrap(),
            ExposureSpec::irs(0.005, 0.022, 5.0).unwrap(),
        ] {
            let gl = cva_independent(&spec, &curve, &QuadratureRule::gauss_legendre(64).unwrap()).unwrap();
            let ad = cva_independent(&spec, &curve, &QuadratureRule::adaptive_simpson(1e-10).unwrap()).unwrap();
            assert_relative_eq!(gl.cva, ad.cva, max_relative = 1e-8);
        }
    }

    #[test]
    fn forward_flat_hazard_closed_form() {
        // ∫₀ᵀ ϑ√t φ(0) h e^{-ht} dt = ϑ φ(0) h^{-1/2} γ(3/2, hT), and for hT small
        // the series of the lower incomplete gamma function converges quickly.
        let (h, big_t, vt) = (0.01f64, 5.0f64, 0.022f64);
        let x = h * big_t;
        let mut term = x.powf(1.5) / 1.5;
        let mut gamma_low = 0.0;
        for n in 0..40 {
            gamma_low += term;
            let nf = n as f64;
            term *= -x * (nf + 1.5) / ((nf + 1.0) * (nf + 2.5));
        }
        let exact = vt * 0.398_942_280_401_432_7 * gamma_low / h.sqrt();
        let spec = ExposureSpec::forward(vt, big_t).unwrap();
        let curve = CreditCurve::flat(h).unwrap();
        let r = cva_independent(&spec, &curve, &QuadratureRule::default()).unwrap();
        assert_relative_eq!(r.cva, exact, max_relative = 1e-12);
    }

    #[test]
    fn integrand_errors_propagate() {
        let spec = ExposureSpec::forward(0.022, 5.0).unwrap();
        let curve = CreditCurve::flat(0.3).unwrap();
        let err = integrate_cva(
            |_| Err(crate::Error::Degenerate("test")),
            &spec,
            &curve,
            &QuadratureRule::default(),
            ModelTag::Independent,
            0.0,
        );
        assert_eq!(err.unwrap_err(), crate::Error::Degenerate("test"));
    }
}
