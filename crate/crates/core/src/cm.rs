//! Conic Φ-martingale model.
//!
//! Survival is S_t = Φ(X_t) with X_t = Φ⁻¹(G(t)) e^{μt} + N_t, where
//! N_t = ∫₀ᵗ σ e^{μ(t−u)} dW_u and μ = σ²/2. This keeps S in (0, 1) and gives
//! the wrong-way process ζ_t = e^{μt} φ(X_t) / φ(Φ⁻¹(G(t))).
//!
//! The closed form for f(t) uses local letters that clash with the model
//! parameters. In this module they are renamed as follows:
//!
//! | symbol | name here      | meaning                                  |
//! |--------|----------------|------------------------------------------|
//! | α      | `cm_alpha`     | A B / √(B² + 1)                           |
//! | β      | `cm_beta`      | √(B² + 1)                                 |
//! | β̃      | `cm_beta_t`    | ρ(t) / √(1 − ρ(t)²)                       |
//! | μ/√(1+σ²) | `cm_m`      | argument of Φ and φ in the final formula  |
//! | ρ, ρ̄   | `r`, `r_bar`   | ρ(t) and √(1 − ρ(t)²)                      |

use crate::cva::{integrate_cva, CvaResult, ModelTag};
use crate::error::{ensure_correlation, ensure_non_negative, Error, Result};
use crate::market::{marginal, CreditCurve, ExposureKind, ExposureSpec};
use crate::mathkit::{expint_ratio, norm_cdf, norm_inv_cdf, norm_pdf, normal_positive_part_mean, QuadratureRule};

/// |ρ(t)| above this is handled by the perfectly correlated branch.
const UNIT_CORRELATION: f64 = 1.0 - 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CmSignConvention {
    /// The user-facing ρ is the negative of the Brownian correlation, so that
    /// positive ρ means wrong-way risk as in the other models.
    #[default]
    Paper,
    /// ρ is the Brownian correlation d⟨B, W⟩/dt itself.
    Raw,
}

impl std::str::FromStr for CmSignConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "paper" => Ok(Self::Paper),
            "raw" => Ok(Self::Raw),
            other => Err(Error::Domain(format!("unknown sign convention `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CmParams {
    pub sigma: f64,
    pub rho: f64,
    pub sign_convention: CmSignConvention,
}

impl CmParams {
    pub fn new(sigma: f64, rho: f64) -> Result<Self> {
        Self::with_convention(sigma, rho, CmSignConvention::default())
    }

    pub fn with_convention(sigma: f64, rho: f64, sign_convention: CmSignConvention) -> Result<Self> {
        let p = Self {
            sigma,
            rho,
            sign_convention,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("sigma", self.sigma)?;
        ensure_correlation("rho", self.rho)
    }

    pub fn mu(&self) -> f64 {
        0.5 * self.sigma * self.sigma
    }

    /// Correlation between the exposure and the latent Brownian motions.
    pub fn brownian_rho(&self) -> f64 {
        match self.sign_convention {
            CmSignConvention::Paper => -self.rho,
            CmSignConvention::Raw => self.rho,
        }
    }
}

/// X_t ~ N(A, B²) and the normalising constant k = e^{μt}/φ(Φ⁻¹(G(t))).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CmMarginal {
    pub a_cap: f64,
    pub b_cap: f64,
    pub k: f64,
}

impl CmMarginal {
    /// E[Φ(X_t)] = Φ(A / √(1 + B²)).
    pub fn expected_survival(&self) -> f64 {
        norm_cdf(self.a_cap / (1.0 + self.b_cap * self.b_cap).sqrt())
    }
}

pub fn cm_marginal(params: &CmParams, curve: &CreditCurve, t: f64) -> Result<CmMarginal> {
    params.validate()?;
    let q = curve.survival_quantile(t)?;
    if !q.is_finite() {
        return Err(Error::Domain(format!(
            "latent law needs 0 < G(t) < 1, got t = {t}"
        )));
    }
    let mu_t = params.mu() * t;
    let growth = mu_t.exp();
    let b_cap = (2.0 * mu_t).exp_m1().sqrt();
    if !b_cap.is_finite() {
        return Err(Error::Domain(format!(
            "conic marginal overflows: σ²t = {} is too large",
            2.0 * mu_t
        )));
    }
    Ok(CmMarginal {
        a_cap: q * growth,
        b_cap,
        k: growth / norm_pdf(q),
    })
}

/// Correlation between X_t and V_t, evaluated with the Brownian correlation
/// given by the sign convention.
pub fn cm_rho(params: &CmParams, spec: &ExposureSpec, t: f64) -> Result<f64> {
    params.validate()?;
    spec.check_time(t)?;
    if t <= 0.0 || (spec.kind == ExposureKind::Irs && t >= spec.maturity) {
        return Err(Error::Domain(format!("correlation needs 0 < t < T, got t = {t}")));
    }
    let rho = params.brownian_rho();
    if rho == 0.0 {
        return Ok(0.0);
    }
    let sigma = params.sigma;
    let mu = params.mu();
    let r = match spec.kind {
        ExposureKind::Forward => {
            if sigma == 0.0 {
                rho
            } else {
                2.0 * rho * (-(-mu * t).exp_m1()) / (sigma * (t * -(-sigma * sigma * t).exp_m1()).sqrt())
            }
        }
        ExposureKind::Irs => {
            let big_t = spec.maturity;
            let tau = big_t - t;
            if sigma == 0.0 {
                rho * (big_t * tau).sqrt() * (-(-t / big_t).ln_1p()) / t
            } else {
                let integral = (-mu * big_t).exp() * expint_ratio(tau, big_t, mu)?;
                sigma * rho * (big_t * tau / (t * -(-sigma * sigma * t).exp_m1())).sqrt() * integral
            }
        }
    };
    Ok(r.clamp(-1.0, 1.0))
}

/// ζ_t = e^{μt} φ(Φ⁻¹(S_t)) / φ(Φ⁻¹(G(t))); equal to 1 at t = 0.
pub fn cm_zeta(params: &CmParams, curve: &CreditCurve, t: f64, s: f64) -> Result<f64> {
    params.validate()?;
    if t == 0.0 {
        return Ok(1.0);
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain(format!("survival value must lie in (0, 1), got {s}")));
    }
    let m = cm_marginal(params, curve, t)?;
    Ok(m.k * norm_pdf(norm_inv_cdf(s)?))
}

/// f(t) = E[ζ_t V_t⁺].
pub fn cm_wwr_epe(params: &CmParams, spec: &ExposureSpec, curve: &CreditCurve, t: f64) -> Result<f64> {
    let m = marginal(spec, t)?;
    if m.is_degenerate() {
        return Ok(m.a.max(0.0));
    }
    let (a, b) = (m.a, m.b);
    let cm = cm_marginal(params, curve, t)?;
    let r = cm_rho(params, spec, t)?;
    let (big_a, big_b) = (cm.a_cap, cm.b_cap);

    let cm_beta = (big_b * big_b + 1.0).sqrt();
    let cm_alpha = big_a * big_b / cm_beta;
    let k_cap = cm.k * norm_pdf(big_a / cm_beta);

    if r.abs() >= UNIT_CORRELATION {
        // V = a + b r X̂ with X̂ the normalised latent factor.
        let r = r.signum();
        return Ok(k_cap / cm_beta * normal_positive_part_mean(a - b * r * cm_alpha / cm_beta, b / cm_beta));
    }
    let r_bar = ((1.0 - r) * (1.0 + r)).sqrt();
    let cm_beta_t = r / r_bar;
    let b2 = big_b * big_b;
    let cm_m = (a / b * (b2 + 1.0) - r * big_a * big_b) / (cm_beta * (1.0 - r * r * b2 + b2).sqrt());
    let beta2 = cm_beta * cm_beta;
    Ok(k_cap
        * ((cm_beta * a - cm_alpha * b * r) / beta2 * norm_cdf(cm_m)
            + b / (beta2 + cm_beta_t * cm_beta_t).sqrt() * (cm_beta_t * r / beta2 + r_bar) * norm_pdf(cm_m)))
}

pub fn cm_cva(params: &CmParams, spec: &ExposureSpec, curve: &CreditCurve, rule: &QuadratureRule) -> Result<CvaResult> {
    params.validate()?;
    integrate_cva(
        |t| cm_wwr_epe(params, spec, curve, t),
        spec,
        curve,
        rule,
        ModelTag::ConicMartingale,
        params.rho,
    )
}
