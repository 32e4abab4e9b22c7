//! Hull-White stochastic-intensity model.
//!
//! The intensity is λ_t = r_t + φ(t) with r a Vasicek process
//! dr = κ(θ − r)dt + σ dW, and the shift φ is chosen so that
//! E[exp(−∫₀ᵗ λ)] = G(t). The exposure Brownian motion B has
//! d⟨B, W⟩ = ρ dt.
//!
//! At a fixed t the triple (λ_t, Λ_t, V_t) is Gaussian, so the wrong-way
//! EPE f(t) = E[λ_t S_t V_t⁺] / (h(t) G(t)) has a closed form; see
//! [`appendix`].

pub mod appendix;

use crate::cva::{integrate_cva, CvaResult, ModelTag};
use crate::error::{ensure_correlation, ensure_finite, ensure_non_negative, ensure_positive, Error, Result};
use crate::market::{marginal, CreditCurve, ExposureKind, ExposureSpec};
use crate::mathkit::{cholesky3, expint_ratio, gauss_legendre_table, CorrMatrix3, QuadratureRule};
use appendix::{hw_appendix_e, TripleLaw};

/// Below this value of κt the ξ-combinations switch to their Taylor series.
const SERIES_SWITCH: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorrMode {
    /// Exposure/intensity correlations normalised by σ√t, as in the usual
    /// small-κ presentation of the model.
    #[default]
    Paper,
    /// Correlations computed from the exact covariances, with std(λ_t) = σ√ξ(2,t).
    Exact,
}

impl std::str::FromStr for CorrMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "paper" => Ok(Self::Paper),
            "exact" => Ok(Self::Exact),
            other => Err(Error::Domain(format!("unknown correlation mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HwParams {
    pub kappa: f64,
    pub theta: f64,
    pub sigma: f64,
    pub r0: f64,
    pub rho: f64,
}

impl HwParams {
    pub fn new(kappa: f64, theta: f64, sigma: f64, r0: f64, rho: f64) -> Result<Self> {
        let p = Self {
            kappa,
            theta,
            sigma,
            r0,
            rho,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("kappa", self.kappa)?;
        ensure_finite("theta", self.theta)?;
        ensure_non_negative("sigma", self.sigma)?;
        ensure_finite("r0", self.r0)?;
        ensure_correlation("rho", self.rho)
    }
}

/// ξ(x, t) = (1 − e^{−xκt}) / (xκ), equal to t when xκ = 0.
pub fn xi(x: f64, t: f64, kappa: f64) -> f64 {
    let y = x * kappa;
    if y == 0.0 {
        return t;
    }
    let z = y * t;
    if z.abs() < 1e-8 {
        t * (1.0 - z / 2.0 + z * z / 6.0)
    } else {
        -(-z).exp_m1() / y
    }
}

/// t − 2ξ(1,t) + ξ(2,t), the variance of ∫₀ᵗ(1 − e^{−κ(t−u)})dW_u times κ².
fn xi_q(t: f64, kappa: f64) -> f64 {
    let y = kappa * t;
    if y < SERIES_SWITCH {
        // Σ_{n≥3} (−1)ⁿ (2 − 2^{n−1}) yⁿ / n!
        let mut term = y * y / 2.0; // y²/2!
        let mut pow2 = 2.0; // 2^{n−1} at n = 2
        let mut sum = 0.0;
        for n in 3..60 {
            term *= -y / n as f64;
            pow2 *= 2.0;
            let add = term * (2.0 - pow2);
            sum += add;
            if add.abs() <= 1e-17 * sum.abs() {
                break;
            }
        }
        sum / kappa
    } else {
        t - 2.0 * xi(1.0, t, kappa) + xi(2.0, t, kappa)
    }
}

/// t − ξ(1, t).
fn t_minus_xi1(t: f64, kappa: f64) -> f64 {
    let y = kappa * t;
    if y < SERIES_SWITCH {
        let mut term = 1.0;
        let mut sum = 0.0;
        for n in 1..60 {
            term *= -y / n as f64;
            if n >= 2 {
                sum += term;
                if term.abs() <= 1e-17 * sum.abs() {
                    break;
                }
            }
        }
        sum / kappa
    } else {
        t - xi(1.0, t, kappa)
    }
}

/// Deterministic shift φ(t) = h(t) + ξ(1,t)(σ²ξ(1,t)/2 − θκ) − r₀e^{−κt}.
pub fn hw_shift_phi(params: &HwParams, curve: &CreditCurve, t: f64) -> Result<f64> {
    params.validate()?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Domain(format!("time must be non-negative, got {t}")));
    }
    let x1 = xi(1.0, t, params.kappa);
    Ok(curve.hazard(t) + x1 * (0.5 * params.sigma * params.sigma * x1 - params.theta * params.kappa)
        - params.r0 * (-params.kappa * t).exp())
}

/// Gaussian laws λ_t ~ N(A, B²) and Λ_t = ∫₀ᵗλ ~ N(ω, Ω²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HwMarginals {
    pub a_cap: f64,
    pub b_cap: f64,
    pub omega: f64,
    pub omega_std: f64,
}

impl HwMarginals {
    /// E[e^{−Λ_t}] = e^{−ω + Ω²/2}.
    pub fn expected_survival(&self) -> f64 {
        (-self.omega + 0.5 * self.omega_std * self.omega_std).exp()
    }
}

pub fn hw_marginals(params: &HwParams, curve: &CreditCurve, t: f64) -> Result<HwMarginals> {
    let phi = hw_shift_phi(params, curve, t)?;
    let (k, s) = (params.kappa, params.sigma);
    let decay = (-k * t).exp();
    let x1 = xi(1.0, t, k);
    let x2 = xi(2.0, t, k);
    let q = xi_q(t, k);
    // E[r_t] = r₀e^{−κt} + θ(1 − e^{−κt}).
    let a_cap = params.r0 * decay + params.theta * k * x1 + phi;
    Ok(HwMarginals {
        a_cap,
        b_cap: s * x2.sqrt(),
        omega: s * s / (2.0 * k * k) * q + curve.integrated_hazard(t)?,
        omega_std: s / k * q.sqrt(),
    })
}

/// Correlations of (λ_t, Λ_t, V_t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HwCorrelations {
    pub lambda_cap_lambda: f64,
    pub v_lambda: f64,
    pub v_cap_lambda: f64,
}

impl HwCorrelations {
    /// Matrix in the order (λ, Λ, V).
    pub fn matrix(&self) -> CorrMatrix3 {
        CorrMatrix3 {
            r12: self.lambda_cap_lambda,
            r13: self.v_lambda,
            r23: self.v_cap_lambda,
        }
    }
}

pub fn hw_correlations(params: &HwParams, spec: &ExposureSpec, t: f64, mode: CorrMode) -> Result<HwCorrelations> {
    params.validate()?;
    spec.check_time(t)?;
    if t <= 0.0 || (spec.kind == ExposureKind::Irs && t >= spec.maturity) {
        return Err(Error::Domain(format!(
            "correlations need 0 < t < T, got t = {t}"
        )));
    }
    let (k, rho) = (params.kappa, params.rho);
    let x1 = xi(1.0, t, k);
    let x2 = xi(2.0, t, k);
    let q = xi_q(t, k);
    // ξ(1,t) − ξ(2,t) = κξ(1,t)²/2
    let lambda_cap_lambda = 0.5 * k * x1 * x1 / (x2.sqrt() * q.sqrt());

    let (v_lambda, v_cap_lambda) = match spec.kind {
        ExposureKind::Forward => {
            let v_lambda = match mode {
                CorrMode::Paper => rho,
                CorrMode::Exact => rho * x1 / (x2 * t).sqrt(),
            };
            (v_lambda, rho * t_minus_xi1(t, k) / (t.sqrt() * q.sqrt()))
        }
        ExposureKind::Irs => {
            let big_t = spec.maturity;
            let tau = big_t - t;
            let log_ratio = -(-t / big_t).ln_1p();
            let bridge_std = (t * tau / big_t).sqrt();
            // e^{κ(T−t)} ∫_{−T}^{t−T} e^{κs}/s ds, which is negative.
            let e = (k * tau).exp() * expint_ratio(-big_t, t - big_t, k)?;
            let v_lambda = match mode {
                CorrMode::Paper => rho * (tau * big_t).sqrt() * log_ratio / t,
                CorrMode::Exact => rho * tau * (-e) / (x2.sqrt() * bridge_std),
            };
            let gap = if t <= 0.5 * big_t {
                damped_log_gap_over(t, tau, k)
            } else {
                log_ratio + e
            };
            (v_lambda, rho * tau * gap / (q.sqrt() * bridge_std))
        }
    };
    Ok(HwCorrelations {
        lambda_cap_lambda,
        v_lambda,
        v_cap_lambda,
    })
}

/// ∫_τ^T (1 − e^{−κ(u−τ)})/u du, the sum ln(T/τ) + e^{κτ}∫_{−T}^{−τ} e^{κs}/s ds
/// without the cancellation between its two terms. For τ ≥ T/2 the
/// integrand is smooth on a short interval and Gauss-Legendre is exact to
/// rounding.
/// The interval is passed by its length t = T − τ so that u − τ is exact.
fn damped_log_gap_over(t: f64, tau: f64, kappa: f64) -> f64 {
    // Integrate over the offset s = u − τ ∈ [0, t].
    let half = 0.5 * t;
    gauss_legendre_table(32)
        .iter()
        .map(|&(x, w)| {
            let s = half * (1.0 + x);
            w * half * -(-kappa * s).exp_m1() / (tau + s)
        })
        .sum()
}

/// f(t) = E[λ_t S_t V_t⁺] / (h(t)G(t)). Reduces to max(a, 0) where V_t is
/// deterministic (t = 0, and t = T for the swap).
pub fn hw_wwr_epe(params: &HwParams, spec: &ExposureSpec, curve: &CreditCurve, t: f64, mode: CorrMode) -> Result<f64> {
    let m = marginal(spec, t)?;
    if m.is_degenerate() {
        return Ok(m.a.max(0.0));
    }
    let hm = hw_marginals(params, curve, t)?;
    let corr = hw_correlations(params, spec, t, mode)?;
    let r = cholesky3(&corr.matrix())?;
    let law = TripleLaw {
        a_cap: hm.a_cap,
        b_cap: hm.b_cap,
        k: (-hm.omega).exp(),
        alpha: hm.omega_std * r[1][0],
        beta: hm.omega_std * r[1][1],
        gamma: 0.0,
        a: m.a,
        a_tilde: m.b * r[2][0],
        b_tilde: m.b * r[2][1],
        g_tilde: m.b * r[2][2],
    };
    Ok(hw_appendix_e(&law)? / curve.default_density(t)?)
}

pub fn hw_cva(
    params: &HwParams,
    spec: &ExposureSpec,
    curve: &CreditCurve,
    rule: &QuadratureRule,
    mode: CorrMode,
) -> Result<CvaResult> {
    params.validate()?;
    integrate_cva(
        |t| hw_wwr_epe(params, spec, curve, t, mode),
        spec,
        curve,
        rule,
        ModelTag::HullWhite,
        params.rho,
    )
}
