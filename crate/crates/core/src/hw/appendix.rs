//! Closed form of E[(A + B X) k e^{−(αX + βY + γZ)} (a + α̃X + β̃Y + γ̃Z)⁺]
//! for independent standard normals X, Y, Z.
//!
//! Integrating Z out first leaves a two-dimensional integral against the
//! shifted densities φ(α + x) φ(β + y). It splits into six basic integrals
//!
//! ```text
//! I_A = ∫∫ φ(μx + σy + δ) φ(a + bx) φ(c + dy) dx dy
//! I_B = ∫∫ Φ(μx + σy + δ) φ(a + bx) φ(c + dy) dx dy
//! I_C = ∫∫ x Φ(μx + σy + δ) …      I_D = ∫∫ x φ(μx + σy + δ) …
//! I_E = ∫∫ x² Φ(μx + σy + δ) …     I_F = ∫∫ x y Φ(μx + σy + δ) …
//! ```
//!
//! indexed by v = (μ, σ, δ, a, b, c, d). The local letters μ, σ, δ, a, b, c, d
//! have nothing to do with the model parameters of the same name.

use crate::error::{Error, Result};
use crate::mathkit::{norm_cdf, norm_pdf};

/// Coefficients of the expectation above.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleLaw {
    pub a_cap: f64,
    pub b_cap: f64,
    pub k: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub a: f64,
    pub a_tilde: f64,
    pub b_tilde: f64,
    pub g_tilde: f64,
}

/// Relative size of γ̃ below which Z is treated as absent from the exposure.
const COLLAPSE_TOL: f64 = 1e-9;

/// Argument vector v = (μ, σ, δ, a, b, c, d) of the basic integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralArgs {
    pub mu: f64,
    pub sigma: f64,
    pub delta: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

/// Quantities shared by all six integrals.
#[derive(Debug, Clone, Copy)]
struct Helpers {
    s: f64,
    r: f64,
    cap_a: f64,
    cap_b: f64,
    cap_c: f64,
    beta: f64,
    a_hat: f64,
}

/// φ(x/k)/|k|, the N(0, k²) density.
fn phi_k(x: f64, k: f64) -> f64 {
    norm_pdf(x / k) / k.abs()
}

impl IntegralArgs {
    fn helpers(&self) -> Result<Helpers> {
        let Self {
            mu,
            sigma,
            delta,
            a,
            b,
            c,
            d,
        } = *self;
        if b == 0.0 {
            return Err(Error::Degenerate("b"));
        }
        if d == 0.0 {
            return Err(Error::Degenerate("d"));
        }
        let s = (b * d).signum();
        let r = b.hypot(mu);
        let cap_a = (delta * b - mu * a) / r;
        let cap_b = sigma * b / r;
        let cap_c = cap_a * d - cap_b * c;
        let beta = d.hypot(cap_b);
        let a_hat = s * (delta * b * d - mu * a * d - sigma * c * b) / (d * r);
        Ok(Helpers {
            s,
            r,
            cap_a,
            cap_b,
            cap_c,
            beta,
            a_hat,
        })
    }

    pub fn i_a(&self) -> Result<f64> {
        let h = self.helpers()?;
        Ok(phi_k(h.cap_c, h.beta) / h.r)
    }

    pub fn i_b(&self) -> Result<f64> {
        let h = self.helpers()?;
        Ok(h.s / (self.b * self.d) * norm_cdf(h.a_hat * self.d / h.beta))
    }

    pub fn i_c(&self) -> Result<f64> {
        let h = self.helpers()?;
        let b2 = self.b * self.b;
        Ok(self.mu / b2 * phi_k(h.a_hat * self.d, h.beta) / h.r - self.a / self.b * self.i_b()?)
    }

    pub fn i_d(&self) -> Result<f64> {
        let h = self.helpers()?;
        let w = (h.cap_a * h.cap_b + self.c * self.d) / (h.beta * h.beta);
        Ok(-phi_k(h.cap_c, h.beta) / (self.b * h.r)
            * (self.mu * h.cap_a / h.r + self.a - self.mu * h.cap_b / h.r * w))
    }

    fn i_e1(&self, h: &Helpers) -> f64 {
        h.s / self.d * norm_cdf(h.s * h.cap_c / h.beta)
    }

    fn i_e2(&self, h: &Helpers) -> f64 {
        -phi_k(h.cap_c, h.beta) * (h.cap_a * h.cap_b + self.c * self.d) / (h.beta * h.beta)
    }

    pub fn i_e(&self) -> Result<f64> {
        let h = self.helpers()?;
        let (mu, a, b) = (self.mu, self.a, self.b);
        let mu_r = mu / h.r;
        Ok(((1.0 + a * a) * self.i_e1(&h)
            - (2.0 * a * mu_r + h.cap_a * mu_r * mu_r) * phi_k(h.cap_c, h.beta)
            - h.cap_b * mu_r * mu_r * self.i_e2(&h))
            / (b * b * b))
    }

    pub fn i_f(&self) -> Result<f64> {
        let h = self.helpers()?;
        let (b, d) = (self.b, self.d);
        let i_f2 = h.cap_b / (d * d) * phi_k(h.cap_c, h.beta) - self.c / d * self.i_e1(&h);
        Ok(self.mu / (b * b * h.r) * self.i_e2(&h) - self.a / (b * b) * i_f2)
    }
}

/// The closed form k e^{(α² + β² + γ²)/2} (A I₁ + B I₂).
pub fn hw_appendix_e(law: &TripleLaw) -> Result<f64> {
    let TripleLaw {
        a_cap,
        b_cap,
        k,
        alpha,
        beta,
        mut gamma,
        a,
        a_tilde,
        b_tilde,
        mut g_tilde,
    } = *law;
    for v in [a_cap, b_cap, k, alpha, beta, gamma, a, a_tilde, b_tilde, g_tilde] {
        if !v.is_finite() {
            return Err(Error::Domain("appendix coefficients must be finite".into()));
        }
    }
    let scale = k * (0.5 * (alpha * alpha + beta * beta + gamma * gamma)).exp();
    let spread = (a_tilde * a_tilde + b_tilde * b_tilde + g_tilde * g_tilde).sqrt();

    if g_tilde.abs() <= COLLAPSE_TOL * spread || spread == 0.0 {
        // Z drops out of the exposure; only its tilt factor e^{γ²/2} remains.
        let m = a - a_tilde * alpha - b_tilde * beta;
        let s = a_tilde.hypot(b_tilde);
        let (i1, cdf) = if s == 0.0 {
            (m.max(0.0), if m > 0.0 { 1.0 } else if m == 0.0 { 0.5 } else { 0.0 })
        } else {
            let z = m / s;
            (s * norm_pdf(z) + m * norm_cdf(z), norm_cdf(z))
        };
        let i2 = -alpha * i1 + a_tilde * cdf;
        return Ok(scale * (a_cap * i1 + b_cap * i2));
    }
    if g_tilde < 0.0 {
        // Z and −Z have the same law.
        g_tilde = -g_tilde;
        gamma = -gamma;
    }

    let v1 = IntegralArgs {
        mu: a_tilde / g_tilde,
        sigma: b_tilde / g_tilde,
        delta: a / g_tilde - gamma,
        a: alpha,
        b: 1.0,
        c: beta,
        d: 1.0,
    };
    let v2 = IntegralArgs {
        mu: b_tilde / g_tilde,
        sigma: a_tilde / g_tilde,
        delta: a / g_tilde - gamma,
        a: beta,
        b: 1.0,
        c: alpha,
        d: 1.0,
    };
    let lead = a - gamma * g_tilde;
    let i1 = lead * v1.i_b()? + a_tilde * v1.i_c()? + b_tilde * v2.i_c()? + g_tilde * v1.i_a()?;
    let i2 = lead * v1.i_c()? + a_tilde * v1.i_e()? + b_tilde * v1.i_f()? + g_tilde * v1.i_d()?;
    Ok(scale * (a_cap * i1 + b_cap * i2))
}
