//! Credit curve and prototypical exposure profiles.

use crate::error::{ensure_finite, ensure_non_negative, ensure_positive, Error, Result};
use crate::mathkit::{norm_inv_cdf, normal_positive_part_mean};

/// Deterministic hazard-rate curve, piecewise constant in time.
///
/// `hazards[i]` applies on `[knots[i-1], knots[i])` with `knots[-1] = 0`; the
/// last rate extends to infinity, so a flat curve has no knots.
#[derive(Debug, Clone, PartialEq)]
pub struct CreditCurve {
    knots: Vec<f64>,
    hazards: Vec<f64>,
}

impl CreditCurve {
    pub fn flat(h: f64) -> Result<Self> {
        ensure_positive("h", h)?;
        Ok(Self {
            knots: Vec::new(),
            hazards: vec![h],
        })
    }

    pub fn piecewise(knots: Vec<f64>, hazards: Vec<f64>) -> Result<Self> {
        if hazards.len() != knots.len() + 1 {
            return Err(Error::Domain(format!(
                "piecewise curve needs one more hazard than knots ({} knots, {} hazards)",
                knots.len(),
                hazards.len()
            )));
        }
        let mut prev = 0.0;
        for &k in &knots {
            ensure_finite("knot", k)?;
            if k <= prev {
                return Err(Error::Domain("knots must be positive and increasing".into()));
            }
            prev = k;
        }
        for &h in &hazards {
            ensure_positive("h", h)?;
        }
        Ok(Self { knots, hazards })
    }

    pub fn is_flat(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Hazard rate h(t), right-continuous at the knots.
    pub fn hazard(&self, t: f64) -> f64 {
        let i = self.knots.partition_point(|&k| k <= t);
        self.hazards[i]
    }

    /// ∫₀ᵗ h(s) ds.
    pub fn integrated_hazard(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        let mut total = 0.0;
        let mut start = 0.0;
        for (i, &k) in self.knots.iter().enumerate() {
            if t <= k {
                return Ok(total + self.hazards[i] * (t - start));
            }
            total += self.hazards[i] * (k - start);
            start = k;
        }
        Ok(total + self.hazards[self.hazards.len() - 1] * (t - start))
    }

    /// G(t) = exp(−∫₀ᵗ h).
    pub fn survival(&self, t: f64) -> Result<f64> {
        Ok((-self.integrated_hazard(t)?).exp())
    }

    /// 1 − G(t), computed without cancellation.
    pub fn default_probability(&self, t: f64) -> Result<f64> {
        Ok(-(-self.integrated_hazard(t)?).exp_m1())
    }

    /// Φ⁻¹(G(t)), taken as −Φ⁻¹(1 − G(t)) to keep precision when G is close to 1.
    /// Infinite at t = 0.
    pub fn survival_quantile(&self, t: f64) -> Result<f64> {
        let d = self.default_probability(t)?;
        if d <= 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(-norm_inv_cdf(d)?)
    }

    /// Default density h(t)·G(t).
    pub fn default_density(&self, t: f64) -> Result<f64> {
        Ok(self.hazard(t) * self.survival(t)?)
    }
}

/// Free function form of [`CreditCurve::survival`].
pub fn survival(curve: &CreditCurve, t: f64) -> Result<f64> {
    curve.survival(t)
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("time must be finite and non-negative, got {t}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExposureKind {
    /// Driftless Brownian exposure, V_t = ϑ B_t.
    Forward,
    /// Brownian bridge pulled to zero at maturity with drift γ.
    Irs,
}

impl std::str::FromStr for ExposureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "forward" | "fwd" => Ok(Self::Forward),
            "irs" | "swap" => Ok(Self::Irs),
            other => Err(Error::Domain(format!("unknown exposure kind `{other}`"))),
        }
    }
}

impl std::fmt::Display for ExposureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Forward => "forward",
            Self::Irs => "irs",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExposureSpec {
    pub kind: ExposureKind,
    /// Moneyness drift γ (IRS only).
    pub gamma: f64,
    /// Exposure volatility ϑ. Zero is accepted and gives a degenerate exposure.
    pub vartheta: f64,
    /// Maturity T.
    pub maturity: f64,
}

impl ExposureSpec {
    pub fn new(kind: ExposureKind, gamma: f64, vartheta: f64, maturity: f64) -> Result<Self> {
        ensure_finite("gamma", gamma)?;
        ensure_non_negative("vartheta", vartheta)?;
        ensure_positive("maturity", maturity)?;
        Ok(Self {
            kind,
            gamma,
            vartheta,
            maturity,
        })
    }

    pub fn forward(vartheta: f64, maturity: f64) -> Result<Self> {
        Self::new(ExposureKind::Forward, 0.0, vartheta, maturity)
    }

    pub fn irs(gamma: f64, vartheta: f64, maturity: f64) -> Result<Self> {
        Self::new(ExposureKind::Irs, gamma, vartheta, maturity)
    }

    pub(crate) fn check_time(&self, t: f64) -> Result<()> {
        if t.is_finite() && (0.0..=self.maturity).contains(&t) {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "time {t} outside [0, {}]",
                self.maturity
            )))
        }
    }
}

/// Law N(a, b²) of V_t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMarginal {
    pub a: f64,
    pub b: f64,
}

impl GaussianMarginal {
    pub fn epe(&self) -> f64 {
        normal_positive_part_mean(self.a, self.b)
    }

    pub fn is_degenerate(&self) -> bool {
        self.b <= 0.0
    }
}

pub fn marginal(spec: &ExposureSpec, t: f64) -> Result<GaussianMarginal> {
    spec.check_time(t)?;
    let m = match spec.kind {
        ExposureKind::Forward => GaussianMarginal {
            a: 0.0,
            b: spec.vartheta * t.sqrt(),
        },
        ExposureKind::Irs => {
            let big_t = spec.maturity;
            GaussianMarginal {
                a: spec.gamma * t * (big_t - t),
                b: spec.vartheta * (t * (big_t - t) / big_t).sqrt(),
            }
        }
    };
    Ok(m)
}

/// E[V_t⁺] = b φ(a/b) + a Φ(a/b), with max(a, 0) when b = 0.
pub fn unconditional_epe(spec: &ExposureSpec, t: f64) -> Result<f64> {
    Ok(marginal(spec, t)?.epe())
}

/// Exact transition of the exposure from `s` to `t` given V_s and a standard
/// normal draw `z`.
pub fn exposure_path_step(spec: &ExposureSpec, s: f64, t: f64, vs: f64, z: f64) -> Result<f64> {
    spec.check_time(s)?;
    spec.check_time(t)?;
    if s >= t {
        return Err(Error::Domain(format!("exposure step needs s < t, got s={s}, t={t}")));
    }
    let dt = t - s;
    let v = match spec.kind {
        ExposureKind::Forward => vs + spec.vartheta * dt.sqrt() * z,
        ExposureKind::Irs => {
            let big_t = spec.maturity;
            if t >= big_t {
                return Ok(0.0);
            }
            let ratio = (big_t - t) / (big_t - s);
            ratio * vs + spec.gamma * dt * (big_t - t) + spec.vartheta * (dt * ratio).sqrt() * z
        }
    };
    Ok(v)
}

/// Standard deviation of the exposure increment driven by the Brownian motion
/// on `[s, t]`, and the integrand weight of dB_u in it.
pub(crate) fn exposure_kernel(spec: &ExposureSpec, t: f64, u: f64) -> f64 {
    match spec.kind {
        ExposureKind::Forward => spec.vartheta,
        ExposureKind::Irs => spec.vartheta * (spec.maturity - t) / (spec.maturity - u),
    }
}

/// Uniform grid of `n` points on (0, T], or on [0, T] when `include_zero`.
pub fn time_grid(maturity: f64, n: usize, include_zero: bool) -> Result<Vec<f64>> {
    ensure_positive("maturity", maturity)?;
    if n == 0 {
        return Err(Error::Domain("time grid needs at least one point".into()));
    }
    let grid = if include_zero {
        if n < 2 {
            return Err(Error::Domain("a grid including 0 needs at least two points".into()));
        }
        (0..n).map(|i| maturity * i as f64 / (n - 1) as f64).collect()
    } else {
        (1..=n).map(|i| maturity * i as f64 / n as f64).collect()
    };
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn survival_anchors() {
        let c = CreditCurve::flat(0.01).unwrap();
        assert_eq!(c.survival(0.0).unwrap(), 1.0);
        assert_relative_eq!(c.survival(2.5).unwrap(), 0.975_309_912_028_332_6, max_relative = 1e-15);
        let c = CreditCurve::flat(0.30).unwrap();
        assert_relative_eq!(c.survival(5.0).unwrap(), 0.223_130_160_148_429_8, max_relative = 1e-15);
        assert!(c.survival(-1.0).is_err());
    }

    #[test]
    fn piecewise_curve_integrates_segments() {
        let c = CreditCurve::piecewise(vec![1.0, 3.0], vec![0.01, 0.02, 0.05]).unwrap();
        assert_eq!(c.hazard(0.5), 0.01);
        assert_eq!(c.hazard(1.0), 0.02);
        assert_eq!(c.hazard(10.0), 0.05);
        assert_relative_eq!(c.integrated_hazard(4.0).unwrap(), 0.01 + 0.04 + 0.05, max_relative = 1e-15);
        assert!(CreditCurve::piecewise(vec![2.0, 1.0], vec![0.1; 3]).is_err());
        assert!(CreditCurve::flat(0.0).is_err());
    }

    #[test]
    fn survival_quantile_matches_direct_inverse() {
        let c = CreditCurve::flat(0.01).unwrap();
        let q = c.survival_quantile(2.5).unwrap();
        assert_relative_eq!(q, norm_inv_cdf(c.survival(2.5).unwrap()).unwrap(), max_relative = 1e-9);
        assert!(c.survival_quantile(0.0).unwrap().is_infinite());
    }

    #[test]
    fn marginal_table() {
        let f = ExposureSpec::forward(0.022, 5.0).unwrap();
        let m = marginal(&f, 2.5).unwrap();
        assert_eq!(m.a, 0.0);
        assert_abs_diff_eq!(m.b, 0.034_785_054_261_852_17, epsilon = 1e-15);
        assert_abs_diff_eq!(m.epe(), 0.013_877_3, epsilon = 1e-7);

        let s = ExposureSpec::irs(0.005, 0.022, 5.0).unwrap();
        let m = marginal(&s, 2.5).unwrap();
        assert_abs_diff_eq!(m.a, 0.03125, epsilon = 1e-15);
        assert_abs_diff_eq!(m.b, 0.024_596_747_752_497_69, epsilon = 1e-15);
        assert_eq!(marginal(&s, 5.0).unwrap().b, 0.0);
        assert_eq!(unconditional_epe(&s, 5.0).unwrap(), 0.0);
        assert_eq!(marginal(&s, 0.0).unwrap(), GaussianMarginal { a: 0.0, b: 0.0 });
        assert!(marginal(&s, 5.1).is_err());
    }

    #[test]
    fn epe_dominates_positive_mean() {
        let s = ExposureSpec::irs(0.005, 0.022, 5.0).unwrap();
        for t in time_grid(5.0, 50, true).unwrap() {
            let m = marginal(&s, t).unwrap();
            assert!(m.epe() >= m.a.max(0.0));
        }
    }

    #[test]
    fn bridge_step() {
        let s = ExposureSpec::irs(0.005, 0.022, 5.0).unwrap();
        let v = exposure_path_step(&s, 1.0, 2.0, 0.01, 1.0).unwrap();
        assert_abs_diff_eq!(v, 0.041_552_558_883_257_65, epsilon = 1e-12);
        assert_eq!(exposure_path_step(&s, 4.0, 5.0, 0.3, 2.0).unwrap(), 0.0);
        assert!(exposure_path_step(&s, 2.0, 2.0, 0.0, 0.0).is_err());
        let f = ExposureSpec::forward(0.022, 5.0).unwrap();
        assert_abs_diff_eq!(
            exposure_path_step(&f, 0.0, 4.0, 0.0, -0.5).unwrap(),
            -0.022,
            epsilon = 1e-15
        );
    }

    #[test]
    fn grid_shapes() {
        assert_eq!(time_grid(5.0, 5, false).unwrap(), vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(time_grid(5.0, 3, true).unwrap(), vec![0.0, 2.5, 5.0]);
        assert!(time_grid(5.0, 0, false).is_err());
    }
}
