//! Dynamic survival models and their joint path simulation with the exposure.
//!
//! Every model is driven by one credit Brownian motion W correlated with the
//! exposure Brownian motion B. Hull-White, conic and Gaussian martingale paths
//! use exact Gaussian transitions; the shifted square-root intensity uses an
//! Euler scheme with full truncation.

use super::rng::PathRng;
use crate::cm::CmParams;
use crate::cva::ModelTag;
use crate::error::{ensure_correlation, ensure_non_negative, ensure_positive, Error, Result};
use crate::hw::{hw_marginals, xi, HwParams};
use crate::market::{exposure_kernel, exposure_path_step, CreditCurve, ExposureSpec};
use crate::mathkit::{cholesky3, clamp_correlation, gauss_legendre_table, norm_cdf, CorrMatrix3};

/// Survival process S_t = G(t) + σW_t, for which ζ ≡ 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMartingaleParams {
    pub sigma: f64,
    pub rho: f64,
}

impl GaussianMartingaleParams {
    pub fn new(sigma: f64, rho: f64) -> Result<Self> {
        let p = Self { sigma, rho };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("sigma", self.sigma)?;
        ensure_correlation("rho", self.rho)
    }
}

/// CIR core dx = κ(θ − x)dt + σ√x dW with x₀ = r₀, shifted to fit the curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsrdParams {
    pub r0: f64,
    pub kappa: f64,
    pub theta: f64,
    pub sigma: f64,
    pub rho: f64,
}

impl SsrdParams {
    pub fn new(r0: f64, kappa: f64, theta: f64, sigma: f64, rho: f64) -> Result<Self> {
        let p = Self { r0, kappa, theta, sigma, rho };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("r0", self.r0)?;
        ensure_positive("kappa", self.kappa)?;
        ensure_positive("theta", self.theta)?;
        ensure_non_negative("sigma", self.sigma)?;
        ensure_correlation("rho", self.rho)
    }

    /// 2κθ > σ². Reported only; the scheme copes with either case.
    pub fn feller(&self) -> bool {
        2.0 * self.kappa * self.theta > self.sigma * self.sigma
    }
}

/// Deterministic shift φ(t) = h(t) − f_CIR(0, t) that reproduces the curve.
pub fn cir_shift_phi(params: &SsrdParams, curve: &CreditCurve, t: f64) -> Result<f64> {
    params.validate()?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Domain(format!("time must be non-negative, got {t}")));
    }
    let (k, s) = (params.kappa, params.sigma);
    let g = (k * k + 2.0 * s * s).sqrt();
    let x = t * g;
    let forward = if x > 700.0 {
        2.0 * k * params.theta / (k + g)
    } else {
        let e = x.exp_m1();
        let d = 2.0 * g + (k + g) * e;
        2.0 * k * params.theta * e / d + params.r0 * 4.0 * g * g * (e + 1.0) / (d * d)
    };
    Ok(curve.hazard(t) - forward)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DynamicModel {
    HullWhite(HwParams),
    Conic(CmParams),
    GaussianMartingale(GaussianMartingaleParams),
    Ssrd(SsrdParams),
}

impl DynamicModel {
    pub fn tag(&self) -> ModelTag {
        match self {
            Self::HullWhite(_) => ModelTag::HullWhite,
            Self::Conic(_) => ModelTag::ConicMartingale,
            Self::GaussianMartingale(_) => ModelTag::GaussianMartingale,
            Self::Ssrd(_) => ModelTag::Ssrd,
        }
    }

    /// Correlation as entered by the user.
    pub fn rho(&self) -> f64 {
        match self {
            Self::HullWhite(p) => p.rho,
            Self::Conic(p) => p.rho,
            Self::GaussianMartingale(p) => p.rho,
            Self::Ssrd(p) => p.rho,
        }
    }

    /// Instantaneous correlation d⟨B, W⟩ used by the simulation.
    pub fn brownian_rho(&self) -> f64 {
        match self {
            Self::Conic(p) => p.brownian_rho(),
            other => other.rho(),
        }
    }

    pub fn has_intensity(&self) -> bool {
        matches!(self, Self::HullWhite(_) | Self::Ssrd(_))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::HullWhite(p) => p.validate(),
            Self::Conic(p) => p.validate(),
            Self::GaussianMartingale(p) => p.validate(),
            Self::Ssrd(p) => p.validate(),
        }
    }
}

/// State of one path at one simulation time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPoint {
    pub t: f64,
    pub s: f64,
    pub zeta: f64,
    /// Default intensity, for the intensity models only.
    pub lambda: Option<f64>,
    pub v: f64,
}

impl PathPoint {
    fn start() -> Self {
        Self {
            t: 0.0,
            s: 1.0,
            zeta: 1.0,
            lambda: None,
            v: 0.0,
        }
    }
}

/// Union of the uniform grid {k·dt} on (0, horizon] and the requested times,
/// with 0 prepended. Grid points closer than a tiny tolerance to a requested
/// time are replaced by it.
pub fn simulation_times(horizon: f64, dt: f64, outputs: &[f64]) -> Result<Vec<f64>> {
    ensure_positive("dt", dt)?;
    let tol = 1e-9 * dt.min(horizon.max(f64::MIN_POSITIVE));
    let n = (horizon / dt - 1e-9).ceil().max(1.0) as usize;
    let mut times: Vec<f64> = (1..n).map(|k| k as f64 * dt).collect();
    times.push(horizon);
    times.extend(outputs.iter().copied().filter(|&t| t > 0.0));
    times.sort_by(|a, b| a.total_cmp(b));
    let mut out = vec![0.0];
    for t in times {
        let last = *out.last().expect("non-empty");
        if t - last > tol {
            out.push(t);
        } else if outputs.contains(&t) {
            *out.last_mut().expect("non-empty") = t;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
struct Step {
    dt: f64,
    chol: [[f64; 3]; 3],
    std: [f64; 3],
    /// e^{−κΔ} (HW) or e^{μΔ} (CM).
    carry: f64,
    /// ξ(1, Δ) for the integrated Hull-White factor.
    integ: f64,
}

/// Deterministic functions of time needed to map the state to (S, ζ, λ).
#[derive(Debug, Clone, Copy, Default)]
struct Mark {
    /// h(t) G(t).
    density: f64,
    /// HW: A(t); CM: Φ⁻¹(G) e^{μt}; Gaussian: G(t); SSRD: φ(t).
    level: f64,
    /// HW: ω(t); CM: μt + Φ⁻¹(G)²/2.
    aux: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Driver {
    Credit,
    Exposure,
}

/// Covariance of three Gaussian increments ∫ k_i(u) dX_u over [s, t], by
/// Gauss-Legendre quadrature, as (standard deviations, Cholesky factor of the
/// correlation matrix). Components with zero variance get zero correlation.
fn correlated_step(
    kernels: [(Driver, &dyn Fn(f64) -> f64); 3],
    s: f64,
    t: f64,
    rho: f64,
) -> Result<([f64; 3], [[f64; 3]; 3])> {
    let table = gauss_legendre_table(32);
    let (mid, half) = (0.5 * (s + t), 0.5 * (t - s));
    let mut cov = [[0.0; 3]; 3];
    for &(x, w) in table.iter() {
        let u = mid + half * x;
        let k = [kernels[0].1(u), kernels[1].1(u), kernels[2].1(u)];
        for i in 0..3 {
            for j in 0..=i {
                let c = if kernels[i].0 == kernels[j].0 { 1.0 } else { rho };
                cov[i][j] += w * half * c * k[i] * k[j];
            }
        }
    }
    let std = [cov[0][0].sqrt(), cov[1][1].sqrt(), cov[2][2].sqrt()];
    let corr = |i: usize, j: usize| {
        if std[i] > 0.0 && std[j] > 0.0 {
            clamp_correlation(cov[i][j] / (std[i] * std[j]))
        } else {
            0.0
        }
    };
    let chol = cholesky3(&CorrMatrix3 {
        r12: corr(1, 0),
        r13: corr(2, 0),
        r23: corr(2, 1),
    })?;
    Ok((std, chol))
}

/// Precomputed simulator for one (model, exposure, curve, grid) combination.
#[derive(Debug, Clone)]
pub struct PathSimulator {
    model: DynamicModel,
    spec: ExposureSpec,
    times: Vec<f64>,
    steps: Vec<Step>,
    marks: Vec<Mark>,
}

impl PathSimulator {
    /// Simulation grid from 0 to the last requested time with steps of at most
    /// `dt`, passing through every requested time.
    pub fn new(
        model: DynamicModel,
        spec: &ExposureSpec,
        curve: &CreditCurve,
        dt: f64,
        outputs: &[f64],
    ) -> Result<Self> {
        model.validate()?;
        for &t in outputs {
            spec.check_time(t)?;
        }
        let horizon = outputs.iter().copied().fold(0.0, f64::max);
        if horizon <= 0.0 {
            return Err(Error::Domain("simulation needs a positive output time".into()));
        }
        if dt > spec.maturity {
            return Err(Error::InvalidParameter {
                name: "dt",
                value: dt,
                reason: "must not exceed the maturity",
            });
        }
        let times = simulation_times(horizon, dt, outputs)?;
        let rho = model.brownian_rho();
        let marks = times
            .iter()
            .map(|&t| mark(&model, curve, t))
            .collect::<Result<Vec<_>>>()?;
        let mut steps = Vec::with_capacity(times.len() - 1);
        for w in times.windows(2) {
            let (s, t) = (w[0], w[1]);
            let dt = t - s;
            let kv = |u: f64| if t >= spec.maturity { 0.0 } else { exposure_kernel(spec, t, u) };
            let zero = |_: f64| 0.0;
            let unit = |_: f64| 1.0;
            let step = match model {
                DynamicModel::HullWhite(p) => {
                    let k1 = |u: f64| p.sigma * (-p.kappa * (t - u)).exp();
                    let k2 = |u: f64| p.sigma * xi(1.0, t - u, p.kappa);
                    let (std, chol) = correlated_step(
                        [(Driver::Credit, &k1), (Driver::Credit, &k2), (Driver::Exposure, &kv)],
                        s,
                        t,
                        rho,
                    )?;
                    Step {
                        dt,
                        chol,
                        std,
                        carry: (-p.kappa * dt).exp(),
                        integ: xi(1.0, dt, p.kappa),
                    }
                }
                DynamicModel::Conic(p) => {
                    let mu = p.mu();
                    let k1 = |u: f64| p.sigma * (mu * (t - u)).exp();
                    let (std, chol) = correlated_step(
                        [(Driver::Credit, &k1), (Driver::Credit, &zero), (Driver::Exposure, &kv)],
                        s,
                        t,
                        rho,
                    )?;
                    Step { dt, chol, std, carry: (mu * dt).exp(), integ: 0.0 }
                }
                DynamicModel::GaussianMartingale(_) | DynamicModel::Ssrd(_) => {
                    let (std, chol) = correlated_step(
                        [(Driver::Credit, &unit), (Driver::Credit, &zero), (Driver::Exposure, &kv)],
                        s,
                        t,
                        rho,
                    )?;
                    Step { dt, chol, std, carry: 1.0, integ: 0.0 }
                }
            };
            steps.push(step);
        }
        Ok(Self {
            model,
            spec: *spec,
            times,
            steps,
            marks,
        })
    }

    pub fn model(&self) -> &DynamicModel {
        &self.model
    }

    /// Simulation times, starting at 0.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Index of `t` in [`Self::times`].
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&x| x == t)
    }

    /// h(t) G(t) at every simulation time.
    pub fn default_density(&self) -> Vec<f64> {
        self.marks.iter().map(|m| m.density).collect()
    }

    /// Simulates one path into `out`, which must hold one point per
    /// simulation time. `path` only labels errors.
    pub fn run(&self, path: u64, rng: &mut PathRng, out: &mut [PathPoint]) -> Result<()> {
        assert_eq!(out.len(), self.times.len(), "path buffer has the wrong length");
        let mut p = PathPoint::start();
        // x / I (HW), N (CM), W (Gaussian), x (SSRD)
        let (mut y1, mut y2) = match self.model {
            DynamicModel::Ssrd(q) => (q.r0, 0.0),
            _ => (0.0, 0.0),
        };
        if self.model.has_intensity() {
            p.lambda = Some(match self.model {
                DynamicModel::HullWhite(_) => self.marks[0].level,
                _ => y1 + self.marks[0].level,
            });
        }
        out[0] = p;
        for (i, step) in self.steps.iter().enumerate() {
            let z = [rng.normal(), rng.normal(), rng.normal()];
            let c = &step.chol;
            let e = [
                c[0][0] * z[0],
                c[1][0] * z[0] + c[1][1] * z[1],
                c[2][0] * z[0] + c[2][1] * z[1] + c[2][2] * z[2],
            ];
            let (s, t) = (self.times[i], self.times[i + 1]);
            let m = &self.marks[i + 1];
            p.t = t;
            p.v = exposure_path_step(&self.spec, s, t, p.v, e[2])?;
            match self.model {
                DynamicModel::HullWhite(_) => {
                    y2 += step.integ * y1 + step.std[1] * e[1];
                    y1 = step.carry * y1 + step.std[0] * e[0];
                    let lambda = m.level + y1;
                    p.s = (-(m.aux + y2)).exp();
                    p.zeta = lambda * p.s / m.density;
                    p.lambda = Some(lambda);
                }
                DynamicModel::Conic(_) => {
                    y1 = step.carry * y1 + step.std[0] * e[0];
                    let x = m.level + y1;
                    p.s = norm_cdf(x);
                    p.zeta = (m.aux - 0.5 * x * x).exp();
                }
                DynamicModel::GaussianMartingale(q) => {
                    y1 += step.std[0] * e[0];
                    p.s = m.level + q.sigma * y1;
                    p.zeta = 1.0;
                }
                DynamicModel::Ssrd(q) => {
                    let pos = y1.max(0.0);
                    y1 += q.kappa * (q.theta - pos) * step.dt + q.sigma * pos.sqrt() * step.std[0] * e[0];
                    let lambda = y1.max(0.0) + m.level;
                    y2 += 0.5 * step.dt * (p.lambda.unwrap_or(0.0) + lambda);
                    p.s = (-y2).exp();
                    p.zeta = lambda * p.s / m.density;
                    p.lambda = Some(lambda);
                }
            }
            if !(p.s.is_finite() && p.zeta.is_finite() && p.v.is_finite()) {
                return Err(Error::Simulation {
                    path: path as usize,
                    step: i + 1,
                });
            }
            out[i + 1] = p;
        }
        Ok(())
    }
}

fn mark(model: &DynamicModel, curve: &CreditCurve, t: f64) -> Result<Mark> {
    let density = curve.default_density(t)?;
    let (level, aux) = match model {
        DynamicModel::HullWhite(p) => {
            let m = hw_marginals(p, curve, t)?;
            (m.a_cap, m.omega)
        }
        DynamicModel::Conic(p) => {
            if t == 0.0 {
                (0.0, 0.0)
            } else {
                let q = curve.survival_quantile(t)?;
                let mu_t = p.mu() * t;
                (q * mu_t.exp(), mu_t + 0.5 * q * q)
            }
        }
        DynamicModel::GaussianMartingale(_) => (curve.survival(t)?, 0.0),
        DynamicModel::Ssrd(p) => (cir_shift_phi(p, curve, t)?, 0.0),
    };
    Ok(Mark { density, level, aux })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cm::{cm_marginal, cm_zeta};
    use approx::assert_relative_eq;

    fn fwd() -> ExposureSpec {
        ExposureSpec::forward(0.022, 5.0).unwrap()
    }

    fn one_path(sim: &PathSimulator, id: u64) -> Vec<PathPoint> {
        let mut out = vec![PathPoint::start(); sim.times().len()];
        sim.run(id, &mut PathRng::new(5, id, false), &mut out).unwrap();
        out
    }

    #[test]
    fn grid_contains_outputs() {
        let g = simulation_times(5.0, 0.3, &[0.25, 2.5, 4.75]).unwrap();
        assert_eq!(g[0], 0.0);
        assert_eq!(*g.last().unwrap(), 5.0);
        for t in [0.25, 2.5, 4.75] {
            assert!(g.contains(&t));
        }
        assert!(g.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] <= 0.3 + 1e-12));
        let g = simulation_times(1.0, 0.1, &[0.3]).unwrap();
        assert_eq!(g.len(), 11);
        assert!(g.contains(&0.3));
    }

    #[test]
    fn shift_reproduces_hazard_at_zero() {
        let p = SsrdParams::new(0.01, 0.35, 0.0012, 0.02, 0.0).unwrap();
        let curve = CreditCurve::flat(0.01).unwrap();
        assert!(cir_shift_phi(&p, &curve, 0.0).unwrap().abs() < 1e-15);
        // Long run CIR forward tends to 2κθ/(κ + γ).
        let g = (0.35f64 * 0.35 + 2.0 * 0.02 * 0.02).sqrt();
        let far = cir_shift_phi(&p, &curve, 2000.0).unwrap();
        assert_relative_eq!(far, 0.01 - 2.0 * 0.35 * 0.0012 / (0.35 + g), max_relative = 1e-12);
        assert!(p.feller());
        assert!(!SsrdParams::new(0.01, 0.35, 0.0012, 0.2, 0.0).unwrap().feller());
    }

    #[test]
    fn zero_volatility_tracks_the_curve() {
        let curve = CreditCurve::flat(0.05).unwrap();
        let models = [
            DynamicModel::HullWhite(HwParams::new(0.5, 0.01, 0.0, 0.02, 0.7).unwrap()),
            DynamicModel::Conic(CmParams::new(0.0, 0.7).unwrap()),
            DynamicModel::GaussianMartingale(GaussianMartingaleParams::new(0.0, 0.7).unwrap()),
        ];
        for m in models {
            let sim = PathSimulator::new(m, &fwd(), &curve, 0.25, &[5.0]).unwrap();
            for p in one_path(&sim, 3) {
                assert_relative_eq!(p.s, curve.survival(p.t).unwrap(), max_relative = 1e-12);
                assert_relative_eq!(p.zeta, 1.0, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn conic_zeta_matches_direct_formula() {
        let curve = CreditCurve::flat(0.01).unwrap();
        let p = CmParams::new(0.9, 0.8).unwrap();
        let sim = PathSimulator::new(DynamicModel::Conic(p), &fwd(), &curve, 0.5, &[5.0]).unwrap();
        for pt in one_path(&sim, 9).into_iter().skip(1) {
            // Φ(X) rounds to 1 once X exceeds about 8.3.
            assert!(pt.s > 0.0 && pt.s <= 1.0);
            if pt.s > 1.0 - 1e-6 {
                // Φ⁻¹ of a value this close to 1 has lost most of its digits.
                continue;
            }
            let direct = cm_zeta(&p, &curve, pt.t, pt.s).unwrap();
            assert_relative_eq!(pt.zeta, direct, max_relative = 1e-8);
            assert!(cm_marginal(&p, &curve, pt.t).unwrap().k > 0.0);
        }
    }

    #[test]
    fn hull_white_zeta_is_lambda_times_survival_over_density() {
        let curve = CreditCurve::flat(0.05).unwrap();
        let p = HwParams::new(0.5, 0.0, 0.01, 0.05, 0.4).unwrap();
        let sim = PathSimulator::new(DynamicModel::HullWhite(p), &fwd(), &curve, 0.1, &[5.0]).unwrap();
        let path = one_path(&sim, 1);
        assert_relative_eq!(path[0].lambda.unwrap(), 0.05, max_relative = 1e-12);
        for pt in &path {
            let hg = curve.default_density(pt.t).unwrap();
            assert_relative_eq!(pt.zeta, pt.lambda.unwrap() * pt.s / hg, max_relative = 1e-12);
        }
    }

    #[test]
    fn irs_exposure_vanishes_at_maturity() {
        let curve = CreditCurve::flat(0.05).unwrap();
        let irs = ExposureSpec::irs(0.005, 0.022, 5.0).unwrap();
        let m = DynamicModel::Ssrd(SsrdParams::new(0.05, 0.35, 0.0012, 0.02, -0.5).unwrap());
        let sim = PathSimulator::new(m, &irs, &curve, 0.05, &[5.0]).unwrap();
        let path = one_path(&sim, 2);
        assert_eq!(path.last().unwrap().v, 0.0);
        assert!(path[path.len() / 2].v != 0.0);
    }

    #[test]
    fn correlation_of_increments() {
        // Forward exposure with the Gaussian martingale: corr(dW, dB) = ρ exactly.
        let (std, chol) = correlated_step(
            [
                (Driver::Credit, &|_| 1.0),
                (Driver::Credit, &|_| 0.0),
                (Driver::Exposure, &|_| 0.02),
            ],
            0.0,
            0.5,
            -0.3,
        )
        .unwrap();
        assert_relative_eq!(std[0], 0.5f64.sqrt(), max_relative = 1e-14);
        assert_eq!(std[1], 0.0);
        assert_relative_eq!(chol[2][0], -0.3, max_relative = 1e-14);
    }

    #[test]
    fn rejects_bad_inputs() {
        let curve = CreditCurve::flat(0.05).unwrap();
        let m = DynamicModel::GaussianMartingale(GaussianMartingaleParams::new(0.01, 0.0).unwrap());
        assert!(PathSimulator::new(m, &fwd(), &curve, 0.1, &[6.0]).is_err());
        assert!(PathSimulator::new(m, &fwd(), &curve, 10.0, &[5.0]).is_err());
        assert!(PathSimulator::new(m, &fwd(), &curve, 0.1, &[]).is_err());
        assert!(SsrdParams::new(-0.01, 0.35, 0.0012, 0.02, 0.0).is_err());
    }
}
