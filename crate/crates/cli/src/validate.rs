//! Self-checks: closed forms against each other and against simulation,
//! and calibration of every model to the credit curve.

use std::io::Write;

use anyhow::Result;
use wwr_core::cm::{cm_cva, cm_marginal, CmParams};
use wwr_core::gc::{gc_cva, gc_wwr_epe, GcParams};
use wwr_core::hw::{hw_cva, hw_marginals, hw_wwr_epe, CorrMode, HwParams};
use wwr_core::mathkit::{integrate, norm_pdf, QuadratureRule};
use wwr_core::mc::{
    cir_shift_phi, estimate_wwr_epe_mc, gc_resample_epe_mc, ssrd_cva, survival_statistics, DynamicModel,
    GaussianMartingaleParams, SimConfig, SsrdParams,
};
use wwr_core::{cva_independent, CreditCurve, EpeProfile};

use crate::config::RunConfig;
use crate::output::{label, Sink};

/// Relative tolerance of the closed-form checks.
const ANALYTIC_TOL: f64 = 1e-8;
/// Monte Carlo checks pass within this many standard errors.
const MC_SIGMAS: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub expected: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        (self.observed - self.expected).abs() <= self.tolerance
    }
}

fn relative(name: String, observed: f64, expected: f64) -> Check {
    Check {
        name,
        observed,
        expected,
        tolerance: ANALYTIC_TOL * expected.abs().max(f64::MIN_POSITIVE),
    }
}

fn statistical(name: String, observed: f64, expected: f64, std_error: f64) -> Check {
    Check {
        name,
        observed,
        expected,
        tolerance: (MC_SIGMAS * std_error).max(1e-12),
    }
}

/// ∫₀ᵗ f, split at the curve knots so that each piece is smooth.
fn integrate_piecewise(f: impl Fn(f64) -> f64, curve: &CreditCurve, t: f64) -> wwr_core::Result<f64> {
    let rule = QuadratureRule::gauss_legendre(64)?;
    let mut edges = vec![0.0];
    edges.extend(curve.knots().iter().copied().filter(|&k| k < t));
    edges.push(t);
    edges.windows(2).map(|w| integrate(&f, w[0], w[1], &rule)).sum()
}

/// Keeps the check at the time where the model misses the curve the most.
fn worst(name: &str, pairs: impl IntoIterator<Item = (f64, f64, f64)>) -> Check {
    let mut out: Option<(f64, Check)> = None;
    for (t, observed, expected) in pairs {
        let c = relative(format!("{name}(t={})", label(t)), observed, expected);
        let gap = (c.observed - c.expected).abs() / c.tolerance;
        if out.as_ref().is_none_or(|(g, _)| gap > *g) {
            out = Some((gap, c));
        }
    }
    out.expect("non-empty grid").1
}

/// E[S_t] rebuilt from the intensity mean ∫(r₀e^{−κu} + θκξ₁ + φ), with φ shifted by `bump`.
fn hw_calibration(p: &HwParams, curve: &CreditCurve, times: &[f64], bump: f64) -> wwr_core::Result<Check> {
    let mut pairs = Vec::new();
    for &t in times {
        let mean = integrate_piecewise(|u| hw_marginals(p, curve, u).map_or(f64::NAN, |m| m.a_cap) + bump, curve, t)?;
        let std = hw_marginals(p, curve, t)?.omega_std;
        pairs.push((t, (-mean + 0.5 * std * std).exp(), curve.survival(t)?));
    }
    Ok(worst("calibration.hw", pairs))
}

/// CIR zero-coupon price E[exp(−∫₀ᵗ x)].
fn cir_bond(p: &SsrdParams, t: f64) -> f64 {
    let (k, s) = (p.kappa, p.sigma);
    if s == 0.0 {
        let mean = p.theta * t - (p.r0 - p.theta) * (-k * t).exp_m1() / k;
        return (-mean).exp();
    }
    let g = (k * k + 2.0 * s * s).sqrt();
    let e = (g * t).exp_m1();
    let d = 2.0 * g + (k + g) * e;
    let b = 2.0 * e / d;
    let log_a = 2.0 * k * p.theta / (s * s) * ((2.0 * g).ln() + 0.5 * (k + g) * t - d.ln());
    (log_a - b * p.r0).exp()
}

fn ssrd_calibration(p: &SsrdParams, curve: &CreditCurve, times: &[f64], bump: f64) -> wwr_core::Result<Check> {
    let mut pairs = Vec::new();
    for &t in times {
        let shift = integrate_piecewise(|u| cir_shift_phi(p, curve, u).unwrap_or(f64::NAN) + bump, curve, t)?;
        pairs.push((t, cir_bond(p, t) * (-shift).exp(), curve.survival(t)?));
    }
    Ok(worst("calibration.ssrd", pairs))
}

fn mc_profile_checks(name: &str, mc: &EpeProfile, exact: impl Fn(f64) -> wwr_core::Result<f64>) -> wwr_core::Result<Vec<Check>> {
    let se = mc.std_errors.as_ref().expect("simulated profile");
    (0..mc.len())
        .map(|i| {
            let t = mc.times[i];
            Ok(statistical(format!("{name}(t={})", label(t)), mc.values[i], exact(t)?, se[i]))
        })
        .collect()
}

pub fn run_checks(cfg: &RunConfig) -> Result<Vec<Check>> {
    let (spec, curve, rule) = (&cfg.spec, &cfg.curve, &cfg.quadrature);
    let big_t = spec.maturity;
    let hw = |rho| HwParams::new(cfg.hw.kappa, cfg.hw.theta, cfg.hw.sigma, cfg.hw.r0, rho);
    let cm = |rho| CmParams::with_convention(cfg.cm_sigma, rho, cfg.cm_convention);
    let s = cfg.ssrd;
    let ssrd = |rho| SsrdParams::new(s.r0, s.kappa, s.theta, s.sigma, rho);
    let mut checks = Vec::new();

    let independent = cva_independent(spec, curve, rule)?.cva;
    checks.push(relative("rho0.gc.cva".into(), gc_cva(&GcParams::new(0.0)?, spec, curve, rule)?.cva, independent));
    for mode in [CorrMode::Paper, CorrMode::Exact] {
        let name = format!("rho0.hw.{}.cva", if mode == CorrMode::Paper { "paper" } else { "exact" });
        checks.push(relative(name, hw_cva(&hw(0.0)?, spec, curve, rule, mode)?.cva, independent));
    }
    checks.push(relative("rho0.cm.cva".into(), cm_cva(&cm(0.0)?, spec, curve, rule)?.cva, independent));

    let grid: Vec<f64> = (1..=20).map(|i| big_t * f64::from(i) / 20.0).collect();
    checks.push(hw_calibration(&hw(0.0)?, curve, &grid, cfg.phi_bump)?);
    checks.push(ssrd_calibration(&ssrd(0.0)?, curve, &grid, cfg.phi_bump)?);
    let mut survival = Vec::new();
    let mut identity = Vec::new();
    for &t in &grid {
        let m = cm_marginal(&cm(0.0)?, curve, t)?;
        let scale = (1.0 + m.b_cap * m.b_cap).sqrt();
        survival.push((t, m.expected_survival(), curve.survival(t)?));
        identity.push((t, m.k * norm_pdf(m.a_cap / scale) / scale, 1.0));
    }
    checks.push(worst("calibration.cm", survival));
    checks.push(worst("identity.cm.normalisation", identity));

    let mc = SimConfig {
        n_paths: cfg.validate_paths,
        ..cfg.mc
    };
    let rho = cfg.validate_rho;
    let times = [0.25 * big_t, 0.5 * big_t, 0.75 * big_t];
    let hw_rho = hw(rho)?;
    let cm_rho = cm(rho)?;
    let gc_rho = GcParams::new(rho)?;
    let simulated = estimate_wwr_epe_mc(&DynamicModel::HullWhite(hw_rho), spec, curve, &mc, &times)?;
    checks.extend(mc_profile_checks("mc.hw.epe", &simulated, |t| {
        hw_wwr_epe(&hw_rho, spec, curve, t, CorrMode::Exact)
    })?);
    let simulated = estimate_wwr_epe_mc(&DynamicModel::Conic(cm_rho), spec, curve, &mc, &times)?;
    checks.extend(mc_profile_checks("mc.cm.epe", &simulated, |t| {
        wwr_core::cm::cm_wwr_epe(&cm_rho, spec, curve, t)
    })?);
    let simulated = gc_resample_epe_mc(&gc_rho, spec, curve, &mc, &times)?;
    checks.extend(mc_profile_checks("mc.gc.epe", &simulated, |t| gc_wwr_epe(&gc_rho, spec, curve, t))?);

    let dynamics = [
        ("hw", DynamicModel::HullWhite(hw_rho)),
        ("cm", DynamicModel::Conic(cm_rho)),
        ("ssrd", DynamicModel::Ssrd(ssrd(rho)?)),
        (
            "gaussian",
            DynamicModel::GaussianMartingale(GaussianMartingaleParams::new(cfg.gaussian_sigma, rho)?),
        ),
    ];
    for (name, model) in dynamics {
        let stats = survival_statistics(&model, spec, curve, &mc, &times)?;
        for (i, &t) in times.iter().enumerate() {
            let (s, z) = (&stats.s[i], &stats.zeta[i]);
            let tl = label(t);
            checks.push(statistical(format!("mc.{name}.survival(t={tl})"), s.mean(), curve.survival(t)?, s.std_error()));
            checks.push(statistical(format!("mc.{name}.zeta(t={tl})"), z.mean(), 1.0, z.std_error()));
        }
    }

    let report = ssrd_cva(&ssrd(0.0)?, spec, curve, &mc)?;
    checks.push(statistical(
        "rho0.ssrd.cva".into(),
        report.result.cva,
        independent,
        report.result.standard_error.unwrap_or(0.0),
    ));
    Ok(checks)
}

/// Writes the report and returns whether every check passed.
pub fn validate(cfg: &RunConfig) -> Result<bool> {
    let checks = run_checks(cfg)?;
    let failed = checks.iter().filter(|c| !c.passed()).count();
    let sink = Sink::new(cfg)?;
    let digits = cfg.precision;
    let fmt = |x: f64| wwr_core::mc::format_significant(x, digits);
    let write_report = |w: &mut dyn Write| -> std::io::Result<()> {
        writeln!(w, "check,status,observed,expected,tolerance")?;
        for c in &checks {
            let status = if c.passed() { "pass" } else { "fail" };
            writeln!(w, "{},{status},{},{},{}", c.name, fmt(c.observed), fmt(c.expected), fmt(c.tolerance))?;
        }
        Ok(())
    };
    sink.emit("validate.csv", write_report)?;
    if sink.has_dir() {
        // Keep the report visible on the terminal as well.
        write_report(&mut std::io::stdout().lock())?;
    }
    eprintln!("{} checks, {} passed, {failed} failed", checks.len(), checks.len() - failed);
    Ok(failed == 0)
}
