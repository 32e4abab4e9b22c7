//! Monte Carlo estimators built on the path simulator.

use super::engine::{run_samples, SimConfig};
use super::model::{cir_shift_phi, DynamicModel, PathPoint, PathSimulator, SsrdParams};
use super::rng::PathRng;
use super::stats::RunningStats;
use crate::cva::{CvaResult, CvaSample, EpeProfile, ProfileSource};
use crate::error::{Error, Result};
use crate::gc::GcParams;
use crate::market::{marginal, CreditCurve, ExposureSpec};
use crate::mathkit::{norm_cdf, norm_inv_cdf};

fn run_full<F>(sim: &PathSimulator, cfg: &SimConfig, width: usize, f: F) -> Result<Vec<RunningStats>>
where
    F: Fn(&[PathPoint], &mut [f64]) + Sync,
{
    let n = sim.times().len();
    run_samples(cfg, width, |id, rng: &mut PathRng, out| {
        let mut path = vec![
            PathPoint {
                t: 0.0,
                s: 1.0,
                zeta: 1.0,
                lambda: None,
                v: 0.0
            };
            n
        ];
        sim.run(id, rng, &mut path)?;
        f(&path, out);
        Ok(())
    })
}

/// Means of an arbitrary functional of the path observed at `times`.
///
/// `f` receives the path points at `times` (in that order) and writes `width`
/// numbers; the statistics of each column over the samples are returned.
/// Indicator functionals give probabilities.
pub fn path_functional<F>(
    model: &DynamicModel,
    spec: &ExposureSpec,
    curve: &CreditCurve,
    cfg: &SimConfig,
    times: &[f64],
    width: usize,
    f: F,
) -> Result<Vec<RunningStats>>
where
    F: Fn(&[PathPoint], &mut [f64]) + Sync,
{
    let sim = PathSimulator::new(*model, spec, curve, cfg.dt, times)?;
    let idx = times
        .iter()
        .map(|&t| sim.index_of(t).ok_or_else(|| Error::Domain(format!("time {t} missing from the grid"))))
        .collect::<Result<Vec<_>>>()?;
    run_full(&sim, cfg, width, |path, out| {
        let obs: Vec<PathPoint> = idx.iter().map(|&i| path[i]).collect();
        f(&obs, out)
    })
}

fn profile(times: &[f64], stats: &[RunningStats]) -> EpeProfile {
    EpeProfile {
        times: times.to_vec(),
        values: stats.iter().map(RunningStats::mean).collect(),
        std_errors: Some(stats.iter().map(RunningStats::std_error).collect()),
        source: ProfileSource::MonteCarlo,
    }
}

/// f(t) = E[ζ_t V_t⁺] on `times`.
pub fn estimate_wwr_epe_mc(
    model: &DynamicModel,
    spec: &ExposureSpec,
    curve: &CreditCurve,
    cfg: &SimConfig,
    times: &[f64],
) -> Result<EpeProfile> {
    let stats = path_functional(model, spec, curve, cfg, times, times.len(), |obs, out| {
        for (o, p) in out.iter_mut().zip(obs) {
            *o = p.zeta * p.v.max(0.0);
        }
    })?;
    Ok(profile(times, &stats))
}

/// Moments of the survival and wrong-way processes on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalStats {
    pub times: Vec<f64>,
    pub s: Vec<RunningStats>,
    pub zeta: Vec<RunningStats>,
    /// Fraction of paths with S_t outside [0, 1].
    pub out_of_range: Vec<f64>,
    /// Fraction of paths with λ_t < 0 (zero for models without intensity).
    pub negative_lambda: Vec<f64>,
    /// Fraction of paths with ζ_t < 0.
    pub negative_zeta: Vec<f64>,
}

pub fn survival_statistics(
    model: &DynamicModel,
    spec: &ExposureSpec,
    curve: &CreditCurve,
    cfg: &SimConfig,
    times: &[f64],
) -> Result<SurvivalStats> {
    let n = times.len();
    let stats = path_functional(model, spec, curve, cfg, times, 5 * n, |obs, out| {
        for (i, p) in obs.iter().enumerate() {
            out[i] = p.s;
            out[n + i] = p.zeta;
            out[2 * n + i] = f64::from(u8::from(!(0.0..=1.0).contains(&p.s)));
            out[3 * n + i] = f64::from(u8::from(p.lambda.is_some_and(|l| l < 0.0)));
            out[4 * n + i] = f64::from(u8::from(p.zeta < 0.0));
        }
    })?;
    let means = |k: usize| stats[k * n..(k + 1) * n].iter().map(RunningStats::mean).collect();
    Ok(SurvivalStats {
        times: times.to_vec(),
        s: stats[..n].to_vec(),
        zeta: stats[n..2 * n].to_vec(),
        out_of_range: means(2),
        negative_lambda: means(3),
        negative_zeta: means(4),
    })
}

/// Monte Carlo CVA with its path diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct McCvaReport {
    pub result: CvaResult,
    /// Fraction of (path, time) pairs with λ < 0.
    pub negative_lambda_fraction: f64,
}

/// CVA = E[∫₀ᵀ ζ_t V_t⁺ h(t)G(t) dt] with the trapezoid rule on the simulation
/// grid. For the intensity models ζ h G = λ S, so this is E[∫ λ S V⁺ dt].
pub fn mc_cva(
    model: &DynamicModel,
    spec: &ExposureSpec,
    curve: &CreditCurve,
    cfg: &SimConfig,
) -> Result<McCvaReport> {
    let sim = PathSimulator::new(*model, spec, curve, cfg.dt, &[spec.maturity])?;
    let times = sim.times().to_vec();
    let n = times.len();
    let density = sim.default_density();
    let mut weights = vec![0.0; n];
    for i in 0..n - 1 {
        let half = 0.5 * (times[i + 1] - times[i]);
        weights[i] += half;
        weights[i + 1] += half;
    }
    let w: Vec<f64> = weights.iter().zip(&density).map(|(a, b)| a * b).collect();
    let stats = run_full(&sim, cfg, n + 2, |path, out| {
        let mut cva = 0.0;
        let mut negative = 0usize;
        for (i, p) in path.iter().enumerate() {
            let f = p.zeta * p.v.max(0.0);
            out[i] = f;
            cva += w[i] * f;
            negative += usize::from(p.lambda.is_some_and(|l| l < 0.0));
        }
        out[n] = cva;
        out[n + 1] = negative as f64 / n as f64;
    })?;
    let samples: Vec<CvaSample> = (0..n)
        .map(|i| CvaSample {
            t: times[i],
            f: stats[i].mean(),
            weight: w[i],
        })
        .collect();
    Ok(McCvaReport {
        result: CvaResult {
            cva: samples.iter().map(|s| s.weight * s.f).sum(),
            model: model.tag(),
            rho: model.rho(),
            samples,
            standard_error: Some(stats[n].std_error()),
        },
        negative_lambda_fraction: stats[n + 1].mean(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsrdCvaReport {
    pub result: CvaResult,
    pub feller: bool,
    pub negative_lambda_fraction: f64,
    /// Simulation times at which the calibrating shift is negative.
    pub negative_shift_times: Vec<f64>,
}

pub fn ssrd_cva(
    params: &SsrdParams,
    spec: &ExposureSpec,
    curve: &CreditCurve,
    cfg: &SimConfig,
) -> Result<SsrdCvaReport> {
    let model = DynamicModel::Ssrd(*params);
    let report = mc_cva(&model, spec, curve, cfg)?;
    let mut negative_shift_times = Vec::new();
    for s in &report.result.samples {
        if cir_shift_phi(params, curve, s.t)? < 0.0 {
            negative_shift_times.push(s.t);
        }
    }
    Ok(SsrdCvaReport {
        result: report.result,
        feller: params.feller(),
        negative_lambda_fraction: report.negative_lambda_fraction,
        negative_shift_times,
    })
}

/// Conditional exposure under the static copula by resampling:
/// V_t = F⁻¹(Φ(ρΦ⁻¹(G(t)) + √(1 − ρ²) Z)), with F the law of V_t.
pub fn gc_resample_epe_mc(
    params: &GcParams,
    spec: &ExposureSpec,
    curve: &CreditCurve,
    cfg: &SimConfig,
    times: &[f64],
) -> Result<EpeProfile> {
    GcParams::new(params.rho)?;
    let rho = params.rho;
    let rho_bar = ((1.0 - rho) * (1.0 + rho)).sqrt();
    let laws = times
        .iter()
        .map(|&t| Ok((marginal(spec, t)?, curve.survival_quantile(t)?)))
        .collect::<Result<Vec<_>>>()?;
    let stats = run_samples(cfg, times.len(), |_, rng, out| {
        for (o, (m, q)) in out.iter_mut().zip(&laws) {
            let x = rho * q + rho_bar * rng.normal();
            let u = norm_cdf(x);
            let score = if u > 0.0 && u < 1.0 { norm_inv_cdf(u)? } else { x };
            *o = (m.a + m.b * score).max(0.0);
        }
        Ok(())
    })?;
    Ok(profile(times, &stats))
}

/// E[ζ_s (ζ_t − ζ_s)] for s < t: zero for a martingale.
pub fn zeta_increment_covariance(
    model: &DynamicModel,
    spec: &ExposureSpec,
    curve: &CreditCurve,
    cfg: &SimConfig,
    s: f64,
    t: f64,
) -> Result<RunningStats> {
    if !(s > 0.0 && s < t) {
        return Err(Error::Domain(format!("need 0 < s < t, got s = {s}, t = {t}")));
    }
    let stats = path_functional(model, spec, curve, cfg, &[s, t], 1, |obs, out| {
        out[0] = obs[0].zeta * (obs[1].zeta - obs[0].zeta);
    })?;
    Ok(stats[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cm::{cm_wwr_epe, CmParams};
    use crate::cva::cva_independent;
    use crate::gc::gc_wwr_epe;
    use crate::hw::{hw_wwr_epe, CorrMode, HwParams};
    use crate::market::unconditional_epe;
    use crate::mathkit::QuadratureRule;
    use crate::mc::engine::Execution;
    use crate::mc::model::GaussianMartingaleParams;

    fn cfg(n: u64) -> SimConfig {
        SimConfig {
            n_paths: n,
            dt: 5.0,
            seed: 7,
            antithetic: false,
            execution: Execution::Parallel,
        }
    }

    fn within(mc: f64, se: f64, exact: f64, k: f64) -> bool {
        (mc - exact).abs() <= k * se + 1e-14
    }

    #[test]
    fn hull_white_profile_matches_closed_form() {
        let curve = CreditCurve::flat(0.05).unwrap();
        let spec = ExposureSpec::forward(0.022, 5.0).unwrap();
        let p = HwParams::new(0.5, 0.0, 0.01, 0.05, 0.4).unwrap();
        let times = [1.0, 2.5, 4.0];
        let prof = estimate_wwr_epe_mc(&DynamicModel::HullWhite(p), &spec, &curve, &cfg(100_000), &times).unwrap();
        let se = prof.std_errors.as_ref().unwrap();
        for i in 0..3 {
            let exact = hw_wwr_epe(&p, &spec, &curve, times[i], CorrMode::Exact).unwrap();
            assert!(within(prof.values[i], se[i], exact, 4.0), "{} vs {exact}", prof.values[i]);
        }
    }

    #[test]
    fn conic_profile_matches_closed_form() {
        let curve = CreditCurve::flat(0.05).unwrap();
        let spec = ExposureSpec::irs(0.005, 0.022, 5.0).unwrap();
        let p = CmParams::new(0.9, 0.8).unwrap();
        let times = [1.0, 2.5, 4.0];
        let prof = estimate_wwr_epe_mc(&DynamicModel::Conic(p), &spec, &curve, &cfg(100_000), &times).unwrap();
        let se = prof.std_errors.as_ref().unwrap();
        for i in 0..3 {
            let exact = cm_wwr_epe(&p, &spec, &curve, times[i]).unwrap();
            assert!(within(prof.values[i], se[i], exact, 4.0), "{} vs {exact}", prof.values[i]);
        }
    }

    #[test]
    fn copula_resampling_matches_closed_form() {
        let curve = CreditCurve::flat(0.01).unwrap();
        let spec = ExposureSpec::forward(0.022, 5.0).unwrap();
        let times = [0.5, 2.5, 4.5];
        for rho in [-0.8, 0.0, 0.8] {
            let p = GcParams::new(rho).unwrap();
            let prof = gc_resample_epe_mc(&p, &spec, &curve, &cfg(50_000), &times).unwrap();
            let se = prof.std_errors.as_ref().unwrap();
            for (i, &t) in times.iter().enumerate() {
                let exact = gc_wwr_epe(&p, &spec, &curve, t).unwrap();
                assert!(within(prof.values[i], se[i], exact, 4.0));
            }
        }
        let p = GcParams::new(1.0).unwrap();
        let prof = gc_resample_epe_mc(&p, &spec, &curve, &cfg(100), &times).unwrap();
        for (i, &t) in times.iter().enumerate() {
            let exact = gc_wwr_epe(&p, &spec, &curve, t).unwrap();
            assert!((prof.values[i] - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn survival_is_calibrated() {
        let curve = CreditCurve::flat(0.05).unwrap();
        let spec = ExposureSpec::forward(0.022, 5.0).unwrap();
        let mut c = cfg(40_000);
        c.dt = 0.05;
        let models = [
            DynamicModel::HullWhite(HwParams::new(0.5, 0.0, 0.02, 0.05, 0.3).unwrap()),
            DynamicModel::Conic(CmParams::new(0.9, 0.3).unwrap()),
            DynamicModel::GaussianMartingale(GaussianMartingaleParams::new(0.05, 0.3).unwrap()),
        ];
        for m in models {
            let st = survival_statistics(&m, &spec, &curve, &c, &[1.0, 3.0, 5.0]).unwrap();
            for (i, &t) in st.times.iter().enumerate() {
                let g = curve.survival(t).unwrap();
                assert!(within(st.s[i].mean(), st.s[i].std_error(), g, 4.0), "{m:?} S at {t}");
                assert!(within(st.zeta[i].mean(), st.zeta[i].std_error(), 1.0, 4.0), "{m:?} zeta at {t}");
            }
        }
    }

    #[test]
    fn zero_correlation_cva_is_independent() {
        let curve = CreditCurve::flat(0.05).unwrap();
        let spec = ExposureSpec::irs(0.005, 0.022, 5.0).unwrap();
        let p = SsrdParams::new(0.05, 0.35, 0.0012, 0.02, 0.0).unwrap();
        let mut c = cfg(20_000);
        c.dt = 0.05;
        let r = ssrd_cva(&p, &spec, &curve, &c).unwrap();
        let ind = cva_independent(&spec, &curve, &QuadratureRule::default()).unwrap().cva;
        let se = r.result.standard_error.unwrap();
        assert!(within(r.result.cva, se, ind, 4.0), "{} vs {ind} (se {se})", r.result.cva);
        assert!(r.feller);
        let sum: f64 = r.result.samples.iter().map(|s| s.weight * s.f).sum();
        assert_eq!(sum, r.result.cva);
    }

    #[test]
    fn zero_correlation_profile_is_unconditional() {
        let curve = CreditCurve::flat(0.05).unwrap();
        let spec = ExposureSpec::forward(0.022, 5.0).unwrap();
        let m = DynamicModel::GaussianMartingale(GaussianMartingaleParams::new(0.05, 0.0).unwrap());
        let prof = estimate_wwr_epe_mc(&m, &spec, &curve, &cfg(50_000), &[2.0]).unwrap();
        let exact = unconditional_epe(&spec, 2.0).unwrap();
        assert!(within(prof.values[0], prof.std_errors.unwrap()[0], exact, 4.0));
    }

    #[test]
    fn covariance_needs_ordered_times() {
        let curve = CreditCurve::flat(0.05).unwrap();
        let spec = ExposureSpec::forward(0.022, 5.0).unwrap();
        let m = DynamicModel::Conic(CmParams::new(0.9, 0.0).unwrap());
        assert!(zeta_increment_covariance(&m, &spec, &curve, &cfg(10), 2.0, 1.0).is_err());
        let c = zeta_increment_covariance(&m, &spec, &curve, &cfg(10), 1.0, 2.0).unwrap();
        assert_eq!(c.count(), 10);
    }
}
