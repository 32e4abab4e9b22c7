use wwr_core::cm::{cm_wwr_epe, CmParams};
use wwr_core::market::{time_grid, unconditional_epe};
use wwr_core::mathkit::norm_pdf;
use wwr_core::mc::{
    estimate_wwr_epe_mc, path_functional, DynamicModel, Execution, GaussianMartingaleParams, PathRng, RunningStats,
    SimConfig,
};
use wwr_core::{CreditCurve, ExposureSpec};

const SEED: u64 = 977;

fn cfg(n_paths: u64) -> SimConfig {
    SimConfig {
        n_paths,
        dt: 0.05,
        seed: SEED,
        antithetic: false,
        execution: Execution::Parallel,
    }
}

/// A model with no credit noise, so only the exposure is random.
fn exposure_only() -> DynamicModel {
    DynamicModel::GaussianMartingale(GaussianMartingaleParams::new(0.0, 0.0).unwrap())
}

fn exposure_moments(spec: &ExposureSpec, times: &[f64], n: u64) -> Vec<RunningStats> {
    let curve = CreditCurve::flat(0.01).unwrap();
    let k = times.len();
    path_functional(&exposure_only(), spec, &curve, &cfg(n), times, 3 * k, |obs, out| {
        for (i, p) in obs.iter().enumerate() {
            out[i] = p.v;
            out[k + i] = p.v * p.v;
            out[2 * k + i] = p.v.max(0.0);
        }
    })
    .unwrap()
}

fn within(stats: &RunningStats, expected: f64, k: f64) -> bool {
    (stats.mean() - expected).abs() <= k * stats.std_error()
}

#[test]
fn forward_paths_have_brownian_moments() {
    let spec = ExposureSpec::forward(0.022, 5.0).unwrap();
    let times = time_grid(5.0, 10, false).unwrap();
    let stats = exposure_moments(&spec, &times, 100_000);
    for (i, &t) in times.iter().enumerate() {
        let var = 0.022 * 0.022 * t;
        assert!(within(&stats[i], 0.0, 4.0), "mean at t = {t}");
        // The second moment is the variance because the mean is zero.
        assert!(within(&stats[10 + i], var, 4.0), "variance at t = {t}");
        assert!(within(&stats[20 + i], unconditional_epe(&spec, t).unwrap(), 3.0), "EPE at t = {t}");
    }
}

#[test]
fn swap_paths_follow_the_bridge_and_close_at_maturity() {
    let (gamma, vartheta, big_t) = (0.005, 0.022, 5.0);
    let spec = ExposureSpec::irs(gamma, vartheta, big_t).unwrap();
    let times = time_grid(big_t, 10, false).unwrap();
    let stats = exposure_moments(&spec, &times, 100_000);
    for (i, &t) in times.iter().enumerate() {
        let mean = gamma * t * (big_t - t);
        let var = vartheta * vartheta * t * (1.0 - t / big_t);
        assert!(within(&stats[i], mean, 4.0), "mean at t = {t}");
        assert!(within(&stats[10 + i], var + mean * mean, 4.0), "second moment at t = {t}");
        assert!(within(&stats[20 + i], unconditional_epe(&spec, t).unwrap(), 3.0), "EPE at t = {t}");
    }
    // Every path is pinned to zero at T, so the statistics there are exact.
    assert_eq!(stats[9].mean(), 0.0);
    assert_eq!(stats[19].mean(), 0.0);
    assert_eq!(stats[9].variance(), 0.0);
}

#[test]
fn antithetic_pairs_cut_the_forward_epe_variance() {
    let spec = ExposureSpec::forward(0.022, 5.0).unwrap();
    let curve = CreditCurve::flat(0.01).unwrap();
    let n = 20_000;
    let plain = estimate_wwr_epe_mc(&exposure_only(), &spec, &curve, &cfg(n), &[2.5]).unwrap();
    let anti_cfg = SimConfig {
        antithetic: true,
        ..cfg(n)
    };
    let anti = estimate_wwr_epe_mc(&exposure_only(), &spec, &curve, &anti_cfg, &[2.5]).unwrap();
    // Both runs use n paths, so the squared standard errors compare directly.
    let ratio = (plain.std_errors.unwrap()[0] / anti.std_errors.unwrap()[0]).powi(2);
    assert!(ratio >= 1.5, "variance ratio {ratio}");
}

#[test]
fn estimates_are_reproducible_and_thread_independent() {
    let spec = ExposureSpec::irs(0.005, 0.022, 5.0).unwrap();
    let curve = CreditCurve::flat(0.05).unwrap();
    let model = DynamicModel::Conic(CmParams::new(0.9, 0.4).unwrap());
    let times = [1.0, 2.5, 4.0];
    let a = estimate_wwr_epe_mc(&model, &spec, &curve, &cfg(5_000), &times).unwrap();
    let b = estimate_wwr_epe_mc(&model, &spec, &curve, &cfg(5_000), &times).unwrap();
    let seq = SimConfig {
        execution: Execution::Sequential,
        ..cfg(5_000)
    };
    let c = estimate_wwr_epe_mc(&model, &spec, &curve, &seq, &times).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
    let other = SimConfig { seed: SEED + 1, ..cfg(5_000) };
    assert_ne!(a, estimate_wwr_epe_mc(&model, &spec, &curve, &other, &times).unwrap());
}

/// E[ζ_t V_t⁺] from draws of the pair (X_t, B_t) built directly from the
/// driving Brownian motions, without going through the model's correlation.
fn conic_forward_oracle(sigma: f64, brownian_rho: f64, h: f64, vartheta: f64, t: f64, n: u64) -> RunningStats {
    let mu = 0.5 * sigma * sigma;
    let growth = (mu * t).exp();
    let q = wwr_core::mathkit::norm_inv_cdf((-h * t).exp()).unwrap();
    // X_t = e^{μt}(q + σ∫e^{−μu}dW_u); its covariance with B_t is ρσ(e^{μt} − 1)/μ.
    let sd_x = (2.0 * mu * t).exp_m1().sqrt();
    let sd_b = t.sqrt();
    let corr = brownian_rho * sigma * (mu * t).exp_m1() / mu / (sd_x * sd_b);
    let mut stats = RunningStats::new();
    for i in 0..n {
        let mut rng = PathRng::new(SEED, i, false);
        let (z1, z2) = (rng.normal(), rng.normal());
        let x = q * growth + sd_x * z1;
        let b = sd_b * (corr * z1 + (1.0 - corr * corr).sqrt() * z2);
        let zeta = growth * norm_pdf(x) / norm_pdf(q);
        stats.push(zeta * (vartheta * b).max(0.0));
    }
    stats
}

#[test]
fn conic_closed_form_matches_a_direct_two_factor_oracle() {
    let spec = ExposureSpec::forward(0.022, 5.0).unwrap();
    let curve = CreditCurve::flat(0.01).unwrap();
    for rho in [-0.8, 0.0, 0.8] {
        // The default convention reads ρ as minus the Brownian correlation.
        let p = CmParams::new(0.9, rho).unwrap();
        let oracle = conic_forward_oracle(0.9, -rho, 0.01, 0.022, 2.5, 1_000_000);
        let exact = cm_wwr_epe(&p, &spec, &curve, 2.5).unwrap();
        assert!(
            (oracle.mean() - exact).abs() <= 3.0 * oracle.std_error(),
            "rho = {rho}: oracle {} ± {}, closed form {exact}",
            oracle.mean(),
            oracle.std_error()
        );
    }
}
