//! Turns a [`RunConfig`] into concrete model parameters and evaluates them.

use wwr_core::cm::{cm_cva, cm_wwr_epe, CmParams};
use wwr_core::gc::{gc_cva, gc_wwr_epe, GcParams};
use wwr_core::hw::{hw_cva, hw_wwr_epe, CorrMode, HwParams};
use wwr_core::mc::{
    estimate_wwr_epe_mc, gc_resample_epe_mc, mc_cva, ssrd_cva, DynamicModel, GaussianMartingaleParams, SsrdParams,
};
use wwr_core::{CvaResult, EpeProfile, Result};

use crate::config::{Method, ModelKind, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelInstance {
    Gc(GcParams),
    Hw(HwParams, CorrMode),
    Cm(CmParams),
    Ssrd(SsrdParams),
    Gaussian(GaussianMartingaleParams),
}

/// Extra diagnostics a Monte Carlo CVA run can report.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CvaNotes {
    pub negative_lambda_fraction: Option<f64>,
    pub feller: Option<bool>,
    pub negative_shift_times: usize,
}

impl ModelInstance {
    /// Parameters of `kind` at correlation `rho`, with σ replaced when `sigma` is given.
    pub fn build(cfg: &RunConfig, kind: ModelKind, rho: f64, sigma: Option<f64>) -> Result<Self> {
        Ok(match kind {
            ModelKind::Gc => Self::Gc(GcParams::new(rho)?),
            ModelKind::Hw => {
                let h = cfg.hw;
                Self::Hw(
                    HwParams::new(h.kappa, h.theta, sigma.unwrap_or(h.sigma), h.r0, rho)?,
                    h.corr_mode,
                )
            }
            ModelKind::Cm => Self::Cm(CmParams::with_convention(
                sigma.unwrap_or(cfg.cm_sigma),
                rho,
                cfg.cm_convention,
            )?),
            ModelKind::Ssrd => {
                let s = cfg.ssrd;
                Self::Ssrd(SsrdParams::new(s.r0, s.kappa, s.theta, sigma.unwrap_or(s.sigma), rho)?)
            }
            ModelKind::Gaussian => {
                Self::Gaussian(GaussianMartingaleParams::new(sigma.unwrap_or(cfg.gaussian_sigma), rho)?)
            }
        })
    }

    pub fn dynamic(&self) -> Option<DynamicModel> {
        match *self {
            Self::Gc(_) => None,
            Self::Hw(p, _) => Some(DynamicModel::HullWhite(p)),
            Self::Cm(p) => Some(DynamicModel::Conic(p)),
            Self::Ssrd(p) => Some(DynamicModel::Ssrd(p)),
            Self::Gaussian(p) => Some(DynamicModel::GaussianMartingale(p)),
        }
    }

    pub fn epe_profile(&self, cfg: &RunConfig, times: &[f64]) -> Result<EpeProfile> {
        let (spec, curve) = (&cfg.spec, &cfg.curve);
        match (self, cfg.method) {
            (Self::Gc(p), Method::Analytic) => EpeProfile::analytic(times, |t| gc_wwr_epe(p, spec, curve, t)),
            (Self::Gc(p), Method::MonteCarlo) => gc_resample_epe_mc(p, spec, curve, &cfg.mc, times),
            (Self::Hw(p, mode), Method::Analytic) => {
                EpeProfile::analytic(times, |t| hw_wwr_epe(p, spec, curve, t, *mode))
            }
            (Self::Cm(p), Method::Analytic) => EpeProfile::analytic(times, |t| cm_wwr_epe(p, spec, curve, t)),
            (other, _) => {
                let model = other.dynamic().expect("only the copula lacks a path model");
                estimate_wwr_epe_mc(&model, spec, curve, &cfg.mc, times)
            }
        }
    }

    /// CVA, or `None` when the combination of model and method is not offered.
    pub fn cva(&self, cfg: &RunConfig) -> Option<Result<(CvaResult, CvaNotes)>> {
        let (spec, curve, rule) = (&cfg.spec, &cfg.curve, &cfg.quadrature);
        let plain = |r: Result<CvaResult>| r.map(|c| (c, CvaNotes::default()));
        Some(match (self, cfg.method) {
            (Self::Gc(p), Method::Analytic) => plain(gc_cva(p, spec, curve, rule)),
            (Self::Gc(_), Method::MonteCarlo) | (Self::Gaussian(_), _) => return None,
            (Self::Hw(p, mode), Method::Analytic) => plain(hw_cva(p, spec, curve, rule, *mode)),
            (Self::Cm(p), Method::Analytic) => plain(cm_cva(p, spec, curve, rule)),
            (Self::Ssrd(p), _) => ssrd_cva(p, spec, curve, &cfg.mc).map(|r| {
                let notes = CvaNotes {
                    negative_lambda_fraction: Some(r.negative_lambda_fraction),
                    feller: Some(r.feller),
                    negative_shift_times: r.negative_shift_times.len(),
                };
                (r.result, notes)
            }),
            (other, Method::MonteCarlo) => {
                let model = other.dynamic().expect("copula handled above");
                mc_cva(&model, spec, curve, &cfg.mc).map(|r| {
                    let notes = CvaNotes {
                        negative_lambda_fraction: model.has_intensity().then_some(r.negative_lambda_fraction),
                        ..CvaNotes::default()
                    };
                    (r.result, notes)
                })
            }
        })
    }
}
