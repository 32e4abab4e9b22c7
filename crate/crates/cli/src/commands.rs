use anyhow::Result;
use wwr_core::cva_independent;
use wwr_core::market::time_grid;
use wwr_core::mc::simulate_survival_paths;

use crate::config::{ConfigError, Layout, ModelKind, RunConfig, SweepParam};
use crate::models::{CvaNotes, ModelInstance};
use crate::output::{label, Sink, Table};

fn usage(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

fn reject_gaussian(cfg: &RunConfig, command: &str) -> Result<()> {
    if cfg.model == ModelKind::Gaussian {
        return Err(usage(format!(
            "the gaussian martingale has no wrong-way effect and is only available for `paths`, not `{command}`"
        )));
    }
    Ok(())
}

fn report_notes(model: ModelKind, rho: f64, notes: &CvaNotes) {
    if let Some(f) = notes.negative_lambda_fraction {
        eprintln!("{model} rho={}: fraction of negative intensities {f:.6}", label(rho));
    }
    if let Some(feller) = notes.feller {
        eprintln!(
            "{model} rho={}: Feller condition {}, negative shift at {} grid times",
            label(rho),
            if feller { "holds" } else { "violated" },
            notes.negative_shift_times
        );
    }
}

pub fn epe(cfg: &RunConfig) -> Result<()> {
    reject_gaussian(cfg, "epe")?;
    let times = time_grid(cfg.spec.maturity, cfg.grid_points, false)?;
    let sink = Sink::new(cfg)?;
    let profiles = cfg
        .rhos
        .iter()
        .map(|&rho| ModelInstance::build(cfg, cfg.model, rho, None)?.epe_profile(cfg, &times))
        .collect::<wwr_core::Result<Vec<_>>>()?;
    let with_se = profiles[0].std_errors.is_some();

    match cfg.layout {
        Layout::Files => {
            if !sink.has_dir() {
                return Err(usage("`epe.layout=files` needs an output directory (--out or output.dir)"));
            }
            for (rho, p) in cfg.rhos.iter().zip(&profiles) {
                let mut table = Table::new(if with_se { vec!["t", "f_t", "stderr"] } else { vec!["t", "f_t"] });
                for i in 0..p.len() {
                    let mut row = vec![p.times[i], p.values[i]];
                    if let Some(se) = &p.std_errors {
                        row.push(se[i]);
                    }
                    table.push(row);
                }
                sink.table(&format!("epe_{}_rho_{}.csv", cfg.model, label(*rho)), &table)?;
            }
        }
        Layout::Wide => {
            let mut header = vec!["t".to_string()];
            for rho in &cfg.rhos {
                // A single curve keeps the plain `t,f_t[,stderr]` header.
                let suffix = if cfg.rhos.len() == 1 { String::new() } else { format!("(rho={})", label(*rho)) };
                header.push(format!("f_t{suffix}"));
                if with_se {
                    header.push(format!("stderr{suffix}"));
                }
            }
            let mut table = Table::new(header);
            for (i, &t) in times.iter().enumerate() {
                let mut row = vec![t];
                for p in &profiles {
                    row.push(p.values[i]);
                    if let Some(se) = &p.std_errors {
                        row.push(se[i]);
                    }
                }
                table.push(row);
            }
            sink.table(&format!("epe_{}.csv", cfg.model), &table)?;
        }
    }
    Ok(())
}

fn cva_unavailable(cfg: &RunConfig) -> anyhow::Error {
    usage(format!("no CVA for model `{}` with method `{:?}`", cfg.model, cfg.method))
}

pub fn cva(cfg: &RunConfig) -> Result<()> {
    reject_gaussian(cfg, "cva")?;
    let sink = Sink::new(cfg)?;
    let independent = cva_independent(&cfg.spec, &cfg.curve, &cfg.quadrature)?.cva;
    let mut summary = None;
    let mut samples = Table::new(["rho", "t", "f_t", "weight"]);
    for &rho in &cfg.rhos {
        let model = ModelInstance::build(cfg, cfg.model, rho, None)?;
        let (result, notes) = model.cva(cfg).ok_or_else(|| cva_unavailable(cfg))??;
        report_notes(cfg.model, rho, &notes);
        let table = summary.get_or_insert_with(|| {
            Table::new(if result.standard_error.is_some() {
                vec!["rho", "cva", "cva_independent", "stderr"]
            } else {
                vec!["rho", "cva", "cva_independent"]
            })
        });
        let mut row = vec![rho, result.cva, independent];
        row.extend(result.standard_error);
        table.push(row);
        for s in &result.samples {
            samples.push(vec![rho, s.t, s.f, s.weight]);
        }
    }
    sink.table("cva.csv", &summary.expect("at least one rho"))?;
    if sink.has_dir() {
        sink.table("cva_samples.csv", &samples)?;
    }
    Ok(())
}

/// Default σ grid of a volatility sweep, per model.
fn default_sigmas(model: ModelKind) -> Option<Vec<f64>> {
    let pct = |v: &[f64]| v.iter().map(|x| x / 100.0).collect();
    match model {
        ModelKind::Hw => Some(pct(&[0.1, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0])),
        ModelKind::Cm => Some(pct(&[0.5, 1.0, 5.0, 10.0, 40.0, 100.0, 200.0])),
        ModelKind::Ssrd => Some(pct(&[0.5, 1.0, 2.0, 5.0, 10.0, 20.0])),
        ModelKind::Gc | ModelKind::Gaussian => None,
    }
}

pub fn sweep(cfg: &RunConfig) -> Result<()> {
    reject_gaussian(cfg, "sweep")?;
    let sink = Sink::new(cfg)?;
    let mut table: Option<Table> = None;
    let mut push = |key: &[f64], rho: f64, sigma: Option<f64>| -> Result<()> {
        let model = ModelInstance::build(cfg, cfg.model, rho, sigma).map_err(|e| usage(e.to_string()))?;
        let (result, notes) = model.cva(cfg).ok_or_else(|| cva_unavailable(cfg))??;
        report_notes(cfg.model, rho, &notes);
        let t = table.get_or_insert_with(|| {
            let mut header: Vec<&str> = if key.len() == 2 { vec!["sigma", "rho"] } else { vec!["rho"] };
            header.push("cva");
            if result.standard_error.is_some() {
                header.push("stderr");
            }
            Table::new(header)
        });
        let mut row = key.to_vec();
        row.push(result.cva);
        row.extend(result.standard_error);
        t.push(row);
        Ok(())
    };

    match cfg.sweep_param {
        SweepParam::Rho => {
            let values = cfg.sweep_values.clone().unwrap_or_else(|| cfg.rhos.clone());
            if values.is_empty() {
                return Err(usage("the sweep list is empty"));
            }
            for rho in values {
                push(&[rho], rho, None)?;
            }
        }
        SweepParam::Sigma => {
            let values = match &cfg.sweep_values {
                Some(v) => v.clone(),
                None => default_sigmas(cfg.model)
                    .ok_or_else(|| usage(format!("model `{}` has no volatility to sweep", cfg.model)))?,
            };
            if cfg.model == ModelKind::Gc {
                return Err(usage("the gaussian copula has no volatility to sweep"));
            }
            if values.is_empty() {
                return Err(usage("the sweep list is empty"));
            }
            for sigma in values {
                for &rho in &cfg.rhos {
                    push(&[sigma, rho], rho, Some(sigma))?;
                }
            }
        }
    }
    let name = match cfg.sweep_param {
        SweepParam::Rho => format!("sweep_rho_{}.csv", cfg.model),
        SweepParam::Sigma => format!("sweep_sigma_{}.csv", cfg.model),
    };
    sink.table(&name, &table.expect("sweep is not empty"))?;
    Ok(())
}

pub fn paths(cfg: &RunConfig) -> Result<()> {
    let rho = match (cfg.rho_explicit, cfg.rhos.as_slice()) {
        (false, _) => 0.0,
        (true, [rho]) => *rho,
        (true, _) => return Err(usage("`paths` takes a single correlation")),
    };
    let model = ModelInstance::build(cfg, cfg.model, rho, None)?
        .dynamic()
        .ok_or_else(|| usage("the gaussian copula has no dynamics to simulate; use hw, cm, ssrd or gaussian"))?;
    let mut mc = cfg.mc;
    mc.n_paths = cfg.path_count;
    mc.validate().map_err(|e| usage(format!("paths.count: {e}")))?;
    let bundle = simulate_survival_paths(
        &model,
        &cfg.curve,
        &mc,
        cfg.path_horizon,
        cfg.path_exposure.then_some(&cfg.spec),
    )?;
    eprintln!(
        "{} paths, {} steps: {} paths leave [0, 1], {} survival values outside [0, 1], {} negative intensities",
        bundle.n_paths,
        bundle.times.len() - 1,
        bundle.paths_leaving_unit_interval(),
        bundle.out_of_range_count(),
        bundle.negative_lambda_count()
    );
    Sink::new(cfg)?.emit(&format!("paths_{}.csv", cfg.model), |w| bundle.write_csv(w, cfg.precision))?;
    Ok(())
}
