//! Flat `key=value` run configuration.
//!
//! One setting per line, dotted keys, `#` starts a comment line. Lists are
//! comma separated. Command-line flags are applied on top of the file and
//! win over it.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use wwr_core::cm::CmSignConvention;
use wwr_core::hw::CorrMode;
use wwr_core::mathkit::QuadratureRule;
use wwr_core::mc::{Execution, SimConfig};
use wwr_core::{CreditCurve, ExposureKind, ExposureSpec};

/// A configuration problem. Always reported with exit code 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

const KNOWN_KEYS: &[&str] = &[
    "model",
    "method",
    "exposure.kind",
    "exposure.gamma",
    "exposure.vartheta",
    "exposure.maturity",
    "credit.hazard",
    "credit.hazards",
    "credit.knots",
    "model.rho",
    "model.hw.kappa",
    "model.hw.theta",
    "model.hw.sigma",
    "model.hw.r0",
    "model.hw.corr_mode",
    "model.cm.sigma",
    "model.cm.sign_convention",
    "model.ssrd.r0",
    "model.ssrd.kappa",
    "model.ssrd.theta",
    "model.ssrd.sigma",
    "model.gaussian.sigma",
    "grid.points",
    "quadrature.rule",
    "quadrature.nodes",
    "quadrature.tolerance",
    "mc.paths",
    "mc.dt",
    "mc.seed",
    "mc.antithetic",
    "mc.parallel",
    "epe.layout",
    "sweep.param",
    "sweep.values",
    "paths.count",
    "paths.horizon",
    "paths.exposure",
    "output.dir",
    "output.precision",
    "validate.paths",
    "validate.rho",
    "validate.fault.phi_bump",
];

#[derive(Debug, Clone, PartialEq)]
enum Origin {
    Line { file: PathBuf, line: usize },
    Flag(String),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Line { file, line } => write!(f, "{}:{line}", file.display()),
            Self::Flag(name) => write!(f, "flag {name}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    origin: Origin,
}

/// Raw settings before interpretation, remembering where each came from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, Entry>,
}

impl RawConfig {
    pub fn parse(text: &str, file: &Path) -> Result<Self> {
        let mut raw = Self::default();
        for (i, line) in text.lines().enumerate() {
            let origin = Origin::Line {
                file: file.to_path_buf(),
                line: i + 1,
            };
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(ConfigError(format!("{origin}: expected `key=value`, found `{trimmed}`")));
            };
            let key = key.trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '.') {
                return Err(ConfigError(format!("{origin}: malformed key `{key}`")));
            }
            if let Some(prev) = raw.entries.get(key) {
                return Err(ConfigError(format!(
                    "{origin}: key `{key}` already set at {}",
                    prev.origin
                )));
            }
            raw.insert(key, value.trim(), origin)?;
        }
        Ok(raw)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    /// Sets `key` from a command-line flag, replacing any file value.
    pub fn set_flag(&mut self, key: &str, value: &str, flag: &str) -> Result<()> {
        self.insert(key, value, Origin::Flag(flag.to_string()))
    }

    fn insert(&mut self, key: &str, value: &str, origin: Origin) -> Result<()> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(ConfigError(format!("{origin}: unknown key `{key}`")));
        }
        self.entries.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                origin,
            },
        );
        Ok(())
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse()
                .map(Some)
                .map_err(|err| ConfigError(format!("{}: key `{key}`: cannot parse `{}`: {err}", e.origin, e.value))),
        }
    }

    fn get_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(e) = self.entries.get(key) else {
            return Ok(None);
        };
        let values = e
            .value
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|err| ConfigError(format!("{}: key `{key}`: cannot parse `{s}`: {err}", e.origin)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Some(values))
    }

    /// Wraps a failed check on an already parsed value with its location.
    fn invalid(&self, key: &str, msg: impl fmt::Display) -> ConfigError {
        match self.entries.get(key) {
            Some(e) => ConfigError(format!("{}: key `{key}`: {msg}", e.origin)),
            None => ConfigError(format!("default for `{key}`: {msg}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Gc,
    Hw,
    Cm,
    Ssrd,
    Gaussian,
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "gc" => Ok(Self::Gc),
            "hw" => Ok(Self::Hw),
            "cm" => Ok(Self::Cm),
            "ssrd" => Ok(Self::Ssrd),
            "gaussian" => Ok(Self::Gaussian),
            other => Err(format!("unknown model `{other}` (expected gc, hw, cm, ssrd or gaussian)")),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Gc => "gc",
            Self::Hw => "hw",
            Self::Cm => "cm",
            Self::Ssrd => "ssrd",
            Self::Gaussian => "gaussian",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Analytic,
    MonteCarlo,
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "analytic" => Ok(Self::Analytic),
            "mc" => Ok(Self::MonteCarlo),
            other => Err(format!("unknown method `{other}` (expected analytic or mc)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// One CSV with a column per ρ.
    Wide,
    /// One CSV per ρ.
    Files,
}

impl std::str::FromStr for Layout {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "wide" => Ok(Self::Wide),
            "files" => Ok(Self::Files),
            other => Err(format!("unknown layout `{other}` (expected wide or files)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Rho,
    Sigma,
}

impl std::str::FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "rho" => Ok(Self::Rho),
            "sigma" => Ok(Self::Sigma),
            other => Err(format!("unknown sweep parameter `{other}` (expected rho or sigma)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HwSettings {
    pub kappa: f64,
    pub theta: f64,
    pub sigma: f64,
    pub r0: f64,
    pub corr_mode: CorrMode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsrdSettings {
    pub r0: f64,
    pub kappa: f64,
    pub theta: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelKind,
    pub method: Method,
    pub spec: ExposureSpec,
    pub curve: CreditCurve,
    pub rhos: Vec<f64>,
    /// Whether ρ was given explicitly rather than taken from the default set.
    pub rho_explicit: bool,
    pub hw: HwSettings,
    pub cm_sigma: f64,
    pub cm_convention: CmSignConvention,
    pub ssrd: SsrdSettings,
    pub gaussian_sigma: f64,
    pub grid_points: usize,
    pub quadrature: QuadratureRule,
    pub mc: SimConfig,
    pub layout: Layout,
    pub sweep_param: SweepParam,
    pub sweep_values: Option<Vec<f64>>,
    pub path_count: u64,
    pub path_horizon: f64,
    pub path_exposure: bool,
    pub out_dir: Option<PathBuf>,
    pub precision: usize,
    pub validate_paths: u64,
    pub validate_rho: f64,
    pub phi_bump: f64,
}

/// ρ ∈ {−0.8, −0.6, …, 0.8}.
fn default_rhos() -> Vec<f64> {
    (-4..=4).map(|i| f64::from(i) / 5.0).collect()
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let model: ModelKind = raw.get_or("model", ModelKind::Hw)?;
        let default_method = if model == ModelKind::Ssrd { Method::MonteCarlo } else { Method::Analytic };
        let method = raw.get_or("method", default_method)?;
        if model == ModelKind::Ssrd && method == Method::Analytic {
            return Err(raw.invalid("method", "the ssrd model has no closed form; use `mc`"));
        }

        let kind: ExposureKind = raw.get_or("exposure.kind", ExposureKind::Forward)?;
        let spec = ExposureSpec::new(
            kind,
            raw.get_or("exposure.gamma", 0.005)?,
            raw.get_or("exposure.vartheta", 0.022)?,
            raw.get_or("exposure.maturity", 5.0)?,
        )
        .map_err(|e| raw.invalid("exposure.maturity", e))?;

        let curve = match (raw.list("credit.hazards")?, raw.list("credit.knots")?) {
            (Some(hazards), knots) => {
                if raw.entries.contains_key("credit.hazard") {
                    return Err(raw.invalid("credit.hazards", "set either `credit.hazard` or `credit.hazards`, not both"));
                }
                CreditCurve::piecewise(knots.unwrap_or_default(), hazards).map_err(|e| raw.invalid("credit.hazards", e))?
            }
            (None, Some(_)) => return Err(raw.invalid("credit.knots", "`credit.knots` needs `credit.hazards`")),
            (None, None) => {
                CreditCurve::flat(raw.get_or("credit.hazard", 0.01)?).map_err(|e| raw.invalid("credit.hazard", e))?
            }
        };
        let h0 = curve.hazard(0.0);

        let rhos = raw.list("model.rho")?.unwrap_or_else(default_rhos);
        if rhos.is_empty() {
            return Err(raw.invalid("model.rho", "at least one correlation is required"));
        }
        if let Some(r) = rhos.iter().find(|r| r.is_nan() || r.abs() > 1.0) {
            return Err(raw.invalid("model.rho", format!("correlation {r} outside [-1, 1]")));
        }

        let hw = HwSettings {
            kappa: raw.get_or("model.hw.kappa", 0.005)?,
            theta: raw.get_or("model.hw.theta", 0.0)?,
            sigma: raw.get_or("model.hw.sigma", 0.04)?,
            r0: raw.get_or("model.hw.r0", h0)?,
            corr_mode: raw.get_or("model.hw.corr_mode", CorrMode::Paper)?,
        };
        let ssrd = SsrdSettings {
            r0: raw.get_or("model.ssrd.r0", h0)?,
            kappa: raw.get_or("model.ssrd.kappa", 0.35)?,
            theta: raw.get_or("model.ssrd.theta", 0.0012)?,
            sigma: raw.get_or("model.ssrd.sigma", 0.02)?,
        };

        let quadrature = match raw.get_or("quadrature.rule", "gauss-legendre".to_string())?.as_str() {
            "gauss-legendre" => QuadratureRule::gauss_legendre(raw.get_or("quadrature.nodes", 128)?)
                .map_err(|e| raw.invalid("quadrature.nodes", e))?,
            "simpson" => QuadratureRule::adaptive_simpson(raw.get_or("quadrature.tolerance", 1e-10)?)
                .map_err(|e| raw.invalid("quadrature.tolerance", e))?,
            other => {
                return Err(raw.invalid(
                    "quadrature.rule",
                    format!("unknown rule `{other}` (expected gauss-legendre or simpson)"),
                ))
            }
        };

        let mc = SimConfig {
            n_paths: raw.get_or("mc.paths", 10_000)?,
            dt: raw.get_or("mc.dt", 0.01)?,
            seed: raw.get_or("mc.seed", SimConfig::default().seed)?,
            antithetic: raw.get_or("mc.antithetic", false)?,
            execution: if raw.get_or("mc.parallel", true)? {
                Execution::Parallel
            } else {
                Execution::Sequential
            },
        };
        mc.validate().map_err(|e| raw.invalid("mc.paths", e))?;
        if mc.dt > spec.maturity {
            return Err(raw.invalid("mc.dt", "the time step cannot exceed the maturity"));
        }

        let grid_points: usize = raw.get_or("grid.points", 100)?;
        if grid_points == 0 {
            return Err(raw.invalid("grid.points", "must be at least 1"));
        }
        let precision: usize = raw.get_or("output.precision", 12)?;
        if !(1..=17).contains(&precision) {
            return Err(raw.invalid("output.precision", "must lie in 1..=17"));
        }
        let path_horizon = raw.get_or("paths.horizon", spec.maturity)?;
        if !(path_horizon > 0.0 && path_horizon <= spec.maturity) {
            return Err(raw.invalid("paths.horizon", "must lie in (0, exposure.maturity]"));
        }
        let sweep_values = raw.list("sweep.values")?;

        let config = Self {
            model,
            method,
            spec,
            curve,
            rhos,
            rho_explicit: raw.entries.contains_key("model.rho"),
            hw,
            cm_sigma: raw.get_or("model.cm.sigma", 0.9)?,
            cm_convention: raw.get_or("model.cm.sign_convention", CmSignConvention::Paper)?,
            ssrd,
            gaussian_sigma: raw.get_or("model.gaussian.sigma", 0.01)?,
            grid_points,
            quadrature,
            mc,
            layout: raw.get_or("epe.layout", Layout::Wide)?,
            sweep_param: raw.get_or("sweep.param", SweepParam::Rho)?,
            sweep_values,
            path_count: raw.get_or("paths.count", 5)?,
            path_horizon,
            path_exposure: raw.get_or("paths.exposure", true)?,
            out_dir: raw.get::<PathBuf>("output.dir")?,
            precision,
            validate_paths: raw.get_or("validate.paths", 20_000)?,
            validate_rho: raw.get_or("validate.rho", 0.4)?,
            phi_bump: raw.get_or("validate.fault.phi_bump", 0.0)?,
        };
        // Parameter checks run once here so that commands only meet numerical failures.
        for &rho in &config.rhos {
            crate::models::ModelInstance::build(&config, config.model, rho, None).map_err(|e| {
                ConfigError(format!("model `{}` with rho = {rho}: {e}", config.model))
            })?;
        }
        Ok(config)
    }
}
