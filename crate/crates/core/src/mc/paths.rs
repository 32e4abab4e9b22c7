//! Stored sample paths and their CSV export.

use std::io::Write;

#[cfg(feature = "parallel")]
use super::engine::Execution;
use super::engine::SimConfig;
use super::model::{DynamicModel, PathPoint, PathSimulator};
use super::rng::PathRng;
use crate::cva::ModelTag;
use crate::error::{Error, Result};
use crate::market::{CreditCurve, ExposureSpec};

/// Paths on a common grid, stored path-major: value `i` of path `p` sits at
/// `p * times.len() + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle {
    pub model: ModelTag,
    pub times: Vec<f64>,
    pub n_paths: usize,
    pub s: Vec<f64>,
    pub zeta: Vec<f64>,
    pub lambda: Option<Vec<f64>>,
    pub v: Option<Vec<f64>>,
}

impl PathBundle {
    fn at(&self, values: &[f64], path: usize, i: usize) -> f64 {
        values[path * self.times.len() + i]
    }

    pub fn survival(&self, path: usize, i: usize) -> f64 {
        self.at(&self.s, path, i)
    }

    pub fn zeta(&self, path: usize, i: usize) -> f64 {
        self.at(&self.zeta, path, i)
    }

    /// Number of (path, time) points with S outside [0, 1].
    pub fn out_of_range_count(&self) -> usize {
        self.s.iter().filter(|s| !(0.0..=1.0).contains(*s)).count()
    }

    /// Number of paths that leave [0, 1] at least once.
    pub fn paths_leaving_unit_interval(&self) -> usize {
        self.s
            .chunks(self.times.len())
            .filter(|p| p.iter().any(|s| !(0.0..=1.0).contains(s)))
            .count()
    }

    pub fn negative_lambda_count(&self) -> usize {
        self.lambda
            .as_ref()
            .map_or(0, |l| l.iter().filter(|&&x| x < 0.0).count())
    }

    /// Writes `t,path_id,S,zeta[,lambda][,V]` rows, path by path, with
    /// `digits` significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W, digits: usize) -> std::io::Result<()> {
        let mut header = String::from("t,path_id,S,zeta");
        if self.lambda.is_some() {
            header.push_str(",lambda");
        }
        if self.v.is_some() {
            header.push_str(",V");
        }
        writeln!(w, "{header}")?;
        let n = self.times.len();
        for p in 0..self.n_paths {
            for (i, &t) in self.times.iter().enumerate() {
                let k = p * n + i;
                let mut row = format!(
                    "{},{},{},{}",
                    format_significant(t, digits),
                    p,
                    format_significant(self.s[k], digits),
                    format_significant(self.zeta[k], digits)
                );
                if let Some(l) = &self.lambda {
                    row.push(',');
                    row.push_str(&format_significant(l[k], digits));
                }
                if let Some(v) = &self.v {
                    row.push(',');
                    row.push_str(&format_significant(v[k], digits));
                }
                writeln!(w, "{row}")?;
            }
        }
        Ok(())
    }
}

/// Simulates `cfg.n_paths` paths on [0, horizon] with steps of `cfg.dt`.
///
/// Without an exposure the V column is omitted. With antithetic sampling
/// paths 2k and 2k + 1 form a pair.
pub fn simulate_survival_paths(
    model: &DynamicModel,
    curve: &CreditCurve,
    cfg: &SimConfig,
    horizon: f64,
    exposure: Option<&ExposureSpec>,
) -> Result<PathBundle> {
    cfg.validate()?;
    let spec = match exposure {
        Some(s) => *s,
        None => ExposureSpec::forward(0.0, horizon)?,
    };
    let sim = PathSimulator::new(*model, &spec, curve, cfg.dt, &[horizon])?;
    let n_paths = usize::try_from(cfg.n_paths).map_err(|_| Error::Domain("too many paths".into()))?;
    let n = sim.times().len();
    let one = |p: usize| -> Result<Vec<PathPoint>> {
        let (stream, negate) = if cfg.antithetic {
            ((p / 2) as u64, p % 2 == 1)
        } else {
            (p as u64, false)
        };
        let mut out = vec![
            PathPoint {
                t: 0.0,
                s: 1.0,
                zeta: 1.0,
                lambda: None,
                v: 0.0
            };
            n
        ];
        sim.run(p as u64, &mut PathRng::new(cfg.seed, stream, negate), &mut out)?;
        Ok(out)
    };
    let paths: Vec<Vec<PathPoint>> = match cfg.execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n_paths).into_par_iter().map(one).collect::<Result<_>>()?
        }
        _ => (0..n_paths).map(one).collect::<Result<_>>()?,
    };
    let flat = |f: fn(&PathPoint) -> f64| paths.iter().flatten().map(f).collect::<Vec<_>>();
    Ok(PathBundle {
        model: model.tag(),
        times: sim.times().to_vec(),
        n_paths,
        s: flat(|p| p.s),
        zeta: flat(|p| p.zeta),
        lambda: model.has_intensity().then(|| flat(|p| p.lambda.unwrap_or(f64::NAN))),
        v: exposure.map(|_| flat(|p| p.v)),
    })
}

/// Decimal rendering with `digits` significant digits, in the style of C's
/// `%g`: fixed notation for moderate exponents, scientific otherwise, with
/// trailing zeros removed.
pub fn format_significant(x: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        format!("{}e{}", trim_zeros(mantissa), exp)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::engine::Execution;
    use crate::cm::CmParams;
    use crate::mc::model::GaussianMartingaleParams;
    use proptest::prelude::*;

    fn cfg(n: u64) -> SimConfig {
        SimConfig {
            n_paths: n,
            dt: 0.05,
            seed: 99,
            antithetic: false,
            execution: Execution::Parallel,
        }
    }

    #[test]
    fn formatting() {
        assert_eq!(format_significant(0.0, 12), "0");
        assert_eq!(format_significant(1.0, 12), "1");
        assert_eq!(format_significant(0.1 + 0.2, 12), "0.3");
        assert_eq!(format_significant(-2.5e-7, 12), "-2.5e-7");
        assert_eq!(format_significant(123456789012345.0, 12), "1.23456789012e14");
        assert_eq!(format_significant(0.999_999_999_999_9, 12), "1");
        assert_eq!(format_significant(0.054_690_297_256_207, 12), "0.0546902972562");
    }

    proptest! {
        #[test]
        fn round_trip_precision(x in -1e6..1e6f64) {
            let y: f64 = format_significant(x, 12).parse().unwrap();
            prop_assert!((x - y).abs() <= 1e-11 * x.abs());
        }
    }

    #[test]
    fn conic_paths_stay_inside() {
        let curve = CreditCurve::flat(0.01).unwrap();
        let m = DynamicModel::Conic(CmParams::new(0.1, 0.0).unwrap());
        let b = simulate_survival_paths(&m, &curve, &cfg(50), 5.0, None).unwrap();
        assert_eq!(b.out_of_range_count(), 0);
        for p in 0..b.n_paths {
            assert!((1..b.times.len()).all(|i| b.survival(p, i) > 0.0 && b.survival(p, i) < 1.0));
        }
        assert!(b.lambda.is_none() && b.v.is_none());
    }

    #[test]
    fn csv_layout_and_determinism() {
        let curve = CreditCurve::flat(0.01).unwrap();
        let spec = ExposureSpec::forward(0.022, 5.0).unwrap();
        let m = DynamicModel::GaussianMartingale(GaussianMartingaleParams::new(0.01, 0.5).unwrap());
        let render = |execution| {
            let mut c = cfg(4);
            c.execution = execution;
            let b = simulate_survival_paths(&m, &curve, &c, 5.0, Some(&spec)).unwrap();
            let mut buf = Vec::new();
            b.write_csv(&mut buf, 12).unwrap();
            String::from_utf8(buf).unwrap()
        };
        let a = render(Execution::Parallel);
        assert_eq!(a, render(Execution::Sequential));
        let mut lines = a.lines();
        assert_eq!(lines.next().unwrap(), "t,path_id,S,zeta,V");
        assert_eq!(lines.next().unwrap(), "0,0,1,1,0");
        assert_eq!(a.lines().count(), 1 + 4 * 101);
    }

    #[test]
    fn antithetic_pairs_mirror() {
        let curve = CreditCurve::flat(0.01).unwrap();
        let m = DynamicModel::GaussianMartingale(GaussianMartingaleParams::new(0.01, 0.0).unwrap());
        let mut c = cfg(2);
        c.antithetic = true;
        let b = simulate_survival_paths(&m, &curve, &c, 1.0, None).unwrap();
        for i in 0..b.times.len() {
            let g = curve.survival(b.times[i]).unwrap();
            assert!((b.survival(0, i) - g + b.survival(1, i) - g).abs() < 1e-15);
        }
    }
}
