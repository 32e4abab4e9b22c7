//! Gauss-Legendre and adaptive Simpson quadrature on a finite interval.

use crate::error::{Error, Result};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadratureRule {
    GaussLegendre { nodes: usize },
    AdaptiveSimpson { tolerance: f64 },
}

impl QuadratureRule {
    pub fn gauss_legendre(nodes: usize) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::InvalidParameter {
                name: "nodes",
                value: nodes as f64,
                reason: "Gauss-Legendre needs at least 2 nodes",
            });
        }
        Ok(Self::GaussLegendre { nodes })
    }

    pub fn adaptive_simpson(tolerance: f64) -> Result<Self> {
        crate::error::ensure_positive("tolerance", tolerance)?;
        Ok(Self::AdaptiveSimpson { tolerance })
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Self::GaussLegendre { nodes } => Self::gauss_legendre(nodes).map(|_| ()),
            Self::AdaptiveSimpson { tolerance } => Self::adaptive_simpson(tolerance).map(|_| ()),
        }
    }
}

impl Default for QuadratureRule {
    /// 128-node Gauss-Legendre, the default for CVA integrals.
    fn default() -> Self {
        Self::GaussLegendre { nodes: 128 }
    }
}

/// One evaluated node of a quadrature: abscissa, integrand value and weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSample {
    pub x: f64,
    pub fx: f64,
    pub weight: f64,
}

pub fn integrate<F>(f: F, lo: f64, hi: f64, rule: &QuadratureRule) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    integrate_sampled(f, lo, hi, rule).map(|(v, _)| v)
}

/// Integrates and also returns every node used, so that the result equals
/// `Σ weight · fx` over the samples.
pub fn integrate_sampled<F>(
    mut f: F,
    lo: f64,
    hi: f64,
    rule: &QuadratureRule,
) -> Result<(f64, Vec<QuadratureSample>)>
where
    F: FnMut(f64) -> f64,
{
    rule.validate()?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Domain(format!(
            "integration bounds must satisfy lo < hi, got [{lo}, {hi}]"
        )));
    }
    let mut eval = |x: f64| -> Result<f64> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Integration { x })
        }
    };
    let mut samples = Vec::new();
    match *rule {
        QuadratureRule::GaussLegendre { nodes } => {
            let table = gauss_legendre_table(nodes);
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            samples.reserve(nodes);
            for &(node, weight) in table.iter() {
                let x = mid + half * node;
                samples.push(QuadratureSample {
                    x,
                    fx: eval(x)?,
                    weight: half * weight,
                });
            }
        }
        QuadratureRule::AdaptiveSimpson { tolerance } => {
            let fa = eval(lo)?;
            let fm = eval(0.5 * (lo + hi))?;
            let fb = eval(hi)?;
            let whole = simpson(lo, hi, fa, fm, fb);
            let mut panel = Panel { a: lo, b: hi, fa, fm, fb, whole };
            adaptive_step(&mut eval, &mut panel, tolerance, MAX_DEPTH, &mut samples)?;
        }
    }
    let value = samples.iter().map(|s| s.weight * s.fx).sum();
    Ok((value, samples))
}

const MAX_DEPTH: u32 = 48;
/// Panels are split at least this many times before the error test is trusted,
/// which guards against accidental agreement on a coarse panel.
const MIN_DEPTH: u32 = 4;

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_step<E>(
    eval: &mut E,
    p: &mut Panel,
    tol: f64,
    depth: u32,
    out: &mut Vec<QuadratureSample>,
) -> Result<()>
where
    E: FnMut(f64) -> Result<f64>,
{
    let m = 0.5 * (p.a + p.b);
    let lm = 0.5 * (p.a + m);
    let rm = 0.5 * (m + p.b);
    let flm = eval(lm)?;
    let frm = eval(rm)?;
    let left = simpson(p.a, m, p.fa, flm, p.fm);
    let right = simpson(m, p.b, p.fm, frm, p.fb);
    let delta = left + right - p.whole;
    let deep_enough = MAX_DEPTH - depth >= MIN_DEPTH;
    if depth == 0 || (deep_enough && delta.abs() <= 15.0 * tol) {
        // Richardson-extrapolated panel, i.e. Boole's rule on the five points.
        let h = (p.b - p.a) / 90.0;
        for (x, fx, w) in [
            (p.a, p.fa, 7.0),
            (lm, flm, 32.0),
            (m, p.fm, 12.0),
            (rm, frm, 32.0),
            (p.b, p.fb, 7.0),
        ] {
            out.push(QuadratureSample { x, fx, weight: w * h });
        }
        return Ok(());
    }
    let mut lp = Panel { a: p.a, b: m, fa: p.fa, fm: flm, fb: p.fm, whole: left };
    let mut rp = Panel { a: m, b: p.b, fa: p.fm, fm: frm, fb: p.fb, whole: right };
    adaptive_step(eval, &mut lp, 0.5 * tol, depth - 1, out)?;
    adaptive_step(eval, &mut rp, 0.5 * tol, depth - 1, out)
}

/// Nodes and weights on [-1, 1], cached per node count.
pub fn gauss_legendre_table(n: usize) -> Arc<Vec<(f64, f64)>> {
    type Cache = Mutex<HashMap<usize, Arc<Vec<(f64, f64)>>>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| Arc::new(compute_gauss_legendre(n)))
        .clone()
}

fn compute_gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = vec![(0.0, 0.0); n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and P_{n-1}(x).
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out[i] = (-x, w);
        out[n - 1 - i] = (x, w);
    }
    out
}
