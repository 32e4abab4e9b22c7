//! Block-structured sample loop shared by every estimator.
//!
//! Samples are cut into fixed blocks of [`BLOCK_SIZE`]. Each block owns its
//! accumulators and the blocks are merged in index order, so the result does
//! not depend on how many threads ran them.

use super::rng::PathRng;
use super::stats::RunningStats;
use crate::error::{Error, Result};

pub const BLOCK_SIZE: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Runs on the rayon pool when the `parallel` feature is enabled and falls
    /// back to the sequential loop otherwise.
    #[default]
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n_paths: u64,
    /// Largest simulation step; output times are always hit exactly.
    pub dt: f64,
    pub seed: u64,
    pub antithetic: bool,
    pub execution: Execution,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            dt: 1.0 / 100.0,
            seed: 20_240_607,
            antithetic: false,
            execution: Execution::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::Domain("at least one path is required".into()));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter {
                name: "dt",
                value: self.dt,
                reason: "must be positive",
            });
        }
        Ok(())
    }

    /// Number of independent samples; an antithetic pair counts once.
    pub fn n_samples(&self) -> u64 {
        if self.antithetic {
            self.n_paths.div_ceil(2)
        } else {
            self.n_paths
        }
    }
}

/// Runs `sample` once per independent sample and returns per-column statistics.
///
/// `sample(id, rng, out)` fills `out` (length `width`) from one path. With
/// antithetic sampling the two members of a pair share the stream `id`, the
/// second with negated normals, and their average is recorded.
pub fn run_samples<F>(cfg: &SimConfig, width: usize, sample: F) -> Result<Vec<RunningStats>>
where
    F: Fn(u64, &mut PathRng, &mut [f64]) -> Result<()> + Sync,
{
    cfg.validate()?;
    let n = cfg.n_samples();
    let n_blocks = n.div_ceil(BLOCK_SIZE);
    let block = |b: u64| -> Result<Vec<RunningStats>> {
        let mut stats = vec![RunningStats::new(); width];
        let mut buf = vec![0.0; width];
        let mut anti = vec![0.0; width];
        for id in b * BLOCK_SIZE..((b + 1) * BLOCK_SIZE).min(n) {
            sample(id, &mut PathRng::new(cfg.seed, id, false), &mut buf)?;
            if cfg.antithetic {
                sample(id, &mut PathRng::new(cfg.seed, id, true), &mut anti)?;
                for (x, y) in buf.iter_mut().zip(&anti) {
                    *x = 0.5 * (*x + *y);
                }
            }
            for (s, &x) in stats.iter_mut().zip(&buf) {
                s.push(x);
            }
        }
        Ok(stats)
    };

    let blocks: Vec<Vec<RunningStats>> = match cfg.execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n_blocks).into_par_iter().map(block).collect::<Result<_>>()?
        }
        _ => (0..n_blocks).map(block).collect::<Result<_>>()?,
    };

    let mut total = vec![RunningStats::new(); width];
    for b in &blocks {
        for (t, s) in total.iter_mut().zip(b) {
            t.merge(s);
        }
    }
    Ok(total)
}
