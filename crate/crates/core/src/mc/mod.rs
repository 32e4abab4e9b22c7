//! Monte Carlo simulation of exposures jointly with survival and intensity
//! processes.
//!
//! Each sample owns a ChaCha stream keyed by its index, and statistics are
//! accumulated per fixed-size block, so estimates are bit-identical whether
//! they run sequentially or on the rayon pool.

mod engine;
mod estimators;
mod model;
mod paths;
mod rng;
mod stats;

pub use engine::{run_samples, Execution, SimConfig, BLOCK_SIZE};
pub use estimators::{
    estimate_wwr_epe_mc, gc_resample_epe_mc, mc_cva, path_functional, ssrd_cva, survival_statistics,
    zeta_increment_covariance, McCvaReport, SsrdCvaReport, SurvivalStats,
};
pub use model::{
    cir_shift_phi, simulation_times, DynamicModel, GaussianMartingaleParams, PathPoint, PathSimulator,
    SsrdParams,
};
pub use paths::{format_significant, simulate_survival_paths, PathBundle};
pub use rng::PathRng;
pub use stats::RunningStats;
