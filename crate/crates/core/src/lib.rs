//! Numerical laboratory for the degenerate Monge-Ampere problem
//! det D2u = f on the first quadrant with quadratic boundary growth.
//!
//! The crate builds truncated Dirichlet solves with a monotone wide-stencil
//! scheme, constructs the extremal global solutions by shooting on the
//! diagonal pinning value, measures their decay exponents and boundary
//! expansion coefficients, and classifies vertex regularity from local
//! data.

pub mod asymptotics;
pub mod classifier;
pub mod error;
pub mod global;
pub mod harmonic;
pub mod model;
pub mod numerics;
pub mod solver;

pub use error::{Error, Result};

use once_cell::sync::OnceCell;

static POOL: OnceCell<()> = OnceCell::new();

/// Cap internal parallelism from MA_CORNER_THREADS. Called lazily by the
/// compute kernels; later calls are no-ops.
pub fn init_parallelism() {
    POOL.get_or_init(|| {
        if let Ok(v) = std::env::var("MA_CORNER_THREADS") {
            if let Ok(n) = v.trim().parse::<usize>() {
                if n >= 1 {
                    // Ignore failure: a pool may already exist in tests.
                    let _ = rayon::ThreadPoolBuilder::new()
                        .num_threads(n)
                        .build_global();
                }
            }
        }
    });
}
