//! Monotone wide-stencil discretization of det D2u = f and its Newton
//! solver.
//!
//! The operator takes, over a list of orthogonal direction pairs, the
//! minimum of the product of positive parts of the two directional second
//! differences, plus a penalty on their negative parts. The minimum is
//! exact on quadratics whose Hessian eigenvectors appear among the pairs,
//! and the penalty makes the scheme monotone, so discrete comparison holds.

mod comparison;
mod newton;
mod operator;

pub use comparison::comparison_check;
pub use newton::{harmonic_extension, solve_dirichlet};
pub use operator::ma_operator;

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Orthogonal lattice direction pairs probed by the scheme.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stencil {
    pairs: Vec<[(i64, i64); 2]>,
}

impl Stencil {
    /// Axis pair, diagonal pair, and the two knight-step refinements.
    /// Order matters: ties in the minimum resolve to the earliest pair.
    pub fn default_pairs() -> Self {
        Stencil {
            pairs: vec![
                [(1, 0), (0, 1)],
                [(1, 1), (1, -1)],
                [(2, 1), (-1, 2)],
                [(1, 2), (-2, 1)],
            ],
        }
    }

    pub fn new(pairs: Vec<[(i64, i64); 2]>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Domain("stencil needs at least one pair".into()));
        }
        for [e, ep] in pairs.iter().copied() {
            if e == (0, 0) || ep == (0, 0) {
                return Err(Error::Domain("stencil directions must be nonzero".into()));
            }
            if e.0 * ep.0 + e.1 * ep.1 != 0 {
                return Err(Error::Domain(format!(
                    "stencil pair ({e:?}, {ep:?}) is not orthogonal"
                )));
            }
        }
        let has_axis = pairs
            .iter()
            .any(|p| normalized(p) == [(0, 1), (1, 0)]);
        let has_diag = pairs
            .iter()
            .any(|p| normalized(p) == [(1, -1), (1, 1)]);
        if !has_axis {
            return Err(Error::Domain(
                "stencil must contain the axis pair for boundary narrowing".into(),
            ));
        }
        if !has_diag {
            return Err(Error::Domain(
                "stencil must contain the diagonal pair".into(),
            ));
        }
        Ok(Stencil { pairs })
    }

    pub fn pairs(&self) -> &[[(i64, i64); 2]] {
        &self.pairs
    }

    /// Index of the axis pair, used as the narrowing fallback.
    pub(crate) fn axis_pair_index(&self) -> usize {
        self.pairs
            .iter()
            .position(|p| normalized(p) == [(0, 1), (1, 0)])
            .expect("validated at construction")
    }
}

fn normalized(p: &[(i64, i64); 2]) -> [(i64, i64); 2] {
    let canon = |d: (i64, i64)| {
        if d.0 < 0 || (d.0 == 0 && d.1 < 0) {
            (-d.0, -d.1)
        } else {
            d
        }
    };
    let mut q = [canon(p[0]), canon(p[1])];
    q.sort_unstable();
    q
}

/// Knobs of the damped Newton iteration.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Relative max-norm residual target.
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Step shrink factor of the backtracking line search.
    pub damping: f64,
    /// Sufficient-decrease fraction per unit step.
    pub armijo: f64,
    /// Weight on negative directional second differences.
    pub penalty: f64,
    /// Stages taken when walking the boundary parameter below zero.
    pub continuation_steps: usize,
    /// Sweeps of the pointwise fallback before Newton retries.
    pub gs_sweeps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            newton_tol: 1e-9,
            max_newton: 60,
            damping: 0.5,
            armijo: 1e-4,
            penalty: 1.0,
            continuation_steps: 4,
            gs_sweeps: 200,
        }
    }
}

/// One stage of a parameter continuation run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuationStage {
    pub t: f64,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub converged: bool,
    /// Newton iterations of the final stage.
    pub iterations: usize,
    /// Final relative max-norm residual.
    pub residual: f64,
    /// Continuation trace; empty for direct solves.
    pub continuation: Vec<ContinuationStage>,
    /// Most negative directional second difference over the stencil at the
    /// returned iterate; near zero for converged solves.
    pub convexity_violation: f64,
}
