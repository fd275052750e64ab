//! Dirichlet data for the determinant equation on a truncated quadrant.

use super::field::{FieldMeta, ScalarField};
use super::grid::Grid2D;
use crate::error::{Error, Result};

/// det D2u = f in the interior, u = phi on the boundary nodes. Right-hand
/// side and boundary data are sampled onto the lattice at construction;
/// the right-hand side must be strictly positive.
#[derive(Debug, Clone)]
pub struct DirichletProblem {
    grid: Grid2D,
    /// Sampled f at every non-exterior node (NaN elsewhere).
    rhs: Vec<f64>,
    /// Sampled phi at boundary nodes (NaN elsewhere).
    boundary: Vec<f64>,
}

impl DirichletProblem {
    pub fn new(
        grid: Grid2D,
        rhs: impl Fn(f64, f64) -> f64,
        boundary: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let mut f = vec![f64::NAN; grid.num_nodes()];
        let mut phi = vec![f64::NAN; grid.num_nodes()];
        for (i, j) in grid.nodes() {
            if grid.is_exterior(i, j) {
                continue;
            }
            let (x1, x2) = grid.position(i, j);
            let fv = rhs(x1, x2);
            if !(fv.is_finite() && fv > 0.0) {
                return Err(Error::Domain(format!(
                    "right-hand side must be strictly positive, got {fv} at ({x1}, {x2})"
                )));
            }
            f[grid.idx(i, j)] = fv;
            if grid.is_boundary(i, j) {
                let bv = boundary(x1, x2);
                if !bv.is_finite() {
                    return Err(Error::Domain(format!(
                        "boundary data must be finite, got {bv} at ({x1}, {x2})"
                    )));
                }
                phi[grid.idx(i, j)] = bv;
            }
        }
        Ok(DirichletProblem { grid, rhs: f, boundary: phi })
    }

    /// Constant right-hand side.
    pub fn with_constant_rhs(
        grid: Grid2D,
        c: f64,
        boundary: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        DirichletProblem::new(grid, |_, _| c, boundary)
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn rhs_at(&self, i: usize, j: usize) -> f64 {
        self.rhs[self.grid.idx(i, j)]
    }

    pub fn boundary_at(&self, i: usize, j: usize) -> f64 {
        self.boundary[self.grid.idx(i, j)]
    }

    pub fn max_rhs(&self) -> f64 {
        self.rhs
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Field holding phi on boundary nodes and `fill` elsewhere.
    pub fn boundary_field(&self, fill: f64, meta: FieldMeta) -> ScalarField {
        let mut values = vec![f64::NAN; self.grid.num_nodes()];
        for (i, j) in self.grid.nodes() {
            if self.grid.is_exterior(i, j) {
                continue;
            }
            values[self.grid.idx(i, j)] = if self.grid.is_boundary(i, j) {
                self.boundary_at(i, j)
            } else {
                fill
            };
        }
        ScalarField::from_values(self.grid, values, meta)
    }
}
