//! Linear changes of coordinates on the plane.

use super::{AngleConstants, Sign};
use crate::error::{Error, Result};

/// A 2x2 linear map x -> M x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub m: [[f64; 2]; 2],
}

impl AffineMap {
    pub fn new(m: [[f64; 2]; 2]) -> Self {
        AffineMap { m }
    }

    pub fn identity() -> Self {
        AffineMap::new([[1.0, 0.0], [0.0, 1.0]])
    }

    pub fn diagonal(d1: f64, d2: f64) -> Self {
        AffineMap::new([[d1, 0.0], [0.0, d2]])
    }

    /// Shear that carries the sector of the chosen quadratic member onto the
    /// quadrant: composing the member with this map yields the isotropic
    /// paraboloid. Positive determinant 1/sqrt(c).
    pub fn sector_map(constants: &AngleConstants, sign: Sign) -> Self {
        let rc = constants.c.sqrt();
        AffineMap::new([
            [1.0, -sign.factor() * constants.s / rc],
            [0.0, 1.0 / rc],
        ])
    }

    pub fn apply(&self, x1: f64, x2: f64) -> (f64, f64) {
        (
            self.m[0][0] * x1 + self.m[0][1] * x2,
            self.m[1][0] * x1 + self.m[1][1] * x2,
        )
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn inverse(&self) -> Result<AffineMap> {
        let d = self.det();
        if d.abs() < 1e-300 {
            return Err(Error::Singular("2x2 map has zero determinant".into()));
        }
        Ok(AffineMap::new([
            [self.m[1][1] / d, -self.m[0][1] / d],
            [-self.m[1][0] / d, self.m[0][0] / d],
        ]))
    }

    /// self after other: (self . other)(x) = self(other(x)).
    pub fn compose(&self, other: &AffineMap) -> AffineMap {
        let mut m = [[0.0; 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                m[r][c] = self.m[r][0] * other.m[0][c] + self.m[r][1] * other.m[1][c];
            }
        }
        AffineMap::new(m)
    }
}
