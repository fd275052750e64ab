//! Problem data: sector constants derived from the ellipticity constant c,
//! the quadratic solution family, the shear maps that flatten its members
//! to the isotropic paraboloid, and the discrete domain types.

mod affine;
mod field;
mod grid;
mod problem;
mod quadratic;

pub use affine::AffineMap;
pub use field::{FieldMeta, ScalarField};
pub use grid::{Grid2D, GridShape, NodeClass};
pub use problem::DirichletProblem;
pub use quadratic::QuadraticPolynomial;

use crate::error::{Error, Result};

/// Which member of the quadratic pair: `Plus` bends up along the diagonal,
/// `Minus` bends down.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Angles and growth exponents attached to a fixed c in (0, 1].
///
/// s = sqrt(1 - c); the sector openings are arccos(-s) (obtuse) and
/// arccos(s) (acute), and each exponent is pi over its opening. At c = 1
/// both openings are right angles and both exponents equal 2.
#[derive(Debug, Clone, Copy)]
pub struct AngleConstants {
    pub c: f64,
    pub s: f64,
    /// Opening of the wide sector, arccos(-s); lies in [pi/2, pi).
    pub alpha_minus: f64,
    /// Opening of the narrow sector, arccos(s); lies in (0, pi/2].
    pub alpha_plus: f64,
    /// pi / alpha_minus; lies in (1, 2].
    pub beta_minus: f64,
    /// pi / alpha_plus; lies in [2, infinity).
    pub beta_plus: f64,
}

impl AngleConstants {
    pub fn new(c: f64) -> Result<Self> {
        if !(c > 0.0 && c <= 1.0) || !c.is_finite() {
            return Err(Error::Domain(format!(
                "ellipticity constant must satisfy 0 < c <= 1, got {c}"
            )));
        }
        let s = (1.0 - c).sqrt();
        let alpha_minus = (-s).acos();
        let alpha_plus = s.acos();
        Ok(AngleConstants {
            c,
            s,
            alpha_minus,
            alpha_plus,
            beta_minus: std::f64::consts::PI / alpha_minus,
            beta_plus: std::f64::consts::PI / alpha_plus,
        })
    }
}

/// Convenience: |x|^2 / 2 at a point.
pub fn half_square_norm(x1: f64, x2: f64) -> f64 {
    0.5 * (x1 * x1 + x2 * x2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constants_at_three_quarters() {
        let k = AngleConstants::new(0.75).unwrap();
        assert!((k.s - 0.5).abs() < 1e-15);
        assert!((k.alpha_minus - 2.0 * PI / 3.0).abs() < 1e-14);
        assert!((k.alpha_plus - PI / 3.0).abs() < 1e-14);
        assert!((k.beta_minus - 1.5).abs() < 1e-14);
        assert!((k.beta_plus - 3.0).abs() < 1e-14);
    }

    #[test]
    fn constants_at_one_half() {
        let k = AngleConstants::new(0.5).unwrap();
        assert!((k.beta_minus - 4.0 / 3.0).abs() < 1e-14);
        assert!((k.beta_plus - 4.0).abs() < 1e-13);
    }

    #[test]
    fn constants_degenerate_to_right_angles_at_one() {
        let k = AngleConstants::new(1.0).unwrap();
        assert_eq!(k.s, 0.0);
        assert!((k.alpha_minus - PI / 2.0).abs() < 1e-15);
        assert!((k.beta_minus - 2.0).abs() < 1e-15);
        assert!((k.beta_plus - 2.0).abs() < 1e-15);
    }

    #[test]
    fn openings_are_supplementary() {
        for &c in &[0.1, 0.25, 0.5, 0.75, 0.9, 0.99] {
            let k = AngleConstants::new(c).unwrap();
            assert!((k.alpha_minus + k.alpha_plus - PI).abs() < 1e-14);
            assert!(k.beta_minus > 1.0 && k.beta_minus < 2.0);
            assert!(k.beta_plus > 2.0);
        }
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(AngleConstants::new(0.0).is_err());
        assert!(AngleConstants::new(-0.5).is_err());
        assert!(AngleConstants::new(1.5).is_err());
        assert!(AngleConstants::new(f64::NAN).is_err());
    }
}
