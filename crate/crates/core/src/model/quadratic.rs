//! Quadratic polynomials on the plane, including the two-parameter family
//! tied to the ellipticity constant.

use super::{AngleConstants, Sign};

/// p(x) = a11 x1^2 / 2 + a22 x2^2 / 2 + a12 x1 x2 + b1 x1 + b2 x2 + d.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticPolynomial {
    pub a11: f64,
    pub a22: f64,
    pub a12: f64,
    pub b1: f64,
    pub b2: f64,
    pub d: f64,
}

impl QuadraticPolynomial {
    pub fn new(a11: f64, a22: f64, a12: f64, b1: f64, b2: f64, d: f64) -> Self {
        QuadraticPolynomial { a11, a22, a12, b1, b2, d }
    }

    /// The isotropic paraboloid |x|^2 / 2.
    pub fn paraboloid() -> Self {
        QuadraticPolynomial::new(1.0, 1.0, 0.0, 0.0, 0.0, 0.0)
    }

    /// The extremal quadratic pair: |x|^2 / 2 +- sqrt(1-c) x1 x2.
    /// Both have Hessian determinant exactly c and value 1 -+ s at (1, 1).
    pub fn pc(constants: &AngleConstants, sign: Sign) -> Self {
        QuadraticPolynomial::new(1.0, 1.0, sign.factor() * constants.s, 0.0, 0.0, 0.0)
    }

    /// Interpolating member |x|^2/2 + (t - s) x1 x2; equals the minus member
    /// at t = 0 and the plus member at t = 2s.
    pub fn family(constants: &AngleConstants, t: f64) -> Self {
        QuadraticPolynomial::new(1.0, 1.0, t - constants.s, 0.0, 0.0, 0.0)
    }

    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        0.5 * self.a11 * x1 * x1
            + 0.5 * self.a22 * x2 * x2
            + self.a12 * x1 * x2
            + self.b1 * x1
            + self.b2 * x2
            + self.d
    }

    pub fn hessian(&self) -> [[f64; 2]; 2] {
        [[self.a11, self.a12], [self.a12, self.a22]]
    }

    pub fn det_hessian(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    /// p(M x), still quadratic: Hessian M^T H M, linear part M^T b.
    pub fn compose_linear(&self, m: &[[f64; 2]; 2]) -> Self {
        let h = self.hessian();
        let mut ht = [[0.0; 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                let mut v = 0.0;
                for k in 0..2 {
                    for l in 0..2 {
                        v += m[k][r] * h[k][l] * m[l][c];
                    }
                }
                ht[r][c] = v;
            }
        }
        QuadraticPolynomial::new(
            ht[0][0],
            ht[1][1],
            ht[0][1],
            m[0][0] * self.b1 + m[1][0] * self.b2,
            m[0][1] * self.b1 + m[1][1] * self.b2,
            self.d,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AngleConstants;

    #[test]
    fn plus_member_value() {
        let k = AngleConstants::new(0.75).unwrap();
        let p = QuadraticPolynomial::pc(&k, Sign::Plus);
        assert!((p.eval(2.0, 1.0) - 3.5).abs() < 1e-15);
    }

    #[test]
    fn pair_values_at_unit_diagonal() {
        for &c in &[0.25, 0.5, 0.75] {
            let k = AngleConstants::new(c).unwrap();
            let plus = QuadraticPolynomial::pc(&k, Sign::Plus);
            let minus = QuadraticPolynomial::pc(&k, Sign::Minus);
            assert!((plus.eval(1.0, 1.0) - (1.0 + k.s)).abs() < 1e-15);
            assert!((minus.eval(1.0, 1.0) - (1.0 - k.s)).abs() < 1e-15);
        }
    }

    #[test]
    fn family_hessian_determinant_is_c_at_endpoints() {
        for &c in &[0.1, 0.25, 0.5, 0.75, 0.9] {
            let k = AngleConstants::new(c).unwrap();
            for sign in [Sign::Plus, Sign::Minus] {
                let p = QuadraticPolynomial::pc(&k, sign);
                assert!(
                    (p.det_hessian() - c).abs() < 1e-14,
                    "det deviates at c = {c}"
                );
            }
            assert_eq!(
                QuadraticPolynomial::family(&k, 0.0),
                QuadraticPolynomial::pc(&k, Sign::Minus)
            );
            let top = QuadraticPolynomial::family(&k, 2.0 * k.s);
            assert!((top.a12 - k.s).abs() < 1e-15);
        }
    }

    #[test]
    fn family_interior_determinant_dominates_c() {
        // det = 1 - (t - s)^2 >= c exactly when |t - s| <= s.
        let k = AngleConstants::new(0.75).unwrap();
        for i in 0..=10 {
            let t = 2.0 * k.s * f64::from(i) / 10.0;
            let p = QuadraticPolynomial::family(&k, t);
            assert!(p.det_hessian() >= k.c - 1e-14);
        }
    }
}
