//! Discrete comparison principle check: ordered boundary data must produce
//! ordered solutions under the monotone scheme.

use super::{solve_dirichlet, SolverConfig};
use crate::error::{Error, Result};
use crate::model::DirichletProblem;

/// Solve both problems and report whether the solutions are ordered
/// nodewise, with a slack of ten solver tolerances to absorb the inexact
/// Newton stops. The grids and right-hand sides must coincide and the
/// boundary data must already be ordered.
pub fn comparison_check(
    lo: &DirichletProblem,
    hi: &DirichletProblem,
    config: &SolverConfig,
) -> Result<bool> {
    if lo.grid() != hi.grid() {
        return Err(Error::Grid(
            "comparison needs both problems on the same grid".into(),
        ));
    }
    let grid = *lo.grid();
    for (i, j) in grid.nodes() {
        if grid.is_exterior(i, j) {
            continue;
        }
        let (a, b) = (lo.rhs_at(i, j), hi.rhs_at(i, j));
        if (a - b).abs() > 1e-14 * a.abs().max(1.0) {
            return Err(Error::Domain(
                "comparison needs identical right-hand sides".into(),
            ));
        }
        if grid.is_boundary(i, j) && lo.boundary_at(i, j) > hi.boundary_at(i, j) {
            let (x1, x2) = grid.position(i, j);
            return Err(Error::Domain(format!(
                "boundary data is not ordered at ({x1}, {x2})"
            )));
        }
    }
    let (ulo, _) = solve_dirichlet(lo, config, None)?;
    let (uhi, _) = solve_dirichlet(hi, config, None)?;
    let margin = 10.0 * config.newton_tol * lo.max_rhs().max(1.0);
    let ordered = grid
        .nodes()
        .filter(|&(i, j)| !grid.is_exterior(i, j))
        .all(|(i, j)| ulo.value(i, j) <= uhi.value(i, j) + margin);
    Ok(ordered)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AngleConstants, Grid2D, QuadraticPolynomial, Sign};

    #[test]
    fn quadratic_pair_is_ordered_and_strict_inside() {
        let k = AngleConstants::new(0.75).unwrap();
        let pm = QuadraticPolynomial::pc(&k, Sign::Minus);
        let pp = QuadraticPolynomial::pc(&k, Sign::Plus);
        let g = Grid2D::square(2.0, 0.125).unwrap();
        let cfg = SolverConfig::default();
        let lo = DirichletProblem::with_constant_rhs(g, 0.75, |x1, x2| pm.eval(x1, x2))
            .unwrap();
        let hi = DirichletProblem::with_constant_rhs(g, 0.75, |x1, x2| pp.eval(x1, x2))
            .unwrap();
        assert!(comparison_check(&lo, &hi, &cfg).unwrap());
        // Strictness off the axes: the exact solutions differ by s*x1*x2.
        let (ulo, _) = solve_dirichlet(&lo, &cfg, None).unwrap();
        let (uhi, _) = solve_dirichlet(&hi, &cfg, None).unwrap();
        for (i, j) in g.interior_nodes() {
            assert!(uhi.value(i, j) - ulo.value(i, j) > 1e-3);
        }
    }

    #[test]
    fn equal_data_is_ordered_both_ways() {
        let g = Grid2D::square(2.0, 0.25).unwrap();
        let q = QuadraticPolynomial::paraboloid();
        let a = DirichletProblem::with_constant_rhs(g, 1.0, |x1, x2| q.eval(x1, x2))
            .unwrap();
        let cfg = SolverConfig::default();
        assert!(comparison_check(&a, &a.clone(), &cfg).unwrap());
    }

    #[test]
    fn perturbed_outer_data_stays_above() {
        let g = Grid2D::square(2.0, 0.25).unwrap();
        let q = QuadraticPolynomial::paraboloid();
        let lo = DirichletProblem::with_constant_rhs(g, 1.0, |x1, x2| q.eval(x1, x2))
            .unwrap();
        let hi = DirichletProblem::with_constant_rhs(g, 1.0, |x1, x2| {
            q.eval(x1, x2) + 0.01 * x1 * x2
        })
        .unwrap();
        assert!(comparison_check(&lo, &hi, &SolverConfig::default()).unwrap());
    }

    #[test]
    fn mismatched_inputs_are_rejected() {
        let g = Grid2D::square(2.0, 0.25).unwrap();
        let g2 = Grid2D::square(2.0, 0.5).unwrap();
        let q = QuadraticPolynomial::paraboloid();
        let a = DirichletProblem::with_constant_rhs(g, 1.0, |x1, x2| q.eval(x1, x2))
            .unwrap();
        let b = DirichletProblem::with_constant_rhs(g2, 1.0, |x1, x2| q.eval(x1, x2))
            .unwrap();
        let c = DirichletProblem::with_constant_rhs(g, 0.9, |x1, x2| q.eval(x1, x2))
            .unwrap();
        let cfg = SolverConfig::default();
        assert!(matches!(comparison_check(&a, &b, &cfg), Err(Error::Grid(_))));
        assert!(matches!(comparison_check(&a, &c, &cfg), Err(Error::Domain(_))));
        // Reversed data violates the ordering precondition.
        let hi = DirichletProblem::with_constant_rhs(g, 1.0, |x1, x2| {
            q.eval(x1, x2) + 0.01 * x1 * x2
        })
        .unwrap();
        assert!(matches!(comparison_check(&hi, &a, &cfg), Err(Error::Domain(_))));
    }
}
