//! Damped semismooth Newton driver with a pointwise fallback.
//!
//! The discrete operator is a min over pairs of a smooth expression, so it
//! is piecewise smooth; Newton linearizes the currently active pair at each
//! node and backtracks on the residual norm. If the line search stalls, a
//! block of Gauss-Seidel sweeps (each node solves its own scalar equation
//! with neighbors frozen) moves the iterate into the Newton basin and the
//! iteration restarts once.

use super::operator::Discretization;
use super::{SolveReport, SolverConfig, Stencil};
use crate::error::{Error, Result};
use crate::model::{DirichletProblem, FieldMeta, ScalarField};
use crate::numerics::sparse::{default_cap, solve_csr};
use crate::numerics::{CsrMatrix, SparseSystem};

/// Solution of the five-point Laplace equation with the problem's boundary
/// data, the default starting point for non-family data. It dominates every
/// convex candidate with the same data, so Newton walks downward from it.
pub fn harmonic_extension(problem: &DirichletProblem) -> Result<ScalarField> {
    let grid = *problem.grid();
    let mut ids = vec![-1i64; grid.num_nodes()];
    let mut order = Vec::new();
    for (i, j) in grid.interior_nodes() {
        ids[grid.idx(i, j)] = order.len() as i64;
        order.push((i, j));
    }
    let mut sys = SparseSystem::new(order.len());
    for (k, &(i, j)) in order.iter().enumerate() {
        sys.push(k, k, 4.0);
        for (di, dj) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
            let ni = (i as i64 + di) as usize;
            let nj = (j as i64 + dj) as usize;
            let id = ids[grid.idx(ni, nj)];
            if id >= 0 {
                sys.push(k, id as usize, -1.0);
            } else {
                sys.rhs_mut()[k] += problem.boundary_at(ni, nj);
            }
        }
    }
    let sol = crate::numerics::solve_linear(&sys, 1e-12)?;
    let mut values = vec![f64::NAN; grid.num_nodes()];
    for (i, j) in grid.nodes() {
        if grid.is_exterior(i, j) {
            continue;
        }
        values[grid.idx(i, j)] = if grid.is_boundary(i, j) {
            problem.boundary_at(i, j)
        } else {
            sol[ids[grid.idx(i, j)] as usize]
        };
    }
    Ok(ScalarField::from_values(
        grid,
        values,
        FieldMeta::tagged("harmonic extension of boundary data"),
    ))
}

struct Iterate<'a> {
    disc: &'a Discretization,
    /// Full lattice values; boundary prescribed, exterior NaN.
    values: Vec<f64>,
    rhs: Vec<f64>,
}

impl Iterate<'_> {
    fn residual(&self, out: &mut [f64]) -> (f64, f64) {
        self.residual_of(&self.values, out)
    }

    /// Fills `out` with operator minus data per unknown; returns the max
    /// and Euclidean norms.
    fn residual_of(&self, values: &[f64], out: &mut [f64]) -> (f64, f64) {
        let mut sup = 0.0f64;
        let mut sq = 0.0f64;
        for k in 0..self.disc.interior.len() {
            let st = self.disc.node_state(values, k);
            let r = st.value - self.rhs[k];
            out[k] = r;
            sup = sup.max(r.abs());
            sq += r * r;
        }
        (sup, sq.sqrt())
    }

    /// Assemble A = -J row by row; A has a positive diagonal and
    /// nonpositive off-diagonals, so the usual factorizations behave.
    fn jacobian(&self, penalty: f64) -> CsrMatrix {
        let n = self.disc.interior.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols: Vec<u32> = Vec::with_capacity(5 * n);
        let mut vals: Vec<f64> = Vec::with_capacity(5 * n);
        row_ptr.push(0usize);
        let grid = &self.disc.grid;
        let mut entries: Vec<(u32, f64)> = Vec::with_capacity(5);
        for k in 0..n {
            let st = self.disc.node_state(&self.values, k);
            let w = st.weights(penalty);
            let (i, j) = self.disc.interior[k];
            let pair = self.disc.pairs[st.pair];
            let scales = self.disc.scales[st.pair];
            entries.clear();
            let mut diag = 0.0;
            for s in 0..2 {
                let coeff = w[s] * scales[s];
                diag += 2.0 * coeff;
                for sign in [1i64, -1i64] {
                    let ni = (i as i64 + sign * pair[s].0) as usize;
                    let nj = (j as i64 + sign * pair[s].1) as usize;
                    let id = self.disc.unknown_id[grid.idx(ni, nj)];
                    if id >= 0 {
                        entries.push((id as u32, -coeff));
                    }
                }
            }
            entries.push((k as u32, diag));
            entries.sort_unstable_by_key(|e| e.0);
            for &(c, v) in &entries {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix { n, row_ptr, cols, vals }
    }

    fn gauss_seidel(&mut self, sweeps: usize) {
        for _ in 0..sweeps {
            for k in 0..self.disc.interior.len() {
                let v = self.disc.local_solve(&self.values, k, self.rhs[k]);
                let (i, j) = self.disc.interior[k];
                let idx = self.disc.grid.idx(i as usize, j as usize);
                self.values[idx] = v;
            }
        }
    }
}

enum Phase {
    Converged { iterations: usize, sup: f64 },
    Stalled { iterations: usize, sup: f64 },
}

fn newton_phase(
    it: &mut Iterate<'_>,
    config: &SolverConfig,
    target: f64,
) -> Result<Phase> {
    let n = it.disc.interior.len();
    let mut res = vec![0.0; n];
    let mut trial = it.values.clone();
    let mut trial_res = vec![0.0; n];
    let (mut sup, mut l2) = it.residual(&mut res);
    let sup0 = sup.max(1e-300);
    for iter in 0..config.max_newton {
        if sup <= target {
            return Ok(Phase::Converged { iterations: iter, sup });
        }
        let a = it.jacobian(config.penalty);
        // Looser linear solves far from the root, tight near it.
        let eta = (0.1 * (sup / sup0).sqrt()).clamp(1e-12, 1e-4);
        let d = match solve_csr(&a, &res, eta, default_cap(n)) {
            Ok(d) => d,
            Err(Error::Solver { .. }) => {
                return Ok(Phase::Stalled { iterations: iter, sup })
            }
            Err(e) => return Err(e),
        };
        // res holds F and we solved (-J) d = F, so d is the Newton step.
        let mut lambda = 1.0f64;
        loop {
            trial.copy_from_slice(&it.values);
            for k in 0..n {
                let (i, j) = it.disc.interior[k];
                let idx = it.disc.grid.idx(i as usize, j as usize);
                trial[idx] += lambda * d[k];
            }
            let (tsup, tl2) = it.residual_of(&trial, &mut trial_res);
            if tl2 <= (1.0 - config.armijo * lambda) * l2 || tsup <= target {
                it.values.copy_from_slice(&trial);
                res.copy_from_slice(&trial_res);
                sup = tsup;
                l2 = tl2;
                break;
            }
            lambda *= config.damping;
            if lambda < 2f64.powi(-30) {
                return Ok(Phase::Stalled { iterations: iter + 1, sup });
            }
        }
    }
    let (sup, _) = it.residual(&mut res);
    if sup <= target {
        Ok(Phase::Converged { iterations: config.max_newton, sup })
    } else {
        Ok(Phase::Stalled { iterations: config.max_newton, sup })
    }
}

/// Solve the Dirichlet problem with the default stencil.
pub fn solve_dirichlet(
    problem: &DirichletProblem,
    config: &SolverConfig,
    init: Option<&ScalarField>,
) -> Result<(ScalarField, SolveReport)> {
    solve_with_stencil(problem, &Stencil::default_pairs(), config, init)
}

pub(crate) fn solve_with_stencil(
    problem: &DirichletProblem,
    stencil: &Stencil,
    config: &SolverConfig,
    init: Option<&ScalarField>,
) -> Result<(ScalarField, SolveReport)> {
    crate::init_parallelism();
    let grid = *problem.grid();
    let disc = Discretization::build(&grid, stencil, config.penalty)?;
    let start;
    let init = match init {
        Some(f) => {
            if f.grid() != &grid {
                return Err(Error::Grid(
                    "initial guess lives on a different grid than the problem".into(),
                ));
            }
            f
        }
        None => {
            start = harmonic_extension(problem)?;
            &start
        }
    };
    let mut values = init.values().to_vec();
    for (i, j) in grid.boundary_nodes() {
        values[grid.idx(i, j)] = problem.boundary_at(i, j);
    }
    let rhs: Vec<f64> = disc
        .interior
        .iter()
        .map(|&(i, j)| problem.rhs_at(i as usize, j as usize))
        .collect();
    let scale = problem.max_rhs().max(1.0);
    let target = config.newton_tol * scale;
    let mut it = Iterate { disc: &disc, values, rhs };

    let mut total_iters = 0usize;
    let mut phase = newton_phase(&mut it, config, target)?;
    if let Phase::Stalled { iterations, .. } = phase {
        total_iters += iterations;
        it.gauss_seidel(config.gs_sweeps);
        phase = newton_phase(&mut it, config, target)?;
    }
    let (iterations, sup) = match phase {
        Phase::Converged { iterations, sup } => (iterations, sup),
        Phase::Stalled { iterations, sup } => {
            return Err(Error::solver(
                format!(
                    "newton stalled after {} iterations and a fallback block",
                    total_iters + iterations
                ),
                sup / scale,
            ));
        }
    };
    let report = SolveReport {
        converged: true,
        iterations: total_iters + iterations,
        residual: sup / scale,
        continuation: Vec::new(),
        convexity_violation: it.disc.convexity_violation(&it.values),
    };
    let field = ScalarField::from_values(
        grid,
        it.values,
        FieldMeta::tagged("monotone determinant solve"),
    );
    Ok((field, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        AngleConstants, Grid2D, QuadraticPolynomial, Sign,
    };

    #[test]
    fn harmonic_extension_is_second_order_on_a_separable_mode() {
        // sin(pi x) sinh(pi y) is harmonic; halving h should cut the
        // five-point error by about four.
        let exact = |x1: f64, x2: f64| {
            (std::f64::consts::PI * x1).sin() * (std::f64::consts::PI * x2).sinh()
        };
        let error_at = |h: f64| {
            let g = Grid2D::square(1.0, h).unwrap();
            let p = DirichletProblem::with_constant_rhs(g, 1.0, exact).unwrap();
            let u = harmonic_extension(&p).unwrap();
            let mut worst = 0.0f64;
            for (i, j) in g.interior_nodes() {
                let (x1, x2) = g.position(i, j);
                worst = worst.max((u.value(i, j) - exact(x1, x2)).abs());
            }
            worst
        };
        let coarse = error_at(1.0 / 16.0);
        let fine = error_at(1.0 / 32.0);
        assert!(coarse < 0.05, "coarse error {coarse}");
        let rate = coarse / fine;
        assert!((3.4..=4.6).contains(&rate), "convergence rate {rate}");
    }

    #[test]
    fn quadratic_data_returns_the_quadratic() {
        for &c in &[0.5, 0.75] {
            let k = AngleConstants::new(c).unwrap();
            for sign in [Sign::Plus, Sign::Minus] {
                let p = QuadraticPolynomial::pc(&k, sign);
                let g = Grid2D::square(2.0, 1.0 / 8.0).unwrap();
                let prob =
                    DirichletProblem::with_constant_rhs(g, c, |x1, x2| p.eval(x1, x2))
                        .unwrap();
                let (u, rep) =
                    solve_dirichlet(&prob, &SolverConfig::default(), None).unwrap();
                assert!(rep.converged);
                let mut worst = 0.0f64;
                for (i, j) in g.nodes() {
                    let (x1, x2) = g.position(i, j);
                    worst = worst.max((u.value(i, j) - p.eval(x1, x2)).abs());
                }
                assert!(worst < 1e-9, "c = {c}: max deviation {worst}");
                assert!(rep.convexity_violation > -1e-8);
            }
        }
    }

    #[test]
    fn paraboloid_on_quarter_disc() {
        let g = Grid2D::quarter_disc(2.0, 1.0 / 8.0).unwrap();
        let q = QuadraticPolynomial::paraboloid();
        let prob =
            DirichletProblem::with_constant_rhs(g, 1.0, |x1, x2| q.eval(x1, x2)).unwrap();
        let (u, rep) = solve_dirichlet(&prob, &SolverConfig::default(), None).unwrap();
        assert!(rep.converged && rep.residual <= 1e-9);
        for (i, j) in g.interior_nodes() {
            let (x1, x2) = g.position(i, j);
            assert!((u.value(i, j) - q.eval(x1, x2)).abs() < 1e-9);
        }
    }

    #[test]
    fn warm_start_skips_iterations() {
        let k = AngleConstants::new(0.75).unwrap();
        let p = QuadraticPolynomial::pc(&k, Sign::Minus);
        let g = Grid2D::square(2.0, 1.0 / 8.0).unwrap();
        let prob = DirichletProblem::with_constant_rhs(g, 0.75, |x1, x2| p.eval(x1, x2))
            .unwrap();
        let exact = ScalarField::from_quadratic(g, &p, FieldMeta::default());
        let (_, rep) =
            solve_dirichlet(&prob, &SolverConfig::default(), Some(&exact)).unwrap();
        // The exact interpolant is the exact discrete solution here.
        assert_eq!(rep.iterations, 0);
    }

    #[test]
    fn mismatched_init_grid_is_rejected() {
        let g = Grid2D::square(2.0, 0.25).unwrap();
        let other = Grid2D::square(2.0, 0.5).unwrap();
        let prob = DirichletProblem::with_constant_rhs(g, 1.0, |x1, x2| {
            0.5 * (x1 * x1 + x2 * x2)
        })
        .unwrap();
        let bad = ScalarField::from_quadratic(
            other,
            &QuadraticPolynomial::paraboloid(),
            FieldMeta::default(),
        );
        let err = solve_dirichlet(&prob, &SolverConfig::default(), Some(&bad));
        assert!(matches!(err, Err(Error::Grid(_))));
    }
}
