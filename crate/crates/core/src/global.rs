//! Construction of the one-parameter family of quadrant solutions and the
//! two shooting solutions pinned at (1, 1).
//!
//! The outer boundary carries q + (t - s) x1 x2, which coincides with the
//! lower quadratic at t = 0 and the upper one at t = 2s; on the axes it is
//! q for every t. Shooting brackets t so the solve takes the requested
//! value at the diagonal node (1, 1): target 1 from within [0, 2s] for the
//! upper extremal solution, target 0 from t < 0 for the lower one.

use crate::error::{Error, Result};
use crate::model::{
    AngleConstants, DirichletProblem, FieldMeta, Grid2D, QuadraticPolynomial, ScalarField,
};
use crate::numerics::false_position;
use crate::solver::{solve_dirichlet, ContinuationStage, SolveReport, SolverConfig};
use serde::Serialize;
use std::path::Path;

/// Output of one shooting run: the pinned parameter, the field, and the
/// bracket trace.
#[derive(Debug, Clone)]
pub struct ShootingResult {
    pub c: f64,
    pub t_star: f64,
    /// Value pinned at (1, 1).
    pub target: f64,
    pub extent: f64,
    pub h: f64,
    pub field: ScalarField,
    pub report: SolveReport,
    /// Every (t, u_t(1,1)) evaluation in order, endpoints first.
    pub bracket_history: Vec<(f64, f64)>,
}

#[derive(Serialize)]
struct ShootingSummary<'a> {
    c: f64,
    t_star: f64,
    target: f64,
    #[serde(rename = "R")]
    extent: f64,
    h: f64,
    bracket_history: &'a [(f64, f64)],
}

impl ShootingResult {
    /// Value at the pinning node (1, 1).
    pub fn pinned_value(&self) -> f64 {
        let n = (1.0 / self.h).round() as usize;
        self.field.value(n, n)
    }

    /// Write `<stem>.csv` / `<stem>.json` for the field and
    /// `<stem>.shoot.json` with the shooting summary.
    pub fn save(&self, stem: &Path) -> Result<()> {
        self.field.save(stem)?;
        let summary = ShootingSummary {
            c: self.c,
            t_star: self.t_star,
            target: self.target,
            extent: self.extent,
            h: self.h,
            bracket_history: &self.bracket_history,
        };
        let json = serde_json::to_string_pretty(&summary)?;
        let mut name = stem
            .file_name()
            .ok_or_else(|| Error::Domain("output stem has no file name".into()))?
            .to_os_string();
        name.push(".shoot.json");
        std::fs::write(stem.with_file_name(name), json + "\n")?;
        Ok(())
    }
}

fn family_polynomial(k: &AngleConstants, t: f64) -> QuadraticPolynomial {
    QuadraticPolynomial::family(k, t)
}

fn family_problem(
    k: &AngleConstants,
    t: f64,
    grid: Grid2D,
) -> Result<DirichletProblem> {
    let p = family_polynomial(k, t);
    DirichletProblem::with_constant_rhs(grid, k.c, move |x1, x2| p.eval(x1, x2))
}

/// Solve the truncated problem with outer data q + (t - s) x1 x2.
///
/// For t in [0, 2s] the sampled family quadratic is a classical convex
/// start (its Hessian determinant is 1 - (t - s)^2 >= c). Below zero the
/// data has no convex interpolant, so the solve walks t down from zero in
/// `continuation_steps` warm-started stages; the stage trace lands in the
/// report. An explicit `init` skips both starts.
pub fn solve_family_member(
    k: &AngleConstants,
    t: f64,
    extent: f64,
    h: f64,
    config: &SolverConfig,
    init: Option<&ScalarField>,
) -> Result<(ScalarField, SolveReport)> {
    if !(t > -1.0 && t <= 2.0 * k.s + 1e-12) {
        return Err(Error::Domain(format!(
            "family parameter must sit in (-1, 2s] = (-1, {}], got {t}",
            2.0 * k.s
        )));
    }
    let grid = Grid2D::square(extent, h)?;
    let meta = |t: f64| FieldMeta {
        c: Some(k.c),
        t: Some(t),
        provenance: format!("family member t = {t}"),
    };
    if let Some(start) = init {
        let problem = family_problem(k, t, grid)?;
        let (mut field, report) = solve_dirichlet(&problem, config, Some(start))?;
        *field.meta_mut() = meta(t);
        return Ok((field, report));
    }
    if t >= 0.0 {
        let problem = family_problem(k, t, grid)?;
        let start = ScalarField::from_quadratic(grid, &family_polynomial(k, t), meta(t));
        let (mut field, report) = solve_dirichlet(&problem, config, Some(&start))?;
        *field.meta_mut() = meta(t);
        return Ok((field, report));
    }
    // Continuation below zero: each stage reuses the previous field.
    let steps = config.continuation_steps.max(1);
    let mut current =
        ScalarField::from_quadratic(grid, &family_polynomial(k, 0.0), meta(0.0));
    let mut stages = Vec::with_capacity(steps);
    let mut last_report = None;
    for step in 1..=steps {
        let ti = t * step as f64 / steps as f64;
        let problem = family_problem(k, ti, grid)?;
        let (field, report) = solve_dirichlet(&problem, config, Some(&current))?;
        stages.push(ContinuationStage {
            t: ti,
            iterations: report.iterations,
            residual: report.residual,
        });
        current = field;
        last_report = Some(report);
    }
    let mut report = last_report.expect("at least one continuation stage");
    report.continuation = stages;
    *current.meta_mut() = meta(t);
    Ok((current, report))
}

/// Index of the pinning node (1, 1).
fn pin_index(grid: &Grid2D) -> (usize, usize) {
    let n = (1.0 / grid.h()).round() as usize;
    (n, n)
}

struct ShootState {
    field: Option<ScalarField>,
    report: Option<SolveReport>,
    t_last: f64,
}

/// Evaluate t -> u_t(1,1). Warm-starts from the previous field when the
/// parameter moved only a little; large jumps (the opposite bracket
/// endpoint) restart cold so negative parameters go through continuation
/// and nonnegative ones through the exact quadratic interpolant.
fn eval_pin(
    k: &AngleConstants,
    t: f64,
    extent: f64,
    h: f64,
    config: &SolverConfig,
    state: &mut ShootState,
) -> Result<f64> {
    let warm = (t - state.t_last).abs() <= 0.5;
    let init = if warm { state.field.as_ref() } else { None };
    let (field, report) = solve_family_member(k, t, extent, h, config, init)?;
    let grid = *field.grid();
    let (i, j) = pin_index(&grid);
    let value = field.value(i, j);
    state.field = Some(field);
    state.report = Some(report);
    state.t_last = t;
    Ok(value)
}

fn run_shoot(
    k: &AngleConstants,
    extent: f64,
    h: f64,
    config: &SolverConfig,
    lo: f64,
    hi: f64,
    target: f64,
    seed: Option<(f64, ScalarField)>,
) -> Result<ShootingResult> {
    let grid = Grid2D::square(extent, h)?;
    let (pi, pj) = pin_index(&grid);
    let (x1, x2) = grid.position(pi, pj);
    if (x1 - 1.0).abs() > 1e-12 || (x2 - 1.0).abs() > 1e-12 {
        return Err(Error::Grid(format!(
            "pinning node resolved to ({x1}, {x2}) instead of (1, 1)"
        )));
    }
    let mut state = match seed {
        Some((t, field)) => ShootState { field: Some(field), report: None, t_last: t },
        None => ShootState { field: None, report: None, t_last: f64::NAN },
    };
    // Bracket probes only need u(1,1) to ~1e-7, two orders under the value
    // stop; the final solve below restores the caller's tolerance.
    let eval_config = SolverConfig {
        newton_tol: config.newton_tol.max(1e-8),
        ..config.clone()
    };
    let result = false_position(
        |t| eval_pin(k, t, extent, h, &eval_config, &mut state),
        lo,
        hi,
        target,
        1e-8,
        1e-6,
    )
    .map_err(|e| match e {
        Error::Bracket { lo, hi, flo, fhi } => Error::Consistency(format!(
            "pinned value does not bracket {target}: u({lo}) = {flo}, u({hi}) = {fhi}"
        )),
        other => other,
    })?;
    let t_star = result.root;
    // The best probe may not be the last solved one, and probe solves ran
    // at the relaxed tolerance; finish with one warm-started solve exactly
    // at t_star under the caller's config.
    if (state.t_last - t_star).abs() > 1e-15 || eval_config.newton_tol != config.newton_tol
    {
        eval_pin(k, t_star, extent, h, config, &mut state)?;
    }
    let field = state.field.expect("at least one evaluation");
    let report = state.report.expect("at least one evaluation");
    Ok(ShootingResult {
        c: k.c,
        t_star,
        target,
        extent,
        h,
        field,
        report,
        bracket_history: result.history,
    })
}

/// Sample a coarse field onto a finer grid of the same extent.
fn prolong(coarse: &ScalarField, fine: &Grid2D) -> Result<ScalarField> {
    let mut values = vec![f64::NAN; fine.num_nodes()];
    for (i, j) in fine.nodes() {
        let (x1, x2) = fine.position(i, j);
        values[fine.idx(i, j)] = coarse.eval(x1, x2)?;
    }
    Ok(ScalarField::from_values(*fine, values, coarse.meta().clone()))
}

/// Coarse-to-fine staging: locate t on a h = 1/32 grid first, then search
/// the fine grid inside a narrowed bracket, seeded with the interpolated
/// coarse field. Falls back to the full bracket if the narrowed one fails
/// to straddle the target.
fn staged_shoot(
    k: &AngleConstants,
    extent: f64,
    h: f64,
    config: &SolverConfig,
    lo: f64,
    hi: f64,
    target: f64,
) -> Result<ShootingResult> {
    const COARSE_H: f64 = 1.0 / 32.0;
    if h >= COARSE_H {
        return run_shoot(k, extent, h, config, lo, hi, target, None);
    }
    let coarse = run_shoot(k, extent, COARSE_H, config, lo, hi, target, None)?;
    let fine_grid = Grid2D::square(extent, h)?;
    let seed = prolong(&coarse.field, &fine_grid)?;
    let margin = 5e-3;
    let nlo = (coarse.t_star - margin).max(lo);
    let nhi = (coarse.t_star + margin).min(hi);
    match run_shoot(
        k,
        extent,
        h,
        config,
        nlo,
        nhi,
        target,
        Some((coarse.t_star, seed.clone())),
    ) {
        Ok(r) => Ok(r),
        Err(Error::Consistency(_)) => {
            // Discretization moved the root outside the narrowed bracket.
            run_shoot(k, extent, h, config, lo, hi, target, Some((coarse.t_star, seed)))
        }
        Err(e) => Err(e),
    }
}

/// Shooting solution with u(1,1) = 1, bracketed over t in [0, 2s]. The
/// bracket endpoints are the two exact quadratics with pinned values
/// 1 -+ s.
pub fn shoot_pbar(
    k: &AngleConstants,
    extent: f64,
    h: f64,
    config: &SolverConfig,
) -> Result<ShootingResult> {
    if extent < 4.0 {
        return Err(Error::Domain(format!(
            "shooting needs extent >= 4, got {extent}"
        )));
    }
    staged_shoot(k, extent, h, config, 0.0, 2.0 * k.s, 1.0)
}

/// Shooting solution with u(1,1) = 0, bracketed over t in (-1, 0); the
/// first negative evaluation walks down from t = 0 by continuation.
pub fn shoot_punder(
    k: &AngleConstants,
    extent: f64,
    h: f64,
    config: &SolverConfig,
) -> Result<ShootingResult> {
    if extent < 4.0 {
        return Err(Error::Domain(format!(
            "shooting needs extent >= 4, got {extent}"
        )));
    }
    staged_shoot(k, extent, h, config, -0.999, 0.0, 0.0)
}

/// Truncation-convergence report across increasing extents.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    /// Differences are measured on |x| <= this radius.
    pub region_radius: f64,
    /// Max nodewise difference between consecutive runs.
    pub differences: Vec<f64>,
    pub decreasing: bool,
    /// Geometric mean of consecutive difference ratios, when available.
    pub decay_ratio: Option<f64>,
}

/// Compare consecutive shooting runs on the common region |x| <= R0 / 2,
/// where R0 is the smallest extent. All runs must share h and come in
/// strictly increasing extent order.
pub fn extrapolate_r(results: &[ShootingResult]) -> Result<ConvergenceReport> {
    if results.len() < 2 {
        return Err(Error::Grid(
            "truncation extrapolation needs at least two runs".into(),
        ));
    }
    let h = results[0].h;
    for w in results.windows(2) {
        if (w[0].h - w[1].h).abs() > 1e-15 {
            return Err(Error::Grid("extrapolation runs must share h".into()));
        }
        if w[1].extent <= w[0].extent {
            return Err(Error::Grid(
                "extrapolation runs must come in increasing extent order".into(),
            ));
        }
    }
    let region = results[0].extent / 2.0;
    let mut differences = Vec::with_capacity(results.len() - 1);
    for w in results.windows(2) {
        let small = &w[0].field;
        let big = &w[1].field;
        let grid = *small.grid();
        let mut worst = 0.0f64;
        for (i, j) in grid.nodes() {
            let (x1, x2) = grid.position(i, j);
            if x1 * x1 + x2 * x2 > region * region {
                continue;
            }
            // Same h, so the node sits on the bigger lattice too.
            let bi = (x1 / h).round() as usize;
            let bj = (x2 / h).round() as usize;
            worst = worst.max((small.value(i, j) - big.value(bi, bj)).abs());
        }
        differences.push(worst);
    }
    let decreasing = differences.windows(2).all(|d| d[1] < d[0]);
    let decay_ratio = if differences.len() >= 2 && differences[0] > 0.0 {
        let ratios: Vec<f64> = differences
            .windows(2)
            .filter(|d| d[0] > 0.0)
            .map(|d| d[1] / d[0])
            .collect();
        if ratios.is_empty() {
            None
        } else {
            let log_mean =
                ratios.iter().map(|r| r.ln()).sum::<f64>() / ratios.len() as f64;
            Some(log_mean.exp())
        }
    } else {
        None
    };
    Ok(ConvergenceReport { region_radius: region, differences, decreasing, decay_ratio })
}
