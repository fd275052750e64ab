//! The experiment commands. Each one resolves its defaults, writes the
//! values it actually used back into the config (so the manifest records
//! the effective run), executes, and returns the artifact names it wrote.

use std::fs;
use std::path::Path;

use ma_corner::asymptotics::{
    conical_indicator, deviation_exponent, harnack_coefficient, hessian_audit, hessian_field,
    u12_limits, AuditReport, ConicalReport, ExponentResult, HarnackCoefficient,
};
use ma_corner::classifier::{classify_vertex, ClassifierConfig, VertexData};
use ma_corner::global::{shoot_pbar, shoot_punder, solve_family_member, ShootingResult};
use ma_corner::harmonic::decay_ladder;
use ma_corner::model::{
    AngleConstants, DirichletProblem, Grid2D, GridShape, QuadraticPolynomial, ScalarField, Sign,
};
use ma_corner::solver::{solve_dirichlet, SolverConfig};
use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

/// Which measurements the asymptotics command runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Analysis {
    /// Entrywise Hessian bounds against the membership limits.
    HessianAudit,
    /// Mixed-derivative limits on the near and far windows.
    U12Limits,
    /// Decay exponent of u - P+ toward the vertex.
    Alpha,
    /// Decay exponent of u - P- at infinity.
    Beta,
    /// Amplitude of the fundamental sector mode in u - P-.
    CoeffA,
    /// Smallest-eigenvalue trend along the radius ladder.
    Conical,
}

pub const ALL_ANALYSES: [Analysis; 6] = [
    Analysis::HessianAudit,
    Analysis::U12Limits,
    Analysis::Alpha,
    Analysis::Beta,
    Analysis::CoeffA,
    Analysis::Conical,
];

fn require_c(cfg: &RunConfig) -> Result<f64, CliError> {
    cfg.c
        .ok_or_else(|| CliError::Input("the determinant --c is required".into()))
}

/// Apply the tolerance entries to a default solver config and record the
/// effective values.
fn solver_config(cfg: &mut RunConfig) -> SolverConfig {
    let mut sc = SolverConfig::default();
    if let Some(tol) = cfg.newton_tol {
        sc.newton_tol = tol;
    }
    if let Some(m) = cfg.max_newton {
        sc.max_newton = m;
    }
    cfg.newton_tol = Some(sc.newton_tol);
    cfg.max_newton = Some(sc.max_newton);
    sc
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Input(format!("{name}: {e}")))?;
    fs::write(out.join(name), json + "\n")?;
    Ok(())
}

pub fn cmd_solve(cfg: &mut RunConfig, out: &Path) -> Result<Vec<String>, CliError> {
    let c = require_c(cfg)?;
    let k = AngleConstants::new(c)?;
    let t = cfg.t.unwrap_or(0.0);
    let extent = cfg.extent.unwrap_or(4.0);
    let h = cfg.h.unwrap_or(1.0 / 32.0);
    let shape = cfg.shape.unwrap_or(GridShape::Square);
    let sc = solver_config(cfg);
    cfg.t = Some(t);
    cfg.extent = Some(extent);
    cfg.h = Some(h);
    cfg.shape = Some(shape);

    let (field, report) = match shape {
        GridShape::Square => solve_family_member(&k, t, extent, h, &sc, None)?,
        GridShape::QuarterDisc => {
            if t < 0.0 {
                return Err(CliError::Input(
                    "the continuation path below t = 0 runs on the square truncation only"
                        .into(),
                ));
            }
            let grid = Grid2D::new(extent, h, shape)?;
            let poly = QuadraticPolynomial::family(&k, t);
            let problem =
                DirichletProblem::with_constant_rhs(grid, c, |x1, x2| poly.eval(x1, x2))?;
            solve_dirichlet(&problem, &sc, None)?
        }
    };
    field.save(&out.join("field"))?;
    write_json(out, "solve_report.json", &report)?;
    println!(
        "solve: c = {c}, t = {t}, R = {extent}, h = {h}: {} iterations, residual {:.3e}",
        report.iterations, report.residual
    );
    Ok(vec![
        "field.csv".into(),
        "field.json".into(),
        "solve_report.json".into(),
    ])
}

pub enum ShootKind {
    Pbar,
    Punder,
}

pub fn cmd_shoot(kind: ShootKind, cfg: &mut RunConfig, out: &Path) -> Result<Vec<String>, CliError> {
    let c = require_c(cfg)?;
    let k = AngleConstants::new(c)?;
    let extent = cfg.extent.unwrap_or(8.0);
    let h = cfg.h.unwrap_or(1.0 / 32.0);
    let sc = solver_config(cfg);
    cfg.extent = Some(extent);
    cfg.h = Some(h);

    let (stem, result): (&str, ShootingResult) = match kind {
        ShootKind::Pbar => ("pbar", shoot_pbar(&k, extent, h, &sc)?),
        ShootKind::Punder => ("punder", shoot_punder(&k, extent, h, &sc)?),
    };
    result.save(&out.join(stem))?;
    println!(
        "{stem}: t* = {:.8}, pinned value {:.8} (target {})",
        result.t_star,
        result.pinned_value(),
        result.target
    );
    Ok(vec![
        format!("{stem}.csv"),
        format!("{stem}.json"),
        format!("{stem}.shoot.json"),
    ])
}

#[derive(Serialize)]
struct U12Report {
    near: f64,
    far: f64,
}

/// One JSON report over a saved field; entries appear only for the
/// analyses that ran.
#[derive(Serialize)]
struct AsymptoticsReport {
    c: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    hessian_audit: Option<AuditReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    u12: Option<U12Report>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<ExponentResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<ExponentResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coeff_a: Option<HarnackCoefficient>,
    #[serde(skip_serializing_if = "Option::is_none")]
    conical: Option<ConicalReport>,
}

pub fn cmd_asymptotics(
    cfg: &mut RunConfig,
    field_stem: &Path,
    analyses: &[Analysis],
    out: &Path,
) -> Result<Vec<String>, CliError> {
    let field = ScalarField::load(field_stem)?;
    let grid = *field.grid();
    let (extent, gh) = (grid.extent(), grid.h());
    let c = cfg.c.or(field.meta().c).ok_or_else(|| {
        CliError::Input("the field sidecar carries no determinant; pass --c".into())
    })?;
    let near = cfg.near.unwrap_or([8.0 * gh, (12.0 * gh).max(0.4)]);
    let far = cfg.far.unwrap_or([extent / 3.0, 2.0 * extent / 3.0]);
    let window = cfg.window.unwrap_or(far);
    let ladder = cfg
        .ladder
        .clone()
        .unwrap_or_else(|| vec![14.4 * gh, 11.84 * gh, 9.6 * gh, 8.0 * gh]);
    cfg.c = Some(c);
    cfg.near = Some(near);
    cfg.far = Some(far);
    cfg.window = Some(window);
    cfg.ladder = Some(ladder.clone());

    let hess = hessian_field(&field);
    let mut report = AsymptoticsReport {
        c,
        hessian_audit: None,
        u12: None,
        alpha: None,
        beta: None,
        coeff_a: None,
        conical: None,
    };
    for a in analyses {
        match a {
            Analysis::HessianAudit => {
                let k = AngleConstants::new(c)?;
                report.hessian_audit = Some(hessian_audit(&hess, &k));
            }
            Analysis::U12Limits => {
                let (n, f) = u12_limits(&hess, (near[0], near[1]), (far[0], far[1]))?;
                report.u12 = Some(U12Report { near: n, far: f });
            }
            Analysis::Alpha => {
                let k = AngleConstants::new(c)?;
                let plus = QuadraticPolynomial::pc(&k, Sign::Plus);
                report.alpha = Some(deviation_exponent(&field, &plus, (near[0], near[1]))?);
            }
            Analysis::Beta => {
                let k = AngleConstants::new(c)?;
                let minus = QuadraticPolynomial::pc(&k, Sign::Minus);
                report.beta = Some(deviation_exponent(&field, &minus, (far[0], far[1]))?);
            }
            Analysis::CoeffA => {
                let k = AngleConstants::new(c)?;
                report.coeff_a =
                    Some(harnack_coefficient(&field, &k, (window[0], window[1]))?);
            }
            Analysis::Conical => {
                report.conical = Some(conical_indicator(&hess, c, &ladder)?);
            }
        }
    }
    write_json(out, "asymptotics.json", &report)?;
    if let Some(ca) = &report.coeff_a {
        println!("coeff a = {:.6} (spread {:.2e})", ca.a, ca.spread);
    }
    if let Some(u12) = &report.u12 {
        println!("u12 limits: near {:.4}, far {:.4}", u12.near, u12.far);
    }
    Ok(vec!["asymptotics.json".into()])
}

pub fn cmd_classify(
    cfg: &mut RunConfig,
    vertex_path: &Path,
    out: &Path,
) -> Result<Vec<String>, CliError> {
    let raw = fs::read_to_string(vertex_path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", vertex_path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&raw)
        .map_err(|e| CliError::Input(format!("{}: {e}", vertex_path.display())))?;
    let batch = value.is_array();
    let vertices: Vec<VertexData> = if batch {
        serde_json::from_value(value)
            .map_err(|e| CliError::Input(format!("{}: {e}", vertex_path.display())))?
    } else {
        vec![serde_json::from_value(value)
            .map_err(|e| CliError::Input(format!("{}: {e}", vertex_path.display())))?]
    };

    let cc = ClassifierConfig {
        extent: cfg.extent.unwrap_or(4.0),
        h: cfg.h.unwrap_or(1.0 / 32.0),
        solver: solver_config(cfg),
    };
    cfg.extent = Some(cc.extent);
    cfg.h = Some(cc.h);

    let mut verdicts = Vec::with_capacity(vertices.len());
    for v in &vertices {
        let verdict = classify_vertex(v, &cc)?;
        println!(
            "c_eff = {:.4}: {:?}{}",
            verdict.c_eff,
            verdict.kind,
            verdict
                .alpha
                .map(|a| format!(" (alpha = {a:.3})"))
                .unwrap_or_default()
        );
        verdicts.push(verdict);
    }
    if batch {
        write_json(out, "verdicts.json", &verdicts)?;
    } else {
        write_json(out, "verdicts.json", &verdicts[0])?;
    }
    Ok(vec!["verdicts.json".into()])
}

pub fn cmd_laplace_sector(cfg: &mut RunConfig, out: &Path) -> Result<Vec<String>, CliError> {
    let c = require_c(cfg)?;
    let k = AngleConstants::new(c)?;
    // Default inside the admissible band (beta_minus, 2 beta_minus).
    let beta = cfg.beta.unwrap_or(1.2 * k.beta_minus);
    let rhos = cfg.rho.clone().unwrap_or_else(|| vec![0.2, 0.1, 0.05]);
    let h = cfg.h.unwrap_or(0.02);
    cfg.beta = Some(beta);
    cfg.rho = Some(rhos.clone());
    cfg.h = Some(h);

    let points = decay_ladder(&k, beta, &rhos, h)?;
    for p in &points {
        println!(
            "rho = {:>6}: circle sup {:.6}, growth constant {:.6}, gamma {:.6}",
            p.rho, p.circle_sup, p.growth_constant, p.gamma
        );
    }
    write_json(out, "decay.json", &points)?;
    Ok(vec!["decay.json".into()])
}

#[derive(Serialize)]
struct SweepRow {
    c: f64,
    t_bar: f64,
    pinned_bar: f64,
    t_under: f64,
    pinned_under: f64,
}

pub fn cmd_sweep(cfg: &mut RunConfig, out: &Path) -> Result<Vec<String>, CliError> {
    let cs = cfg.cs.clone().unwrap_or_else(|| vec![0.25, 0.5, 0.75]);
    let extent = cfg.extent.unwrap_or(8.0);
    let h = cfg.h.unwrap_or(1.0 / 32.0);
    let sc = solver_config(cfg);
    cfg.cs = Some(cs.clone());
    cfg.extent = Some(extent);
    cfg.h = Some(h);

    let mut rows = Vec::with_capacity(cs.len());
    let mut artifacts = Vec::new();
    for &c in &cs {
        let k = AngleConstants::new(c)?;
        let bar = shoot_pbar(&k, extent, h, &sc)?;
        let under = shoot_punder(&k, extent, h, &sc)?;
        // Dots in a save stem would be eaten by the extension logic, so
        // the determinant is encoded with a "p" decimal point.
        let tag = c.to_string().replace('.', "p");
        let bar_stem = format!("pbar_c{tag}");
        let under_stem = format!("punder_c{tag}");
        bar.save(&out.join(&bar_stem))?;
        under.save(&out.join(&under_stem))?;
        for stem in [&bar_stem, &under_stem] {
            artifacts.push(format!("{stem}.csv"));
            artifacts.push(format!("{stem}.json"));
            artifacts.push(format!("{stem}.shoot.json"));
        }
        println!(
            "c = {c}: upper t* = {:.6} (pinned {:.6}), lower t* = {:.6} (pinned {:.6})",
            bar.t_star,
            bar.pinned_value(),
            under.t_star,
            under.pinned_value()
        );
        rows.push(SweepRow {
            c,
            t_bar: bar.t_star,
            pinned_bar: bar.pinned_value(),
            t_under: under.t_star,
            pinned_under: under.pinned_value(),
        });
    }
    write_json(out, "sweep.json", &rows)?;
    artifacts.push("sweep.json".into());
    Ok(artifacts)
}
