//! End-to-end runs of the binary: artifacts, exit codes, determinism.

use std::path::Path;
use std::process::{Command, Output};

use ma_corner::model::{AngleConstants, QuadraticPolynomial, ScalarField, Sign};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ma-corner"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary spawns")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn read_json(path: &Path) -> serde_json::Value {
    let raw = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{path:?}: {e}"));
    serde_json::from_str(&raw).unwrap_or_else(|e| panic!("{path:?}: {e}"))
}

#[test]
fn solve_reproduces_the_quadratic() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    run_ok(&["solve", "--c", "1", "--t", "0", "--R", "4", "--h", "0.0625", "--out", out]);

    let field = ScalarField::load(&dir.path().join("field")).unwrap();
    let grid = *field.grid();
    let mut worst: f64 = 0.0;
    for (i, j) in grid.nodes() {
        if grid.is_exterior(i, j) {
            continue;
        }
        let (x1, x2) = grid.position(i, j);
        worst = worst.max((field.value(i, j) - 0.5 * (x1 * x1 + x2 * x2)).abs());
    }
    assert!(worst <= 1e-8, "solution strays from q by {worst:e}");

    let manifest = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["command"], "solve");
    let names: Vec<&str> = manifest["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(names, ["field.csv", "field.json", "solve_report.json"]);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn quarter_disc_shape_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    run_ok(&[
        "solve", "--c", "0.75", "--t", "0.5", "--R", "4", "--h", "0.0625", "--shape",
        "quarter-disc", "--out", out,
    ]);
    let report = read_json(&dir.path().join("solve_report.json"));
    assert_eq!(report["converged"], true);
}

#[test]
fn out_of_range_determinants_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let bad_solve = run(&["solve", "--c", "-1", "--out", out]);
    assert_eq!(exit_code(&bad_solve), 1);
    let bad_shoot = run(&["pbar", "--c", "1.5", "--out", out]);
    assert_eq!(exit_code(&bad_shoot), 1);
}

#[test]
fn missing_output_directory_exits_one() {
    let out = run(&["solve", "--c", "1"]);
    assert_eq!(exit_code(&out), 1);
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("output directory"), "unhelpful message: {msg}");
}

#[test]
fn pbar_pins_the_diagonal_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    run_ok(&["pbar", "--c", "0.75", "--R", "4", "--h", "0.0625", "--out", out]);
    let shoot = read_json(&dir.path().join("pbar.shoot.json"));
    let t_star = shoot["t_star"].as_f64().unwrap();
    assert!(t_star > 0.0 && t_star < 1.0, "t* = {t_star}");
    let history = shoot["bracket_history"].as_array().unwrap();
    let pinned = history.last().unwrap()[1].as_f64().unwrap();
    assert!((pinned - 1.0).abs() < 1e-4, "pinned value {pinned}");
}

#[test]
fn asymptotics_reports_a_positive_coefficient_for_pbar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    run_ok(&["pbar", "--c", "0.75", "--R", "4", "--h", "0.0625", "--out", out]);
    run_ok(&[
        "asymptotics",
        "--field",
        dir.path().join("pbar.csv").to_str().unwrap(),
        "--out",
        out,
    ]);
    let report = read_json(&dir.path().join("asymptotics.json"));
    assert_eq!(report["c"].as_f64().unwrap(), 0.75);
    assert!(report["coeff_a"]["a"].as_f64().unwrap() > 0.0);
    assert_eq!(report["hessian_audit"]["pass"], true);
}

#[test]
fn asymptotics_on_the_lower_member_finds_no_mode() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    // t = 0 solves to the exact lower quadratic member.
    run_ok(&["solve", "--c", "0.75", "--t", "0", "--R", "4", "--h", "0.0625", "--out", out]);
    run_ok(&[
        "asymptotics",
        "--field",
        dir.path().join("field").to_str().unwrap(),
        "--analyses",
        "coeff-a",
        "--out",
        out,
    ]);
    let report = read_json(&dir.path().join("asymptotics.json"));
    let a = report["coeff_a"]["a"].as_f64().unwrap();
    assert!(a.abs() < 1e-6, "spurious coefficient {a}");
    assert!(report.get("conical").is_none(), "unrequested analysis ran");
}

#[test]
fn truncated_field_file_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    run_ok(&["solve", "--c", "1", "--t", "0", "--R", "2", "--h", "0.125", "--out", out]);
    let csv = dir.path().join("field.csv");
    let full = std::fs::read_to_string(&csv).unwrap();
    let cut: String = full.lines().take(40).collect::<Vec<_>>().join("\n");
    std::fs::write(&csv, cut).unwrap();
    let bad = run(&[
        "asymptotics",
        "--field",
        dir.path().join("field").to_str().unwrap(),
        "--out",
        out,
    ]);
    assert_eq!(exit_code(&bad), 1);
}

#[test]
fn classify_batch_hits_the_trichotomy_edges() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let vertices = dir.path().join("vertices.json");
    std::fs::write(
        &vertices,
        r#"[{"f0": 1.2, "p1": 1.0, "p2": 1.0}, {"f0": 1.0, "p1": 1.0, "p2": 1.0}]"#,
    )
    .unwrap();
    run_ok(&[
        "classify",
        "--vertex",
        vertices.to_str().unwrap(),
        "--h",
        "0.0625",
        "--out",
        out,
    ]);
    let verdicts = read_json(&dir.path().join("verdicts.json"));
    let kinds: Vec<&str> = verdicts
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["kind"].as_str().unwrap())
        .collect();
    assert_eq!(kinds, ["Conical", "C2"]);
}

#[test]
fn malformed_vertex_json_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let vertices = dir.path().join("vertices.json");
    std::fs::write(&vertices, "{ not json").unwrap();
    let bad = run(&["classify", "--vertex", vertices.to_str().unwrap(), "--out", out]);
    assert_eq!(exit_code(&bad), 1);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "c = 0.5\nt = 0.2\nR = 2.0\nh = 0.125\n").unwrap();
    run_ok(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--c",
        "0.75",
        "--out",
        out,
    ]);
    let manifest = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["config"]["c"].as_f64().unwrap(), 0.75);
    assert_eq!(manifest["config"]["t"].as_f64().unwrap(), 0.2);
    assert_eq!(manifest["config"]["R"].as_f64().unwrap(), 2.0);
}

#[test]
fn reruns_write_byte_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = ["pbar", "--c", "0.5", "--R", "4", "--h", "0.0625", "--out", out];
    run_ok(&args);
    let first_manifest = std::fs::read(dir.path().join("manifest.json")).unwrap();
    let first_shoot = std::fs::read(dir.path().join("pbar.shoot.json")).unwrap();
    run_ok(&args);
    assert_eq!(first_manifest, std::fs::read(dir.path().join("manifest.json")).unwrap());
    assert_eq!(first_shoot, std::fs::read(dir.path().join("pbar.shoot.json")).unwrap());
}

#[test]
fn laplace_sector_bound_decreases_down_the_ladder() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    run_ok(&[
        "laplace-sector", "--c", "0.75", "--beta", "1.8", "--rho", "0.3,0.2", "--h", "0.05",
        "--out", out,
    ]);
    let decay = read_json(&dir.path().join("decay.json"));
    let gammas: Vec<f64> = decay
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["gamma"].as_f64().unwrap())
        .collect();
    assert_eq!(gammas.len(), 2);
    assert!(gammas[1] < gammas[0], "gammas {gammas:?}");
}

#[test]
fn sweep_aggregates_both_shooting_branches() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    run_ok(&["sweep", "--cs", "0.75", "--R", "4", "--h", "0.0625", "--out", out]);
    let rows = read_json(&dir.path().join("sweep.json"));
    let row = &rows.as_array().unwrap()[0];
    assert_eq!(row["c"].as_f64().unwrap(), 0.75);
    assert!(row["t_bar"].as_f64().unwrap() > 0.0);
    assert!(row["t_under"].as_f64().unwrap() < 0.0);
    assert!((row["pinned_bar"].as_f64().unwrap() - 1.0).abs() < 1e-4);
    assert!(row["pinned_under"].as_f64().unwrap().abs() < 1e-4);
    // The per-branch artifacts land next to the aggregate.
    assert!(dir.path().join("pbar_c0p75.shoot.json").exists());
    assert!(dir.path().join("punder_c0p75.csv").exists());

    // The shooting parameters straddle the exact quadratic members.
    let k = AngleConstants::new(0.75).unwrap();
    let minus = QuadraticPolynomial::pc(&k, Sign::Minus);
    assert!(row["t_bar"].as_f64().unwrap() < 2.0 * k.s);
    assert!(minus.eval(1.0, 1.0) < 1.0);
}
