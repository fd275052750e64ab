//! Command-line entry point: reproducible file-based experiments over the
//! quadrant Monge-Ampere library.
//!
//! Exit codes: 0 success, 1 config or input error, 2 numerical failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use commands::{Analysis, ShootKind, ALL_ANALYSES};
use config::{write_manifest, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    /// Flags, config file, or input artifacts are unusable.
    #[error("{0}")]
    Input(String),
    /// The run itself failed numerically.
    #[error("{0}")]
    Numerical(ma_corner::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<ma_corner::Error> for CliError {
    fn from(e: ma_corner::Error) -> Self {
        use ma_corner::Error as E;
        match e {
            E::Domain(_)
            | E::Extent(_)
            | E::Grid(_)
            | E::InsufficientData(_)
            | E::StencilSupport(_)
            | E::Io(_)
            | E::Serde(_)
            | E::Parse(_) => CliError::Input(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(format!("io error: {e}"))
    }
}

#[derive(Parser)]
#[command(
    name = "ma-corner",
    version,
    about = "Monge-Ampere Dirichlet experiments on the truncated quadrant"
)]
struct Cli {
    /// TOML or JSON config file; command-line flags override its entries.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Directory receiving every artifact plus the run manifest.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One Dirichlet solve of a boundary family member.
    Solve(SolveArgs),
    /// Shooting solution pinned to u(1,1) = 1.
    Pbar(ShootArgs),
    /// Shooting solution pinned to u(1,1) = 0.
    Punder(ShootArgs),
    /// Measure a saved field: Hessian audit, derivative limits, exponents.
    Asymptotics(AsymptoticsArgs),
    /// Classify vertex regularity from local vertex data.
    Classify(ClassifyArgs),
    /// Laplace decay experiment on the flattened sector annulus.
    LaplaceSector(SectorArgs),
    /// Run pbar and punder over a grid of determinants and aggregate.
    Sweep(SweepArgs),
}

/// Parse a comma list like `0.125,0.4` into a window pair.
fn window_pair(values: &[f64], flag: &str) -> Result<[f64; 2], CliError> {
    match values {
        [lo, hi] => Ok([*lo, *hi]),
        _ => Err(CliError::Input(format!(
            "--{flag} takes exactly two comma-separated radii, got {}",
            values.len()
        ))),
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Hessian determinant, 0 < c <= 1.
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    /// Family parameter; the outer data is q + (t - s) x1 x2.
    #[arg(long, allow_hyphen_values = true)]
    t: Option<f64>,
    /// Truncation half-side.
    #[arg(long = "R", value_name = "R")]
    extent: Option<f64>,
    /// Grid step; 1/h and R/h must be integers.
    #[arg(long)]
    h: Option<f64>,
    /// Truncation shape for the solve domain.
    #[arg(long, value_enum)]
    shape: Option<ShapeArg>,
    /// Newton residual tolerance (relative to max f).
    #[arg(long)]
    newton_tol: Option<f64>,
    /// Newton iteration cap per solve.
    #[arg(long)]
    max_newton: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum ShapeArg {
    Square,
    QuarterDisc,
}

impl From<ShapeArg> for ma_corner::model::GridShape {
    fn from(s: ShapeArg) -> Self {
        match s {
            ShapeArg::Square => ma_corner::model::GridShape::Square,
            ShapeArg::QuarterDisc => ma_corner::model::GridShape::QuarterDisc,
        }
    }
}

impl SolveArgs {
    fn to_config(&self) -> RunConfig {
        RunConfig {
            c: self.c,
            t: self.t,
            extent: self.extent,
            h: self.h,
            shape: self.shape.map(Into::into),
            newton_tol: self.newton_tol,
            max_newton: self.max_newton,
            ..RunConfig::default()
        }
    }
}

#[derive(Args)]
struct ShootArgs {
    /// Hessian determinant, 0 < c <= 1.
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    /// Truncation half-side, at least 4.
    #[arg(long = "R", value_name = "R")]
    extent: Option<f64>,
    /// Grid step; 1/h and R/h must be integers.
    #[arg(long)]
    h: Option<f64>,
    /// Newton residual tolerance (relative to max f).
    #[arg(long)]
    newton_tol: Option<f64>,
    /// Newton iteration cap per solve.
    #[arg(long)]
    max_newton: Option<usize>,
}

impl ShootArgs {
    fn to_config(&self) -> RunConfig {
        RunConfig {
            c: self.c,
            extent: self.extent,
            h: self.h,
            newton_tol: self.newton_tol,
            max_newton: self.max_newton,
            ..RunConfig::default()
        }
    }
}

#[derive(Args)]
struct AsymptoticsArgs {
    /// Field stem or csv path as written by solve/pbar/punder.
    #[arg(long, value_name = "STEM")]
    field: PathBuf,
    /// Determinant override when the field sidecar carries none.
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    /// Which measurements to run; defaults to all of them.
    #[arg(long, value_enum, value_delimiter = ',')]
    analyses: Option<Vec<Analysis>>,
    /// Vertex-side window, e.g. 0.125,0.4.
    #[arg(long, value_delimiter = ',')]
    near: Option<Vec<f64>>,
    /// Far-field window, e.g. 6,11.
    #[arg(long, value_delimiter = ',')]
    far: Option<Vec<f64>>,
    /// Expansion-coefficient window; defaults to the far window.
    #[arg(long, value_delimiter = ',')]
    window: Option<Vec<f64>>,
    /// Decreasing radius ladder of the eigenvalue trend.
    #[arg(long, value_delimiter = ',')]
    ladder: Option<Vec<f64>>,
}

impl AsymptoticsArgs {
    fn to_config(&self) -> Result<RunConfig, CliError> {
        Ok(RunConfig {
            c: self.c,
            near: self.near.as_deref().map(|v| window_pair(v, "near")).transpose()?,
            far: self.far.as_deref().map(|v| window_pair(v, "far")).transpose()?,
            window: self
                .window
                .as_deref()
                .map(|v| window_pair(v, "window"))
                .transpose()?,
            ladder: self.ladder.clone(),
            ..RunConfig::default()
        })
    }
}

#[derive(Args)]
struct ClassifyArgs {
    /// JSON file holding one vertex datum or a list of them.
    #[arg(long, value_name = "FILE")]
    vertex: PathBuf,
    /// Truncation half-side of the local solve.
    #[arg(long = "R", value_name = "R")]
    extent: Option<f64>,
    /// Grid step of the local solve.
    #[arg(long)]
    h: Option<f64>,
    /// Newton residual tolerance (relative to max f).
    #[arg(long)]
    newton_tol: Option<f64>,
    /// Newton iteration cap per solve.
    #[arg(long)]
    max_newton: Option<usize>,
}

impl ClassifyArgs {
    fn to_config(&self) -> RunConfig {
        RunConfig {
            extent: self.extent,
            h: self.h,
            newton_tol: self.newton_tol,
            max_newton: self.max_newton,
            ..RunConfig::default()
        }
    }
}

#[derive(Args)]
struct SectorArgs {
    /// Hessian determinant fixing the sector opening.
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    /// Arc growth exponent, inside (beta-, 2 beta-).
    #[arg(long)]
    beta: Option<f64>,
    /// Inner radii, e.g. 0.2,0.1,0.05.
    #[arg(long, value_delimiter = ',')]
    rho: Option<Vec<f64>>,
    /// Chart step in log-radius and angle.
    #[arg(long)]
    h: Option<f64>,
}

impl SectorArgs {
    fn to_config(&self) -> RunConfig {
        RunConfig {
            c: self.c,
            beta: self.beta,
            rho: self.rho.clone(),
            h: self.h,
            ..RunConfig::default()
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    /// Determinants to visit, e.g. 0.25,0.5,0.75.
    #[arg(long, value_delimiter = ',')]
    cs: Option<Vec<f64>>,
    /// Truncation half-side, at least 4.
    #[arg(long = "R", value_name = "R")]
    extent: Option<f64>,
    /// Grid step; 1/h and R/h must be integers.
    #[arg(long)]
    h: Option<f64>,
    /// Newton residual tolerance (relative to max f).
    #[arg(long)]
    newton_tol: Option<f64>,
    /// Newton iteration cap per solve.
    #[arg(long)]
    max_newton: Option<usize>,
}

impl SweepArgs {
    fn to_config(&self) -> RunConfig {
        RunConfig {
            cs: self.cs.clone(),
            extent: self.extent,
            h: self.h,
            newton_tol: self.newton_tol,
            max_newton: self.max_newton,
            ..RunConfig::default()
        }
    }
}

/// Strip a .csv or .json extension so both the stem and either artifact
/// path name the same saved field.
fn field_stem(path: &std::path::Path) -> PathBuf {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") | Some("json") => path.with_extension(""),
        _ => path.to_path_buf(),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    ma_corner::init_parallelism();
    let base = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    let (name, flags): (&str, RunConfig) = match &cli.command {
        Command::Solve(a) => ("solve", a.to_config()),
        Command::Pbar(a) => ("pbar", a.to_config()),
        Command::Punder(a) => ("punder", a.to_config()),
        Command::Asymptotics(a) => ("asymptotics", a.to_config()?),
        Command::Classify(a) => ("classify", a.to_config()),
        Command::LaplaceSector(a) => ("laplace-sector", a.to_config()),
        Command::Sweep(a) => ("sweep", a.to_config()),
    };
    let mut cfg = flags.merged_over(base);
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    let out = cfg.out.clone().ok_or_else(|| {
        CliError::Input("an output directory is required: pass --out or set `out` in the config".into())
    })?;
    std::fs::create_dir_all(&out)?;
    cfg.command = Some(name.to_string());

    let artifacts = match &cli.command {
        Command::Solve(_) => commands::cmd_solve(&mut cfg, &out)?,
        Command::Pbar(_) => commands::cmd_shoot(ShootKind::Pbar, &mut cfg, &out)?,
        Command::Punder(_) => commands::cmd_shoot(ShootKind::Punder, &mut cfg, &out)?,
        Command::Asymptotics(a) => {
            let analyses = a.analyses.clone().unwrap_or_else(|| ALL_ANALYSES.to_vec());
            commands::cmd_asymptotics(&mut cfg, &field_stem(&a.field), &analyses, &out)?
        }
        Command::Classify(a) => commands::cmd_classify(&mut cfg, &a.vertex, &out)?,
        Command::LaplaceSector(_) => commands::cmd_laplace_sector(&mut cfg, &out)?,
        Command::Sweep(_) => commands::cmd_sweep(&mut cfg, &out)?,
    };
    write_manifest(&out, name, &cfg, artifacts)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
