//! Flat run configuration with three layers: built-in defaults, an optional
//! TOML/JSON file, and command-line flags on top.

use std::fs;
use std::path::{Path, PathBuf};

use ma_corner::model::GridShape;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Every knob a command can consume, in one flat namespace. Commands fill
/// in the defaults they actually used, so the serialized config in the
/// manifest records the effective run, not just what the user typed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Invoked subcommand; set by the dispatcher, not the user.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    /// Hessian determinant (ellipticity constant).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// Boundary family parameter; outer data is q + (t - s) x1 x2.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// Truncation half-side.
    #[serde(rename = "R", skip_serializing_if = "Option::is_none")]
    pub extent: Option<f64>,
    /// Grid step (or chart step for the sector solver).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape: Option<GridShape>,
    /// Vertex-side radius window [lo, hi].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub near: Option<[f64; 2]>,
    /// Far-field radius window [lo, hi].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub far: Option<[f64; 2]>,
    /// Window of the expansion-coefficient measurement.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    /// Decreasing radii of the eigenvalue trend.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ladder: Option<Vec<f64>>,
    /// Growth exponent of the sector decay experiment.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Inner radii of the sector decay experiment.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<Vec<f64>>,
    /// Determinants visited by the sweep.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cs: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub newton_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_newton: Option<usize>,
    /// Seed for randomized property checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Output directory; the --out flag overrides it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

macro_rules! fill_from {
    ($self:ident, $under:ident, $($field:ident),+ $(,)?) => {
        $(if $self.$field.is_none() {
            $self.$field = $under.$field;
        })+
    };
}

impl RunConfig {
    /// Layer `self` (flags) over `under` (file or defaults): present
    /// entries win, absent ones fall through.
    pub fn merged_over(mut self, under: RunConfig) -> RunConfig {
        fill_from!(
            self, under, command, c, t, extent, h, shape, near, far, window, ladder,
            beta, rho, cs, newton_tol, max_newton, seed, out,
        );
        self
    }

    pub fn from_file(path: &Path) -> Result<RunConfig, CliError> {
        let raw = fs::read_to_string(path).map_err(|e| {
            CliError::Input(format!("cannot read config {}: {e}", path.display()))
        })?;
        match path.extension().and_then(|s| s.to_str()) {
            Some("toml") => toml::from_str(&raw)
                .map_err(|e| CliError::Input(format!("config {}: {e}", path.display()))),
            Some("json") => serde_json::from_str(&raw)
                .map_err(|e| CliError::Input(format!("config {}: {e}", path.display()))),
            _ => Err(CliError::Input(format!(
                "config {} must end in .toml or .json",
                path.display()
            ))),
        }
    }

    /// Hash of the canonical JSON serialization; identical configs hash
    /// identically because struct order fixes the key order.
    pub fn sha256(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        let mut hex = String::with_capacity(64);
        for b in digest {
            hex.push_str(&format!("{b:02x}"));
        }
        hex
    }
}

/// Names every artifact a command wrote, with the effective config and its
/// hash, so a run can be re-identified and reproduced from the directory
/// alone.
#[derive(Serialize)]
pub struct Manifest<'a> {
    pub command: &'a str,
    pub config_sha256: String,
    pub config: &'a RunConfig,
    pub artifacts: Vec<String>,
}

pub fn write_manifest(
    out: &Path,
    command: &str,
    config: &RunConfig,
    artifacts: Vec<String>,
) -> Result<(), CliError> {
    let manifest = Manifest {
        command,
        config_sha256: config.sha256(),
        config,
        artifacts,
    };
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::Input(format!("manifest serialization: {e}")))?;
    fs::write(out.join("manifest.json"), json + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_entries() {
        let flags = RunConfig {
            c: Some(0.75),
            ..RunConfig::default()
        };
        let file = RunConfig {
            c: Some(0.5),
            h: Some(0.125),
            ..RunConfig::default()
        };
        let merged = flags.merged_over(file);
        assert_eq!(merged.c, Some(0.75));
        assert_eq!(merged.h, Some(0.125));
    }

    #[test]
    fn hash_tracks_content_not_identity() {
        let a = RunConfig {
            c: Some(0.75),
            ..RunConfig::default()
        };
        let b = RunConfig {
            c: Some(0.75),
            ..RunConfig::default()
        };
        let c = RunConfig {
            c: Some(0.5),
            ..RunConfig::default()
        };
        assert_eq!(a.sha256(), b.sha256());
        assert_ne!(a.sha256(), c.sha256());
        assert_eq!(a.sha256().len(), 64);
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let err = toml::from_str::<RunConfig>("c = 0.75\nbogus = 1\n");
        assert!(err.is_err());
    }
}
