//! Shared numerical kernels: sparse linear solves, scalar root bracketing,
//! power-law fitting, and arc profiles.

mod bisect;
mod fit;
mod profile;
pub(crate) mod sparse;

pub use bisect::{bisect, false_position, BisectResult};
pub use fit::{fit_loglog_slope, FitResult};
pub use profile::{radial_profile, write_profile_csv, ProfileStat};
pub use sparse::{solve_linear, CsrMatrix, SparseSystem};
