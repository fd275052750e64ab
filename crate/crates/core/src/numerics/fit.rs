//! Least-squares power-law fitting on log-log axes.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// y ~ exp(intercept) * r^slope over [rmin, rmax], with the root mean
/// square log residual and the number of points used.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub rmin: f64,
    pub rmax: f64,
    pub residual: f64,
    pub n: usize,
}

/// Fit log y against log r for samples with r inside [rmin, rmax].
pub fn fit_loglog_slope(points: &[(f64, f64)], rmin: f64, rmax: f64) -> Result<FitResult> {
    if !(rmin > 0.0 && rmax > rmin) {
        return Err(Error::Domain(format!(
            "fit window must satisfy 0 < rmin < rmax, got [{rmin}, {rmax}]"
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(r, y) in points {
        if r < rmin || r > rmax {
            continue;
        }
        if !(y > 0.0 && y.is_finite()) {
            return Err(Error::Domain(format!(
                "log-log fit needs positive values, got {y} at r = {r}"
            )));
        }
        xs.push(r.ln());
        ys.push(y.ln());
    }
    let n = xs.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!(
            "log-log fit needs at least 3 points in the window, found {n}"
        )));
    }
    let xm = xs.iter().sum::<f64>() / n as f64;
    let ym = ys.iter().sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for k in 0..n {
        sxx += (xs[k] - xm) * (xs[k] - xm);
        sxy += (xs[k] - xm) * (ys[k] - ym);
    }
    if sxx < 1e-300 {
        return Err(Error::InsufficientData(
            "all fit radii coincide; slope is undetermined".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let mut ss = 0.0;
    for k in 0..n {
        let e = ys[k] - (intercept + slope * xs[k]);
        ss += e * e;
    }
    Ok(FitResult {
        slope,
        intercept,
        rmin,
        rmax,
        residual: (ss / n as f64).sqrt(),
        n,
    })
}
