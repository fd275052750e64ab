//! Bracketed root finding with an evaluation trace: plain bisection and a
//! secant-accelerated variant for expensive objective functions.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BisectResult {
    pub root: f64,
    /// f at the accepted root.
    pub value: f64,
    /// Interior probe evaluations (endpoints not counted).
    pub iterations: usize,
    /// Every (x, f(x)) evaluation in order, endpoints first.
    pub history: Vec<(f64, f64)>,
}

/// Find x in [lo, hi] with f(x) = target by bisection.
///
/// Stops when the bracket width drops below `tol_x` or, if `tol_f > 0`,
/// as soon as an evaluation lands within `tol_f` of the target. The
/// halving count never exceeds ceil(log2((hi - lo) / tol_x)) + 2.
pub fn bisect(
    mut f: impl FnMut(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    target: f64,
    tol_x: f64,
    tol_f: f64,
) -> Result<BisectResult> {
    if !(lo < hi) || !tol_x.is_finite() || tol_x <= 0.0 {
        return Err(Error::Domain(format!(
            "bisection needs lo < hi and tol_x > 0, got [{lo}, {hi}], tol {tol_x}"
        )));
    }
    let mut history = Vec::new();
    let flo = f(lo)?;
    history.push((lo, flo));
    if tol_f > 0.0 && (flo - target).abs() <= tol_f {
        return Ok(BisectResult { root: lo, value: flo, iterations: 0, history });
    }
    let fhi = f(hi)?;
    history.push((hi, fhi));
    if tol_f > 0.0 && (fhi - target).abs() <= tol_f {
        return Ok(BisectResult { root: hi, value: fhi, iterations: 0, history });
    }
    let (mut a, mut b) = (lo, hi);
    let mut sign_a = (flo - target).signum();
    let sign_b = (fhi - target).signum();
    if sign_a == sign_b {
        return Err(Error::Bracket { lo, hi, flo: flo - target, fhi: fhi - target });
    }
    let mut iterations = 0;
    let mut best = if (flo - target).abs() <= (fhi - target).abs() {
        (lo, flo)
    } else {
        (hi, fhi)
    };
    while b - a > tol_x {
        let mid = 0.5 * (a + b);
        let fm = f(mid)?;
        history.push((mid, fm));
        iterations += 1;
        if (fm - target).abs() < (best.1 - target).abs() {
            best = (mid, fm);
        }
        if tol_f > 0.0 && (fm - target).abs() <= tol_f {
            return Ok(BisectResult { root: mid, value: fm, iterations, history });
        }
        let sign_m = (fm - target).signum();
        if sign_m == 0.0 {
            return Ok(BisectResult { root: mid, value: fm, iterations, history });
        }
        if sign_m == sign_a {
            a = mid;
            sign_a = sign_m;
        } else {
            b = mid;
        }
    }
    Ok(BisectResult { root: best.0, value: best.1, iterations, history })
}

/// Find x in [lo, hi] with f(x) = target by false position with the
/// Illinois cut.
///
/// Same contract as [`bisect`] (endpoints evaluated and recorded first,
/// value stop at `tol_f`, width stop at `tol_x`) but each probe sits at
/// the secant point of the current bracket instead of its midpoint; when
/// one endpoint survives two updates in a row its stored value is halved
/// so the probes cannot creep one-sidedly, and after two consecutive
/// probes that fail to halve the bracket the next one falls back to the
/// midpoint, so the probe count never exceeds three times the
/// plain-halving bound. On smooth monotone objectives this needs a
/// handful of evaluations where halving needs dozens, which is what makes
/// it the right kernel when every evaluation is itself a nonlinear solve.
pub fn false_position(
    mut f: impl FnMut(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    target: f64,
    tol_x: f64,
    tol_f: f64,
) -> Result<BisectResult> {
    if !(lo < hi) || !tol_x.is_finite() || tol_x <= 0.0 {
        return Err(Error::Domain(format!(
            "false position needs lo < hi and tol_x > 0, got [{lo}, {hi}], tol {tol_x}"
        )));
    }
    let mut history = Vec::new();
    let flo = f(lo)?;
    history.push((lo, flo));
    if tol_f > 0.0 && (flo - target).abs() <= tol_f {
        return Ok(BisectResult { root: lo, value: flo, iterations: 0, history });
    }
    let fhi = f(hi)?;
    history.push((hi, fhi));
    if tol_f > 0.0 && (fhi - target).abs() <= tol_f {
        return Ok(BisectResult { root: hi, value: fhi, iterations: 0, history });
    }
    let (mut a, mut b) = (lo, hi);
    let (mut ga, mut gb) = (flo - target, fhi - target);
    if ga.signum() == gb.signum() {
        return Err(Error::Bracket { lo, hi, flo: ga, fhi: gb });
    }
    let mut iterations = 0;
    let mut best = if ga.abs() <= gb.abs() { (a, flo) } else { (b, fhi) };
    // Which endpoint the last probe replaced: -1 for a, +1 for b.
    let mut side = 0i8;
    let mut stalls = 0u8;
    while b - a > tol_x {
        let w = b - a;
        let x = if stalls >= 2 {
            0.5 * (a + b)
        } else {
            let x = (a * gb - b * ga) / (gb - ga);
            // Keep probes strictly interior so the bracket always shrinks.
            x.clamp(a + 1e-3 * w, b - 1e-3 * w)
        };
        let fx = f(x)?;
        history.push((x, fx));
        iterations += 1;
        let gx = fx - target;
        if gx.abs() < (best.1 - target).abs() {
            best = (x, fx);
        }
        if tol_f > 0.0 && gx.abs() <= tol_f {
            return Ok(BisectResult { root: x, value: fx, iterations, history });
        }
        if gx == 0.0 {
            return Ok(BisectResult { root: x, value: fx, iterations, history });
        }
        if gx.signum() == ga.signum() {
            a = x;
            ga = gx;
            if side == -1 {
                gb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            gb = gx;
            if side == 1 {
                ga *= 0.5;
            }
            side = 1;
        }
        stalls = if b - a > 0.5 * w { stalls + 1 } else { 0 };
    }
    Ok(BisectResult { root: best.0, value: best.1, iterations, history })
}
