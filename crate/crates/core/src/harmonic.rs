//! Harmonic machinery in the obtuse sector of opening alpha-minus: the
//! boundary-vanishing homogeneous mode, a strict supersolution profile, the
//! conformal power map to the half plane, and a Laplace solver on sector
//! annuli.
//!
//! The annulus solver works in the log-polar chart (s, theta) = (log r,
//! theta), where the sector annulus becomes an exact rectangle and the
//! Laplacian stays the Laplacian up to the conformal factor, which drops
//! out of the homogeneous equation. That keeps the slanted sector edge
//! grid-aligned instead of a staircase, and makes thin inner radii
//! affordable.

use crate::error::{Error, Result};
use crate::model::AngleConstants;
use crate::numerics::sparse::{default_cap, solve_csr};
use crate::numerics::CsrMatrix;
use std::io::Write as _;
use std::path::Path;

/// Check a polar point against the closed sector, with a small slack so
/// that boundary samples pass.
fn check_sector(k: &AngleConstants, r: f64, theta: f64) -> Result<()> {
    if !(r.is_finite() && theta.is_finite() && r >= 0.0) {
        return Err(Error::Domain(format!(
            "polar point (r, theta) = ({r}, {theta}) is not a sector point"
        )));
    }
    if theta < -1e-12 || theta > k.alpha_minus + 1e-12 {
        return Err(Error::Domain(format!(
            "angle {theta} lies outside the sector [0, {}]",
            k.alpha_minus
        )));
    }
    Ok(())
}

/// The homogeneous harmonic mode vanishing on both sector edges:
/// r^(beta-minus) * sin(beta-minus * theta).
pub fn v0(k: &AngleConstants, r: f64, theta: f64) -> Result<f64> {
    check_sector(k, r, theta)?;
    Ok(r.powf(k.beta_minus) * (k.beta_minus * theta).sin())
}

/// A homogeneous profile A * r^degree * phi(theta) on the sector.
#[derive(Debug, Clone)]
pub struct SectorMode {
    pub constants: AngleConstants,
    /// Homogeneity exponent in r.
    pub degree: f64,
    /// Bulge added to the sine profile; zero for the fundamental mode.
    delta: f64,
    amplitude: f64,
    /// Verified sup over theta of degree^2*phi + phi''; negative for
    /// supersolution modes, zero for the fundamental mode.
    margin: f64,
}

impl SectorMode {
    /// The mode of `v0` packaged with its constants.
    pub fn fundamental(k: &AngleConstants) -> SectorMode {
        SectorMode {
            constants: *k,
            degree: k.beta_minus,
            delta: 0.0,
            amplitude: 1.0,
            margin: 0.0,
        }
    }

    /// Angular profile phi(theta) = sin(beta_minus * theta) +
    /// delta * theta * (alpha_minus - theta); vanishes at both edges.
    pub fn theta_profile(&self, theta: f64) -> f64 {
        let k = &self.constants;
        (k.beta_minus * theta).sin() + self.delta * theta * (k.alpha_minus - theta)
    }

    pub fn eval(&self, r: f64, theta: f64) -> Result<f64> {
        check_sector(&self.constants, r, theta)?;
        Ok(self.amplitude * r.powf(self.degree) * self.theta_profile(theta))
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Verified sup of degree^2 * phi + phi'' over the angular grid.
    pub fn margin(&self) -> f64 {
        self.margin
    }
}

/// Build the supersolution mode of exponent `beta` below the sector
/// exponent: Delta(A r^beta phi) <= -r^(beta-2) with a verified margin.
///
/// The profile is sin(beta_minus * theta) + delta * theta * (alpha - theta)
/// with delta halved from 0.5 until beta^2 phi + phi'' is negative on a
/// dense angular grid, then the amplitude is inflated so the supersolution
/// inequality holds with ten percent to spare.
pub fn make_v1(k: &AngleConstants, beta: f64) -> Result<SectorMode> {
    if !(beta >= 0.0 && beta < k.beta_minus) {
        return Err(Error::Domain(format!(
            "supersolution exponent must sit in [0, {}), got {beta}",
            k.beta_minus
        )));
    }
    let samples = 2048usize;
    let sup_of = |delta: f64| -> f64 {
        let mut sup = f64::NEG_INFINITY;
        for i in 0..=samples {
            let theta = k.alpha_minus * i as f64 / samples as f64;
            let phi = (k.beta_minus * theta).sin() + delta * theta * (k.alpha_minus - theta);
            // phi'' = -beta_minus^2 sin(beta_minus theta) - 2 delta.
            let phi2 = -k.beta_minus * k.beta_minus * (k.beta_minus * theta).sin()
                - 2.0 * delta;
            sup = sup.max(beta * beta * phi + phi2);
        }
        sup
    };
    let mut delta = 0.5;
    let mut sup = sup_of(delta);
    let mut halvings = 0;
    while sup >= 0.0 {
        halvings += 1;
        if halvings > 20 {
            return Err(Error::Construction(format!(
                "no bulge parameter made the profile subharmonic for beta = {beta}"
            )));
        }
        delta *= 0.5;
        sup = sup_of(delta);
    }
    let amplitude = (1.1 / -sup).max(1.0);
    Ok(SectorMode { constants: *k, degree: beta, delta, amplitude, margin: sup })
}

/// Worst value of Delta_h v1 + r^(degree-2) over sector sample points with
/// r in [0.25, 4], using the plain five-point Cartesian Laplacian of the
/// closed form at spacing h. Negative values certify the discrete
/// supersolution property.
pub fn supersolution_margin(mode: &SectorMode, h: f64) -> Result<f64> {
    let k = &mode.constants;
    let eval_xy = |x1: f64, x2: f64| -> f64 {
        let r = x1.hypot(x2);
        let theta = x2.atan2(x1);
        mode.amplitude * r.powf(mode.degree) * mode.theta_profile(theta)
    };
    let mut worst = f64::NEG_INFINITY;
    let radii = 28usize;
    let angles = 36usize;
    for ir in 0..=radii {
        let r = 0.25 * (16.0f64).powf(ir as f64 / radii as f64);
        for ia in 0..=angles {
            let theta = k.alpha_minus * ia as f64 / angles as f64;
            let (x1, x2) = (r * theta.cos(), r * theta.sin());
            // Keep the whole five-point cross inside the open sector.
            let inside = [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)]
                .iter()
                .all(|&(dx, dy)| {
                    let (y1, y2) = (x1 + dx, x2 + dy);
                    let ang = y2.atan2(y1);
                    y1.hypot(y2) > 1e-9 && (0.0..=k.alpha_minus).contains(&ang)
                });
            if !inside {
                continue;
            }
            let lap = (eval_xy(x1 + h, x2) + eval_xy(x1 - h, x2) + eval_xy(x1, x2 + h)
                + eval_xy(x1, x2 - h)
                - 4.0 * eval_xy(x1, x2))
                / (h * h);
            worst = worst.max(lap + r.powf(mode.degree - 2.0));
        }
    }
    if worst == f64::NEG_INFINITY {
        return Err(Error::InsufficientData(
            "no sample point kept its five-point cross inside the sector".into(),
        ));
    }
    Ok(worst)
}

/// Max of the five-point Cartesian Laplacian of v0 over sample points with
/// r in [0.25, 4]; the mode is harmonic, so this is pure truncation error.
pub fn v0_laplacian_residual(k: &AngleConstants, h: f64) -> Result<f64> {
    let mode = SectorMode::fundamental(k);
    let eval_xy = |x1: f64, x2: f64| -> f64 {
        let r = x1.hypot(x2);
        let theta = x2.atan2(x1);
        r.powf(mode.degree) * mode.theta_profile(theta)
    };
    let mut worst: f64 = 0.0;
    let mut used = 0usize;
    for ir in 0..=28 {
        let r = 0.25 * (16.0f64).powf(ir as f64 / 28.0);
        for ia in 0..=36 {
            let theta = k.alpha_minus * ia as f64 / 36.0;
            let (x1, x2) = (r * theta.cos(), r * theta.sin());
            let inside = [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)]
                .iter()
                .all(|&(dx, dy)| {
                    let (y1, y2) = (x1 + dx, x2 + dy);
                    let ang = y2.atan2(y1);
                    y1.hypot(y2) > 1e-9 && (0.0..=k.alpha_minus).contains(&ang)
                });
            if !inside {
                continue;
            }
            used += 1;
            let lap = (eval_xy(x1 + h, x2) + eval_xy(x1 - h, x2) + eval_xy(x1, x2 + h)
                + eval_xy(x1, x2 - h)
                - 4.0 * eval_xy(x1, x2))
                / (h * h);
            worst = worst.max(lap.abs());
        }
    }
    if used == 0 {
        return Err(Error::InsufficientData(
            "no interior sample point for the Laplacian residual".into(),
        ));
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapDirection {
    ToHalfPlane,
    FromHalfPlane,
}

/// The conformal power map between the sector and the upper half plane:
/// (r, theta) -> (r^beta, beta * theta) with beta the sector exponent, and
/// its inverse. Points are polar pairs.
pub fn conformal_power(
    k: &AngleConstants,
    r: f64,
    theta: f64,
    direction: MapDirection,
) -> Result<(f64, f64)> {
    match direction {
        MapDirection::ToHalfPlane => {
            check_sector(k, r, theta)?;
            Ok((r.powf(k.beta_minus), k.beta_minus * theta))
        }
        MapDirection::FromHalfPlane => {
            if !(r.is_finite() && r >= 0.0) || !(-1e-12..=std::f64::consts::PI + 1e-12).contains(&theta) {
                return Err(Error::Domain(format!(
                    "polar point (r, theta) = ({r}, {theta}) is not in the half plane"
                )));
            }
            Ok((r.powf(1.0 / k.beta_minus), theta / k.beta_minus))
        }
    }
}

/// Discrete harmonic field on the sector annulus rho <= r <= 1/rho, stored
/// on the log-polar rectangle [log rho, -log rho] x [0, alpha_minus].
#[derive(Debug, Clone)]
pub struct SectorSolution {
    constants: AngleConstants,
    rho: f64,
    ns: usize,
    nt: usize,
    hs: f64,
    ht: f64,
    /// Row-major over (is, it), s fastest; includes boundary nodes.
    values: Vec<f64>,
    /// Max-norm residual of the unit-normalized difference equations.
    residual: f64,
}

impl SectorSolution {
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Max-norm residual of the row-normalized five-point equations after
    /// the linear solve, for the problem scaled to unit data.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    fn s_min(&self) -> f64 {
        self.rho.ln()
    }

    #[inline]
    fn idx(&self, is: usize, it: usize) -> usize {
        it * (self.ns + 1) + is
    }

    pub fn value_at(&self, is: usize, it: usize) -> f64 {
        self.values[self.idx(is, it)]
    }

    /// Bilinear evaluation at a polar point inside the annulus.
    pub fn eval_polar(&self, r: f64, theta: f64) -> Result<f64> {
        check_sector(&self.constants, r, theta)?;
        let s = r.ln();
        let fs = (s - self.s_min()) / self.hs;
        let ft = theta / self.ht;
        if fs < -1e-9 || fs > self.ns as f64 + 1e-9 {
            return Err(Error::Extent(format!(
                "radius {r} lies outside the stored annulus"
            )));
        }
        let clamp = |f: f64, n: usize| -> (usize, f64) {
            let mut c = f.floor() as i64;
            if c < 0 {
                c = 0;
            }
            if c > n as i64 - 1 {
                c = n as i64 - 1;
            }
            (c as usize, f - c as f64)
        };
        let (is, ts) = clamp(fs, self.ns);
        let (it, tt) = clamp(ft, self.nt);
        let v00 = self.value_at(is, it);
        let v10 = self.value_at(is + 1, it);
        let v01 = self.value_at(is, it + 1);
        let v11 = self.value_at(is + 1, it + 1);
        Ok(v00 * (1.0 - ts) * (1.0 - tt)
            + v10 * ts * (1.0 - tt)
            + v01 * (1.0 - ts) * tt
            + v11 * ts * tt)
    }

    /// Largest |value| along the circle of the given radius.
    pub fn max_abs_at_radius(&self, r: f64) -> Result<f64> {
        let mut sup = 0.0f64;
        for it in 0..=self.nt {
            let theta = it as f64 * self.ht;
            sup = sup.max(self.eval_polar(r, theta)?.abs());
        }
        Ok(sup)
    }

    /// Smallest K with |value| <= K * r^beta over all stored nodes.
    pub fn growth_constant(&self, beta: f64) -> f64 {
        let mut sup = 0.0f64;
        for it in 0..=self.nt {
            for is in 0..=self.ns {
                let s = self.s_min() + is as f64 * self.hs;
                let ratio = self.value_at(is, it).abs() / (beta * s).exp();
                sup = sup.max(ratio);
            }
        }
        sup
    }

    /// Same column layout as the quadrant field CSV: x1,x2,u rows.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "x1,x2,u")?;
        for it in 0..=self.nt {
            let theta = it as f64 * self.ht;
            for is in 0..=self.ns {
                let r = (self.s_min() + is as f64 * self.hs).exp();
                writeln!(
                    w,
                    "{:.16e},{:.16e},{:.16e}",
                    r * theta.cos(),
                    r * theta.sin(),
                    self.value_at(is, it)
                )?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Solve the Laplace equation on the sector annulus with Dirichlet data
/// given in polar coordinates on all four boundary pieces (two arcs, two
/// edges). `h` is the target chart spacing in both log-radius and angle.
pub fn solve_laplace_sector(
    k: &AngleConstants,
    rho: f64,
    data: impl Fn(f64, f64) -> f64,
    h: f64,
) -> Result<SectorSolution> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Domain(format!(
            "inner radius must sit in (0, 1), got {rho}"
        )));
    }
    if !(h > 0.0 && h < k.alpha_minus) {
        return Err(Error::Domain(format!("chart spacing {h} is unusable")));
    }
    let span = -2.0 * rho.ln();
    let ns = (span / h).ceil() as usize;
    let nt = (k.alpha_minus / h).ceil() as usize;
    let hs = span / ns as f64;
    let ht = k.alpha_minus / nt as f64;
    let s_min = rho.ln();
    let num = (ns + 1) * (nt + 1);
    let mut values = vec![0.0f64; num];
    let mut scale = 0.0f64;
    let polar = |is: usize, it: usize| -> (f64, f64) {
        ((s_min + is as f64 * hs).exp(), it as f64 * ht)
    };
    for it in 0..=nt {
        for is in 0..=ns {
            if is == 0 || is == ns || it == 0 || it == nt {
                let (r, theta) = polar(is, it);
                let v = data(r, theta);
                if !v.is_finite() {
                    return Err(Error::Domain(format!(
                        "boundary data is not finite at (r, theta) = ({r}, {theta})"
                    )));
                }
                values[it * (ns + 1) + is] = v;
                scale = scale.max(v.abs());
            }
        }
    }
    if scale == 0.0 {
        return Ok(SectorSolution {
            constants: *k,
            rho,
            ns,
            nt,
            hs,
            ht,
            values,
            residual: 0.0,
        });
    }
    // Solve the unit-normalized problem; the equation is linear, so the
    // residual guarantee is scale-free.
    let inv = 1.0 / scale;
    for v in values.iter_mut() {
        *v *= inv;
    }
    let n_unknown = (ns - 1) * (nt - 1);
    let unknown = |is: usize, it: usize| -> usize { (it - 1) * (ns - 1) + (is - 1) };
    let ws = 1.0 / (hs * hs);
    let wt = 1.0 / (ht * ht);
    let diag = 2.0 * (ws + wt);
    let mut row_ptr = Vec::with_capacity(n_unknown + 1);
    let mut cols: Vec<u32> = Vec::with_capacity(5 * n_unknown);
    let mut vals: Vec<f64> = Vec::with_capacity(5 * n_unknown);
    let mut rhs = vec![0.0f64; n_unknown];
    row_ptr.push(0);
    for it in 1..nt {
        for is in 1..ns {
            let row = unknown(is, it);
            let mut push = |c: usize, v: f64| {
                cols.push(c as u32);
                vals.push(v);
            };
            // Assemble in increasing column order for the factorization.
            if it > 1 {
                push(unknown(is, it - 1), -wt / diag);
            } else {
                rhs[row] += wt / diag * values[(it - 1) * (ns + 1) + is];
            }
            if is > 1 {
                push(unknown(is - 1, it), -ws / diag);
            } else {
                rhs[row] += ws / diag * values[it * (ns + 1) + is - 1];
            }
            push(row, 1.0);
            if is < ns - 1 {
                push(unknown(is + 1, it), -ws / diag);
            } else {
                rhs[row] += ws / diag * values[it * (ns + 1) + is + 1];
            }
            if it < nt - 1 {
                push(unknown(is, it + 1), -wt / diag);
            } else {
                rhs[row] += wt / diag * values[(it + 1) * (ns + 1) + is];
            }
            row_ptr.push(cols.len());
        }
    }
    let mat = CsrMatrix { n: n_unknown, row_ptr, cols, vals };
    let sol = solve_csr(&mat, &rhs, 1e-13, 4 * default_cap(n_unknown))?;
    for it in 1..nt {
        for is in 1..ns {
            values[it * (ns + 1) + is] = sol[unknown(is, it)];
        }
    }
    // Max-norm residual of the normalized equations at interior nodes.
    let mut residual = 0.0f64;
    for it in 1..nt {
        for is in 1..ns {
            let c = values[it * (ns + 1) + is];
            let lap = ws * (values[it * (ns + 1) + is - 1] + values[it * (ns + 1) + is + 1])
                + wt * (values[(it - 1) * (ns + 1) + is] + values[(it + 1) * (ns + 1) + is])
                - diag * c;
            residual = residual.max((lap / diag).abs());
        }
    }
    for v in values.iter_mut() {
        *v *= scale;
    }
    Ok(SectorSolution {
        constants: *k,
        rho,
        ns,
        nt,
        hs,
        ht,
        values,
        residual,
    })
}

/// One rung of the decay ladder: the ratio of the largest boundary-circle
/// value to the growth constant of the hypothesis bound.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DecayPoint {
    pub rho: f64,
    /// sup |w| on the unit circle.
    pub circle_sup: f64,
    /// Smallest K with |w| <= K |x|^beta over the annulus.
    pub growth_constant: f64,
    /// circle_sup / growth_constant; must shrink as rho shrinks.
    pub gamma: f64,
}

/// Run the decay experiment: arcs carry |x|^beta, edges carry zero, and
/// the normalized unit-circle bound gamma is recorded per rho. The raw
/// circle sup grows as rho shrinks (the arc data pumps the fundamental
/// mode harder), so the bound is measured relative to the growth constant
/// of the annulus, which is the quantity the decay statement controls.
pub fn decay_ladder(
    k: &AngleConstants,
    beta: f64,
    rhos: &[f64],
    h: f64,
) -> Result<Vec<DecayPoint>> {
    if !(beta > k.beta_minus && beta < 2.0 * k.beta_minus) {
        return Err(Error::Domain(format!(
            "decay exponent must sit in ({}, {}), got {beta}",
            k.beta_minus,
            2.0 * k.beta_minus
        )));
    }
    let mut out = Vec::with_capacity(rhos.len());
    for &rho in rhos {
        let sol = solve_laplace_sector(
            k,
            rho,
            |r, theta| {
                let on_edge = theta < 1e-12 || theta > k.alpha_minus - 1e-12;
                if on_edge {
                    0.0
                } else {
                    r.powf(beta)
                }
            },
            h,
        )?;
        let circle_sup = sol.max_abs_at_radius(1.0)?;
        let growth = sol.growth_constant(beta);
        out.push(DecayPoint {
            rho,
            circle_sup,
            growth_constant: growth,
            gamma: circle_sup / growth,
        });
    }
    Ok(out)
}
