//! Nodal scalar fields with interpolation and on-disk round trip.
//!
//! Interpolation is separable cubic Lagrange on the 4x4 block around the
//! query cell, which reproduces polynomials up to degree three exactly.
//! Where that block would leave the lattice or touch the exterior mask
//! (within two steps of a boundary), it degrades to bilinear so that no
//! stencil extrapolates across a boundary.

use super::grid::{Grid2D, GridShape};
use super::quadratic::QuadraticPolynomial;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

/// Provenance carried alongside field values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FieldMeta {
    /// Ellipticity constant of the equation the field solves, if any.
    pub c: Option<f64>,
    /// Shooting parameter of the outer boundary data, if any.
    pub t: Option<f64>,
    /// Free-form description of how the field was produced.
    pub provenance: String,
}

impl FieldMeta {
    pub fn tagged(provenance: impl Into<String>) -> Self {
        FieldMeta { c: None, t: None, provenance: provenance.into() }
    }
}

#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Grid2D,
    /// Dense over the lattice; exterior nodes hold NaN.
    values: Vec<f64>,
    meta: FieldMeta,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    c: Option<f64>,
    t: Option<f64>,
    h: f64,
    #[serde(rename = "R")]
    extent: f64,
    shape: GridShape,
    provenance: String,
}

impl ScalarField {
    pub fn from_fn(
        grid: Grid2D,
        meta: FieldMeta,
        f: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let n = grid.n();
        let mut values = vec![f64::NAN; grid.num_nodes()];
        for j in 0..=n {
            for i in 0..=n {
                if !grid.is_exterior(i, j) {
                    let (x1, x2) = grid.position(i, j);
                    values[grid.idx(i, j)] = f(x1, x2);
                }
            }
        }
        ScalarField { grid, values, meta }
    }

    pub fn from_quadratic(grid: Grid2D, p: &QuadraticPolynomial, meta: FieldMeta) -> Self {
        ScalarField::from_fn(grid, meta, |x1, x2| p.eval(x1, x2))
    }

    pub(crate) fn from_values(grid: Grid2D, values: Vec<f64>, meta: FieldMeta) -> Self {
        debug_assert_eq!(values.len(), grid.num_nodes());
        ScalarField { grid, values, meta }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn meta(&self) -> &FieldMeta {
        &self.meta
    }

    pub fn meta_mut(&mut self) -> &mut FieldMeta {
        &mut self.meta
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// All non-exterior values are finite.
    pub fn is_finite(&self) -> bool {
        self.grid
            .nodes()
            .filter(|&(i, j)| !self.grid.is_exterior(i, j))
            .all(|(i, j)| self.value(i, j).is_finite())
    }

    fn cell_of(&self, x: f64) -> (usize, f64) {
        let h = self.grid.h();
        let n = self.grid.n();
        let raw = x / h;
        let mut cell = raw.floor() as i64;
        if cell < 0 {
            cell = 0;
        }
        if cell > n as i64 - 1 {
            cell = n as i64 - 1;
        }
        (cell as usize, raw - cell as f64)
    }

    fn block_available(&self, i0: i64, j0: i64, len: i64) -> bool {
        let n = self.grid.n() as i64;
        if i0 < 0 || j0 < 0 || i0 + len - 1 > n || j0 + len - 1 > n {
            return false;
        }
        for j in j0..j0 + len {
            for i in i0..i0 + len {
                if self.grid.is_exterior(i as usize, j as usize) {
                    return false;
                }
            }
        }
        true
    }

    /// Interpolate values produced by `get(i, j)` at the point (x1, x2).
    fn interpolate_with(
        &self,
        x1: f64,
        x2: f64,
        get: &dyn Fn(usize, usize) -> f64,
    ) -> Result<f64> {
        if !self.grid.contains(x1, x2) {
            return Err(Error::Extent(format!(
                "point ({x1}, {x2}) lies outside the stored domain"
            )));
        }
        let (ix, tx) = self.cell_of(x1);
        let (jy, ty) = self.cell_of(x2);
        if self.block_available(ix as i64 - 1, jy as i64 - 1, 4) {
            let wx = cubic_weights(tx);
            let wy = cubic_weights(ty);
            let mut acc = 0.0;
            for (b, wyb) in wy.iter().enumerate() {
                let j = jy + b - 1;
                let mut row = 0.0;
                for (a, wxa) in wx.iter().enumerate() {
                    row += wxa * get(ix + a - 1, j);
                }
                acc += wyb * row;
            }
            Ok(acc)
        } else if self.block_available(ix as i64, jy as i64, 2) {
            let v00 = get(ix, jy);
            let v10 = get(ix + 1, jy);
            let v01 = get(ix, jy + 1);
            let v11 = get(ix + 1, jy + 1);
            Ok(v00 * (1.0 - tx) * (1.0 - ty)
                + v10 * tx * (1.0 - ty)
                + v01 * (1.0 - tx) * ty
                + v11 * tx * ty)
        } else {
            Err(Error::Extent(format!(
                "no complete interpolation cell at ({x1}, {x2})"
            )))
        }
    }

    pub fn eval(&self, x1: f64, x2: f64) -> Result<f64> {
        self.interpolate_with(x1, x2, &|i, j| self.value(i, j))
    }

    /// Interpolated value of (field - p); interpolating the nodal residue
    /// keeps exact quadratic references exact instead of leaving an
    /// interpolation-sized ghost difference.
    pub fn eval_minus(&self, x1: f64, x2: f64, p: &QuadraticPolynomial) -> Result<f64> {
        self.interpolate_with(x1, x2, &|i, j| {
            let (y1, y2) = self.grid.position(i, j);
            self.value(i, j) - p.eval(y1, y2)
        })
    }

    /// result(x) = u(lambda x) / lambda^2 sampled on `target`.
    pub fn quadratic_rescale(&self, lambda: f64, target: &Grid2D) -> Result<ScalarField> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Domain(format!(
                "rescale factor must be positive, got {lambda}"
            )));
        }
        if lambda * target.extent() > self.grid.extent() * (1.0 + 1e-12) {
            return Err(Error::Extent(format!(
                "rescale would sample radius {} beyond stored extent {}",
                lambda * target.extent(),
                self.grid.extent()
            )));
        }
        let inv_l2 = 1.0 / (lambda * lambda);
        let n = target.n();
        let mut values = vec![f64::NAN; target.num_nodes()];
        for j in 0..=n {
            for i in 0..=n {
                if target.is_exterior(i, j) {
                    continue;
                }
                let (x1, x2) = target.position(i, j);
                values[target.idx(i, j)] = inv_l2 * self.eval(lambda * x1, lambda * x2)?;
            }
        }
        let mut meta = self.meta.clone();
        if !meta.provenance.is_empty() {
            meta.provenance.push_str("; ");
        }
        meta.provenance.push_str(&format!("rescaled lambda={lambda}"));
        Ok(ScalarField { grid: *target, values, meta })
    }

    /// Write `<stem>.csv` (header x1,x2,u; non-exterior nodes in index
    /// order; 17 significant digits) and `<stem>.json` with the metadata.
    pub fn save(&self, stem: &Path) -> Result<()> {
        let csv_path = stem.with_extension("csv");
        let mut w = BufWriter::new(std::fs::File::create(&csv_path)?);
        writeln!(w, "x1,x2,u")?;
        let n = self.grid.n();
        for j in 0..=n {
            for i in 0..=n {
                if self.grid.is_exterior(i, j) {
                    continue;
                }
                let (x1, x2) = self.grid.position(i, j);
                writeln!(w, "{:.16e},{:.16e},{:.16e}", x1, x2, self.value(i, j))?;
            }
        }
        w.flush()?;
        let side = Sidecar {
            c: self.meta.c,
            t: self.meta.t,
            h: self.grid.h(),
            extent: self.grid.extent(),
            shape: self.grid.shape(),
            provenance: self.meta.provenance.clone(),
        };
        let json = serde_json::to_string_pretty(&side)?;
        std::fs::write(stem.with_extension("json"), json + "\n")?;
        Ok(())
    }

    pub fn load(stem: &Path) -> Result<ScalarField> {
        let side: Sidecar =
            serde_json::from_str(&std::fs::read_to_string(stem.with_extension("json"))?)?;
        let grid = Grid2D::new(side.extent, side.h, side.shape)?;
        let reader = BufReader::new(std::fs::File::open(stem.with_extension("csv"))?);
        let mut lines = reader.lines();
        match lines.next() {
            Some(Ok(h)) if h.trim() == "x1,x2,u" => {}
            _ => return Err(Error::Parse("field csv must start with header x1,x2,u".into())),
        }
        let mut values = vec![f64::NAN; grid.num_nodes()];
        let mut slots = grid
            .nodes()
            .filter(|&(i, j)| !grid.is_exterior(i, j))
            .collect::<Vec<_>>()
            .into_iter();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let x1: f64 = parse_float(parts.next())?;
            let x2: f64 = parse_float(parts.next())?;
            let u: f64 = parse_float(parts.next())?;
            let (i, j) = slots.next().ok_or_else(|| {
                Error::Parse("field csv holds more rows than the grid has nodes".into())
            })?;
            let (y1, y2) = grid.position(i, j);
            if (x1 - y1).abs() > 1e-9 || (x2 - y2).abs() > 1e-9 {
                return Err(Error::Parse(format!(
                    "row position ({x1}, {x2}) does not match node ({y1}, {y2})"
                )));
            }
            values[grid.idx(i, j)] = u;
        }
        if slots.next().is_some() {
            return Err(Error::Parse("field csv ended before all nodes were filled".into()));
        }
        Ok(ScalarField {
            grid,
            values,
            meta: FieldMeta { c: side.c, t: side.t, provenance: side.provenance },
        })
    }
}

fn parse_float(tok: Option<&str>) -> Result<f64> {
    tok.ok_or_else(|| Error::Parse("missing csv column".into()))?
        .trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("bad float in csv: {e}")))
}

fn cubic_weights(t: f64) -> [f64; 4] {
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -t * (t + 1.0) * (t - 2.0) / 2.0,
        t * (t + 1.0) * (t - 1.0) / 6.0,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AngleConstants, Sign};

    fn sample_quadratic(grid: Grid2D, p: &QuadraticPolynomial) -> ScalarField {
        ScalarField::from_quadratic(grid, p, FieldMeta::tagged("test sample"))
    }

    #[test]
    fn interpolation_is_exact_on_quadratics_in_the_interior() {
        let g = Grid2D::square(4.0, 0.25).unwrap();
        let p = QuadraticPolynomial::new(1.3, 0.7, 0.4, -0.2, 0.1, 2.0);
        let f = sample_quadratic(g, &p);
        for &(x1, x2) in &[(1.37, 2.11), (0.9, 3.2), (2.501, 0.76), (3.3, 3.3)] {
            let got = f.eval(x1, x2).unwrap();
            assert!(
                (got - p.eval(x1, x2)).abs() < 1e-12,
                "cubic block should reproduce quadratics at ({x1}, {x2})"
            );
        }
    }

    #[test]
    fn near_boundary_interpolation_stays_second_order() {
        let g = Grid2D::square(4.0, 0.25).unwrap();
        let p = QuadraticPolynomial::paraboloid();
        let f = sample_quadratic(g, &p);
        let h = g.h();
        for &(x1, x2) in &[(0.1, 2.2), (3.95, 1.3), (0.05, 0.08)] {
            let got = f.eval(x1, x2).unwrap();
            assert!((got - p.eval(x1, x2)).abs() <= 4.0 * h * h);
        }
    }

    #[test]
    fn residue_interpolation_of_the_sampled_reference_is_zero() {
        let g = Grid2D::square(2.0, 0.25).unwrap();
        let k = AngleConstants::new(0.75).unwrap();
        let p = QuadraticPolynomial::pc(&k, Sign::Minus);
        let f = sample_quadratic(g, &p);
        for &(x1, x2) in &[(0.03, 1.1), (1.999, 1.999), (0.6, 0.01)] {
            assert_eq!(f.eval_minus(x1, x2, &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn rescale_fixes_pure_quadratics() {
        let g = Grid2D::square(4.0, 0.125).unwrap();
        let target = Grid2D::square(2.0, 0.125).unwrap();
        let p = QuadraticPolynomial::new(0.9, 1.2, -0.3, 0.0, 0.0, 0.0);
        let f = sample_quadratic(g, &p);
        let h = g.h();
        let r = f.quadratic_rescale(2.0, &target).unwrap();
        for (i, j) in target.nodes() {
            let (x1, x2) = target.position(i, j);
            assert!((r.value(i, j) - p.eval(x1, x2)).abs() <= 4.0 * h * h);
        }
        assert!(r.meta().provenance.contains("lambda=2"));
    }

    #[test]
    fn rescale_composition_matches_single_step() {
        let g = Grid2D::square(8.0, 0.125).unwrap();
        let mid = Grid2D::square(4.0, 0.125).unwrap();
        let target = Grid2D::square(2.0, 0.125).unwrap();
        let f = ScalarField::from_fn(g, FieldMeta::default(), |x1, x2| {
            0.5 * (x1 * x1 + x2 * x2) + 0.1 * x1 * x2 * (1.0 + 0.05 * (x1 - x2))
        });
        let two_step = f
            .quadratic_rescale(2.0, &mid)
            .unwrap()
            .quadratic_rescale(2.0, &target)
            .unwrap();
        let one_step = f.quadratic_rescale(4.0, &target).unwrap();
        let h = g.h();
        for (i, j) in target.nodes() {
            assert!((two_step.value(i, j) - one_step.value(i, j)).abs() <= 4.0 * h * h);
        }
    }

    #[test]
    fn rescale_rejects_extent_overrun() {
        let g = Grid2D::square(2.0, 0.25).unwrap();
        let target = Grid2D::square(2.0, 0.25).unwrap();
        let f = sample_quadratic(g, &QuadraticPolynomial::paraboloid());
        assert!(f.quadratic_rescale(1.5, &target).is_err());
    }

    #[test]
    fn save_load_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("field");
        let g = Grid2D::quarter_disc(2.0, 0.25).unwrap();
        let mut f = ScalarField::from_fn(g, FieldMeta::tagged("round trip"), |x1, x2| {
            (x1 * 1.000000000001 + x2).sin() + x1 * x2 / 3.0
        });
        f.meta_mut().c = Some(0.75);
        f.meta_mut().t = Some(0.25);
        f.save(&stem).unwrap();
        let back = ScalarField::load(&stem).unwrap();
        assert_eq!(back.grid(), f.grid());
        assert_eq!(back.meta().c, Some(0.75));
        assert_eq!(back.meta().t, Some(0.25));
        for (i, j) in g.nodes() {
            if g.is_exterior(i, j) {
                continue;
            }
            assert_eq!(back.value(i, j).to_bits(), f.value(i, j).to_bits());
        }
    }

    #[test]
    fn eval_outside_domain_is_an_extent_error() {
        let g = Grid2D::square(2.0, 0.5).unwrap();
        let f = sample_quadratic(g, &QuadraticPolynomial::paraboloid());
        assert!(f.eval(2.5, 0.5).is_err());
        assert!(f.eval(-0.1, 0.5).is_err());
    }
}
