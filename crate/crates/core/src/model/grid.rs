//! Uniform lattice on the truncated quadrant.
//!
//! Both truncations live on the same [0, R]^2 lattice; the quarter disc is a
//! mask that marks nodes beyond the arc as exterior. Step sizes are
//! restricted so that 1/h and R/h are integers, which puts the pinning
//! point (1, 1) exactly on a node.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridShape {
    #[serde(rename = "square")]
    Square,
    #[serde(rename = "quarter-disc")]
    QuarterDisc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeClass {
    Interior,
    /// On one of the coordinate axes (including the origin corner).
    AxisBoundary,
    /// On the outer truncation edge or adjacent to the exterior mask.
    OuterBoundary,
    /// Beyond the quarter-disc arc; carries no value.
    Exterior,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    h: f64,
    extent: f64,
    /// Nodes per side beyond zero: positions i * h for i in 0..=n.
    n: usize,
    shape: GridShape,
}

fn integer_ratio(num: f64, den: f64) -> Option<usize> {
    let q = num / den;
    let r = q.round();
    if r >= 0.5 && (q - r).abs() < 1e-9 * q.abs().max(1.0) {
        Some(r as usize)
    } else {
        None
    }
}

impl Grid2D {
    pub fn new(extent: f64, h: f64, shape: GridShape) -> Result<Self> {
        if !(extent.is_finite() && h.is_finite() && extent > 0.0 && h > 0.0) {
            return Err(Error::Grid(format!(
                "extent and step must be positive, got R = {extent}, h = {h}"
            )));
        }
        integer_ratio(1.0, h).ok_or_else(|| {
            Error::Grid(format!("1/h must be an integer, got h = {h}"))
        })?;
        let n = integer_ratio(extent, h).ok_or_else(|| {
            Error::Grid(format!("R/h must be an integer, got R = {extent}, h = {h}"))
        })?;
        if extent < 1.0 {
            return Err(Error::Grid(format!(
                "extent must reach at least 1, got {extent}"
            )));
        }
        Ok(Grid2D { h, extent, n, shape })
    }

    pub fn square(extent: f64, h: f64) -> Result<Self> {
        Grid2D::new(extent, h, GridShape::Square)
    }

    pub fn quarter_disc(extent: f64, h: f64) -> Result<Self> {
        Grid2D::new(extent, h, GridShape::QuarterDisc)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn num_nodes(&self) -> usize {
        (self.n + 1) * (self.n + 1)
    }

    /// Row-major node index, first coordinate fastest.
    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= self.n && j <= self.n);
        j * (self.n + 1) + i
    }

    pub fn position(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 * self.h, j as f64 * self.h)
    }

    fn beyond_arc(&self, i: usize, j: usize) -> bool {
        let (x1, x2) = self.position(i, j);
        x1 * x1 + x2 * x2 > self.extent * self.extent * (1.0 + 1e-12)
    }

    pub fn node_class(&self, i: usize, j: usize) -> NodeClass {
        match self.shape {
            GridShape::Square => {
                if i == 0 || j == 0 {
                    NodeClass::AxisBoundary
                } else if i == self.n || j == self.n {
                    NodeClass::OuterBoundary
                } else {
                    NodeClass::Interior
                }
            }
            GridShape::QuarterDisc => {
                if self.beyond_arc(i, j) {
                    return NodeClass::Exterior;
                }
                if i == 0 || j == 0 {
                    return NodeClass::AxisBoundary;
                }
                let (x1, x2) = self.position(i, j);
                let on_arc = (x1 * x1 + x2 * x2 - self.extent * self.extent).abs()
                    <= 1e-12 * self.extent * self.extent;
                let next_to_mask = i + 1 > self.n
                    || j + 1 > self.n
                    || self.beyond_arc(i + 1, j)
                    || self.beyond_arc(i, j + 1);
                if on_arc || next_to_mask {
                    NodeClass::OuterBoundary
                } else {
                    NodeClass::Interior
                }
            }
        }
    }

    pub fn is_exterior(&self, i: usize, j: usize) -> bool {
        self.node_class(i, j) == NodeClass::Exterior
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        matches!(
            self.node_class(i, j),
            NodeClass::AxisBoundary | NodeClass::OuterBoundary
        )
    }

    /// All lattice nodes, including exterior ones for a quarter disc.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        (0..=n).flat_map(move |j| (0..=n).map(move |i| (i, j)))
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.nodes()
            .filter(|&(i, j)| self.node_class(i, j) == NodeClass::Interior)
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.nodes().filter(|&(i, j)| self.is_boundary(i, j))
    }

    /// Whether the lattice offset (di, dj) from (i, j) stays on the lattice
    /// and off the exterior mask.
    pub fn offset_available(&self, i: usize, j: usize, di: i64, dj: i64) -> bool {
        let ni = i as i64 + di;
        let nj = j as i64 + dj;
        if ni < 0 || nj < 0 || ni > self.n as i64 || nj > self.n as i64 {
            return false;
        }
        !self.is_exterior(ni as usize, nj as usize)
    }

    /// Distance from a point to the nearest domain boundary piece.
    pub fn boundary_distance(&self, x1: f64, x2: f64) -> f64 {
        let axis = x1.min(x2);
        match self.shape {
            GridShape::Square => axis.min(self.extent - x1).min(self.extent - x2),
            GridShape::QuarterDisc => {
                axis.min(self.extent - (x1 * x1 + x2 * x2).sqrt())
            }
        }
    }

    pub fn contains(&self, x1: f64, x2: f64) -> bool {
        if x1 < -1e-12 || x2 < -1e-12 {
            return false;
        }
        match self.shape {
            GridShape::Square => x1 <= self.extent * (1.0 + 1e-12) && x2 <= self.extent * (1.0 + 1e-12),
            GridShape::QuarterDisc => {
                x1 * x1 + x2 * x2 <= self.extent * self.extent * (1.0 + 1e-12)
            }
        }
    }
}
