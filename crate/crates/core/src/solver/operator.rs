//! Pointwise evaluation of the monotone determinant operator.

use super::{SolverConfig, Stencil};
use crate::error::{Error, Result};
use crate::model::{FieldMeta, Grid2D, ScalarField};

/// Frozen geometry of one solve: unknown numbering and per-node pair
/// availability. Pairs whose offsets leave the lattice or hit the exterior
/// mask are dropped at that node (one-sided narrowing); every interior node
/// keeps at least the axis pair.
pub(crate) struct Discretization {
    pub grid: Grid2D,
    pub pairs: Vec<[(i64, i64); 2]>,
    /// 1 / (h^2 |e|^2) for both members of each pair.
    pub scales: Vec<[f64; 2]>,
    pub penalty: f64,
    /// Lattice coordinates per unknown, in lattice index order.
    pub interior: Vec<(u32, u32)>,
    /// Lattice index -> unknown number, or -1.
    pub unknown_id: Vec<i64>,
    /// Bitmask of available pairs per unknown.
    pub avail: Vec<u16>,
}

impl Discretization {
    pub fn build(grid: &Grid2D, stencil: &Stencil, penalty: f64) -> Result<Self> {
        if stencil.pairs().len() > 16 {
            return Err(Error::Domain("at most 16 stencil pairs are supported".into()));
        }
        let h2 = grid.h() * grid.h();
        let scales: Vec<[f64; 2]> = stencil
            .pairs()
            .iter()
            .map(|p| {
                let n0 = (p[0].0 * p[0].0 + p[0].1 * p[0].1) as f64;
                let n1 = (p[1].0 * p[1].0 + p[1].1 * p[1].1) as f64;
                [1.0 / (h2 * n0), 1.0 / (h2 * n1)]
            })
            .collect();
        let mut interior = Vec::new();
        let mut unknown_id = vec![-1i64; grid.num_nodes()];
        let mut avail = Vec::new();
        for (i, j) in grid.interior_nodes() {
            let mut mask = 0u16;
            for (pi, pair) in stencil.pairs().iter().enumerate() {
                let ok = pair.iter().all(|&(di, dj)| {
                    grid.offset_available(i, j, di, dj)
                        && grid.offset_available(i, j, -di, -dj)
                });
                if ok {
                    mask |= 1 << pi;
                }
            }
            if mask == 0 {
                let (x1, x2) = grid.position(i, j);
                return Err(Error::StencilSupport(format!(
                    "no stencil pair fits at interior node ({x1}, {x2})"
                )));
            }
            // Interior nodes keep all four axis neighbors by construction,
            // so the mandatory axis pair must have survived the masking.
            debug_assert!(mask & (1 << stencil.axis_pair_index()) != 0);
            unknown_id[grid.idx(i, j)] = interior.len() as i64;
            interior.push((i as u32, j as u32));
            avail.push(mask);
        }
        Ok(Discretization {
            grid: *grid,
            pairs: stencil.pairs().to_vec(),
            scales,
            penalty,
            interior,
            unknown_id,
            avail,
        })
    }

    #[inline]
    pub fn second_difference(
        &self,
        values: &[f64],
        i: u32,
        j: u32,
        dir: (i64, i64),
        scale: f64,
    ) -> f64 {
        let n1 = self.grid.idx(
            (i as i64 + dir.0) as usize,
            (j as i64 + dir.1) as usize,
        );
        let n2 = self.grid.idx(
            (i as i64 - dir.0) as usize,
            (j as i64 - dir.1) as usize,
        );
        let c = self.grid.idx(i as usize, j as usize);
        (values[n1] - 2.0 * values[c] + values[n2]) * scale
    }

    /// Operator value at unknown k plus the data the Newton linearization
    /// needs: active pair and its two second differences.
    #[inline]
    pub fn node_state(&self, values: &[f64], k: usize) -> NodeState {
        let (i, j) = self.interior[k];
        let mask = self.avail[k];
        let mut best = f64::INFINITY;
        let mut active = 0usize;
        let mut best_d = [0.0f64; 2];
        for (pi, pair) in self.pairs.iter().enumerate() {
            if mask & (1 << pi) == 0 {
                continue;
            }
            let d0 = self.second_difference(values, i, j, pair[0], self.scales[pi][0]);
            let d1 = self.second_difference(values, i, j, pair[1], self.scales[pi][1]);
            let g = d0.max(0.0) * d1.max(0.0) + self.penalty * (d0.min(0.0) + d1.min(0.0));
            if g < best {
                best = g;
                active = pi;
                best_d = [d0, d1];
            }
        }
        NodeState { value: best, pair: active, deltas: best_d }
    }

    /// Most negative second difference over all available directions.
    pub fn convexity_violation(&self, values: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..self.interior.len() {
            let (i, j) = self.interior[k];
            let mask = self.avail[k];
            for (pi, pair) in self.pairs.iter().enumerate() {
                if mask & (1 << pi) == 0 {
                    continue;
                }
                for s in 0..2 {
                    let d =
                        self.second_difference(values, i, j, pair[s], self.scales[pi][s]);
                    worst = worst.min(d);
                }
            }
        }
        worst
    }

    /// Value of the center node that solves the local one-point equation
    /// min over pairs = f with neighbors frozen; used by the fallback
    /// sweeps. The minimum over pair roots realizes the minimum because
    /// each pair value decreases in the center value.
    pub fn local_solve(&self, values: &[f64], k: usize, f: f64) -> f64 {
        let (i, j) = self.interior[k];
        let mask = self.avail[k];
        let mut best = f64::INFINITY;
        for (pi, pair) in self.pairs.iter().enumerate() {
            if mask & (1 << pi) == 0 {
                continue;
            }
            let mut sums = [0.0f64; 2];
            for s in 0..2 {
                let (di, dj) = pair[s];
                let n1 = self
                    .grid
                    .idx((i as i64 + di) as usize, (j as i64 + dj) as usize);
                let n2 = self
                    .grid
                    .idx((i as i64 - di) as usize, (j as i64 - dj) as usize);
                sums[s] = values[n1] + values[n2];
            }
            // (A - a v)(B - b v) = f with A = a * sum / 2 and a the
            // difference scale; the root below keeps both factors positive.
            let a = 2.0 * self.scales[pi][0];
            let b = 2.0 * self.scales[pi][1];
            let big_a = self.scales[pi][0] * sums[0];
            let big_b = self.scales[pi][1] * sums[1];
            let p = a * big_b + b * big_a;
            let disc = (a * big_b - b * big_a).powi(2) + 4.0 * a * b * f;
            let v = (p - disc.sqrt()) / (2.0 * a * b);
            best = best.min(v);
        }
        best
    }
}

pub(crate) struct NodeState {
    pub value: f64,
    pub pair: usize,
    pub deltas: [f64; 2],
}

impl NodeState {
    /// Slopes of the operator with respect to the two active second
    /// differences. At a kink the left branch is taken, which keeps the
    /// Jacobian row nonzero because the penalty weight is positive.
    pub fn weights(&self, penalty: f64) -> [f64; 2] {
        let w = |own: f64, other: f64| {
            if own > 0.0 {
                other.max(0.0)
            } else {
                penalty
            }
        };
        [
            w(self.deltas[0], self.deltas[1]),
            w(self.deltas[1], self.deltas[0]),
        ]
    }
}

/// Evaluate the discrete operator at every interior node of `u`; boundary
/// and exterior nodes carry zero in the returned field. Uses the default
/// penalty weight; solves carry their own weight through `Discretization`.
pub fn ma_operator(u: &ScalarField, stencil: &Stencil) -> Result<ScalarField> {
    let disc = Discretization::build(u.grid(), stencil, SolverConfig::default().penalty)?;
    let mut out = vec![0.0; u.grid().num_nodes()];
    let values = u.values();
    for k in 0..disc.interior.len() {
        let st = disc.node_state(values, k);
        let (i, j) = disc.interior[k];
        out[u.grid().idx(i as usize, j as usize)] = st.value;
    }
    Ok(ScalarField::from_values(
        *u.grid(),
        out,
        FieldMeta::tagged(format!("operator value of [{}]", u.meta().provenance)),
    ))
}
