//! Compressed sparse rows with an ILU(0)-preconditioned BiCGStab solve.
//!
//! The Newton systems assembled by the equation solver are (negated)
//! M-matrices with at most five entries per row, for which incomplete
//! factorization in natural order is stable; the same path serves the
//! masked Laplace solves.

use crate::error::{Error, Result};
use rayon::prelude::*;

/// Triplet-assembled square system A x = b.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    n: usize,
    triplets: Vec<(u32, u32, f64)>,
    rhs: Vec<f64>,
}

impl SparseSystem {
    pub fn new(n: usize) -> Self {
        SparseSystem { n, triplets: Vec::new(), rhs: vec![0.0; n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n && col < self.n);
        self.triplets.push((row as u32, col as u32, value));
    }

    pub fn rhs_mut(&mut self) -> &mut [f64] {
        &mut self.rhs
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Sort, merge duplicates, and freeze into CSR form.
    pub fn finalize(&self) -> CsrMatrix {
        let mut trips = self.triplets.clone();
        trips.sort_unstable_by_key(|&(r, c, _)| ((r as u64) << 32) | c as u64);
        let mut csr = CsrMatrix {
            n: self.n,
            row_ptr: vec![0; self.n + 1],
            cols: Vec::with_capacity(trips.len()),
            vals: Vec::with_capacity(trips.len()),
        };
        let mut k = 0;
        for r in 0..self.n {
            while k < trips.len() && trips[k].0 as usize == r {
                let c = trips[k].1;
                let mut v = trips[k].2;
                k += 1;
                while k < trips.len() && trips[k].0 as usize == r && trips[k].1 == c {
                    v += trips[k].2;
                    k += 1;
                }
                csr.cols.push(c);
                csr.vals.push(v);
            }
            csr.row_ptr[r + 1] = csr.cols.len();
        }
        csr
    }
}

/// Square CSR matrix with sorted, duplicate-free columns per row.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<u32>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        if self.n >= 1 << 14 {
            y.par_iter_mut().enumerate().for_each(|(r, out)| {
                let mut acc = 0.0;
                for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                    acc += self.vals[k] * x[self.cols[k] as usize];
                }
                *out = acc;
            });
        } else {
            for r in 0..self.n {
                let mut acc = 0.0;
                for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                    acc += self.vals[k] * x[self.cols[k] as usize];
                }
                y[r] = acc;
            }
        }
    }

    fn residual_norm(&self, x: &[f64], b: &[f64], scratch: &mut [f64]) -> f64 {
        self.matvec(x, scratch);
        let mut acc = 0.0;
        for r in 0..self.n {
            let d = b[r] - scratch[r];
            acc += d * d;
        }
        acc.sqrt()
    }

    /// Empty row or empty column means no solution can be pinned down.
    pub fn structurally_singular(&self) -> bool {
        let mut col_seen = vec![false; self.n];
        for r in 0..self.n {
            if self.row_ptr[r] == self.row_ptr[r + 1] {
                return true;
            }
            let mut all_zero = true;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.vals[k] != 0.0 {
                    all_zero = false;
                    col_seen[self.cols[k] as usize] = true;
                }
            }
            if all_zero {
                return true;
            }
        }
        col_seen.iter().any(|seen| !seen)
    }
}

/// ILU(0) factors stored on the CSR pattern of the source matrix.
pub(crate) struct Ilu0 {
    mat: CsrMatrix,
    diag_pos: Vec<usize>,
}

impl Ilu0 {
    pub(crate) fn factor(a: &CsrMatrix) -> Result<Ilu0> {
        let n = a.n;
        let mut m = a.clone();
        let mut diag_pos = vec![usize::MAX; n];
        for r in 0..n {
            for k in m.row_ptr[r]..m.row_ptr[r + 1] {
                if m.cols[k] as usize == r {
                    diag_pos[r] = k;
                }
            }
            if diag_pos[r] == usize::MAX {
                return Err(Error::Singular(format!("row {r} has no diagonal entry")));
            }
        }
        for i in 0..n {
            let (start, end) = (m.row_ptr[i], m.row_ptr[i + 1]);
            for kk in start..end {
                let k = m.cols[kk] as usize;
                if k >= i {
                    break;
                }
                let piv = m.vals[diag_pos[k]];
                let lik = m.vals[kk] / piv;
                m.vals[kk] = lik;
                // Subtract lik * (row k beyond its diagonal) from row i.
                let mut p = kk + 1;
                for kj in diag_pos[k] + 1..m.row_ptr[k + 1] {
                    let col = m.cols[kj];
                    while p < end && m.cols[p] < col {
                        p += 1;
                    }
                    if p < end && m.cols[p] == col {
                        m.vals[p] -= lik * m.vals[kj];
                    }
                }
            }
            let dp = diag_pos[i];
            if m.vals[dp].abs() < 1e-300 {
                // Keep the preconditioner usable; accuracy is recovered by
                // the outer Krylov iteration.
                m.vals[dp] = if m.vals[dp] >= 0.0 { 1e-30 } else { -1e-30 };
            }
        }
        Ok(Ilu0 { mat: m, diag_pos })
    }

    /// Solve (L U) z = v with unit lower factor.
    pub(crate) fn apply(&self, v: &[f64], z: &mut [f64]) {
        let n = self.mat.n;
        z.copy_from_slice(v);
        for r in 0..n {
            let mut acc = z[r];
            for k in self.mat.row_ptr[r]..self.diag_pos[r] {
                acc -= self.mat.vals[k] * z[self.mat.cols[k] as usize];
            }
            z[r] = acc;
        }
        for r in (0..n).rev() {
            let mut acc = z[r];
            for k in self.diag_pos[r] + 1..self.mat.row_ptr[r + 1] {
                acc -= self.mat.vals[k] * z[self.mat.cols[k] as usize];
            }
            z[r] = acc / self.mat.vals[self.diag_pos[r]];
        }
    }
}

/// Preconditioned BiCGStab. Returns (iterations, relative residual).
pub(crate) fn bicgstab(
    a: &CsrMatrix,
    pre: &Ilu0,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> (usize, f64) {
    let n = a.n;
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return (0, 0.0);
    }
    let mut r = vec![0.0; n];
    a.matvec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let r0 = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ph = vec![0.0; n];
    let mut sh = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut rnorm = r.iter().map(|a| a * a).sum::<f64>().sqrt();
    for it in 1..=max_iter {
        if rnorm <= tol * bnorm {
            return (it - 1, rnorm / bnorm);
        }
        let rho_new: f64 = r0.iter().zip(&r).map(|(a, b)| a * b).sum();
        if rho_new.abs() < 1e-300 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        pre.apply(&p, &mut ph);
        a.matvec(&ph, &mut v);
        let r0v: f64 = r0.iter().zip(&v).map(|(a, b)| a * b).sum();
        if r0v.abs() < 1e-300 {
            break;
        }
        alpha = rho / r0v;
        // s = r - alpha v, reusing r.
        for i in 0..n {
            r[i] -= alpha * v[i];
        }
        let snorm = r.iter().map(|a| a * a).sum::<f64>().sqrt();
        if snorm <= tol * bnorm {
            for i in 0..n {
                x[i] += alpha * ph[i];
            }
            return (it, snorm / bnorm);
        }
        pre.apply(&r, &mut sh);
        a.matvec(&sh, &mut t);
        let tt: f64 = t.iter().map(|a| a * a).sum();
        if tt < 1e-300 {
            break;
        }
        omega = t.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() / tt;
        for i in 0..n {
            x[i] += alpha * ph[i] + omega * sh[i];
            r[i] -= omega * t[i];
        }
        if omega.abs() < 1e-300 {
            break;
        }
        rnorm = r.iter().map(|a| a * a).sum::<f64>().sqrt();
    }
    // Report the true residual on exit.
    let mut scratch = vec![0.0; n];
    let rn = a.residual_norm(x, b, &mut scratch);
    (max_iter, rn / bnorm)
}

/// Solve A x = b to a relative 2-norm residual of `tol`.
pub fn solve_linear(system: &SparseSystem, tol: f64) -> Result<Vec<f64>> {
    let a = system.finalize();
    solve_csr(&a, system.rhs(), tol, default_cap(a.n))
}

pub(crate) fn default_cap(n: usize) -> usize {
    (500 + 8 * (n as f64).sqrt() as usize).min(20_000)
}

pub(crate) fn solve_csr(a: &CsrMatrix, b: &[f64], tol: f64, cap: usize) -> Result<Vec<f64>> {
    if a.structurally_singular() {
        return Err(Error::Singular(
            "matrix has an empty row or column".into(),
        ));
    }
    let pre = Ilu0::factor(a)?;
    let mut x = vec![0.0; a.n];
    let (_iters, rel) = bicgstab(a, &pre, b, &mut x, tol, cap);
    if !rel.is_finite() || rel > tol {
        let mut scratch = vec![0.0; a.n];
        let true_rel = a.residual_norm(&x, b, &mut scratch)
            / b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        if !true_rel.is_finite() || true_rel > tol {
            return Err(Error::solver(
                format!("linear solve stalled after {cap} iterations"),
                true_rel,
            ));
        }
    }
    Ok(x)
}
