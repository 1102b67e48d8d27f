//! Global assembly of the condensed Hermitian system and its solution by
//! block-Jacobi preconditioned conjugate gradients, with a dense Cholesky
//! path for small systems and an optional sparse Cholesky for systems too
//! ill-conditioned for the iteration (thin clamped bars).

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Compressed sparse rows with a symmetric pattern. Both triangles are
/// stored so that the product is a plain row loop.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHermitian {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseHermitian {
    /// Zero matrix with the given per-row column lists (sorted and deduplicated here).
    pub fn from_pattern(mut rows: Vec<Vec<usize>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
            cols.extend_from_slice(r);
            row_ptr.push(cols.len());
        }
        let vals = vec![C64::new(0.0, 0.0); cols.len()];
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.cols[lo..hi].binary_search(&j).ok().map(|k| lo + k)
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.position(i, j).map_or(C64::new(0.0, 0.0), |k| self.vals[k])
    }

    /// Adds `v` at `(i, j)`; the entry must be in the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: C64) {
        let k = self.position(i, j).expect("entry outside the sparsity pattern");
        self.vals[k] += v;
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let mut s = C64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *yi = s;
        });
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                a[(i, j)] = v;
            }
        }
        a
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |A_ij - conj(A_ji)|`.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i).conj()).norm());
            }
        }
        worst
    }
}

/// One element's contribution: global free index of each local dof (or
/// `None` for pinned dofs), the local condensed matrix and load.
#[derive(Debug, Clone)]
pub struct LocalSystem<'a> {
    pub dofs: Vec<Option<usize>>,
    pub matrix: &'a DMatrix<C64>,
    pub rhs: DVector<C64>,
}

/// Scatter-add of the local systems over free dofs.
pub fn assemble(n_free: usize, locals: &[LocalSystem<'_>]) -> (SparseHermitian, Vec<C64>) {
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n_free];
    for loc in locals {
        let free: Vec<usize> = loc.dofs.iter().flatten().copied().collect();
        for &i in &free {
            rows[i].extend_from_slice(&free);
        }
        // keep the per-row lists from growing far past their final size
        for &i in &free {
            if rows[i].len() > 4 * free.len() {
                rows[i].sort_unstable();
                rows[i].dedup();
            }
        }
    }
    let mut a = SparseHermitian::from_pattern(rows);
    let mut b = vec![C64::new(0.0, 0.0); n_free];
    for loc in locals {
        for (li, gi) in loc.dofs.iter().enumerate() {
            let Some(gi) = *gi else { continue };
            b[gi] += loc.rhs[li];
            for (lj, gj) in loc.dofs.iter().enumerate() {
                if let Some(gj) = *gj {
                    a.add(gi, gj, loc.matrix[(li, lj)]);
                }
            }
        }
    }
    (a, b)
}

/// Algorithm for systems above the dense threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Cg,
    /// Supernodal sparse Cholesky.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub method: Method,
    pub tol: f64,
    pub max_iter: usize,
    pub dense_threshold: usize,
    /// Sequential reductions, so repeated runs agree bit for bit.
    pub deterministic: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            method: Method::Cg,
            tol: 1e-10,
            max_iter: 20_000,
            dense_threshold: 2000,
            deterministic: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Iterative,
    DenseFallback,
    SparseDirect,
}

impl std::fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveMethod::Iterative => "iterative",
            SolveMethod::DenseFallback => "dense-fallback",
            SolveMethod::SparseDirect => "sparse-direct",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub relative_residual: f64,
    pub method: SolveMethod,
    pub wall_time: Duration,
}

/// Solves `A x = b` for Hermitian positive definite `A`. `blocks` lists the
/// preconditioner blocks; dofs not covered get a scalar block.
pub fn solve_hpd(
    a: &SparseHermitian,
    b: &[C64],
    blocks: &[Vec<usize>],
    opts: &SolverOptions,
) -> Result<(Vec<C64>, SolveReport)> {
    let start = Instant::now();
    let n = a.dim();
    let b_norm = norm(b, opts.deterministic);
    if b_norm == 0.0 {
        let report = SolveReport {
            iterations: 0,
            relative_residual: 0.0,
            method: if n <= opts.dense_threshold {
                SolveMethod::DenseFallback
            } else {
                SolveMethod::Iterative
            },
            wall_time: start.elapsed(),
        };
        return Ok((vec![C64::new(0.0, 0.0); n], report));
    }
    if n <= opts.dense_threshold {
        let x = dense_solve(a, b)?;
        let rel = residual_norm(a, &x, b, opts.deterministic) / b_norm;
        let report = SolveReport {
            iterations: 0,
            relative_residual: rel,
            method: SolveMethod::DenseFallback,
            wall_time: start.elapsed(),
        };
        return Ok((x, report));
    }
    if opts.method == Method::Direct {
        let x = sparse_direct_solve(a, b)?;
        let rel = residual_norm(a, &x, b, opts.deterministic) / b_norm;
        let report = SolveReport {
            iterations: 0,
            relative_residual: rel,
            method: SolveMethod::SparseDirect,
            wall_time: start.elapsed(),
        };
        return Ok((x, report));
    }
    let pre = BlockJacobi::new(a, blocks)?;
    let (x, iterations, rel) = pcg(a, b, &pre, opts, b_norm)?;
    let report = SolveReport {
        iterations,
        relative_residual: rel,
        method: SolveMethod::Iterative,
        wall_time: start.elapsed(),
    };
    Ok((x, report))
}

fn dot(x: &[C64], y: &[C64], deterministic: bool) -> C64 {
    if deterministic {
        x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
    } else {
        x.par_iter().zip(y).map(|(a, b)| a.conj() * b).sum()
    }
}

fn norm(x: &[C64], deterministic: bool) -> f64 {
    dot(x, x, deterministic).re.sqrt()
}

fn residual_norm(a: &SparseHermitian, x: &[C64], b: &[C64], deterministic: bool) -> f64 {
    let mut ax = vec![C64::new(0.0, 0.0); b.len()];
    a.matvec(x, &mut ax);
    let r: Vec<C64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
    norm(&r, deterministic)
}

fn pcg(
    a: &SparseHermitian,
    b: &[C64],
    pre: &BlockJacobi,
    opts: &SolverOptions,
    b_norm: f64,
) -> Result<(Vec<C64>, usize, f64)> {
    let n = b.len();
    let det = opts.deterministic;
    let zero = C64::new(0.0, 0.0);
    let mut x = vec![zero; n];
    let mut ap = vec![zero; n];
    let mut iterations = 0;
    let mut rel = 1.0;
    // restart on the true residual whenever the recursive one has converged
    while iterations < opts.max_iter {
        a.matvec(&x, &mut ap);
        let mut r: Vec<C64> = b.iter().zip(&ap).map(|(b, ax)| b - ax).collect();
        rel = norm(&r, det) / b_norm;
        if rel <= opts.tol {
            return Ok((x, iterations, rel));
        }
        let mut z = pre.apply(&r);
        let mut p = z.clone();
        let mut rz = dot(&r, &z, det).re;
        while iterations < opts.max_iter {
            iterations += 1;
            a.matvec(&p, &mut ap);
            let pap = dot(&p, &ap, det).re;
            if !(pap > 0.0) {
                return Err(Error::NotPositiveDefinite { pivot: iterations });
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            rel = norm(&r, det) / b_norm;
            if rel <= opts.tol {
                break;
            }
            z = pre.apply(&r);
            let rz_new = dot(&r, &z, det).re;
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
    }
    Err(Error::NoConvergence {
        iterations,
        residual: rel,
    })
}

struct BlockJacobi {
    blocks: Vec<(Vec<usize>, DMatrix<C64>)>,
    n: usize,
}

impl BlockJacobi {
    fn new(a: &SparseHermitian, blocks: &[Vec<usize>]) -> Result<Self> {
        let n = a.dim();
        let mut covered = vec![false; n];
        let mut all: Vec<Vec<usize>> = Vec::with_capacity(blocks.len());
        for blk in blocks {
            for &i in blk {
                covered[i] = true;
            }
            all.push(blk.clone());
        }
        all.extend((0..n).filter(|&i| !covered[i]).map(|i| vec![i]));
        let blocks = all
            .into_iter()
            .map(|idx| {
                let m = DMatrix::from_fn(idx.len(), idx.len(), |r, c| a.get(idx[r], idx[c]));
                let inv = m.try_inverse().ok_or(Error::NotPositiveDefinite { pivot: idx[0] })?;
                Ok((idx, inv))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { blocks, n })
    }

    fn apply(&self, r: &[C64]) -> Vec<C64> {
        let mut z = vec![C64::new(0.0, 0.0); self.n];
        for (idx, inv) in &self.blocks {
            for (row, &i) in idx.iter().enumerate() {
                let mut s = C64::new(0.0, 0.0);
                for (col, &j) in idx.iter().enumerate() {
                    s += inv[(row, col)] * r[j];
                }
                z[i] = s;
            }
        }
        z
    }
}

fn sparse_direct_solve(a: &SparseHermitian, b: &[C64]) -> Result<Vec<C64>> {
    use faer::linalg::solvers::Solve;
    use faer::sparse::{linalg::LltError, SparseColMat, Triplet};

    let n = a.dim();
    let mut triplets = Vec::with_capacity(a.nnz() / 2 + n);
    for i in 0..n {
        for (j, v) in a.row(i) {
            if j <= i {
                triplets.push(Triplet::new(i, j, v));
            }
        }
    }
    let mat = SparseColMat::<usize, C64>::try_new_from_triplets(n, n, &triplets)
        .expect("pattern indices are in range");
    let llt = mat.sp_cholesky(faer::Side::Lower).map_err(|e| match e {
        LltError::Numeric(faer::linalg::cholesky::llt::factor::LltError::NonPositivePivot { index }) => {
            Error::NotPositiveDefinite { pivot: index }
        }
        LltError::Generic(e) => Error::FactorizationFailed(format!("{e:?}")),
    })?;
    let mut x = faer::Mat::<C64>::from_fn(n, 1, |i, _| b[i]);
    llt.solve_in_place(x.as_mut());
    Ok((0..n).map(|i| x[(i, 0)]).collect())
}

/// Dense Hermitian solve via Cholesky of the diagonally scaled matrix.
fn dense_solve(a: &SparseHermitian, b: &[C64]) -> Result<Vec<C64>> {
    let n = a.dim();
    let mut d = vec![0.0; n];
    for (i, di) in d.iter_mut().enumerate() {
        let aii = a.get(i, i).re;
        if !(aii > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: i });
        }
        *di = 1.0 / aii.sqrt();
    }
    // row-major lower triangle, rows contiguous for the inner products
    let mut l = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for (j, v) in a.row(i) {
            if j <= i {
                l[i * n + j] = v * (d[i] * d[j]);
            }
        }
    }
    for j in 0..n {
        let tail = &mut l[j * n..];
        let row_j = &mut tail[..n];
        let s: f64 = row_j[..j].iter().map(|z| z.norm_sqr()).sum();
        let djj = row_j[j].re - s;
        if !(djj > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let ljj = djj.sqrt();
        row_j[j] = C64::new(ljj, 0.0);
        let (row_j, rest) = tail.split_at_mut(n);
        for row_i in rest.chunks_mut(n) {
            let s: C64 = row_i[..j].iter().zip(&row_j[..j]).map(|(a, b)| a * b.conj()).sum();
            row_i[j] = (row_i[j] - s) / ljj;
        }
    }
    let mut y: Vec<C64> = b.iter().zip(&d).map(|(b, d)| b * d).collect();
    for i in 0..n {
        let s: C64 = (0..i).map(|k| l[i * n + k] * y[k]).sum();
        y[i] = (y[i] - s) / l[i * n + i];
    }
    for i in (0..n).rev() {
        let s: C64 = (i + 1..n).map(|k| l[k * n + i].conj() * y[k]).sum();
        y[i] = (y[i] - s) / l[i * n + i];
    }
    Ok(y.iter().zip(&d).map(|(y, d)| y * d).collect())
}
