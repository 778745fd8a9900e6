//! Sparse matrices, conjugate gradients, and a banded Cholesky factorization
//! for the repeated solves of a time loop.

use crate::error::{Error, Result};

/// Compressed-sparse-row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

/// Accumulates `(row, col, value)` entries; duplicates are summed.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n && col < self.n);
        self.entries.push((row, col, value));
    }

    /// Bucket by row, then sort each (short) row by column and merge.
    pub fn build(self) -> SparseOperator {
        let n = self.n;
        let mut start = vec![0usize; n + 1];
        for &(r, _, _) in &self.entries {
            start[r + 1] += 1;
        }
        for r in 0..n {
            start[r + 1] += start[r];
        }
        let mut fill = start.clone();
        let mut bucket = vec![(0usize, 0.0f64); self.entries.len()];
        for (r, c, v) in self.entries {
            bucket[fill[r]] = (c, v);
            fill[r] += 1;
        }
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(bucket.len());
        let mut vals: Vec<f64> = Vec::with_capacity(bucket.len());
        for r in 0..n {
            let row = &mut bucket[start[r]..start[r + 1]];
            row.sort_unstable_by_key(|&(c, _)| c);
            let first = cols.len();
            for &(c, v) in row.iter() {
                if cols.len() > first && cols[cols.len() - 1] == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr[r + 1] = cols.len();
        }
        SparseOperator { n, row_ptr, cols, vals }
    }
}

impl SparseOperator {
    pub fn identity(n: usize) -> Self {
        Self { n, row_ptr: (0..=n).collect(), cols: (0..n).collect(), vals: vec![1.0; n] }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            y[r] = s;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|r| self.get(r, r)).collect()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => 0.0,
        }
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut m: f64 = 0.0;
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m = m.max((self.vals[k] - self.get(self.cols[k], r)).abs());
            }
        }
        m
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        let mut b = 0;
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                b = b.max(r.abs_diff(self.cols[k]));
            }
        }
        b
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[k])] += self.vals[k];
            }
        }
        m
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four independent partial sums let the loop vectorize
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ta, tb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ta.iter().zip(tb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preconditioner {
    None,
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Conjugate gradients for symmetric positive definite `a`, unpreconditioned.
/// Stops when `‖r‖ ≤ tol ‖b‖`.
pub fn solve_spd(a: &SparseOperator, b: &[f64], tol: f64, maxit: usize) -> Result<Vec<f64>> {
    pcg(a, b, None, Preconditioner::None, tol, maxit).map(|(x, _)| x)
}

/// Preconditioned CG starting from `x0` (zero if absent).
pub fn pcg(
    a: &SparseOperator,
    b: &[f64],
    x0: Option<&[f64]>,
    pre: Preconditioner,
    tol: f64,
    maxit: usize,
) -> Result<(Vec<f64>, SolveStats)> {
    let n = a.n;
    if b.len() != n {
        return Err(Error::Structural(format!("right-hand side has length {}, operator has {n} rows", b.len())));
    }
    let bnorm = norm(b);
    let mut x = match x0 {
        Some(x0) => x0.to_vec(),
        None => vec![0.0; n],
    };
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], SolveStats { iterations: 0, residual: 0.0 }));
    }
    let inv_diag: Vec<f64> = match pre {
        Preconditioner::None => Vec::new(),
        Preconditioner::Jacobi => a.diagonal().into_iter().map(|d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect(),
    };
    let precond = |r: &[f64], z: &mut Vec<f64>| match pre {
        Preconditioner::None => z.copy_from_slice(r),
        Preconditioner::Jacobi => {
            for ((zi, ri), di) in z.iter_mut().zip(r).zip(&inv_diag) {
                *zi = ri * di;
            }
        }
    };
    let mut r = a.matvec(&x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut rel = norm(&r) / bnorm;
    for it in 0..maxit {
        if rel <= tol {
            return Ok((x, SolveStats { iterations: it, residual: rel }));
        }
        a.matvec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::NotPositiveDefinite { row: it, pivot: pap });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rel = norm(&r) / bnorm;
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if rel <= tol {
        return Ok((x, SolveStats { iterations: maxit, residual: rel }));
    }
    Err(Error::Convergence { iterations: maxit, residual: rel })
}

/// Cholesky factor `L` of a symmetric positive definite banded matrix, stored
/// row-wise: row `i` holds `L[i, i-bw..=i]`.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(a: &SparseOperator) -> Result<Self> {
        let n = a.n;
        let bw = a.bandwidth();
        let w = bw + 1;
        let mut data = vec![0.0; n * w];
        // lower triangle of A into band storage; column j of row i sits at bw - (i - j)
        for r in 0..n {
            for k in a.row_ptr[r]..a.row_ptr[r + 1] {
                let c = a.cols[k];
                if c <= r {
                    data[r * w + bw - (r - c)] += a.vals[k];
                }
            }
        }
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let ri = &data[i * w + bw - (i - k0)..i * w + bw - (i - j)];
                let rj = &data[j * w + bw - (j - k0)..j * w + bw];
                let s = data[i * w + bw - (i - j)] - dot(ri, rj);
                if j == i {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite { row: i, pivot: s });
                    }
                    data[i * w + bw] = s.sqrt();
                } else {
                    data[i * w + bw - (i - j)] = s / data[j * w + bw];
                }
            }
        }
        Ok(Self { n, bw, data })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::Structural(format!("right-hand side has length {}, factor has {} rows", b.len(), self.n)));
        }
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.data[i * w + bw - (i - k)] * y[k];
            }
            y[i] = s / self.data[i * w + bw];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n.min(i + bw + 1) {
                s -= self.data[k * w + bw - (k - i)] * y[k];
            }
            y[i] = s / self.data[i * w + bw];
        }
        Ok(y)
    }
}

/// How an SPD system is solved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverKind {
    Cholesky,
    Cg { pre: Preconditioner, tol: f64, maxit: Option<usize> },
}

/// An SPD operator prepared for repeated solves.
#[derive(Debug, Clone)]
pub enum SpdSolver {
    Direct(BandedCholesky),
    Iterative { op: SparseOperator, pre: Preconditioner, tol: f64, maxit: usize },
}

impl SpdSolver {
    pub fn new(op: SparseOperator, kind: SolverKind) -> Result<Self> {
        Ok(match kind {
            SolverKind::Cholesky => SpdSolver::Direct(BandedCholesky::factor(&op)?),
            SolverKind::Cg { pre, tol, maxit } => {
                let maxit = maxit.unwrap_or(10 * op.n);
                SpdSolver::Iterative { op, pre, tol, maxit }
            }
        })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        match self {
            SpdSolver::Direct(ch) => ch.solve(b),
            SpdSolver::Iterative { op, pre, tol, maxit } => pcg(op, b, None, *pre, *tol, *maxit).map(|(x, _)| x),
        }
    }
}
