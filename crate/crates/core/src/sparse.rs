//! Compressed-column matrices and a left-looking sparse LU with threshold
//! partial pivoting (Gilbert-Peierls).
//!
//! The factorization takes a fill-reducing column order from the caller and
//! picks pivot rows on the fly, preferring the row with the same index as
//! the column whenever it is within `pivot_tol` of the column maximum. Rows
//! are equilibrated by their max-norm before factoring.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum SparseError {
    Singular { column: usize },
    DimensionMismatch { expected: usize, found: usize },
    IndexOutOfRange { row: usize, col: usize },
    /// Iterative refinement did not reach the requested accuracy.
    Inaccurate { relative_residual: f64 },
}

impl fmt::Display for SparseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SparseError::Singular { column } => write!(f, "matrix is singular (no pivot in column {column})"),
            SparseError::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            SparseError::IndexOutOfRange { row, col } => write!(f, "entry ({row}, {col}) out of range"),
            SparseError::Inaccurate { relative_residual } => {
                write!(f, "linear solve residual {relative_residual:e} above tolerance")
            }
        }
    }
}

impl core::error::Error for SparseError {}

/// Coordinate-format accumulator; duplicates are summed on compression.
#[derive(Debug, Clone, Default)]
pub struct Triplets {
    nrows: usize,
    ncols: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Triplets {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Triplets { nrows, ncols, ..Default::default() }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Triplets {
            nrows,
            ncols,
            rows: Vec::with_capacity(cap),
            cols: Vec::with_capacity(cap),
            vals: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.rows.push(row);
        self.cols.push(col);
        self.vals.push(val);
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn to_csc(&self) -> Result<CscMatrix, SparseError> {
        let mut counts = vec![0usize; self.ncols + 1];
        for (&r, &c) in self.rows.iter().zip(&self.cols) {
            if r >= self.nrows || c >= self.ncols {
                return Err(SparseError::IndexOutOfRange { row: r, col: c });
            }
            counts[c + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let nnz = counts[self.ncols];
        let mut next = counts.clone();
        let mut ri = vec![0usize; nnz];
        let mut vx = vec![0.0; nnz];
        for ((&r, &c), &v) in self.rows.iter().zip(&self.cols).zip(&self.vals) {
            let p = next[c];
            ri[p] = r;
            vx[p] = v;
            next[c] += 1;
        }
        // sum duplicates within each column
        let mut mark = vec![usize::MAX; self.nrows];
        let mut colptr = vec![0usize; self.ncols + 1];
        let mut out = 0usize;
        for j in 0..self.ncols {
            let start = out;
            for p in counts[j]..counts[j + 1] {
                let r = ri[p];
                if mark[r] != usize::MAX && mark[r] >= start {
                    vx[mark[r]] += vx[p];
                } else {
                    mark[r] = out;
                    ri[out] = r;
                    vx[out] = vx[p];
                    out += 1;
                }
            }
            colptr[j + 1] = out;
        }
        ri.truncate(out);
        vx.truncate(out);
        Ok(CscMatrix { nrows: self.nrows, ncols: self.ncols, colptr, rowind: ri, values: vx })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    nrows: usize,
    ncols: usize,
    colptr: Vec<usize>,
    rowind: Vec<usize>,
    values: Vec<f64>,
}

impl CscMatrix {
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(row, value)` pairs of column `j`.
    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.colptr[j]..self.colptr[j + 1];
        self.rowind[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.column(col).filter(|(r, _)| *r == row).map(|(_, v)| v).sum()
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        for (j, &xj) in x.iter().enumerate().take(self.ncols) {
            for (r, v) in self.column(j) {
                y[r] += v * xj;
            }
        }
        y
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let mut rows = vec![0.0; self.nrows];
        for (r, v) in self.rowind.iter().zip(&self.values) {
            rows[*r] += v.abs();
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for j in 0..self.ncols {
            for (r, v) in self.column(j) {
                d[r][j] += v;
            }
        }
        d
    }
}

/// `L U = P D A Q` with `D` the row equilibration.
#[derive(Debug, Clone)]
pub struct SparseLu {
    n: usize,
    row_scale: Vec<f64>,
    /// pivot position of each original row
    pinv: Vec<usize>,
    col_order: Vec<usize>,
    l: CscMatrix,
    u: CscMatrix,
}

impl SparseLu {
    /// Factors a square matrix. `col_order[k]` is the column eliminated at
    /// step `k`; pass the identity for natural order. Column `j` prefers
    /// pivot row `j`.
    pub fn factor(a: &CscMatrix, col_order: &[usize], pivot_tol: f64) -> Result<Self, SparseError> {
        let identity: Vec<usize> = (0..a.ncols).collect();
        Self::factor_with_rows(a, col_order, &identity, pivot_tol)
    }

    /// As [`SparseLu::factor`], with column `j` preferring pivot row
    /// `preferred_row[j]` whenever that row is still free and its entry is
    /// within `pivot_tol` of the column maximum.
    pub fn factor_with_rows(
        a: &CscMatrix,
        col_order: &[usize],
        preferred_row: &[usize],
        pivot_tol: f64,
    ) -> Result<Self, SparseError> {
        let n = a.ncols;
        if a.nrows != n {
            return Err(SparseError::DimensionMismatch { expected: n, found: a.nrows });
        }
        for len in [col_order.len(), preferred_row.len()] {
            if len != n {
                return Err(SparseError::DimensionMismatch { expected: n, found: len });
            }
        }

        let mut row_scale = vec![0.0_f64; n];
        for (&r, &v) in a.rowind.iter().zip(&a.values) {
            row_scale[r] = row_scale[r].max(v.abs());
        }
        for (r, s) in row_scale.iter_mut().enumerate() {
            if *s == 0.0 {
                return Err(SparseError::Singular { column: r });
            }
            *s = 1.0 / *s;
        }

        const UNSET: usize = usize::MAX;
        let cap = 4 * a.nnz() + n;
        let mut lp = vec![0usize; n + 1];
        let mut li: Vec<usize> = Vec::with_capacity(cap);
        let mut lx: Vec<f64> = Vec::with_capacity(cap);
        let mut up = vec![0usize; n + 1];
        let mut ui: Vec<usize> = Vec::with_capacity(cap);
        let mut ux: Vec<f64> = Vec::with_capacity(cap);

        let mut pinv = vec![UNSET; n];
        let mut x = vec![0.0; n];
        let mut reach = Reach::new(n);

        for k in 0..n {
            lp[k] = li.len();
            up[k] = ui.len();
            let col = col_order[k];

            // x = L \ (D A(:, col)), with L's row indices still unpermuted
            let top = reach.compute(a, col, &lp, &li, &pinv);
            for &i in &reach.xi[top..] {
                x[i] = 0.0;
            }
            for (r, v) in a.column(col) {
                x[r] = v * row_scale[r];
            }
            for &j in &reach.xi[top..] {
                let jj = pinv[j];
                if jj == UNSET {
                    continue;
                }
                let xj = x[j];
                // first entry of each L column is the unit diagonal
                for p in lp[jj] + 1..lp[jj + 1] {
                    x[li[p]] -= lx[p] * xj;
                }
            }

            let mut ipiv = UNSET;
            let mut amax = -1.0;
            for &i in &reach.xi[top..] {
                if pinv[i] == UNSET {
                    let t = x[i].abs();
                    if t > amax {
                        amax = t;
                        ipiv = i;
                    }
                } else {
                    ui.push(pinv[i]);
                    ux.push(x[i]);
                }
            }
            if ipiv == UNSET || !(amax > 0.0) {
                return Err(SparseError::Singular { column: col });
            }
            let want = preferred_row[col];
            if want < n && pinv[want] == UNSET && x[want].abs() >= amax * pivot_tol {
                ipiv = want;
            }
            let pivot = x[ipiv];
            ui.push(k);
            ux.push(pivot);
            pinv[ipiv] = k;
            li.push(ipiv);
            lx.push(1.0);
            for &i in &reach.xi[top..] {
                if pinv[i] == UNSET {
                    li.push(i);
                    lx.push(x[i] / pivot);
                }
                x[i] = 0.0;
            }
        }
        lp[n] = li.len();
        up[n] = ui.len();
        for r in li.iter_mut() {
            *r = pinv[*r];
        }
        let l = CscMatrix { nrows: n, ncols: n, colptr: lp, values: lx, rowind: li };
        let u = CscMatrix { nrows: n, ncols: n, colptr: up, values: ux, rowind: ui };
        Ok(SparseLu { n, row_scale, pinv, col_order: col_order.to_vec(), l, u })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Nonzeros in `L + U`.
    pub fn fill(&self) -> usize {
        self.l.nnz() + self.u.nnz()
    }

    /// Solves `A x = b` with the stored factors.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, SparseError> {
        if b.len() != self.n {
            return Err(SparseError::DimensionMismatch { expected: self.n, found: b.len() });
        }
        let mut y = vec![0.0; self.n];
        for (i, &bi) in b.iter().enumerate() {
            y[self.pinv[i]] = bi * self.row_scale[i];
        }
        // unit lower, diagonal stored first
        for j in 0..self.n {
            let yj = y[j];
            if yj != 0.0 {
                for p in self.l.colptr[j] + 1..self.l.colptr[j + 1] {
                    y[self.l.rowind[p]] -= self.l.values[p] * yj;
                }
            }
        }
        // upper, diagonal stored last
        for j in (0..self.n).rev() {
            let last = self.u.colptr[j + 1] - 1;
            y[j] /= self.u.values[last];
            let yj = y[j];
            if yj != 0.0 {
                for p in self.u.colptr[j]..last {
                    y[self.u.rowind[p]] -= self.u.values[p] * yj;
                }
            }
        }
        let mut x = vec![0.0; self.n];
        for (k, &c) in self.col_order.iter().enumerate() {
            x[c] = y[k];
        }
        Ok(x)
    }
}

/// Depth-first reach of a sparse right-hand side through the partial `L`.
struct Reach {
    xi: Vec<usize>,
    stack: Vec<usize>,
    resume: Vec<usize>,
    marked: Vec<bool>,
}

impl Reach {
    fn new(n: usize) -> Self {
        Reach { xi: vec![0; n], stack: Vec::with_capacity(n), resume: vec![0; n], marked: vec![false; n] }
    }

    /// Returns `top` so that `xi[top..]` lists the reached rows in
    /// topological order. Columns `0..k` of `L` are complete and `lp[k]` is
    /// already set.
    fn compute(&mut self, a: &CscMatrix, col: usize, lp: &[usize], li: &[usize], pinv: &[usize]) -> usize {
        let n = self.xi.len();
        let mut top = n;
        let col_end = |jj: usize| lp[jj + 1];
        for (start, _) in a.column(col) {
            if self.marked[start] {
                continue;
            }
            self.stack.clear();
            self.stack.push(start);
            while let Some(&j) = self.stack.last() {
                let jj = pinv[j];
                if !self.marked[j] {
                    self.marked[j] = true;
                    self.resume[j] = if jj == usize::MAX { 0 } else { lp[jj] };
                }
                let end = if jj == usize::MAX { 0 } else { col_end(jj) };
                let mut descended = false;
                let mut p = self.resume[j];
                while p < end {
                    let i = li[p];
                    p += 1;
                    if !self.marked[i] {
                        self.resume[j] = p;
                        self.stack.push(i);
                        descended = true;
                        break;
                    }
                }
                if !descended {
                    self.resume[j] = end;
                    self.stack.pop();
                    top -= 1;
                    self.xi[top] = j;
                }
            }
        }
        for &i in &self.xi[top..] {
            self.marked[i] = false;
        }
        top
    }
}

/// Solves `A x = b`, refining until `|A x - b|_inf <= rel_tol |b|_inf`.
///
/// When `A` is ill-conditioned and `x` large, that bound can sit below the
/// rounding error of evaluating `A x` itself. If refinement stops improving,
/// the result is accepted as long as its normwise backward error
/// `|A x - b| / (|A| |x| + |b|)` is within `rel_tol`.
pub fn solve_refined(
    a: &CscMatrix,
    lu: &SparseLu,
    b: &[f64],
    rel_tol: f64,
    max_refine: usize,
) -> Result<Vec<f64>, SparseError> {
    let mut x = lu.solve(b)?;
    let bnorm = crate::math::max_abs(b);
    if bnorm == 0.0 {
        return Ok(x);
    }
    let anorm = a.norm_inf();
    let mut prev = f64::INFINITY;
    let mut rel = f64::INFINITY;
    for _ in 0..=max_refine {
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let rnorm = crate::math::max_abs(&r);
        rel = rnorm / bnorm;
        if rel <= rel_tol {
            return Ok(x);
        }
        let backward = rnorm / (anorm * crate::math::max_abs(&x) + bnorm);
        if rnorm > 0.5 * prev {
            if backward <= rel_tol {
                return Ok(x);
            }
            break;
        }
        prev = rnorm;
        let dx = lu.solve(&r)?;
        for (xi, d) in x.iter_mut().zip(dx) {
            *xi += d;
        }
    }
    Err(SparseError::Inaccurate { relative_residual: rel })
}
