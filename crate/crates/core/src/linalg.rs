// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! Small dense linear-algebra helpers shared by the estimators.

use nalgebra::{DMatrix, DVector};

/// Squared residual norm (relative to the column norm) under which a column
/// counts as a linear combination of the columns before it.
pub const COLLINEARITY_TOL: f64 = 1e-10;

/// `X' diag(w) X`.
///
/// Fixed-effect designs are mostly zeros (two country columns per dyad), so
/// sparse designs accumulate row outer products over their nonzeros only.
pub fn weighted_gram(x: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    DesignOp::new(x).gram(w)
}

fn dense_weighted_gram(x: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let mut xw = x.clone();
    for (r, &wr) in w.iter().enumerate() {
        xw.row_mut(r).scale_mut(wr);
    }
    x.tr_mul(&xw)
}

/// Products with a fixed design matrix, through a compressed-row copy when
/// the matrix is sparse enough to pay for it.
pub(crate) struct DesignOp<'a> {
    x: &'a DMatrix<f64>,
    sparse: Option<RowSparse>,
}

impl<'a> DesignOp<'a> {
    pub fn new(x: &'a DMatrix<f64>) -> Self {
        let rows = RowSparse::new(x);
        let sparse = rows.is_sparse().then_some(rows);
        Self { x, sparse }
    }

    pub fn gram(&self, w: &[f64]) -> DMatrix<f64> {
        match &self.sparse {
            Some(s) => s.weighted_gram(w),
            None => dense_weighted_gram(self.x, w),
        }
    }

    /// `X beta`.
    pub fn mul_vec(&self, beta: &DVector<f64>) -> Vec<f64> {
        match &self.sparse {
            Some(s) => s.mul_vec(beta),
            None => (self.x * beta).iter().copied().collect(),
        }
    }

    /// `X' v`.
    pub fn tr_mul_vec(&self, v: &[f64]) -> DVector<f64> {
        match &self.sparse {
            Some(s) => s.tr_mul_vec(v),
            None => tr_mul_vec(self.x, v),
        }
    }

    pub fn quad_form(&self, r: usize, m: &DMatrix<f64>) -> f64 {
        match &self.sparse {
            Some(s) => s.quad_form(r, m),
            None => {
                let xr = self.x.row(r);
                (xr * m).dot(&xr)
            }
        }
    }
}

/// Compressed-row copy of a design matrix.
pub(crate) struct RowSparse {
    ncols: usize,
    indptr: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<f64>,
}

impl RowSparse {
    pub fn new(x: &DMatrix<f64>) -> Self {
        let (n, k) = x.shape();
        // count per row first; the matrix is column-major
        let mut indptr = vec![0usize; n + 1];
        for c in 0..k {
            for (r, &v) in x.column(c).iter().enumerate() {
                if v != 0.0 {
                    indptr[r + 1] += 1;
                }
            }
        }
        for r in 0..n {
            indptr[r + 1] += indptr[r];
        }
        let nnz = indptr[n];
        let mut idx = vec![0usize; nnz];
        let mut val = vec![0.0; nnz];
        let mut next = indptr[..n].to_vec();
        for c in 0..k {
            for (r, &v) in x.column(c).iter().enumerate() {
                if v != 0.0 {
                    idx[next[r]] = c;
                    val[next[r]] = v;
                    next[r] += 1;
                }
            }
        }
        Self {
            ncols: k,
            indptr,
            idx,
            val,
        }
    }

    /// Worth using when under a third of the entries are nonzero.
    pub fn is_sparse(&self) -> bool {
        let n = self.indptr.len() - 1;
        3 * self.idx.len() < n * self.ncols
    }

    fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        (&self.idx[a..b], &self.val[a..b])
    }

    pub fn weighted_gram(&self, w: &[f64]) -> DMatrix<f64> {
        let k = self.ncols;
        let mut g = DMatrix::zeros(k, k);
        for (r, &wr) in w.iter().enumerate() {
            if wr == 0.0 {
                continue;
            }
            let (idx, val) = self.row(r);
            for (p, (&a, &va)) in idx.iter().zip(val).enumerate() {
                let s = wr * va;
                // upper triangle only (idx is ascending)
                for (&b, &vb) in idx[p..].iter().zip(&val[p..]) {
                    g[(a, b)] += s * vb;
                }
            }
        }
        for a in 0..k {
            for b in a + 1..k {
                g[(b, a)] = g[(a, b)];
            }
        }
        g
    }

    pub fn mul_vec(&self, beta: &DVector<f64>) -> Vec<f64> {
        (0..self.indptr.len() - 1)
            .map(|r| {
                let (idx, val) = self.row(r);
                idx.iter().zip(val).map(|(&c, &v)| v * beta[c]).sum()
            })
            .collect()
    }

    pub fn tr_mul_vec(&self, v: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(self.ncols);
        for (r, &vr) in v.iter().enumerate() {
            let (idx, val) = self.row(r);
            for (&c, &x) in idx.iter().zip(val) {
                out[c] += x * vr;
            }
        }
        out
    }

    /// `x_r' M x_r` for a symmetric `M`.
    pub fn quad_form(&self, r: usize, m: &DMatrix<f64>) -> f64 {
        let (idx, val) = self.row(r);
        let mut s = 0.0;
        for (&a, &va) in idx.iter().zip(val) {
            for (&b, &vb) in idx.iter().zip(val) {
                s += va * vb * m[(a, b)];
            }
        }
        s
    }
}

/// `X' v`.
pub fn tr_mul_vec(x: &DMatrix<f64>, v: &[f64]) -> DVector<f64> {
    x.tr_mul(&DVector::from_column_slice(v))
}

/// Splits column indices into a linearly independent prefix-greedy set and
/// the columns that lie in the span of the ones kept before them.
///
/// Columns are scanned in order; a column is kept if its residual after
/// projecting onto the kept columns has relative squared norm above
/// [`COLLINEARITY_TOL`]. All-zero columns are always dependent.
pub fn greedy_independent_columns(x: &DMatrix<f64>) -> (Vec<usize>, Vec<usize>) {
    let p = x.ncols();
    let norms: Vec<f64> = (0..p).map(|c| x.column(c).norm()).collect();
    let gram = weighted_gram(x, &vec![1.0; x.nrows()]);
    // Incremental Cholesky of the normalized Gram matrix restricted to kept columns.
    let mut kept: Vec<usize> = Vec::new();
    let mut dropped = Vec::new();
    let mut l_rows: Vec<Vec<f64>> = Vec::new();
    for c in 0..p {
        if norms[c] == 0.0 {
            dropped.push(c);
            continue;
        }
        let mut row = Vec::with_capacity(kept.len());
        for (k, &kc) in kept.iter().enumerate() {
            let g = gram[(c, kc)] / (norms[c] * norms[kc]);
            let dot: f64 = (0..k).map(|t| row[t] * l_rows[k][t]).sum();
            row.push((g - dot) / l_rows[k][k]);
        }
        let diag = 1.0 - row.iter().map(|v| v * v).sum::<f64>();
        if diag <= COLLINEARITY_TOL {
            dropped.push(c);
            continue;
        }
        row.push(diag.sqrt());
        l_rows.push(row);
        kept.push(c);
    }
    (kept, dropped)
}

/// Result of a symmetric positive-definite solve.
pub struct SpdSolve {
    pub solution: DVector<f64>,
    /// A `1e-10` relative ridge had to be added to factorize.
    pub ridge_used: bool,
}

/// Solves `A x = b` for symmetric positive (semi)definite `A` with Jacobi
/// scaling. Adds a `1e-10` relative ridge only when the plain factorization
/// fails.
pub fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<SpdSolve> {
    let (scaled, d) = jacobi_scale(a);
    let rhs = b.component_mul(&d);
    if let Some(ch) = scaled.clone().cholesky() {
        let y = ch.solve(&rhs);
        return Some(SpdSolve {
            solution: y.component_mul(&d),
            ridge_used: false,
        });
    }
    let mut ridged = scaled;
    for i in 0..ridged.nrows() {
        ridged[(i, i)] += 1e-10;
    }
    let ch = ridged.cholesky()?;
    Some(SpdSolve {
        solution: ch.solve(&rhs).component_mul(&d),
        ridge_used: true,
    })
}

/// Inverse of a symmetric positive-definite matrix (Jacobi-scaled Cholesky).
pub fn inverse_spd(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let (scaled, d) = jacobi_scale(a);
    let inv = scaled.cholesky()?.inverse();
    let dm = DMatrix::from_diagonal(&d);
    Some(&dm * inv * &dm)
}

fn jacobi_scale(a: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let n = a.nrows();
    let d = DVector::from_fn(n, |i, _| {
        let v = a[(i, i)];
        if v > 0.0 {
            1.0 / v.sqrt()
        } else {
            1.0
        }
    });
    let scaled = DMatrix::from_fn(n, n, |i, j| a[(i, j)] * d[i] * d[j]);
    (scaled, d)
}
