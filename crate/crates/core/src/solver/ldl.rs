//! Sparse LDL^T factorization, up-looking with an elimination tree.
//!
//! No numerical pivoting: the KKT matrices this solver factorizes are
//! symmetric quasi-definite, for which LDL^T exists under any symmetric
//! permutation. Natural ordering is used; the systems arising from template
//! lowering are arrowhead-sparse and fill stays near the input size.

use crate::sparse::Csc;

const NONE: usize = usize::MAX;

#[derive(Debug, thiserror::Error)]
pub enum FactorError {
    #[error("zero or non-finite pivot at column {0}")]
    BadPivot(usize),
}

pub struct LdlFactorization {
    n: usize,
    /// Column j holds (row, L[row, j]) pairs with row > j, rows ascending.
    cols: Vec<Vec<(usize, f64)>>,
    d: Vec<f64>,
}

/// Factorize a symmetric matrix given by its upper triangle (including the
/// diagonal) in CSC form.
pub fn factorize(upper: &Csc) -> Result<LdlFactorization, FactorError> {
    let n = upper.ncols;
    assert_eq!(upper.nrows, n);

    // elimination tree (Liu's algorithm with path compression)
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for k in 0..n {
        for (i, _) in upper.col(k) {
            let mut i = i;
            while i < k {
                let next = ancestor[i];
                ancestor[i] = k;
                if next == NONE {
                    parent[i] = k;
                    break;
                }
                i = next;
            }
        }
    }

    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut d = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut pattern = vec![0usize; n];
    let mut flag = vec![NONE; n];

    for k in 0..n {
        let mut top = n;
        flag[k] = k;
        d[k] = 0.0;
        for (i, v) in upper.col(k) {
            if i > k {
                continue;
            }
            if i == k {
                d[k] += v;
                continue;
            }
            y[i] += v;
            // walk toward the root collecting the new part of the path;
            // reverse it onto pattern[top..] so elimination runs bottom-up
            let mut len = 0;
            let mut ii = i;
            while ii != NONE && ii < k && flag[ii] != k {
                pattern[len] = ii;
                len += 1;
                flag[ii] = k;
                ii = parent[ii];
            }
            while len > 0 {
                len -= 1;
                top -= 1;
                pattern[top] = pattern[len];
            }
        }
        // sparse triangular solve along the pattern
        for t in top..n {
            let i = pattern[t];
            let yi = y[i];
            y[i] = 0.0;
            let lki = yi / d[i];
            for &(r, lri) in &cols[i] {
                y[r] -= lri * yi;
            }
            d[k] -= lki * yi;
            cols[i].push((k, lki));
        }
        if d[k] == 0.0 || !d[k].is_finite() {
            return Err(FactorError::BadPivot(k));
        }
    }
    Ok(LdlFactorization { n, cols, d })
}

impl LdlFactorization {
    /// Solve `(L D L^T) x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        for j in 0..self.n {
            let xj = x[j];
            if xj != 0.0 {
                for &(r, l) in &self.cols[j] {
                    x[r] -= l * xj;
                }
            }
        }
        for j in 0..self.n {
            x[j] /= self.d[j];
        }
        for j in (0..self.n).rev() {
            let mut s = x[j];
            for &(r, l) in &self.cols[j] {
                s -= l * x[r];
            }
            x[j] = s;
        }
    }

    pub fn l_nnz(&self) -> usize {
        self.cols.iter().map(|c| c.len()).sum()
    }
}
