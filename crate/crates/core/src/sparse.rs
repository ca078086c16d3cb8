//! Minimal sparse matrices: canonical triplet form for assembly and
//! compressed-sparse-column form for the solver's linear algebra.

use ndarray::Array2;

/// One nonzero entry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Triplet {
    pub row: usize,
    pub col: usize,
    pub val: f64,
}

/// Sparse matrix in canonical triplet form: entries sorted by (row, col),
/// duplicates summed, exact zeros dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    entries: Vec<Triplet>,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> SparseMatrix {
        SparseMatrix { nrows, ncols, entries: Vec::new() }
    }

    pub fn identity(n: usize) -> SparseMatrix {
        SparseMatrix {
            nrows: n,
            ncols: n,
            entries: (0..n).map(|i| Triplet { row: i, col: i, val: 1.0 }).collect(),
        }
    }

    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> SparseMatrix {
        let mut entries: Vec<Triplet> = triplets
            .into_iter()
            .map(|(row, col, val)| {
                debug_assert!(row < nrows && col < ncols, "triplet out of bounds");
                Triplet { row, col, val }
            })
            .collect();
        entries.sort_by_key(|t| (t.row, t.col));
        let mut out: Vec<Triplet> = Vec::with_capacity(entries.len());
        for t in entries {
            match out.last_mut() {
                Some(last) if last.row == t.row && last.col == t.col => last.val += t.val,
                _ => out.push(t),
            }
        }
        out.retain(|t| t.val != 0.0);
        SparseMatrix { nrows, ncols, entries: out }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Triplet] {
        &self.entries
    }

    pub fn scale(&self, k: f64) -> SparseMatrix {
        SparseMatrix::from_triplets(
            self.nrows,
            self.ncols,
            self.entries.iter().map(|t| (t.row, t.col, t.val * k)),
        )
    }

    pub fn neg(&self) -> SparseMatrix {
        self.scale(-1.0)
    }

    pub fn add(&self, other: &SparseMatrix) -> SparseMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        SparseMatrix::from_triplets(
            self.nrows,
            self.ncols,
            self.entries
                .iter()
                .chain(other.entries.iter())
                .map(|t| (t.row, t.col, t.val)),
        )
    }

    /// Entries bucketed by row, columns sorted within each row.
    pub fn rows(&self) -> Vec<Vec<(usize, f64)>> {
        let mut rows = vec![Vec::new(); self.nrows];
        for t in &self.entries {
            rows[t.row].push((t.col, t.val));
        }
        rows
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for t in &self.entries {
            y[t.row] += t.val * x[t.col];
        }
        y
    }

    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for t in &self.entries {
            y[t.col] += t.val * x[t.row];
        }
        y
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.nrows, self.ncols));
        for t in &self.entries {
            m[(t.row, t.col)] = t.val;
        }
        m
    }
}

/// Dense-times-sparse product `C * T`.
pub fn dense_left_mul(c: &Array2<f64>, t: &SparseMatrix) -> SparseMatrix {
    assert_eq!(c.ncols(), t.nrows());
    let mut acc: std::collections::BTreeMap<(usize, usize), f64> = std::collections::BTreeMap::new();
    for e in t.entries() {
        for i in 0..c.nrows() {
            let v = c[(i, e.row)] * e.val;
            if v != 0.0 {
                *acc.entry((i, e.col)).or_insert(0.0) += v;
            }
        }
    }
    SparseMatrix::from_triplets(c.nrows(), t.ncols(), acc.into_iter().map(|((r, c), v)| (r, c, v)))
}

// ---------------------------------------------------------------------------
// Compressed sparse column

#[derive(Clone, Debug)]
pub struct Csc {
    pub nrows: usize,
    pub ncols: usize,
    pub colptr: Vec<usize>,
    pub rowind: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csc {
    /// Build from triplets; duplicates are summed, rows sorted per column.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Csc {
        let mut entries: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        entries.sort_by_key(|&(r, c, _)| (c, r));
        let mut colptr = vec![0usize; ncols + 1];
        let mut rowind: Vec<usize> = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            debug_assert!(r < nrows && c < ncols);
            if last == Some((c, r)) {
                *values.last_mut().unwrap() += v;
            } else {
                colptr[c + 1] += 1;
                rowind.push(r);
                values.push(v);
                last = Some((c, r));
            }
        }
        for j in 0..ncols {
            colptr[j + 1] += colptr[j];
        }
        Csc { nrows, ncols, colptr, rowind, values }
    }

    pub fn from_sparse(m: &SparseMatrix) -> Csc {
        Csc::from_triplets(m.nrows(), m.ncols(), m.entries().iter().map(|t| (t.row, t.col, t.val)))
    }

    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.colptr[j]..self.colptr[j + 1]).map(move |p| (self.rowind[p], self.values[p]))
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..self.ncols {
            let xj = x[j];
            if xj != 0.0 {
                for p in self.colptr[j]..self.colptr[j + 1] {
                    y[self.rowind[p]] += self.values[p] * xj;
                }
            }
        }
    }
}
