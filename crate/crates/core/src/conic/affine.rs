//! Sparse affine functions of scalarized variables.
//!
//! An `AffineMap` represents `e(x_1..x_k) = sum_j T_j vec(x_j) + offset`,
//! where `vec` flattens in column-major order. Every affine atom acts on a
//! map as a row gather, a dense left/right multiplication, or a linear
//! combination, so lowering never touches expression values.

use std::collections::BTreeMap;

use ndarray::Array2;

use crate::expr::{Shape, VarId};
use crate::linalg;
use crate::sparse::SparseMatrix;

#[derive(Clone, Debug)]
pub struct AffineMap {
    pub shape: Shape,
    /// Per-variable coefficient blocks: rows index scalarized output entries,
    /// columns index scalarized variable entries.
    pub terms: BTreeMap<VarId, SparseMatrix>,
    /// Constant part, column-major, `shape.size()` entries.
    pub offset: Vec<f64>,
}

impl AffineMap {
    pub fn zero(shape: Shape) -> AffineMap {
        AffineMap { shape, terms: BTreeMap::new(), offset: vec![0.0; shape.size()] }
    }

    pub fn constant(offset: Vec<f64>, shape: Shape) -> AffineMap {
        assert_eq!(offset.len(), shape.size());
        AffineMap { shape, terms: BTreeMap::new(), offset }
    }

    pub fn constant_scalar(v: f64) -> AffineMap {
        AffineMap::constant(vec![v], Shape::scalar())
    }

    pub fn constant_dense(m: &Array2<f64>) -> AffineMap {
        AffineMap::constant(linalg::vec_cm(m), Shape::matrix(m.nrows(), m.ncols()))
    }

    /// The identity map of a variable.
    pub fn variable(id: VarId, shape: Shape) -> AffineMap {
        let mut terms = BTreeMap::new();
        terms.insert(id, SparseMatrix::identity(shape.size()));
        AffineMap { shape, terms, offset: vec![0.0; shape.size()] }
    }

    pub fn size(&self) -> usize {
        self.shape.size()
    }

    /// True when the map has no variable terms.
    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn offset_as_dense(&self) -> Array2<f64> {
        linalg::from_vec_cm(&self.offset, self.shape.rows, self.shape.cols)
    }

    pub fn scale(&self, k: f64) -> AffineMap {
        AffineMap {
            shape: self.shape,
            terms: self.terms.iter().map(|(v, t)| (*v, t.scale(k))).collect(),
            offset: self.offset.iter().map(|o| o * k).collect(),
        }
    }

    pub fn neg(&self) -> AffineMap {
        self.scale(-1.0)
    }

    /// Add a constant to every entry.
    pub fn shift(&self, delta: f64) -> AffineMap {
        AffineMap {
            shape: self.shape,
            terms: self.terms.clone(),
            offset: self.offset.iter().map(|o| o + delta).collect(),
        }
    }

    pub fn add(&self, other: &AffineMap) -> AffineMap {
        assert_eq!(self.shape, other.shape, "AffineMap::add shape mismatch");
        let mut terms = self.terms.clone();
        for (v, t) in &other.terms {
            match terms.get_mut(v) {
                Some(existing) => *existing = existing.add(t),
                None => {
                    terms.insert(*v, t.clone());
                }
            }
        }
        terms.retain(|_, t| t.nnz() > 0);
        let offset = self.offset.iter().zip(&other.offset).map(|(a, b)| a + b).collect();
        AffineMap { shape: self.shape, terms, offset }
    }

    pub fn sub(&self, other: &AffineMap) -> AffineMap {
        self.add(&other.neg())
    }

    /// Repeat a scalar map over every entry of `shape`.
    pub fn broadcast_to(&self, shape: Shape) -> AffineMap {
        assert!(self.shape.is_scalar(), "broadcast_to requires a scalar map");
        let picks = vec![(0usize, 0usize); shape.size()];
        AffineMap::gather(&[self], &picks, shape)
    }

    /// Build a map whose output row `r` copies row `picks[r].1` of map
    /// `picks[r].0`. The workhorse behind slicing, transpose, diag,
    /// concatenation, and cone-block stacking.
    pub fn gather(maps: &[&AffineMap], picks: &[(usize, usize)], shape: Shape) -> AffineMap {
        assert_eq!(picks.len(), shape.size());
        let mut var_cols: BTreeMap<VarId, usize> = BTreeMap::new();
        for m in maps {
            for (v, t) in &m.terms {
                var_cols.insert(*v, t.ncols());
            }
        }
        let row_tables: Vec<BTreeMap<VarId, Vec<Vec<(usize, f64)>>>> = maps
            .iter()
            .map(|m| m.terms.iter().map(|(v, t)| (*v, t.rows())).collect())
            .collect();
        let mut terms = BTreeMap::new();
        for (v, ncols) in var_cols {
            let mut trips = Vec::new();
            for (out_row, &(mi, sr)) in picks.iter().enumerate() {
                if let Some(rows) = row_tables[mi].get(&v) {
                    for &(c, val) in &rows[sr] {
                        trips.push((out_row, c, val));
                    }
                }
            }
            let sm = SparseMatrix::from_triplets(picks.len(), ncols, trips);
            if sm.nnz() > 0 {
                terms.insert(v, sm);
            }
        }
        let offset = picks.iter().map(|&(mi, sr)| maps[mi].offset[sr]).collect();
        AffineMap { shape, terms, offset }
    }

    /// Row selection from a single source map.
    pub fn select(&self, rows: &[usize], shape: Shape) -> AffineMap {
        let picks: Vec<(usize, usize)> = rows.iter().map(|&r| (0, r)).collect();
        AffineMap::gather(&[self], &picks, shape)
    }

    /// Scalar entry of the map.
    pub fn row(&self, r: usize) -> AffineMap {
        self.select(&[r], Shape::scalar())
    }

    /// Vertical concatenation of the scalarized entries, as a column vector.
    pub fn stack(parts: &[&AffineMap]) -> AffineMap {
        let total: usize = parts.iter().map(|m| m.size()).sum();
        let mut picks = Vec::with_capacity(total);
        for (mi, m) in parts.iter().enumerate() {
            for r in 0..m.size() {
                picks.push((mi, r));
            }
        }
        AffineMap::gather(parts, &picks, Shape::vector(total))
    }

    /// Sum of all entries, a scalar map.
    pub fn sum_rows(&self) -> AffineMap {
        let mut terms = BTreeMap::new();
        for (v, t) in &self.terms {
            let trips = t.entries().iter().map(|e| (0usize, e.col, e.val));
            let sm = SparseMatrix::from_triplets(1, t.ncols(), trips);
            if sm.nnz() > 0 {
                terms.insert(*v, sm);
            }
        }
        AffineMap {
            shape: Shape::scalar(),
            terms,
            offset: vec![self.offset.iter().sum()],
        }
    }

    /// Left multiplication by a constant matrix: `C * E` where `self` maps to
    /// an `m x n` value and `C` is `r x m`; uses `vec(C E) = (I_n (x) C) vec(E)`.
    pub fn left_mul_dense(&self, c: &Array2<f64>) -> AffineMap {
        let (m, n) = (self.shape.rows, self.shape.cols);
        let r = c.nrows();
        assert_eq!(c.ncols(), m, "left_mul_dense dimension mismatch");
        let out_shape = Shape::matrix(r, n);
        let mut terms = BTreeMap::new();
        for (v, t) in &self.terms {
            let mut trips = Vec::new();
            for e in t.entries() {
                let (row_e, col_e) = (e.row % m, e.row / m);
                for rr in 0..r {
                    let val = c[(rr, row_e)] * e.val;
                    if val != 0.0 {
                        trips.push((col_e * r + rr, e.col, val));
                    }
                }
            }
            let sm = SparseMatrix::from_triplets(out_shape.size(), t.ncols(), trips);
            if sm.nnz() > 0 {
                terms.insert(*v, sm);
            }
        }
        let offset = linalg::vec_cm(&c.dot(&self.offset_as_dense()));
        AffineMap { shape: out_shape, terms, offset }
    }

    /// Right multiplication by a constant matrix: `E * D` where `self` maps
    /// to an `m x n` value and `D` is `n x p`; uses
    /// `vec(E D) = (D^T (x) I_m) vec(E)`.
    pub fn right_mul_dense(&self, d: &Array2<f64>) -> AffineMap {
        let (m, n) = (self.shape.rows, self.shape.cols);
        let p = d.ncols();
        assert_eq!(d.nrows(), n, "right_mul_dense dimension mismatch");
        let out_shape = Shape::matrix(m, p);
        let mut terms = BTreeMap::new();
        for (v, t) in &self.terms {
            let mut trips = Vec::new();
            for e in t.entries() {
                let (row_e, col_e) = (e.row % m, e.row / m);
                for k in 0..p {
                    let val = d[(col_e, k)] * e.val;
                    if val != 0.0 {
                        trips.push((k * m + row_e, e.col, val));
                    }
                }
            }
            let sm = SparseMatrix::from_triplets(out_shape.size(), t.ncols(), trips);
            if sm.nnz() > 0 {
                terms.insert(*v, sm);
            }
        }
        let offset = linalg::vec_cm(&self.offset_as_dense().dot(d));
        AffineMap { shape: out_shape, terms, offset }
    }

    /// Evaluate at an assignment of column-major variable values.
    pub fn eval(&self, values: &BTreeMap<VarId, Vec<f64>>) -> Option<Vec<f64>> {
        let mut out = self.offset.clone();
        for (v, t) in &self.terms {
            let x = values.get(v)?;
            let contrib = t.matvec(x);
            for (o, c) in out.iter_mut().zip(contrib) {
                *o += c;
            }
        }
        Some(out)
    }
}
