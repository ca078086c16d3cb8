//! Ergonomic constructors. These panic on shape or arity errors; use
//! [`crate::expr::apply_atom`] directly for fallible construction.

use ndarray::Array2;

use crate::atoms::AtomTag;
use crate::expr::{
    apply_atom, make_constant, make_variable, Constraint, ConstraintKind, Expr, Shape,
    VariableAttributes,
};

fn apply(tag: AtomTag, children: Vec<Expr>) -> Expr {
    apply_atom(tag, children).unwrap_or_else(|e| panic!("{e}"))
}

/// Scalar or column-vector variable of length `n`.
pub fn var(n: usize) -> Expr {
    make_variable(Shape::vector(n), VariableAttributes::default()).unwrap()
}

pub fn var_shaped(rows: usize, cols: usize, attrs: VariableAttributes) -> Expr {
    make_variable(Shape::matrix(rows, cols), attrs).unwrap()
}

pub fn constant(v: f64) -> Expr {
    make_constant(Array2::from_elem((1, 1), v)).unwrap()
}

pub fn constant_mat(m: Array2<f64>) -> Expr {
    make_constant(m).unwrap()
}

pub fn constant_vec(v: &[f64]) -> Expr {
    make_constant(Array2::from_shape_fn((v.len(), 1), |(i, _)| v[i])).unwrap()
}

pub fn add(a: &Expr, b: &Expr) -> Expr {
    apply(AtomTag::Add, vec![a.clone(), b.clone()])
}

pub fn sub(a: &Expr, b: &Expr) -> Expr {
    apply(AtomTag::Sub, vec![a.clone(), b.clone()])
}

pub fn neg(a: &Expr) -> Expr {
    apply(AtomTag::Neg, vec![a.clone()])
}

pub fn mul(a: &Expr, b: &Expr) -> Expr {
    apply(AtomTag::Mul, vec![a.clone(), b.clone()])
}

pub fn scale(k: f64, a: &Expr) -> Expr {
    mul(&constant(k), a)
}

/// Single entry of a vector (0-based).
pub fn index(x: &Expr, i: usize) -> Expr {
    let s = x.shape();
    if s.cols == 1 {
        apply(AtomTag::Index { rows: (i, i + 1), cols: (0, 1) }, vec![x.clone()])
    } else {
        // linear index in column-major order
        let (r, c) = (i % s.rows, i / s.rows);
        entry(x, r, c)
    }
}

/// Single entry of a matrix (0-based row and column).
pub fn entry(x: &Expr, i: usize, j: usize) -> Expr {
    apply(AtomTag::Index { rows: (i, i + 1), cols: (j, j + 1) }, vec![x.clone()])
}

/// Half-open row/column ranges (0-based).
pub fn slice(x: &Expr, rows: (usize, usize), cols: (usize, usize)) -> Expr {
    apply(AtomTag::Index { rows, cols }, vec![x.clone()])
}

pub fn hcat(parts: &[&Expr]) -> Expr {
    apply(AtomTag::Hcat, parts.iter().map(|e| (*e).clone()).collect())
}

pub fn vcat(parts: &[&Expr]) -> Expr {
    apply(AtomTag::Vcat, parts.iter().map(|e| (*e).clone()).collect())
}

pub fn diag(x: &Expr) -> Expr {
    apply(AtomTag::Diag, vec![x.clone()])
}

pub fn transpose(x: &Expr) -> Expr {
    apply(AtomTag::Transpose, vec![x.clone()])
}

pub fn sum(x: &Expr) -> Expr {
    apply(AtomTag::Sum, vec![x.clone()])
}

pub fn abs(x: &Expr) -> Expr {
    apply(AtomTag::Abs, vec![x.clone()])
}

/// Largest entry.
pub fn max_entries(x: &Expr) -> Expr {
    apply(AtomTag::MaxEntries, vec![x.clone()])
}

pub fn min_entries(x: &Expr) -> Expr {
    apply(AtomTag::MinEntries, vec![x.clone()])
}

/// Elementwise maximum of two expressions (scalars broadcast).
pub fn max2(a: &Expr, b: &Expr) -> Expr {
    apply(AtomTag::MaxElem, vec![a.clone(), b.clone()])
}

pub fn min2(a: &Expr, b: &Expr) -> Expr {
    apply(AtomTag::MinElem, vec![a.clone(), b.clone()])
}

pub fn pos(x: &Expr) -> Expr {
    apply(AtomTag::Pos, vec![x.clone()])
}

/// Negative part `max(-x, 0)`.
pub fn neg_part(x: &Expr) -> Expr {
    apply(AtomTag::NegPart, vec![x.clone()])
}

pub fn norm_1(x: &Expr) -> Expr {
    apply(AtomTag::Norm1, vec![x.clone()])
}

pub fn norm_inf(x: &Expr) -> Expr {
    apply(AtomTag::NormInf, vec![x.clone()])
}

pub fn norm_2(x: &Expr) -> Expr {
    apply(AtomTag::Norm2, vec![x.clone()])
}

pub fn norm_fro(x: &Expr) -> Expr {
    apply(AtomTag::NormFro, vec![x.clone()])
}

pub fn square(x: &Expr) -> Expr {
    apply(AtomTag::Square, vec![x.clone()])
}

pub fn sqrt(x: &Expr) -> Expr {
    apply(AtomTag::Sqrt, vec![x.clone()])
}

pub fn geo_mean(x: &Expr, y: &Expr) -> Expr {
    apply(AtomTag::GeoMean, vec![x.clone(), y.clone()])
}

pub fn quad_over_lin(x: &Expr, y: &Expr) -> Expr {
    apply(AtomTag::QuadOverLin, vec![x.clone(), y.clone()])
}

pub fn inv_pos(x: &Expr) -> Expr {
    apply(AtomTag::InvPos, vec![x.clone()])
}

pub fn sum_squares(x: &Expr) -> Expr {
    apply(AtomTag::SumSquares, vec![x.clone()])
}

pub fn exp(x: &Expr) -> Expr {
    apply(AtomTag::Exp, vec![x.clone()])
}

pub fn log(x: &Expr) -> Expr {
    apply(AtomTag::Log, vec![x.clone()])
}

pub fn logsumexp(x: &Expr) -> Expr {
    apply(AtomTag::LogSumExp, vec![x.clone()])
}

pub fn operator_norm(x: &Expr) -> Expr {
    apply(AtomTag::OperatorNorm, vec![x.clone()])
}

pub fn nuclear_norm(x: &Expr) -> Expr {
    apply(AtomTag::NuclearNorm, vec![x.clone()])
}

pub fn le(lhs: &Expr, rhs: &Expr) -> Constraint {
    Constraint::new(ConstraintKind::Le, lhs.clone(), rhs.clone()).unwrap_or_else(|e| panic!("{e}"))
}

pub fn ge(lhs: &Expr, rhs: &Expr) -> Constraint {
    Constraint::new(ConstraintKind::Ge, lhs.clone(), rhs.clone()).unwrap_or_else(|e| panic!("{e}"))
}

pub fn eq(lhs: &Expr, rhs: &Expr) -> Constraint {
    Constraint::new(ConstraintKind::Eq, lhs.clone(), rhs.clone()).unwrap_or_else(|e| panic!("{e}"))
}
