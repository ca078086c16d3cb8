//! Conic-form templates, one per atom.
//!
//! A template takes the affine maps of the children and returns an affine
//! objective map, emitting fresh auxiliary variables and conic constraints
//! through the context. For affine atoms the template is just the linear
//! transform; for nonlinear atoms the constraints carve out the epigraph
//! (or hypograph), e.g. for `abs`:
//!
//! ```text
//! minimize t   subject to   t - x in K+,  t + x in K+
//! ```
//!
//! Second-order blocks are laid out `(x, t)` with the cone scalar last.
//! `x^2 <= t y` is written as the standard block `||(2x, y - t)|| <= y + t`.

use ndarray::Array2;

use super::{AffineMap, ConeKind, LowerError, TemplateCtx};
use crate::atoms::{self, AtomTag};
use crate::expr::{Expr, Shape};
use crate::linalg;

pub(super) fn lower_atom(
    ctx: &mut TemplateCtx<'_>,
    e: &Expr,
    tag: &AtomTag,
    children: &[AffineMap],
) -> Result<AffineMap, LowerError> {
    lower_atom_inner(ctx, tag, children, Some(e.children()))
}

pub(super) fn lower_atom_untracked(
    ctx: &mut TemplateCtx<'_>,
    tag: &AtomTag,
    children: &[AffineMap],
) -> Result<AffineMap, LowerError> {
    lower_atom_inner(ctx, tag, children, None)
}

fn bcast(m: &AffineMap, shape: Shape) -> AffineMap {
    if m.shape == shape {
        m.clone()
    } else {
        m.broadcast_to(shape)
    }
}

fn out_shape(tag: &AtomTag, children: &[AffineMap]) -> Result<Shape, LowerError> {
    let shapes: Vec<Shape> = children.iter().map(|c| c.shape).collect();
    atoms::shape_rule(tag, &shapes).map_err(|e| LowerError::Internal(e.to_string()))
}

/// Epigraph of the absolute value, shared by `abs` and the `norm_1`
/// expansion.
fn abs_template(
    ctx: &mut TemplateCtx<'_>,
    x: &AffineMap,
    record: Option<(AtomTag, &[Expr])>,
) -> AffineMap {
    let (id, t) = ctx.fresh_aux(x.shape);
    ctx.emit(t.sub(x), ConeKind::NonNeg);
    ctx.emit(t.add(x), ConeKind::NonNeg);
    if let Some((atom, args)) = record {
        ctx.record_graph(id, atom, args.to_vec());
    }
    t
}

/// Epigraph of `quad_over_lin`: `t >= x^T x / y` via one second-order block
/// plus `y >= 0`. Shared by `square`, `sum_squares`, and `quad_over_lin`.
fn qol_block(ctx: &mut TemplateCtx<'_>, x: &AffineMap, y: &AffineMap, t: &AffineMap) {
    let two_x = x.scale(2.0);
    let block = AffineMap::stack(&[&two_x, &y.sub(t), &y.add(t)]);
    ctx.emit(block, ConeKind::SecondOrder);
}

fn lower_atom_inner(
    ctx: &mut TemplateCtx<'_>,
    tag: &AtomTag,
    children: &[AffineMap],
    args: Option<&[Expr]>,
) -> Result<AffineMap, LowerError> {
    use AtomTag::*;
    let record = |atom: AtomTag| args.map(|a| (atom, a));
    Ok(match tag {
        // ----- affine transforms: objective only, no constraints -----
        Add => {
            let shape = out_shape(tag, children)?;
            let mut acc = bcast(&children[0], shape);
            for c in &children[1..] {
                acc = acc.add(&bcast(c, shape));
            }
            acc
        }
        Sub => {
            let shape = out_shape(tag, children)?;
            bcast(&children[0], shape).sub(&bcast(&children[1], shape))
        }
        Neg => children[0].neg(),
        Mul => {
            let (cst, xpr, const_left) = if children[0].is_constant() {
                (&children[0], &children[1], true)
            } else if children[1].is_constant() {
                (&children[1], &children[0], false)
            } else {
                return Err(LowerError::Internal(
                    "product of two non-constant expressions survived the DCP check".into(),
                ));
            };
            let cmat = cst.offset_as_dense();
            if cst.shape.is_scalar() {
                xpr.scale(cmat[(0, 0)])
            } else if xpr.shape.is_scalar() {
                // scalar expression times constant matrix
                let flat = linalg::vec_cm(&cmat);
                let col = Array2::from_shape_fn((flat.len(), 1), |(i, _)| flat[i]);
                let m = xpr.left_mul_dense(&col);
                AffineMap { shape: cst.shape, terms: m.terms, offset: m.offset }
            } else if const_left {
                xpr.left_mul_dense(&cmat)
            } else {
                xpr.right_mul_dense(&cmat)
            }
        }
        Index { rows, cols } => {
            let shape = out_shape(tag, children)?;
            let src_rows = children[0].shape.rows;
            let mut picks = Vec::with_capacity(shape.size());
            for j in cols.0..cols.1 {
                for i in rows.0..rows.1 {
                    picks.push(j * src_rows + i);
                }
            }
            children[0].select(&picks, shape)
        }
        Hcat => {
            let shape = out_shape(tag, children)?;
            let parts: Vec<&AffineMap> = children.iter().collect();
            let m = AffineMap::stack(&parts);
            AffineMap { shape, terms: m.terms, offset: m.offset }
        }
        Vcat => {
            let shape = out_shape(tag, children)?;
            let mut picks = Vec::with_capacity(shape.size());
            for j in 0..shape.cols {
                for (mi, m) in children.iter().enumerate() {
                    for i in 0..m.shape.rows {
                        picks.push((mi, j * m.shape.rows + i));
                    }
                }
            }
            let parts: Vec<&AffineMap> = children.iter().collect();
            AffineMap::gather(&parts, &picks, shape)
        }
        Diag => {
            let shape = out_shape(tag, children)?;
            let r = children[0].shape.rows;
            let picks: Vec<usize> = (0..shape.rows).map(|i| i * r + i).collect();
            children[0].select(&picks, shape)
        }
        Transpose => {
            let shape = out_shape(tag, children)?;
            let src_rows = children[0].shape.rows;
            let mut picks = Vec::with_capacity(shape.size());
            for j in 0..shape.cols {
                for i in 0..shape.rows {
                    // out (i, j) = in (j, i)
                    picks.push(i * src_rows + j);
                }
            }
            children[0].select(&picks, shape)
        }
        Sum => children[0].sum_rows(),

        // ----- positive orthant epigraphs -----
        Abs => abs_template(ctx, &children[0], record(Abs)),
        Pos => {
            let x = &children[0];
            let (id, t) = ctx.fresh_aux(x.shape);
            ctx.emit(t.sub(x), ConeKind::NonNeg);
            ctx.emit(t.clone(), ConeKind::NonNeg);
            if let Some((atom, a)) = record(Pos) {
                ctx.record_graph(id, atom, a.to_vec());
            }
            t
        }
        NegPart => {
            let x = &children[0];
            let (id, t) = ctx.fresh_aux(x.shape);
            ctx.emit(t.add(x), ConeKind::NonNeg);
            ctx.emit(t.clone(), ConeKind::NonNeg);
            if let Some((atom, a)) = record(NegPart) {
                ctx.record_graph(id, atom, a.to_vec());
            }
            t
        }
        MaxEntries => {
            let x = &children[0];
            let (id, t) = ctx.fresh_aux(Shape::scalar());
            let tb = t.broadcast_to(x.shape);
            ctx.emit(tb.sub(x), ConeKind::NonNeg);
            if let Some((atom, a)) = record(MaxEntries) {
                ctx.record_graph(id, atom, a.to_vec());
            }
            t
        }
        MinEntries => {
            let x = &children[0];
            let (id, t) = ctx.fresh_aux(Shape::scalar());
            let tb = t.broadcast_to(x.shape);
            ctx.emit(x.sub(&tb), ConeKind::NonNeg);
            if let Some((atom, a)) = record(MinEntries) {
                ctx.record_graph(id, atom, a.to_vec());
            }
            t
        }
        MaxElem => {
            let shape = out_shape(tag, children)?;
            let a = bcast(&children[0], shape);
            let b = bcast(&children[1], shape);
            let (id, t) = ctx.fresh_aux(shape);
            ctx.emit(t.sub(&a), ConeKind::NonNeg);
            ctx.emit(t.sub(&b), ConeKind::NonNeg);
            if let Some((atom, ar)) = record(MaxElem) {
                ctx.record_graph(id, atom, ar.to_vec());
            }
            t
        }
        MinElem => {
            let shape = out_shape(tag, children)?;
            let a = bcast(&children[0], shape);
            let b = bcast(&children[1], shape);
            let (id, t) = ctx.fresh_aux(shape);
            ctx.emit(a.sub(&t), ConeKind::NonNeg);
            ctx.emit(b.sub(&t), ConeKind::NonNeg);
            if let Some((atom, ar)) = record(MinElem) {
                ctx.record_graph(id, atom, ar.to_vec());
            }
            t
        }
        NormInf => {
            let x = &children[0];
            let (id, t) = ctx.fresh_aux(Shape::scalar());
            let tb = t.broadcast_to(x.shape);
            ctx.emit(tb.sub(x), ConeKind::NonNeg);
            ctx.emit(tb.add(x), ConeKind::NonNeg);
            if let Some((atom, a)) = record(NormInf) {
                ctx.record_graph(id, atom, a.to_vec());
            }
            t
        }
        Norm1 => {
            // sum(abs(x)); the inner epigraph is recorded against `abs`
            let t = abs_template(ctx, &children[0], record(Abs));
            t.sum_rows()
        }

        // ----- second-order cone -----
        Norm2 | NormFro => {
            let x = &children[0];
            let (id, t) = ctx.fresh_aux(Shape::scalar());
            ctx.emit(AffineMap::stack(&[x, &t]), ConeKind::SecondOrder);
            if let Some((atom, a)) = record(tag.clone()) {
                ctx.record_graph(id, atom, a.to_vec());
            }
            t
        }
        Square => {
            let x = &children[0];
            let (id, t) = ctx.fresh_aux(x.shape);
            let one = AffineMap::constant_scalar(1.0);
            for i in 0..x.size() {
                qol_block(ctx, &x.row(i), &one, &t.row(i));
            }
            if let Some((atom, a)) = record(Square) {
                ctx.record_graph(id, atom, a.to_vec());
            }
            t
        }
        SumSquares => {
            // quad_over_lin(vec(x), 1)
            let x = &children[0];
            let (id, t) = ctx.fresh_aux(Shape::scalar());
            let one = AffineMap::constant_scalar(1.0);
            qol_block(ctx, x, &one, &t);
            if let Some((atom, a)) = record(SumSquares) {
                ctx.record_graph(id, atom, a.to_vec());
            }
            t
        }
        QuadOverLin => {
            let (x, y) = (&children[0], &children[1]);
            let (id, t) = ctx.fresh_aux(Shape::scalar());
            qol_block(ctx, x, y, &t);
            ctx.emit(y.clone(), ConeKind::NonNeg);
            if let Some((atom, a)) = record(QuadOverLin) {
                ctx.record_graph(id, atom, a.to_vec());
            }
            t
        }
        Sqrt => {
            // hypograph: t^2 <= x, entrywise
            let x = &children[0];
            let (id, t) = ctx.fresh_aux(x.shape);
            let one = AffineMap::constant_scalar(1.0);
            for i in 0..x.size() {
                qol_block(ctx, &t.row(i), &one, &x.row(i));
            }
            if let Some((atom, a)) = record(Sqrt) {
                ctx.record_graph(id, atom, a.to_vec());
            }
            t
        }
        GeoMean => {
            // hypograph: t^2 <= x y, entrywise
            let (x, y) = (&children[0], &children[1]);
            let (id, t) = ctx.fresh_aux(x.shape);
            for i in 0..x.size() {
                qol_block(ctx, &t.row(i), &y.row(i), &x.row(i));
            }
            if let Some((atom, a)) = record(GeoMean) {
                ctx.record_graph(id, atom, a.to_vec());
            }
            t
        }
        InvPos => {
            // t x >= 1 with x > 0, entrywise
            let x = &children[0];
            let (id, t) = ctx.fresh_aux(x.shape);
            let two = AffineMap::constant_scalar(2.0);
            for i in 0..x.size() {
                let (xi, ti) = (x.row(i), t.row(i));
                let block = AffineMap::stack(&[&two, &xi.sub(&ti), &xi.add(&ti)]);
                ctx.emit(block, ConeKind::SecondOrder);
            }
            if let Some((atom, a)) = record(InvPos) {
                ctx.record_graph(id, atom, a.to_vec());
            }
            t
        }

        // ----- exponential cone -----
        Exp => {
            let x = &children[0];
            let (id, z) = ctx.fresh_aux(x.shape);
            let one = AffineMap::constant_scalar(1.0);
            for i in 0..x.size() {
                let block = AffineMap::stack(&[&x.row(i), &one, &z.row(i)]);
                ctx.emit(block, ConeKind::Exponential);
            }
            if let Some((atom, a)) = record(Exp) {
                ctx.record_graph(id, atom, a.to_vec());
            }
            z
        }
        Log => {
            // hypograph: e^t <= x
            let x = &children[0];
            let (id, t) = ctx.fresh_aux(x.shape);
            let one = AffineMap::constant_scalar(1.0);
            for i in 0..x.size() {
                let block = AffineMap::stack(&[&t.row(i), &one, &x.row(i)]);
                ctx.emit(block, ConeKind::Exponential);
            }
            if let Some((atom, a)) = record(Log) {
                ctx.record_graph(id, atom, a.to_vec());
            }
            t
        }
        LogSumExp => {
            // sum_i e^{x_i - t} <= 1
            let x = &children[0];
            let (id, t) = ctx.fresh_aux(Shape::scalar());
            let (_, u) = ctx.fresh_aux(Shape::vector(x.size()));
            let one = AffineMap::constant_scalar(1.0);
            let tb = t.broadcast_to(x.shape);
            let shifted = x.sub(&tb);
            for i in 0..x.size() {
                let block = AffineMap::stack(&[&shifted.row(i), &one, &u.row(i)]);
                ctx.emit(block, ConeKind::Exponential);
            }
            ctx.emit(one.sub(&u.sum_rows()), ConeKind::NonNeg);
            if let Some((atom, a)) = record(LogSumExp) {
                ctx.record_graph(id, atom, a.to_vec());
            }
            t
        }

        // ----- semidefinite cone -----
        OperatorNorm => {
            // [[t I, X], [X^T, t I]] psd
            let x = &children[0];
            let (r, c) = (x.shape.rows, x.shape.cols);
            let (id, t) = ctx.fresh_aux(Shape::scalar());
            let n = r + c;
            let zero = AffineMap::constant_scalar(0.0);
            // maps: 0 = x, 1 = t, 2 = zero
            let mut picks = Vec::with_capacity(n * n);
            for j in 0..n {
                for i in 0..n {
                    picks.push(block_pick(i, j, r, None));
                }
            }
            let big = AffineMap::gather(&[x, &t, &zero], &picks, Shape::matrix(n, n));
            ctx.emit(big, ConeKind::Psd);
            if let Some((atom, a)) = record(OperatorNorm) {
                ctx.record_graph(id, atom, a.to_vec());
            }
            t
        }
        NuclearNorm => {
            // [[U, X], [X^T, V]] psd with U, V symmetric; value (tr U + tr V)/2
            let x = &children[0];
            let (r, c) = (x.shape.rows, x.shape.cols);
            let (_, u) = ctx.fresh_aux(Shape::matrix(r, r));
            let (_, v) = ctx.fresh_aux(Shape::matrix(c, c));
            emit_symmetry(ctx, &u, r);
            emit_symmetry(ctx, &v, c);
            let n = r + c;
            let zero = AffineMap::constant_scalar(0.0);
            let mut picks = Vec::with_capacity(n * n);
            for j in 0..n {
                for i in 0..n {
                    picks.push(block_pick(i, j, r, Some(c)));
                }
            }
            let big = AffineMap::gather(&[x, &u, &v, &zero], &picks, Shape::matrix(n, n));
            ctx.emit(big, ConeKind::Psd);
            let tr_u: Vec<usize> = (0..r).map(|i| i * r + i).collect();
            let tr_v: Vec<usize> = (0..c).map(|i| i * c + i).collect();
            let trace_sum = u
                .select(&tr_u, Shape::vector(r))
                .sum_rows()
                .add(&v.select(&tr_v, Shape::vector(c)).sum_rows());
            trace_sum.scale(0.5)
        }

        Custom(cid) => {
            let atom = atoms::custom_atom(*cid)
                .ok_or_else(|| LowerError::Internal(format!("unregistered custom atom #{cid}")))?;
            atom.lower(ctx, children)?
        }
    })
}

/// Pick-list entry for the 2x2 block matrix [[D1, X], [X^T, D2]] stored
/// column-major with row split `r`. With `uv = None` the diagonal blocks are
/// `t I` (map 1) over a zero map (map 2); with `uv = Some(c)` they are the
/// U (map 1) and V (map 2) blocks and the zero map is map 3.
fn block_pick(i: usize, j: usize, r: usize, uv: Option<usize>) -> (usize, usize) {
    match uv {
        None => {
            if i < r && j < r {
                if i == j {
                    (1, 0)
                } else {
                    (2, 0)
                }
            } else if i >= r && j >= r {
                if i == j {
                    (1, 0)
                } else {
                    (2, 0)
                }
            } else if i < r {
                // X block: entry (i, j - r)
                (0, (j - r) * r + i)
            } else {
                // X^T block: entry (i - r, j) of X^T = X(j, i - r)
                (0, (i - r) * r + j)
            }
        }
        Some(_c) => {
            if i < r && j < r {
                (1, j * r + i)
            } else if i >= r && j >= r {
                (2, (j - r) * (_c) + (i - r))
            } else if i < r {
                (0, (j - r) * r + i)
            } else {
                (0, (i - r) * r + j)
            }
        }
    }
}

/// Zero-cone rows tying (i, j) to (j, i) for an n x n matrix map.
fn emit_symmetry(ctx: &mut TemplateCtx<'_>, m: &AffineMap, n: usize) {
    if n < 2 {
        return;
    }
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for j in 0..n {
        for i in 0..j {
            upper.push(i + j * n);
            lower.push(j + i * n);
        }
    }
    let u = m.select(&upper, Shape::vector(upper.len()));
    let l = m.select(&lower, Shape::vector(lower.len()));
    ctx.emit(u.sub(&l), ConeKind::Zero);
}
