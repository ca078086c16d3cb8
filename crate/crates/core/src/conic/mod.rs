//! Lowering DCP problems to standard conic form.
//!
//! Each atom has a conic-form template: a small conic problem whose optimal
//! value equals the atom's value (its graph form). Lowering recurses over
//! the AST, splices templates together, and flattens the result into
//!
//! ```text
//! minimize c^T x   subject to   b - A x in K
//! ```
//!
//! with `K` a product of cones stacked in the fixed order Zero, NonNeg,
//! second-order blocks, exponential triples, PSD blocks. The slack
//! convention `b - Ax in K` avoids materializing slack columns and is the
//! common input shape for first-order conic solvers.
//!
//! Lowering is memoized on expression uids: a shared subexpression
//! contributes its auxiliary variables and constraints once.

pub mod affine;
mod templates;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::ops::Range;

use thiserror::Error;

pub use affine::AffineMap;

use crate::atoms::AtomTag;
use crate::dcp;
use crate::expr::{
    ConstraintKind, EvalError, Expr, Problem, Sense, Shape, Sign, UidHasher, VarId,
};
use crate::sparse::SparseMatrix;

// ---------------------------------------------------------------------------
// Cones

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConeKind {
    Zero,
    Free,
    NonNeg,
    SecondOrder,
    Exponential,
    Psd,
}

impl ConeKind {
    pub fn name(&self) -> &'static str {
        match self {
            ConeKind::Zero => "zero",
            ConeKind::Free => "free",
            ConeKind::NonNeg => "nonneg",
            ConeKind::SecondOrder => "soc",
            ConeKind::Exponential => "exp",
            ConeKind::Psd => "psd",
        }
    }
}

/// One cone block. Second-order blocks of dimension `n + 1` hold `(x, t)`
/// with the scalar last; exponential triples are `(x, y, z)`; PSD blocks
/// hold a full `n x n` matrix column-major, so `dim = n^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cone {
    pub kind: ConeKind,
    pub dim: usize,
}

/// Membership of an affine map's value in a cone.
#[derive(Clone, Debug)]
pub struct ConicConstraint {
    pub kind: ConeKind,
    pub map: AffineMap,
}

/// Which auxiliary variable stands for which atom value; used to audit
/// graph-form tightness after a solve.
#[derive(Clone, Debug)]
pub struct GraphRecord {
    pub aux: VarId,
    pub atom: AtomTag,
    pub args: Vec<Expr>,
}

#[derive(Debug, Error)]
pub enum LowerError {
    #[error("problem is not DCP: {0}")]
    NotDcp(String),
    #[error("cannot evaluate constant subexpression: {0}")]
    ConstEval(#[from] EvalError),
    #[error("internal lowering error: {0}")]
    Internal(String),
}

// ---------------------------------------------------------------------------
// Conic problem data

#[derive(Clone, Debug)]
pub struct VarEntry {
    pub id: VarId,
    pub shape: Shape,
    pub cols: Range<usize>,
    pub is_aux: bool,
}

/// Row block of one user constraint, with the constraint's (broadcast)
/// shape for dual recovery.
#[derive(Clone, Debug)]
pub struct ConstraintSpan {
    pub start: usize,
    pub len: usize,
    pub shape: Shape,
}

/// Standard-form problem data. Rows of `a` are partitioned by `cones` in
/// order; columns are assigned to variables (user first-appearance order,
/// auxiliaries interleaved as created) with each variable scalarized
/// column-major.
#[derive(Clone, Debug)]
pub struct ConicProblem {
    pub c: Vec<f64>,
    pub a: SparseMatrix,
    pub b: Vec<f64>,
    pub cones: Vec<Cone>,
    pub vars: Vec<VarEntry>,
    pub objective_offset: f64,
    pub sense_flip: bool,
    /// Row block of each user constraint after cone grouping.
    pub constraint_rows: Vec<ConstraintSpan>,
    pub graph_records: Vec<GraphRecord>,
}

impl ConicProblem {
    pub fn n_rows(&self) -> usize {
        self.b.len()
    }

    pub fn n_cols(&self) -> usize {
        self.c.len()
    }

    pub fn var_cols(&self, id: VarId) -> Option<Range<usize>> {
        self.vars.iter().find(|v| v.id == id).map(|v| v.cols.clone())
    }

    /// Distinct cone kinds present; drives solver dispatch.
    pub fn required_cones(&self) -> BTreeSet<ConeKind> {
        self.cones.iter().map(|c| c.kind).collect()
    }
}

// ---------------------------------------------------------------------------
// Lowering context

#[derive(Clone, Copy, Debug, PartialEq)]
enum Provenance {
    User(usize),
    Attribute,
    Template,
}

struct Emitted {
    kind: ConeKind,
    map: AffineMap,
    prov: Provenance,
}

struct VarReg {
    id: VarId,
    shape: Shape,
    is_aux: bool,
    attrs: Option<crate::expr::VariableAttributes>,
}

/// Context threaded through template application: fresh auxiliary variables,
/// emitted conic constraints, and the memo table.
pub struct TemplateCtx<'a> {
    memoize: bool,
    memo: HashMap<u64, AffineMap>,
    instance_counts: HashMap<u64, u32>,
    emitted: Vec<Emitted>,
    vars: Vec<VarReg>,
    var_seen: HashSet<VarId>,
    records: Vec<GraphRecord>,
    aux_seed: u64,
    aux_k: u32,
    _marker: std::marker::PhantomData<&'a ()>,
}

impl<'a> TemplateCtx<'a> {
    fn new(memoize: bool) -> Self {
        TemplateCtx {
            memoize,
            memo: HashMap::new(),
            instance_counts: HashMap::new(),
            emitted: Vec::new(),
            vars: Vec::new(),
            var_seen: HashSet::new(),
            records: Vec::new(),
            aux_seed: 0,
            aux_k: 0,
            _marker: std::marker::PhantomData,
        }
    }

    /// Fresh auxiliary variable. Ids are derived deterministically from the
    /// memo key (expression uid, instantiation index, per-template counter),
    /// so repeated lowering of the same problem is reproducible.
    pub fn fresh_aux(&mut self, shape: Shape) -> (VarId, AffineMap) {
        let k = self.aux_k;
        self.aux_k += 1;
        let id = (1u64 << 63) | (UidHasher::new(self.aux_seed).mix(k as u64).finish() >> 1);
        self.vars.push(VarReg { id, shape, is_aux: true, attrs: None });
        self.var_seen.insert(id);
        (id, AffineMap::variable(id, shape))
    }

    /// Constrain the map's value to lie in the cone.
    pub fn emit(&mut self, map: AffineMap, kind: ConeKind) {
        self.emitted.push(Emitted { kind, map, prov: Provenance::Template });
    }

    fn emit_with(&mut self, map: AffineMap, kind: ConeKind, prov: Provenance) {
        self.emitted.push(Emitted { kind, map, prov });
    }

    pub(crate) fn record_graph(&mut self, aux: VarId, atom: AtomTag, args: Vec<Expr>) {
        self.records.push(GraphRecord { aux, atom, args });
    }

    fn register_user_var(&mut self, e: &Expr) -> AffineMap {
        let data = e.var_data().expect("register_user_var on non-variable");
        if self.var_seen.insert(data.id) {
            self.vars.push(VarReg {
                id: data.id,
                shape: data.shape,
                is_aux: false,
                attrs: Some(data.attrs),
            });
        }
        AffineMap::variable(data.id, data.shape)
    }

    /// Recursive conic-form construction: affine expressions pass through as
    /// affine maps; otherwise children are lowered first and the head atom's
    /// template is applied to the child objectives.
    fn lower(&mut self, e: &Expr) -> Result<AffineMap, LowerError> {
        if self.memoize {
            if let Some(m) = self.memo.get(&e.uid()) {
                return Ok(m.clone());
            }
        }
        let out = if e.is_variable() {
            self.register_user_var(e)
        } else if let Some(m) = e.constant_value() {
            AffineMap::constant_dense(m)
        } else {
            let tag = e.atom().expect("non-leaf expression").clone();
            let mut child_maps = Vec::with_capacity(e.children().len());
            for c in e.children() {
                child_maps.push(self.lower(c)?);
            }
            let instance = self.instance_counts.entry(e.uid()).or_insert(0);
            let seed = UidHasher::new(e.uid()).mix(*instance as u64).finish();
            *instance += 1;
            self.aux_seed = seed;
            self.aux_k = 0;
            templates::lower_atom(self, e, &tag, &child_maps)?
        };
        if self.memoize {
            self.memo.insert(e.uid(), out.clone());
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Entry points

/// Conic form of a single expression: its affine objective map plus the
/// conic constraints introduced by templates. Refuses non-DCP input.
pub fn conic_form(e: &Expr) -> Result<(AffineMap, Vec<ConicConstraint>), LowerError> {
    let diag = dcp::diagnose(e);
    if diag.verdict == crate::expr::Vexity::NotDcp {
        return Err(LowerError::NotDcp(describe_diag(&diag)));
    }
    let mut ctx = TemplateCtx::new(true);
    let map = ctx.lower(e)?;
    let constraints =
        ctx.emitted.into_iter().map(|e| ConicConstraint { kind: e.kind, map: e.map }).collect();
    Ok((map, constraints))
}

/// Apply one atom's conic-form template to child objective maps directly.
pub fn apply_template(
    tag: &AtomTag,
    children: &[AffineMap],
) -> Result<(AffineMap, Vec<ConicConstraint>), LowerError> {
    let mut ctx = TemplateCtx::new(true);
    ctx.aux_seed = UidHasher::new(crate::atoms::tag_code(tag)).finish();
    ctx.aux_k = 0;
    let obj = templates::lower_atom_untracked(&mut ctx, tag, children)?;
    let constraints =
        ctx.emitted.into_iter().map(|e| ConicConstraint { kind: e.kind, map: e.map }).collect();
    Ok((obj, constraints))
}

#[derive(Clone, Copy, Debug)]
pub struct LowerOptions {
    pub memoize: bool,
}

impl Default for LowerOptions {
    fn default() -> Self {
        LowerOptions { memoize: true }
    }
}

pub fn lower_problem(p: &Problem) -> Result<ConicProblem, LowerError> {
    lower_problem_with(p, LowerOptions::default())
}

fn describe_diag(d: &dcp::DcpDiagnostic) -> String {
    match &d.offending {
        Some(off) => format!(
            "offending atom `{}` (uid {:#x}) applied to children with curvatures {:?}",
            off.atom, off.uid, off.child_vexities
        ),
        None => format!("verdict {:?}", d.verdict),
    }
}

pub fn lower_problem_with(p: &Problem, opts: LowerOptions) -> Result<ConicProblem, LowerError> {
    let (ok, diags) = dcp::problem_is_dcp(p);
    if !ok {
        let mut reasons = Vec::new();
        if !diags.sense_ok {
            let verdict = diags.objective.as_ref().map(|d| d.verdict);
            reasons.push(format!(
                "(sense, objective curvature) = ({:?}, {:?}) is not a DCP pairing",
                p.sense, verdict
            ));
        }
        for (i, cd) in diags.constraints.iter().enumerate() {
            let ok = match cd.kind {
                ConstraintKind::Le => cd.lhs.verdict.is_convex() && cd.rhs.verdict.is_concave(),
                ConstraintKind::Ge => cd.lhs.verdict.is_concave() && cd.rhs.verdict.is_convex(),
                ConstraintKind::Eq => cd.lhs.verdict.is_affine() && cd.rhs.verdict.is_affine(),
            };
            if !ok {
                reasons.push(format!(
                    "constraint {} ({}) has curvatures {:?} {} {:?}",
                    i, cd.kind, cd.lhs.verdict, cd.kind, cd.rhs.verdict
                ));
            }
        }
        return Err(LowerError::NotDcp(reasons.join("; ")));
    }

    let mut ctx = TemplateCtx::new(opts.memoize);

    // objective first, then constraints in order
    let obj_map = match &p.objective {
        Some(obj) => ctx.lower(obj)?,
        None => AffineMap::constant_scalar(0.0),
    };

    for (idx, c) in p.constraints.iter().enumerate() {
        let l = ctx.lower(&c.lhs)?;
        let r = ctx.lower(&c.rhs)?;
        let shape = Shape::broadcast(l.shape, r.shape).expect("validated at construction");
        let l = if l.shape == shape { l } else { l.broadcast_to(shape) };
        let r = if r.shape == shape { r } else { r.broadcast_to(shape) };
        match c.kind {
            ConstraintKind::Le => {
                ctx.emit_with(r.sub(&l), ConeKind::NonNeg, Provenance::User(idx))
            }
            ConstraintKind::Ge => {
                ctx.emit_with(l.sub(&r), ConeKind::NonNeg, Provenance::User(idx))
            }
            ConstraintKind::Eq => ctx.emit_with(r.sub(&l), ConeKind::Zero, Provenance::User(idx)),
        }
    }

    // variable attribute hints become conic rows
    let regs: Vec<(VarId, Shape, crate::expr::VariableAttributes)> = ctx
        .vars
        .iter()
        .filter_map(|v| v.attrs.map(|a| (v.id, v.shape, a)))
        .collect();
    for (id, shape, attrs) in regs {
        let ident = AffineMap::variable(id, shape);
        match attrs.sign_hint {
            Sign::Positive => ctx.emit_with(ident.clone(), ConeKind::NonNeg, Provenance::Attribute),
            Sign::Negative => ctx.emit_with(ident.neg(), ConeKind::NonNeg, Provenance::Attribute),
            Sign::Zero => ctx.emit_with(ident.clone(), ConeKind::Zero, Provenance::Attribute),
            Sign::NoSign => {}
        }
        if attrs.symmetric && shape.rows > 1 {
            // one Zero row per (i, j)/(j, i) pair above the diagonal
            let n = shape.rows;
            let mut picks = Vec::new();
            let mut picks_t = Vec::new();
            for j in 0..n {
                for i in 0..j {
                    picks.push(i + j * n); // (i, j)
                    picks_t.push(j + i * n); // (j, i)
                }
            }
            let upper = ident.select(&picks, Shape::vector(picks.len()));
            let lower = ident.select(&picks_t, Shape::vector(picks_t.len()));
            ctx.emit_with(upper.sub(&lower), ConeKind::Zero, Provenance::Attribute);
        }
        if attrs.semidefinite {
            ctx.emit_with(ident, ConeKind::Psd, Provenance::Attribute);
        }
    }

    let sense_flip = p.sense == Sense::Maximize;
    let internal_obj = if sense_flip { obj_map.neg() } else { obj_map };
    Ok(assemble(ctx, internal_obj, sense_flip, p.constraints.len()))
}

fn assemble(
    ctx: TemplateCtx<'_>,
    objective: AffineMap,
    sense_flip: bool,
    n_user: usize,
) -> ConicProblem {
    // columns
    let mut col = 0usize;
    let mut vars = Vec::with_capacity(ctx.vars.len());
    let mut col_of: HashMap<VarId, usize> = HashMap::new();
    for v in &ctx.vars {
        let size = v.shape.size();
        col_of.insert(v.id, col);
        vars.push(VarEntry { id: v.id, shape: v.shape, cols: col..col + size, is_aux: v.is_aux });
        col += size;
    }
    let ncols = col;

    // rows, grouped by cone kind in fixed order
    let order = [
        ConeKind::Zero,
        ConeKind::NonNeg,
        ConeKind::SecondOrder,
        ConeKind::Exponential,
        ConeKind::Psd,
    ];
    let mut row = 0usize;
    let mut trips: Vec<(usize, usize, f64)> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    let mut cones: Vec<Cone> = Vec::new();
    let mut spans =
        vec![ConstraintSpan { start: 0, len: 0, shape: Shape::scalar() }; n_user];
    for kind in order {
        let group_start = row;
        for em in ctx.emitted.iter().filter(|e| e.kind == kind) {
            let size = em.map.size();
            if let Provenance::User(i) = em.prov {
                spans[i] = ConstraintSpan { start: row, len: size, shape: em.map.shape };
            }
            for (vid, t) in &em.map.terms {
                let c0 = col_of[vid];
                for e in t.entries() {
                    // b - Ax in K with map value Tx + offset means A = -T
                    trips.push((row + e.row, c0 + e.col, -e.val));
                }
            }
            b.extend_from_slice(&em.map.offset);
            row += size;
            if matches!(kind, ConeKind::SecondOrder | ConeKind::Exponential | ConeKind::Psd) {
                cones.push(Cone { kind, dim: size });
            }
        }
        if matches!(kind, ConeKind::Zero | ConeKind::NonNeg) && row > group_start {
            cones.push(Cone { kind, dim: row - group_start });
        }
    }

    let mut c = vec![0.0; ncols];
    for (vid, t) in &objective.terms {
        let c0 = col_of[vid];
        for e in t.entries() {
            c[c0 + e.col] += e.val;
        }
    }

    ConicProblem {
        c,
        a: SparseMatrix::from_triplets(row, ncols, trips),
        b,
        cones,
        vars,
        objective_offset: objective.offset[0],
        sense_flip,
        constraint_rows: spans,
        graph_records: ctx.records,
    }
}
