//! DCP verification: curvature propagation through the AST.
//!
//! The core recursion starts from the atom's intrinsic curvature and adds
//! the monotonicity-weighted curvature of every child:
//!
//! ```text
//! vexity(f(e_1..e_n)) = curvature(f) + sum_i monotonicity_i * vexity(e_i)
//! ```
//!
//! Signs are propagated in a separate bottom-up pass first, because the
//! monotonicity of several atoms depends on the signs of their children.
//! The analysis is local and therefore sound but incomplete: it may report
//! NotDcp for expressions that happen to be convex.

use std::collections::HashMap;

use crate::atoms::{self, AtomTag};
use crate::expr::{child_infos, Constraint, ConstraintKind, Expr, Problem, Sense, Sign, Vexity};

/// Where and why a verdict of NotDcp arose. `offending` identifies the node
/// whose composition rule first produced NotDcp (its children were still
/// classifiable); `None` for DCP-compliant expressions.
#[derive(Clone, Debug)]
pub struct DcpDiagnostic {
    pub verdict: Vexity,
    pub offending: Option<OffendingNode>,
}

#[derive(Clone, Debug)]
pub struct OffendingNode {
    pub uid: u64,
    pub atom: AtomTag,
    pub child_vexities: Vec<Vexity>,
    /// Depth below the diagnosed root; the shallowest origination wins.
    pub depth: usize,
}

#[derive(Clone)]
struct Analysis {
    vexity: Vexity,
    offender: Option<OffendingNode>,
}

/// Per-call memo tables for the sign and vexity passes. One context can be
/// shared across the expressions of a whole problem.
#[derive(Default)]
pub(crate) struct VexityCtx {
    signs: HashMap<u64, Sign>,
    memo: HashMap<u64, Vexity>,
}

impl VexityCtx {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Curvature of an expression under the composition rule, memoized by uid.
/// NotDcp is a value, not an error.
pub fn vexity(e: &Expr) -> Vexity {
    let mut ctx = VexityCtx::new();
    vexity_memo(e, &mut ctx)
}

fn vexity_memo(e: &Expr, ctx: &mut VexityCtx) -> Vexity {
    if let Some(v) = ctx.memo.get(&e.uid()) {
        return *v;
    }
    let v = if e.is_variable() {
        Vexity::Affine
    } else if e.is_constant() {
        Vexity::Constant
    } else {
        let tag = e.atom().expect("non-leaf must be an atom application");
        let infos = child_infos(e, &mut ctx.signs);
        let monos = atoms::monotonicity(tag, &infos);
        let mut vex = atoms::curvature(tag, &infos);
        for (i, child) in e.children().iter().enumerate() {
            vex = vex + monos[i] * vexity_memo(child, ctx);
        }
        vex
    };
    ctx.memo.insert(e.uid(), v);
    v
}

/// Vexity plus a pointer at the node where DCP compliance first failed.
pub fn diagnose(e: &Expr) -> DcpDiagnostic {
    let mut ctx = VexityCtx::new();
    let mut memo = HashMap::new();
    let a = analyze(e, 0, &mut ctx, &mut memo);
    DcpDiagnostic { verdict: a.vexity, offending: a.offender }
}

fn analyze(
    e: &Expr,
    depth: usize,
    ctx: &mut VexityCtx,
    memo: &mut HashMap<u64, Analysis>,
) -> Analysis {
    if let Some(a) = memo.get(&e.uid()) {
        return a.clone();
    }
    let out = analyze_uncached(e, depth, ctx, memo);
    memo.insert(e.uid(), out.clone());
    out
}

fn analyze_uncached(
    e: &Expr,
    depth: usize,
    ctx: &mut VexityCtx,
    memo: &mut HashMap<u64, Analysis>,
) -> Analysis {
    if e.is_variable() {
        return Analysis { vexity: Vexity::Affine, offender: None };
    }
    if e.is_constant() {
        return Analysis { vexity: Vexity::Constant, offender: None };
    }
    let tag = e.atom().unwrap().clone();
    let infos = child_infos(e, &mut ctx.signs);
    let monos = atoms::monotonicity(&tag, &infos);
    let mut child_vex = Vec::with_capacity(e.children().len());
    let mut child_offender: Option<OffendingNode> = None;
    for child in e.children() {
        let a = analyze(child, depth + 1, ctx, memo);
        child_vex.push(a.vexity);
        if let Some(off) = a.offender {
            child_offender = Some(match child_offender {
                Some(prev) if prev.depth <= off.depth => prev,
                _ => off,
            });
        }
    }
    let mut vex = atoms::curvature(&tag, &infos);
    for (i, v) in child_vex.iter().enumerate() {
        vex = vex + monos[i] * *v;
    }
    let offender = if vex == Vexity::NotDcp {
        match child_offender {
            Some(off) => Some(off),
            // children were classifiable: this node is where the rule broke
            None => {
                Some(OffendingNode { uid: e.uid(), atom: tag, child_vexities: child_vex, depth })
            }
        }
    } else {
        None
    };
    Analysis { vexity: vex, offender }
}

/// A constraint is DCP when `lhs <= rhs` pairs convex with concave,
/// `lhs >= rhs` pairs concave with convex, and `lhs == rhs` has two affine
/// sides. Constants count as affine; affine counts as both convex and
/// concave.
pub fn constraint_is_dcp(c: &Constraint) -> (bool, ConstraintDiagnostic) {
    let lhs = diagnose(&c.lhs);
    let rhs = diagnose(&c.rhs);
    let ok = match c.kind {
        ConstraintKind::Le => lhs.verdict.is_convex() && rhs.verdict.is_concave(),
        ConstraintKind::Ge => lhs.verdict.is_concave() && rhs.verdict.is_convex(),
        ConstraintKind::Eq => lhs.verdict.is_affine() && rhs.verdict.is_affine(),
    };
    (ok, ConstraintDiagnostic { kind: c.kind, lhs, rhs })
}

#[derive(Clone, Debug)]
pub struct ConstraintDiagnostic {
    pub kind: ConstraintKind,
    pub lhs: DcpDiagnostic,
    pub rhs: DcpDiagnostic,
}

#[derive(Clone, Debug)]
pub struct ProblemDiagnostics {
    /// Objective verdict, when the problem has an objective.
    pub objective: Option<DcpDiagnostic>,
    pub sense_ok: bool,
    pub constraints: Vec<ConstraintDiagnostic>,
}

/// A problem is DCP when (sense, objective) is one of (minimize, convex),
/// (maximize, concave), (satisfy, -) and every constraint is DCP. Implicit
/// variable-attribute constraints are conic-affine and never affect the
/// verdict.
pub fn problem_is_dcp(p: &Problem) -> (bool, ProblemDiagnostics) {
    let objective = p.objective.as_ref().map(diagnose);
    let sense_ok = match (p.sense, &objective) {
        (Sense::Satisfy, None) => true,
        (Sense::Minimize, Some(d)) => d.verdict.is_convex(),
        (Sense::Maximize, Some(d)) => d.verdict.is_concave(),
        _ => false,
    };
    let mut all_ok = sense_ok;
    let mut constraints = Vec::with_capacity(p.constraints.len());
    for c in &p.constraints {
        let (ok, diag) = constraint_is_dcp(c);
        all_ok &= ok;
        constraints.push(diag);
    }
    (all_ok, ProblemDiagnostics { objective, sense_ok, constraints })
}
