//! Expression ASTs: variables, constants, and atom applications.
//!
//! Expressions are immutable after construction (except the value slot of a
//! variable, which is written by the user or by a solve) and carry a
//! structural hash, so two independently built copies of the same tree share
//! one unique id. All analyses downstream (sign, curvature, lowering) are
//! memoized on that id.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use ndarray::Array2;
use thiserror::Error;

use crate::atoms::{self, AtomTag, ChildInfo};
use crate::solver::SolveStatus;

// ---------------------------------------------------------------------------
// Shape

/// Dimensions of an expression. Scalars are 1x1, vectors are n x 1.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    pub rows: usize,
    pub cols: usize,
}

impl Shape {
    pub fn new(rows: usize, cols: usize) -> Result<Shape, ExprError> {
        if rows == 0 || cols == 0 {
            return Err(ExprError::InvalidShape { rows, cols });
        }
        Ok(Shape { rows, cols })
    }

    pub fn scalar() -> Shape {
        Shape { rows: 1, cols: 1 }
    }

    /// Column vector of length `n`. Panics if `n == 0`.
    pub fn vector(n: usize) -> Shape {
        Shape::new(n, 1).expect("vector length must be at least 1")
    }

    /// Panics if either dimension is zero.
    pub fn matrix(rows: usize, cols: usize) -> Shape {
        Shape::new(rows, cols).expect("matrix dimensions must be at least 1")
    }

    pub fn size(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_scalar(&self) -> bool {
        self.rows == 1 && self.cols == 1
    }

    pub fn is_vector(&self) -> bool {
        self.rows == 1 || self.cols == 1
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transposed(&self) -> Shape {
        Shape { rows: self.cols, cols: self.rows }
    }

    /// Common shape of two operands when scalars broadcast against anything.
    pub fn broadcast(a: Shape, b: Shape) -> Option<Shape> {
        if a == b {
            Some(a)
        } else if a.is_scalar() {
            Some(b)
        } else if b.is_scalar() {
            Some(a)
        } else {
            None
        }
    }
}

impl fmt::Debug for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

// ---------------------------------------------------------------------------
// Sign / Vexity / Monotonicity algebra

/// Sign of an expression over the range of its arguments.
///
/// `Positive` and `Negative` are weak (entrywise >= 0 / <= 0); `Zero` is the
/// identically-zero function and absorbs under multiplication.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Positive,
    Negative,
    NoSign,
    Zero,
}

impl std::ops::Add for Sign {
    type Output = Sign;
    fn add(self, rhs: Sign) -> Sign {
        use Sign::*;
        match (self, rhs) {
            (Zero, s) | (s, Zero) => s,
            (NoSign, _) | (_, NoSign) => NoSign,
            (Positive, Positive) => Positive,
            (Negative, Negative) => Negative,
            (Positive, Negative) | (Negative, Positive) => NoSign,
        }
    }
}

impl std::ops::Mul for Sign {
    type Output = Sign;
    fn mul(self, rhs: Sign) -> Sign {
        use Sign::*;
        match (self, rhs) {
            (Zero, _) | (_, Zero) => Zero,
            (NoSign, _) | (_, NoSign) => NoSign,
            (Positive, Positive) | (Negative, Negative) => Positive,
            (Positive, Negative) | (Negative, Positive) => Negative,
        }
    }
}

impl std::ops::Neg for Sign {
    type Output = Sign;
    fn neg(self) -> Sign {
        use Sign::*;
        match self {
            Positive => Negative,
            Negative => Positive,
            NoSign => NoSign,
            Zero => Zero,
        }
    }
}

impl Sign {
    /// True for `Positive` and `Zero` (entrywise >= 0).
    pub fn is_nonnegative(&self) -> bool {
        matches!(self, Sign::Positive | Sign::Zero)
    }

    pub fn is_nonpositive(&self) -> bool {
        matches!(self, Sign::Negative | Sign::Zero)
    }

    /// Sign of a numeric matrix: all entries >= 0 gives Positive, all <= 0
    /// gives Negative, all exactly 0 gives Zero, mixed gives NoSign.
    pub fn of_matrix(m: &Array2<f64>) -> Sign {
        let mut any_pos = false;
        let mut any_neg = false;
        for &v in m.iter() {
            if v > 0.0 {
                any_pos = true;
            } else if v < 0.0 {
                any_neg = true;
            }
        }
        match (any_pos, any_neg) {
            (false, false) => Sign::Zero,
            (true, false) => Sign::Positive,
            (false, true) => Sign::Negative,
            (true, true) => Sign::NoSign,
        }
    }
}

/// Curvature classification of an expression.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Vexity {
    Constant,
    Affine,
    Convex,
    Concave,
    NotDcp,
}

impl std::ops::Add for Vexity {
    type Output = Vexity;
    fn add(self, rhs: Vexity) -> Vexity {
        use Vexity::*;
        match (self, rhs) {
            (Constant, v) | (v, Constant) => v,
            (NotDcp, _) | (_, NotDcp) => NotDcp,
            (Affine, v) | (v, Affine) => v,
            (Convex, Convex) => Convex,
            (Concave, Concave) => Concave,
            (Convex, Concave) | (Concave, Convex) => NotDcp,
        }
    }
}

impl std::ops::Neg for Vexity {
    type Output = Vexity;
    fn neg(self) -> Vexity {
        use Vexity::*;
        match self {
            Convex => Concave,
            Concave => Convex,
            v => v,
        }
    }
}

impl Vexity {
    /// Constant and affine expressions count as convex.
    pub fn is_convex(&self) -> bool {
        matches!(self, Vexity::Constant | Vexity::Affine | Vexity::Convex)
    }

    pub fn is_concave(&self) -> bool {
        matches!(self, Vexity::Constant | Vexity::Affine | Vexity::Concave)
    }

    /// An expression is affine iff it is both convex and concave.
    pub fn is_affine(&self) -> bool {
        self.is_convex() && self.is_concave()
    }
}

/// Monotonicity of an atom in one argument.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Monotonicity {
    Nondecreasing,
    Nonincreasing,
    NotMonotonic,
}

/// The composition rule: a monotonicity applied to a child's curvature.
impl std::ops::Mul<Vexity> for Monotonicity {
    type Output = Vexity;
    fn mul(self, v: Vexity) -> Vexity {
        use Monotonicity::*;
        use Vexity::*;
        match self {
            Nondecreasing => v,
            Nonincreasing => match v {
                Convex => Concave,
                Concave => Convex,
                other => other,
            },
            NotMonotonic => match v {
                Constant => Constant,
                Affine => Affine,
                _ => NotDcp,
            },
        }
    }
}

// ---------------------------------------------------------------------------
// Errors

pub type VarId = u64;

#[derive(Debug, Error)]
pub enum ExprError {
    #[error("invalid shape {rows}x{cols}: dimensions must be at least 1")]
    InvalidShape { rows: usize, cols: usize },
    #[error("shape mismatch in {atom}: {details}")]
    ShapeMismatch { atom: String, details: String },
    #[error("{atom} expects {expected} argument(s), got {got}")]
    ArityMismatch { atom: String, expected: String, got: usize },
    #[error("invalid variable attributes: {0}")]
    InvalidAttributes(String),
    #[error("constant contains NaN or infinite entries")]
    NonFiniteConstant,
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
    #[error("objective must be scalar, got shape {0}")]
    NonScalarObjective(Shape),
    #[error("sense `satisfy` does not take an objective")]
    SatisfyWithObjective,
    #[error("sense `{0:?}` requires an objective")]
    MissingObjective(Sense),
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("variable v{0} has no assigned value")]
    UnsetVariable(VarId),
    #[error("domain error in {atom}: {details}")]
    Domain { atom: String, details: String },
}

// ---------------------------------------------------------------------------
// Variables

/// Declared properties of a variable. Hints become implicit constraints in
/// any problem the variable participates in, and sharpen sign analysis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VariableAttributes {
    pub sign_hint: Sign,
    pub semidefinite: bool,
    pub symmetric: bool,
}

impl Default for VariableAttributes {
    fn default() -> Self {
        VariableAttributes { sign_hint: Sign::NoSign, semidefinite: false, symmetric: false }
    }
}

impl VariableAttributes {
    pub fn positive() -> Self {
        VariableAttributes { sign_hint: Sign::Positive, ..Default::default() }
    }

    pub fn negative() -> Self {
        VariableAttributes { sign_hint: Sign::Negative, ..Default::default() }
    }

    pub fn semidefinite() -> Self {
        VariableAttributes { sign_hint: Sign::NoSign, semidefinite: true, symmetric: true }
    }
}

#[derive(Debug)]
pub struct VarData {
    pub id: VarId,
    pub shape: Shape,
    pub attrs: VariableAttributes,
    value: RwLock<Option<Array2<f64>>>,
}

impl VarData {
    pub fn value(&self) -> Option<Array2<f64>> {
        self.value.read().unwrap().clone()
    }

    pub fn set_value(&self, v: Array2<f64>) {
        assert_eq!(
            (v.nrows(), v.ncols()),
            (self.shape.rows, self.shape.cols),
            "assigned value shape does not match variable shape"
        );
        *self.value.write().unwrap() = Some(v);
    }

    pub fn clear_value(&self) {
        *self.value.write().unwrap() = None;
    }
}

static NEXT_VAR_ID: AtomicU64 = AtomicU64::new(0);

// ---------------------------------------------------------------------------
// Structural hashing

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-sensitive accumulator with splitmix64 mixing.
#[derive(Clone, Copy)]
pub(crate) struct UidHasher(u64);

impl UidHasher {
    pub fn new(seed: u64) -> Self {
        UidHasher(splitmix64(seed))
    }

    pub fn mix(mut self, v: u64) -> Self {
        self.0 = splitmix64(self.0 ^ v.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        self
    }

    pub fn mix_f64(self, v: f64) -> Self {
        self.mix(v.to_bits())
    }

    pub fn finish(self) -> u64 {
        self.0
    }
}

const KIND_VARIABLE: u64 = 0x76;
const KIND_CONSTANT: u64 = 0x63;
const KIND_ATOM: u64 = 0x61;

// ---------------------------------------------------------------------------
// Expressions

#[derive(Debug)]
pub(crate) enum Kind {
    Variable(Arc<VarData>),
    Constant(Array2<f64>, Sign),
    Atom(AtomTag, Vec<Expr>),
}

#[derive(Debug)]
pub(crate) struct Node {
    pub kind: Kind,
    pub uid: u64,
    pub shape: Shape,
}

/// An immutable expression: a variable, a constant, or an atom applied to
/// child expressions. Cloning is cheap (shared node).
#[derive(Clone, Debug)]
pub struct Expr(pub(crate) Arc<Node>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.uid() == other.uid()
    }
}
impl Eq for Expr {}

impl Expr {
    pub fn uid(&self) -> u64 {
        self.0.uid
    }

    pub fn shape(&self) -> Shape {
        self.0.shape
    }

    pub fn is_variable(&self) -> bool {
        matches!(self.0.kind, Kind::Variable(_))
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.0.kind, Kind::Constant(..))
    }

    pub fn var_data(&self) -> Option<&Arc<VarData>> {
        match &self.0.kind {
            Kind::Variable(v) => Some(v),
            _ => None,
        }
    }

    pub fn constant_value(&self) -> Option<&Array2<f64>> {
        match &self.0.kind {
            Kind::Constant(m, _) => Some(m),
            _ => None,
        }
    }

    pub fn atom(&self) -> Option<&AtomTag> {
        match &self.0.kind {
            Kind::Atom(tag, _) => Some(tag),
            _ => None,
        }
    }

    pub fn children(&self) -> &[Expr] {
        match &self.0.kind {
            Kind::Atom(_, ch) => ch,
            _ => &[],
        }
    }

    /// Current assigned value of a variable expression.
    pub fn value(&self) -> Option<Array2<f64>> {
        self.var_data().and_then(|v| v.value())
    }

    /// Assign a value to a variable expression. Panics on non-variables.
    pub fn set_value(&self, v: Array2<f64>) {
        self.var_data().expect("set_value on a non-variable expression").set_value(v);
    }

    pub fn set_scalar_value(&self, v: f64) {
        self.set_value(Array2::from_elem((1, 1), v));
    }

    /// Collect every distinct variable reachable from this expression,
    /// in first-encounter (depth-first, left-to-right) order.
    pub fn variables(&self) -> Vec<Arc<VarData>> {
        let mut seen = HashMap::new();
        let mut out = Vec::new();
        collect_variables(self, &mut seen, &mut out);
        out
    }
}

fn collect_variables(e: &Expr, seen: &mut HashMap<u64, ()>, out: &mut Vec<Arc<VarData>>) {
    if seen.insert(e.uid(), ()).is_some() {
        return;
    }
    match &e.0.kind {
        Kind::Variable(v) => out.push(v.clone()),
        Kind::Constant(..) => {}
        Kind::Atom(_, ch) => {
            for c in ch {
                collect_variables(c, seen, out);
            }
        }
    }
}

/// Fresh variable with a globally unique id.
pub fn make_variable(shape: Shape, attrs: VariableAttributes) -> Result<Expr, ExprError> {
    if attrs.semidefinite && !shape.is_square() {
        return Err(ExprError::InvalidAttributes(format!(
            "semidefinite variable must be square, got {shape}"
        )));
    }
    if attrs.symmetric && !shape.is_square() {
        return Err(ExprError::InvalidAttributes(format!(
            "symmetric variable must be square, got {shape}"
        )));
    }
    let mut attrs = attrs;
    if attrs.semidefinite {
        attrs.symmetric = true;
    }
    let id = NEXT_VAR_ID.fetch_add(1, Ordering::Relaxed);
    let uid = UidHasher::new(KIND_VARIABLE).mix(id).finish();
    let data = Arc::new(VarData { id, shape, attrs, value: RwLock::new(None) });
    Ok(Expr(Arc::new(Node { kind: Kind::Variable(data), uid, shape })))
}

/// Wrap a numeric matrix. The value is snapshotted; NaN/Inf entries are
/// rejected. Sign is computed from the entries.
pub fn make_constant(value: Array2<f64>) -> Result<Expr, ExprError> {
    if value.is_empty() {
        return Err(ExprError::InvalidShape { rows: value.nrows(), cols: value.ncols() });
    }
    if value.iter().any(|v| !v.is_finite()) {
        return Err(ExprError::NonFiniteConstant);
    }
    let shape = Shape::new(value.nrows(), value.ncols())?;
    let sign = Sign::of_matrix(&value);
    let mut h = UidHasher::new(KIND_CONSTANT).mix(shape.rows as u64).mix(shape.cols as u64);
    // column-major digest to match the scalarization order used everywhere else
    for j in 0..shape.cols {
        for i in 0..shape.rows {
            h = h.mix_f64(value[(i, j)]);
        }
    }
    let uid = h.finish();
    Ok(Expr(Arc::new(Node { kind: Kind::Constant(value, sign), uid, shape })))
}

/// Apply an atom to child expressions, checking arity and the atom's shape
/// rule. The node's uid is derived from the tag and the child uids.
pub fn apply_atom(tag: AtomTag, children: Vec<Expr>) -> Result<Expr, ExprError> {
    atoms::check_arity(&tag, children.len())?;
    let shapes: Vec<Shape> = children.iter().map(|c| c.shape()).collect();
    let shape = atoms::shape_rule(&tag, &shapes)?;
    let mut h = UidHasher::new(KIND_ATOM).mix(atoms::tag_code(&tag));
    for c in &children {
        h = h.mix(c.uid());
    }
    let uid = h.finish();
    Ok(Expr(Arc::new(Node { kind: Kind::Atom(tag, children), uid, shape })))
}

// ---------------------------------------------------------------------------
// Sign and evaluation

pub(crate) fn child_infos(e: &Expr, memo: &mut HashMap<u64, Sign>) -> Vec<ChildInfo> {
    e.children()
        .iter()
        .map(|c| ChildInfo {
            sign: sign_of_memo(c, memo),
            shape: c.shape(),
            constant: is_constant_tree(c),
        })
        .collect()
}

fn is_constant_tree(e: &Expr) -> bool {
    match &e.0.kind {
        Kind::Variable(_) => false,
        Kind::Constant(..) => true,
        Kind::Atom(_, ch) => ch.iter().all(is_constant_tree),
    }
}

/// Sign of an expression, computed bottom-up from each atom's sign rule.
/// Local rules only: may return NoSign where a global analysis would not.
pub fn sign_of(e: &Expr) -> Sign {
    let mut memo = HashMap::new();
    sign_of_memo(e, &mut memo)
}

pub(crate) fn sign_of_memo(e: &Expr, memo: &mut HashMap<u64, Sign>) -> Sign {
    if let Some(s) = memo.get(&e.uid()) {
        return *s;
    }
    let s = match &e.0.kind {
        Kind::Variable(v) => v.attrs.sign_hint,
        Kind::Constant(_, sign) => *sign,
        Kind::Atom(tag, _) => {
            let infos = child_infos(e, memo);
            atoms::sign_rule(tag, &infos)
        }
    };
    memo.insert(e.uid(), s);
    s
}

/// Evaluate an expression on the values assigned to its variables.
/// Recursive with per-uid memoization within the call.
pub fn evaluate(e: &Expr) -> Result<Array2<f64>, EvalError> {
    let mut memo = HashMap::new();
    evaluate_memo(e, &mut memo)
}

fn evaluate_memo(e: &Expr, memo: &mut HashMap<u64, Array2<f64>>) -> Result<Array2<f64>, EvalError> {
    if let Some(v) = memo.get(&e.uid()) {
        return Ok(v.clone());
    }
    let v = match &e.0.kind {
        Kind::Variable(var) => var.value().ok_or(EvalError::UnsetVariable(var.id))?,
        Kind::Constant(m, _) => m.clone(),
        Kind::Atom(tag, ch) => {
            let mut args = Vec::with_capacity(ch.len());
            for c in ch {
                args.push(evaluate_memo(c, memo)?);
            }
            atoms::evaluate_atom(tag, &args)?
        }
    };
    memo.insert(e.uid(), v.clone());
    Ok(v)
}

// ---------------------------------------------------------------------------
// Constraints and problems

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintKind {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintKind::Le => write!(f, "<="),
            ConstraintKind::Ge => write!(f, ">="),
            ConstraintKind::Eq => write!(f, "=="),
        }
    }
}

/// A relation between two expressions. There is no distinction between
/// strict and non-strict inequality. `dual_value` is populated by a solve.
#[derive(Clone, Debug)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub lhs: Expr,
    pub rhs: Expr,
    pub dual_value: Option<Array2<f64>>,
}

impl Constraint {
    pub fn new(kind: ConstraintKind, lhs: Expr, rhs: Expr) -> Result<Constraint, ExprError> {
        if Shape::broadcast(lhs.shape(), rhs.shape()).is_none() {
            return Err(ExprError::ShapeMismatch {
                atom: kind.to_string(),
                details: format!("cannot compare {} with {}", lhs.shape(), rhs.shape()),
            });
        }
        Ok(Constraint { kind, lhs, rhs, dual_value: None })
    }

    /// Common (broadcast) shape of the two sides.
    pub fn shape(&self) -> Shape {
        Shape::broadcast(self.lhs.shape(), self.rhs.shape()).unwrap()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
    Satisfy,
}

/// An optimization problem: a sense, an optional scalar objective (absent
/// iff the sense is `Satisfy`), and a list of constraints.
#[derive(Debug)]
pub struct Problem {
    pub sense: Sense,
    pub objective: Option<Expr>,
    pub constraints: Vec<Constraint>,
    pub optval: Option<f64>,
    pub status: Option<SolveStatus>,
}

impl Problem {
    pub fn new(
        sense: Sense,
        objective: Option<Expr>,
        constraints: Vec<Constraint>,
    ) -> Result<Problem, ExprError> {
        match (sense, &objective) {
            (Sense::Satisfy, Some(_)) => return Err(ExprError::SatisfyWithObjective),
            (Sense::Satisfy, None) => {}
            (_, None) => return Err(ExprError::MissingObjective(sense)),
            (_, Some(obj)) => {
                if !obj.shape().is_scalar() {
                    return Err(ExprError::NonScalarObjective(obj.shape()));
                }
            }
        }
        Ok(Problem { sense, objective, constraints, optval: None, status: None })
    }

    pub fn minimize(objective: Expr, constraints: Vec<Constraint>) -> Result<Problem, ExprError> {
        Problem::new(Sense::Minimize, Some(objective), constraints)
    }

    pub fn maximize(objective: Expr, constraints: Vec<Constraint>) -> Result<Problem, ExprError> {
        Problem::new(Sense::Maximize, Some(objective), constraints)
    }

    pub fn satisfy(constraints: Vec<Constraint>) -> Result<Problem, ExprError> {
        Problem::new(Sense::Satisfy, None, constraints)
    }

    /// Every distinct variable in the objective and constraints, in
    /// first-encounter order.
    pub fn variables(&self) -> Vec<Arc<VarData>> {
        let mut seen = HashMap::new();
        let mut out = Vec::new();
        if let Some(obj) = &self.objective {
            collect_variables(obj, &mut seen, &mut out);
        }
        for c in &self.constraints {
            collect_variables(&c.lhs, &mut seen, &mut out);
            collect_variables(&c.rhs, &mut seen, &mut out);
        }
        out
    }
}
