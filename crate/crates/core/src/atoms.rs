//! The atom catalog.
//!
//! Every atom defines five methods: sign, evaluate, curvature, monotonicity,
//! and a conic-form template (the template lives in [`crate::conic`]). The
//! rules here are local: they look only at the signs, shapes, and constancy
//! of the immediate children.
//!
//! Composite atoms (`norm_1`, `norm_fro`, `sum_squares`, `neg`) keep their own
//! tag and five methods but lower through primitive compositions:
//! `norm_1 = sum . abs`, `norm_fro = norm_2 . vec`,
//! `sum_squares = quad_over_lin(x, 1)`, `neg(x) = pos(-x)`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use ndarray::{concatenate, Array2, Axis};

use crate::expr::{
    EvalError, ExprError, Monotonicity, Shape, Sign, UidHasher, Vexity,
};
use crate::linalg;

/// Identifies an atom. `Index` carries its slice parameters (0-based,
/// half-open); `Custom` refers to the registration order in the registry.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum AtomTag {
    // arithmetic
    Add,
    Sub,
    Neg,
    Mul,
    // slicing and shaping
    Index { rows: (usize, usize), cols: (usize, usize) },
    Hcat,
    Vcat,
    Diag,
    Transpose,
    Sum,
    // positive orthant
    Abs,
    MaxEntries,
    MaxElem,
    MinEntries,
    MinElem,
    Pos,
    NegPart,
    Norm1,
    NormInf,
    // second-order cone
    Norm2,
    NormFro,
    Square,
    Sqrt,
    GeoMean,
    QuadOverLin,
    InvPos,
    SumSquares,
    // exponential cone
    Exp,
    Log,
    LogSumExp,
    // semidefinite cone
    OperatorNorm,
    NuclearNorm,
    // registered at load time
    Custom(u32),
}

impl AtomTag {
    /// Canonical tag name (`-` covers both negation and subtraction; arity
    /// disambiguates).
    pub fn name(&self) -> String {
        use AtomTag::*;
        match self {
            Add => "+".into(),
            Sub | Neg => "-".into(),
            Mul => "*".into(),
            Index { .. } => "slice".into(),
            Hcat => "hcat".into(),
            Vcat => "vertcat".into(),
            Diag => "diag".into(),
            Transpose => "transpose".into(),
            Sum => "sum".into(),
            Abs => "abs".into(),
            MaxEntries | MaxElem => "max".into(),
            MinEntries | MinElem => "min".into(),
            Pos => "pos".into(),
            NegPart => "neg".into(),
            Norm1 => "norm_1".into(),
            NormInf => "norm_inf".into(),
            Norm2 => "norm_2".into(),
            NormFro => "norm_fro".into(),
            Square => "square".into(),
            Sqrt => "sqrt".into(),
            GeoMean => "geo_mean".into(),
            QuadOverLin => "quad_over_lin".into(),
            InvPos => "inv_pos".into(),
            SumSquares => "sum_squares".into(),
            Exp => "exp".into(),
            Log => "log".into(),
            LogSumExp => "logsumexp".into(),
            OperatorNorm => "operatornorm".into(),
            NuclearNorm => "nuclearnorm".into(),
            Custom(id) => custom_atom(*id).map(|a| a.name().to_string()).unwrap_or_default(),
        }
    }
}

impl fmt::Display for AtomTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

/// Stable code used in structural hashing. Index parameters and custom atom
/// names are folded in so distinct atoms never share a code.
pub(crate) fn tag_code(tag: &AtomTag) -> u64 {
    use AtomTag::*;
    let base: u64 = match tag {
        Add => 1,
        Sub => 2,
        Neg => 3,
        Mul => 4,
        Index { .. } => 5,
        Hcat => 6,
        Vcat => 7,
        Diag => 8,
        Transpose => 9,
        Sum => 10,
        Abs => 11,
        MaxEntries => 12,
        MaxElem => 13,
        MinEntries => 14,
        MinElem => 15,
        Pos => 16,
        NegPart => 17,
        Norm1 => 18,
        NormInf => 19,
        Norm2 => 20,
        NormFro => 21,
        Square => 22,
        Sqrt => 23,
        GeoMean => 24,
        QuadOverLin => 25,
        InvPos => 26,
        SumSquares => 27,
        Exp => 28,
        Log => 29,
        LogSumExp => 30,
        OperatorNorm => 31,
        NuclearNorm => 32,
        Custom(_) => 1000,
    };
    let mut h = UidHasher::new(base);
    if let Index { rows, cols } = tag {
        h = h.mix(rows.0 as u64).mix(rows.1 as u64).mix(cols.0 as u64).mix(cols.1 as u64);
    }
    if let Custom(id) = tag {
        // hash the registered name so codes do not depend on registration order
        if let Some(atom) = custom_atom(*id) {
            for b in atom.name().bytes() {
                h = h.mix(b as u64);
            }
        }
    }
    h.finish()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arity {
    Exact(usize),
    AtLeast(usize),
}

impl fmt::Display for Arity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arity::Exact(n) => write!(f, "{n}"),
            Arity::AtLeast(n) => write!(f, "at least {n}"),
        }
    }
}

/// Local information about one child, consumed by the sign, curvature, and
/// monotonicity rules.
#[derive(Clone, Copy, Debug)]
pub struct ChildInfo {
    pub sign: Sign,
    pub shape: Shape,
    /// True when the child's whole subtree is constant.
    pub constant: bool,
}

impl ChildInfo {
    /// Convenience for rule-level tests that only care about the sign.
    pub fn of_sign(sign: Sign) -> ChildInfo {
        ChildInfo { sign, shape: Shape::scalar(), constant: false }
    }
}

pub fn arity(tag: &AtomTag) -> Arity {
    use AtomTag::*;
    match tag {
        Add => Arity::AtLeast(1),
        Hcat | Vcat => Arity::AtLeast(1),
        Sub | Mul | MaxElem | MinElem | GeoMean | QuadOverLin => Arity::Exact(2),
        Custom(id) => custom_atom(*id).map(|a| a.arity()).unwrap_or(Arity::Exact(1)),
        _ => Arity::Exact(1),
    }
}

pub fn check_arity(tag: &AtomTag, got: usize) -> Result<(), ExprError> {
    let ok = match arity(tag) {
        Arity::Exact(n) => got == n,
        Arity::AtLeast(n) => got >= n,
    };
    if ok {
        Ok(())
    } else {
        Err(ExprError::ArityMismatch {
            atom: tag.name(),
            expected: arity(tag).to_string(),
            got,
        })
    }
}

// ---------------------------------------------------------------------------
// Shape rules

fn broadcast_all(tag: &AtomTag, shapes: &[Shape]) -> Result<Shape, ExprError> {
    let mut acc = shapes[0];
    for s in &shapes[1..] {
        acc = Shape::broadcast(acc, *s).ok_or_else(|| ExprError::ShapeMismatch {
            atom: tag.name(),
            details: format!("cannot combine {acc} with {s}"),
        })?;
    }
    Ok(acc)
}

fn want_equal(tag: &AtomTag, shapes: &[Shape]) -> Result<Shape, ExprError> {
    for s in &shapes[1..] {
        if *s != shapes[0] {
            return Err(ExprError::ShapeMismatch {
                atom: tag.name(),
                details: format!("arguments must have equal shapes, got {} and {}", shapes[0], s),
            });
        }
    }
    Ok(shapes[0])
}

pub fn shape_rule(tag: &AtomTag, shapes: &[Shape]) -> Result<Shape, ExprError> {
    use AtomTag::*;
    match tag {
        Add | Sub | MaxElem | MinElem => broadcast_all(tag, shapes),
        Neg | Abs | Pos | NegPart | Square | Sqrt | Exp | Log | InvPos => Ok(shapes[0]),
        Mul => {
            let (a, b) = (shapes[0], shapes[1]);
            if a.is_scalar() {
                Ok(b)
            } else if b.is_scalar() {
                Ok(a)
            } else if a.cols == b.rows {
                Ok(Shape { rows: a.rows, cols: b.cols })
            } else {
                Err(ExprError::ShapeMismatch {
                    atom: tag.name(),
                    details: format!("cannot multiply {a} by {b}"),
                })
            }
        }
        Index { rows, cols } => {
            let s = shapes[0];
            if rows.0 >= rows.1 || cols.0 >= cols.1 || rows.1 > s.rows || cols.1 > s.cols {
                return Err(ExprError::ShapeMismatch {
                    atom: tag.name(),
                    details: format!(
                        "index rows {}..{} cols {}..{} out of bounds for {s}",
                        rows.0, rows.1, cols.0, cols.1
                    ),
                });
            }
            Ok(Shape { rows: rows.1 - rows.0, cols: cols.1 - cols.0 })
        }
        Hcat => {
            let rows = shapes[0].rows;
            let mut cols = 0;
            for s in shapes {
                if s.rows != rows {
                    return Err(ExprError::ShapeMismatch {
                        atom: tag.name(),
                        details: format!("row counts differ: {} vs {}", rows, s.rows),
                    });
                }
                cols += s.cols;
            }
            Ok(Shape { rows, cols })
        }
        Vcat => {
            let cols = shapes[0].cols;
            let mut rows = 0;
            for s in shapes {
                if s.cols != cols {
                    return Err(ExprError::ShapeMismatch {
                        atom: tag.name(),
                        details: format!("column counts differ: {} vs {}", cols, s.cols),
                    });
                }
                rows += s.rows;
            }
            Ok(Shape { rows, cols })
        }
        Diag => Ok(Shape::vector(shapes[0].rows.min(shapes[0].cols))),
        Transpose => Ok(shapes[0].transposed()),
        Sum | MaxEntries | MinEntries | Norm1 | NormInf | NormFro | SumSquares | LogSumExp
        | OperatorNorm | NuclearNorm => Ok(Shape::scalar()),
        Norm2 => {
            if !shapes[0].is_vector() {
                return Err(ExprError::ShapeMismatch {
                    atom: tag.name(),
                    details: format!("norm_2 expects a vector, got {} (use norm_fro)", shapes[0]),
                });
            }
            Ok(Shape::scalar())
        }
        GeoMean => want_equal(tag, shapes),
        QuadOverLin => {
            if !shapes[1].is_scalar() {
                return Err(ExprError::ShapeMismatch {
                    atom: tag.name(),
                    details: format!("denominator must be scalar, got {}", shapes[1]),
                });
            }
            Ok(Shape::scalar())
        }
        Custom(id) => custom_atom(*id)
            .ok_or_else(|| ExprError::UnknownAtom(format!("custom atom #{id}")))?
            .shape(shapes),
    }
}

// ---------------------------------------------------------------------------
// Sign rules

fn sign_of_max(a: Sign, b: Sign) -> Sign {
    use Sign::*;
    match (a, b) {
        (Positive, _) | (_, Positive) => Positive,
        (Zero, Zero) | (Zero, Negative) | (Negative, Zero) => Zero,
        (Negative, Negative) => Negative,
        (Zero, NoSign) | (NoSign, Zero) => Positive,
        (Negative, NoSign) | (NoSign, Negative) | (NoSign, NoSign) => NoSign,
    }
}

fn nonneg_or_zero(s: Sign) -> Sign {
    if s == Sign::Zero {
        Sign::Zero
    } else {
        Sign::Positive
    }
}

pub fn sign_rule(tag: &AtomTag, children: &[ChildInfo]) -> Sign {
    use AtomTag::*;
    let s = |i: usize| children[i].sign;
    match tag {
        Add | Hcat | Vcat => children.iter().fold(Sign::Zero, |acc, c| acc + c.sign),
        Sub => s(0) + -s(1),
        Neg => -s(0),
        Mul => s(0) * s(1),
        Index { .. } | Diag | Transpose | Sum | MaxEntries | MinEntries => s(0),
        Abs | Norm1 | NormInf | Norm2 | NormFro | Square | SumSquares | Sqrt | OperatorNorm
        | NuclearNorm => nonneg_or_zero(s(0)),
        MaxElem => sign_of_max(s(0), s(1)),
        MinElem => -sign_of_max(-s(0), -s(1)),
        Pos => match s(0) {
            Sign::Zero | Sign::Negative => Sign::Zero,
            _ => Sign::Positive,
        },
        NegPart => match s(0) {
            Sign::Zero | Sign::Positive => Sign::Zero,
            _ => Sign::Positive,
        },
        GeoMean => {
            if s(0) == Sign::Zero || s(1) == Sign::Zero {
                Sign::Zero
            } else {
                Sign::Positive
            }
        }
        QuadOverLin => nonneg_or_zero(s(0)),
        InvPos | Exp => Sign::Positive,
        Log | LogSumExp => Sign::NoSign,
        Custom(id) => custom_atom(*id).map(|a| a.sign(children)).unwrap_or(Sign::NoSign),
    }
}

// ---------------------------------------------------------------------------
// Curvature and monotonicity rules

/// Intrinsic curvature of the atom itself (not of a composed expression).
pub fn curvature(tag: &AtomTag, children: &[ChildInfo]) -> Vexity {
    use AtomTag::*;
    match tag {
        Add | Sub | Neg | Index { .. } | Hcat | Vcat | Diag | Transpose | Sum => Vexity::Affine,
        // products are affine in one factor when the other is constant; a
        // product of two non-constant expressions is not DCP
        Mul => {
            if children[0].constant || children[1].constant {
                Vexity::Affine
            } else {
                Vexity::NotDcp
            }
        }
        Abs | MaxEntries | MaxElem | Pos | NegPart | Norm1 | NormInf | Norm2 | NormFro
        | Square | QuadOverLin | InvPos | SumSquares | Exp | LogSumExp | OperatorNorm
        | NuclearNorm => Vexity::Convex,
        MinEntries | MinElem | Sqrt | GeoMean | Log => Vexity::Concave,
        Custom(id) => custom_atom(*id).map(|a| a.curvature(children)).unwrap_or(Vexity::NotDcp),
    }
}

/// The signed rule shared by the absolute-value family: nondecreasing on
/// nonnegative arguments, nonincreasing on nonpositive ones.
fn signed(s: Sign) -> Monotonicity {
    match s {
        Sign::Positive | Sign::Zero => Monotonicity::Nondecreasing,
        Sign::Negative => Monotonicity::Nonincreasing,
        Sign::NoSign => Monotonicity::NotMonotonic,
    }
}

pub fn monotonicity(tag: &AtomTag, children: &[ChildInfo]) -> Vec<Monotonicity> {
    use AtomTag::*;
    use Monotonicity::*;
    match tag {
        Add | Hcat | Vcat => vec![Nondecreasing; children.len()],
        Sub => vec![Nondecreasing, Nonincreasing],
        Neg => vec![Nonincreasing],
        // monotone in each factor according to the sign of the other factor
        Mul => (0..2)
            .map(|i| match children[1 - i].sign {
                Sign::Positive | Sign::Zero => Nondecreasing,
                Sign::Negative => Nonincreasing,
                Sign::NoSign => NotMonotonic,
            })
            .collect(),
        Index { .. } | Diag | Transpose | Sum => vec![Nondecreasing],
        Abs | Norm1 | NormInf | Norm2 | NormFro | Square | SumSquares => {
            vec![signed(children[0].sign)]
        }
        MaxEntries | MinEntries | Pos | Sqrt | Exp | Log | LogSumExp => vec![Nondecreasing],
        MaxElem | MinElem | GeoMean => vec![Nondecreasing, Nondecreasing],
        NegPart | InvPos => vec![Nonincreasing],
        QuadOverLin => vec![signed(children[0].sign), Nonincreasing],
        OperatorNorm | NuclearNorm => vec![NotMonotonic],
        Custom(id) => custom_atom(*id)
            .map(|a| a.monotonicity(children))
            .unwrap_or_else(|| vec![NotMonotonic; children.len()]),
    }
}

// ---------------------------------------------------------------------------
// Evaluation

fn domain(tag: &AtomTag, details: impl Into<String>) -> EvalError {
    EvalError::Domain { atom: tag.name(), details: details.into() }
}

fn broadcast_pair(a: &Array2<f64>, b: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let scalar = |m: &Array2<f64>| m.len() == 1;
    if a.dim() == b.dim() {
        (a.clone(), b.clone())
    } else if scalar(a) {
        (Array2::from_elem(b.dim(), a[(0, 0)]), b.clone())
    } else {
        (a.clone(), Array2::from_elem(a.dim(), b[(0, 0)]))
    }
}

fn scalar2(v: f64) -> Array2<f64> {
    Array2::from_elem((1, 1), v)
}

/// Evaluate an atom on numeric arguments. Off-domain inputs (log of a
/// nonpositive value, negative sqrt, ...) fail loudly instead of producing
/// NaN or infinities.
pub fn evaluate_atom(tag: &AtomTag, args: &[Array2<f64>]) -> Result<Array2<f64>, EvalError> {
    use AtomTag::*;
    match tag {
        Add => {
            let mut acc = args[0].clone();
            for b in &args[1..] {
                let (x, y) = broadcast_pair(&acc, b);
                acc = x + y;
            }
            Ok(acc)
        }
        Sub => {
            let (a, b) = broadcast_pair(&args[0], &args[1]);
            Ok(a - b)
        }
        Neg => Ok(-&args[0]),
        Mul => {
            let (a, b) = (&args[0], &args[1]);
            if a.len() == 1 {
                Ok(b * a[(0, 0)])
            } else if b.len() == 1 {
                Ok(a * b[(0, 0)])
            } else {
                Ok(a.dot(b))
            }
        }
        Index { rows, cols } => {
            Ok(args[0].slice(ndarray::s![rows.0..rows.1, cols.0..cols.1]).to_owned())
        }
        Hcat => {
            let views: Vec<_> = args.iter().map(|a| a.view()).collect();
            Ok(concatenate(Axis(1), &views).expect("hcat shapes checked at construction"))
        }
        Vcat => {
            let views: Vec<_> = args.iter().map(|a| a.view()).collect();
            Ok(concatenate(Axis(0), &views).expect("vertcat shapes checked at construction"))
        }
        Diag => {
            let n = args[0].nrows().min(args[0].ncols());
            Ok(Array2::from_shape_fn((n, 1), |(i, _)| args[0][(i, i)]))
        }
        Transpose => Ok(args[0].t().to_owned()),
        Sum => Ok(scalar2(args[0].sum())),
        Abs => Ok(args[0].mapv(f64::abs)),
        MaxEntries => Ok(scalar2(args[0].iter().cloned().fold(f64::NEG_INFINITY, f64::max))),
        MinEntries => Ok(scalar2(args[0].iter().cloned().fold(f64::INFINITY, f64::min))),
        MaxElem => {
            let (a, b) = broadcast_pair(&args[0], &args[1]);
            Ok(ndarray::Zip::from(&a).and(&b).map_collect(|x, y| x.max(*y)))
        }
        MinElem => {
            let (a, b) = broadcast_pair(&args[0], &args[1]);
            Ok(ndarray::Zip::from(&a).and(&b).map_collect(|x, y| x.min(*y)))
        }
        Pos => Ok(args[0].mapv(|v| v.max(0.0))),
        NegPart => Ok(args[0].mapv(|v| (-v).max(0.0))),
        Norm1 => Ok(scalar2(args[0].iter().map(|v| v.abs()).sum())),
        NormInf => Ok(scalar2(args[0].iter().map(|v| v.abs()).fold(0.0, f64::max))),
        Norm2 | NormFro => Ok(scalar2(args[0].iter().map(|v| v * v).sum::<f64>().sqrt())),
        Square => Ok(args[0].mapv(|v| v * v)),
        Sqrt => {
            if args[0].iter().any(|&v| v < 0.0) {
                return Err(domain(tag, "sqrt of a negative value"));
            }
            Ok(args[0].mapv(f64::sqrt))
        }
        GeoMean => {
            if args[0].iter().any(|&v| v < 0.0) || args[1].iter().any(|&v| v < 0.0) {
                return Err(domain(tag, "geo_mean requires nonnegative arguments"));
            }
            Ok(ndarray::Zip::from(&args[0]).and(&args[1]).map_collect(|x, y| (x * y).sqrt()))
        }
        QuadOverLin => {
            let y = args[1][(0, 0)];
            if y <= 0.0 {
                return Err(domain(tag, format!("denominator must be positive, got {y}")));
            }
            Ok(scalar2(args[0].iter().map(|v| v * v).sum::<f64>() / y))
        }
        InvPos => {
            if args[0].iter().any(|&v| v <= 0.0) {
                return Err(domain(tag, "inv_pos requires positive arguments"));
            }
            Ok(args[0].mapv(|v| 1.0 / v))
        }
        SumSquares => Ok(scalar2(args[0].iter().map(|v| v * v).sum())),
        Exp => Ok(args[0].mapv(f64::exp)),
        Log => {
            if args[0].iter().any(|&v| v <= 0.0) {
                return Err(domain(tag, "log requires positive arguments"));
            }
            Ok(args[0].mapv(f64::ln))
        }
        LogSumExp => {
            let m = args[0].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let s: f64 = args[0].iter().map(|v| (v - m).exp()).sum();
            Ok(scalar2(m + s.ln()))
        }
        OperatorNorm => {
            let sv = linalg::singular_values(&args[0]);
            Ok(scalar2(sv.first().copied().unwrap_or(0.0)))
        }
        NuclearNorm => Ok(scalar2(linalg::singular_values(&args[0]).iter().sum())),
        Custom(id) => custom_atom(*id)
            .ok_or_else(|| domain(tag, "unregistered custom atom"))?
            .evaluate(args),
    }
}

// ---------------------------------------------------------------------------
// Catalog and registration

/// One catalog entry. `sample` is a representative tag instance (relevant
/// for parametrized atoms like slicing).
#[derive(Clone, Debug)]
pub struct AtomDescriptor {
    pub name: String,
    pub sample: AtomTag,
    pub arity: Arity,
}

/// Every atom known to the library: the built-in catalog plus any atoms
/// registered through [`register_atom`].
pub fn catalog() -> Vec<AtomDescriptor> {
    use AtomTag::*;
    let builtins = [
        Add,
        Sub,
        Neg,
        Mul,
        Index { rows: (0, 1), cols: (0, 1) },
        Hcat,
        Vcat,
        Diag,
        Transpose,
        Sum,
        Abs,
        MaxEntries,
        MaxElem,
        MinEntries,
        MinElem,
        Pos,
        NegPart,
        Norm1,
        NormInf,
        Norm2,
        NormFro,
        Square,
        Sqrt,
        GeoMean,
        QuadOverLin,
        InvPos,
        SumSquares,
        Exp,
        Log,
        LogSumExp,
        OperatorNorm,
        NuclearNorm,
    ];
    let mut out: Vec<AtomDescriptor> = builtins
        .into_iter()
        .map(|t| AtomDescriptor { name: t.name(), arity: arity(&t), sample: t })
        .collect();
    let reg = registry().read().unwrap();
    for (i, atom) in reg.iter().enumerate() {
        out.push(AtomDescriptor {
            name: atom.name().to_string(),
            arity: atom.arity(),
            sample: Custom(i as u32),
        });
    }
    out
}

/// A user-defined atom. Implementations must supply all five methods;
/// registration must happen before any problem construction begins so that
/// structural hashes stay stable.
pub trait CustomAtom: Send + Sync {
    fn name(&self) -> &str;
    fn arity(&self) -> Arity;
    fn shape(&self, shapes: &[Shape]) -> Result<Shape, ExprError>;
    fn sign(&self, children: &[ChildInfo]) -> Sign;
    fn curvature(&self, children: &[ChildInfo]) -> Vexity;
    fn monotonicity(&self, children: &[ChildInfo]) -> Vec<Monotonicity>;
    fn evaluate(&self, args: &[Array2<f64>]) -> Result<Array2<f64>, EvalError>;
    /// Conic-form template: given affine maps for the children, return the
    /// objective map, emitting any constraints through the context.
    fn lower(
        &self,
        ctx: &mut crate::conic::TemplateCtx<'_>,
        args: &[crate::conic::AffineMap],
    ) -> Result<crate::conic::AffineMap, crate::conic::LowerError>;
}

fn registry() -> &'static RwLock<Vec<Arc<dyn CustomAtom>>> {
    static REGISTRY: OnceLock<RwLock<Vec<Arc<dyn CustomAtom>>>> = OnceLock::new();
    REGISTRY.get_or_init(|| RwLock::new(Vec::new()))
}

/// Register a new atom and return the tag to apply it with.
pub fn register_atom(atom: Arc<dyn CustomAtom>) -> AtomTag {
    let mut reg = registry().write().unwrap();
    reg.push(atom);
    AtomTag::Custom((reg.len() - 1) as u32)
}

pub(crate) fn custom_atom(id: u32) -> Option<Arc<dyn CustomAtom>> {
    registry().read().unwrap().get(id as usize).cloned()
}

/// Resolve a tag name as it appears in serialized problems. `max`/`min` and
/// `-` change meaning with the argument count.
pub fn lookup(name: &str, nargs: usize) -> Option<AtomTag> {
    use AtomTag::*;
    let tag = match (name, nargs) {
        ("+" | "add", _) => Add,
        ("-" | "sub", 2) => Sub,
        ("-" | "negate", 1) => Neg,
        ("*" | "mul", _) => Mul,
        ("hcat", _) => Hcat,
        ("vertcat" | "vcat", _) => Vcat,
        ("diag", _) => Diag,
        ("transpose", _) => Transpose,
        ("sum", _) => Sum,
        ("abs", _) => Abs,
        ("max", 1) => MaxEntries,
        ("max", 2) => MaxElem,
        ("min", 1) => MinEntries,
        ("min", 2) => MinElem,
        ("pos", _) => Pos,
        ("neg", _) => NegPart,
        ("norm_1", _) => Norm1,
        ("norm_inf", _) => NormInf,
        ("norm_2", _) => Norm2,
        ("norm_fro", _) => NormFro,
        ("square", _) => Square,
        ("sqrt", _) => Sqrt,
        ("geo_mean", _) => GeoMean,
        ("quad_over_lin", _) => QuadOverLin,
        ("inv_pos", _) => InvPos,
        ("sum_squares", _) => SumSquares,
        ("exp", _) => Exp,
        ("log", _) => Log,
        ("logsumexp", _) => LogSumExp,
        ("operatornorm", _) => OperatorNorm,
        ("nuclearnorm", _) => NuclearNorm,
        _ => {
            let reg = registry().read().unwrap();
            let found = reg.iter().position(|a| a.name() == name)?;
            return Some(Custom(found as u32));
        }
    };
    Some(tag)
}

/// All known tag names, for error messages.
pub fn known_names() -> Vec<String> {
    let mut names: Vec<String> =
        catalog().iter().map(|d| d.name.clone()).collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
    names.push("getindex".into());
    names.sort();
    names.dedup();
    names
}

/// Child infos for rule-level probing in tests and audits.
pub fn infos_from_signs(signs: &[Sign]) -> Vec<ChildInfo> {
    signs.iter().map(|s| ChildInfo::of_sign(*s)).collect()
}

#[allow(dead_code)]
fn _unused(_: &HashMap<(), ()>) {}
