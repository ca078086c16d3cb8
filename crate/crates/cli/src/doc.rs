//! The JSON problem document.
//!
//! Expressions are Polish-notation trees: `{"atom": tag, "args": [...]}`
//! applies an atom, `{"var": name}` references a declared variable, and
//! `{"const": v}` embeds a number, a vector (flat array, read as a column),
//! or a matrix (array of equal-length rows).
//!
//! Indexing is 1-based on the wire: `getindex(x, i)` takes a column-major
//! linear index, `getindex(x, i, j)` a row/column pair, and
//! `slice(x, [r1, r2], [c1, c2])` inclusive ranges. Parsing canonicalizes:
//! composite sugar is preserved but index forms re-serialize as
//! `getindex(x, i, j)` or `slice`, scalars as bare numbers, and column
//! vectors as flat arrays. A canonical document re-parses to the same
//! problem and re-serializes byte-identically.

use std::collections::HashMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use cvxkit_core::atoms::{self, AtomTag};
use cvxkit_core::expr::{
    apply_atom, make_constant, make_variable, Constraint, ConstraintKind, Expr, ExprError,
    Problem, Sense, Shape, Sign, VariableAttributes,
};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ProblemDocument {
    pub sense: String,
    pub variables: Vec<VarDecl>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<ExprNode>,
    #[serde(default)]
    pub constraints: Vec<ConstraintDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct VarDecl {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attributes: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ConstraintDoc {
    pub op: String,
    pub lhs: ExprNode,
    pub rhs: ExprNode,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ExprNode {
    Atom { atom: String, args: Vec<ExprNode> },
    Var { var: String },
    Const {
        #[serde(rename = "const")]
        value: Value,
    },
}

#[derive(Debug, Error)]
pub enum DocError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown atom `{name}` (known: {known})")]
    UnknownAtom { name: String, known: String },
    #[error("malformed document: {0}")]
    Structure(String),
    #[error("{0}")]
    Expr(#[from] ExprError),
}

fn structure(msg: impl Into<String>) -> DocError {
    DocError::Structure(msg.into())
}

/// A parsed document: the core problem plus the name <-> variable binding.
#[derive(Debug)]
pub struct LoadedProblem {
    pub problem: Problem,
    pub vars: Vec<(String, Expr)>,
}

impl LoadedProblem {
    pub fn var_names(&self) -> HashMap<u64, String> {
        self.vars
            .iter()
            .map(|(name, e)| (e.var_data().unwrap().id, name.clone()))
            .collect()
    }
}

pub fn parse_document(json: &str) -> Result<LoadedProblem, DocError> {
    let doc: ProblemDocument = serde_json::from_str(json)?;
    load(&doc)
}

pub fn load(doc: &ProblemDocument) -> Result<LoadedProblem, DocError> {
    let sense = match doc.sense.as_str() {
        "minimize" => Sense::Minimize,
        "maximize" => Sense::Maximize,
        "satisfy" => Sense::Satisfy,
        other => return Err(structure(format!("unknown sense `{other}`"))),
    };
    let mut vars: Vec<(String, Expr)> = Vec::new();
    let mut by_name: HashMap<String, Expr> = HashMap::new();
    for decl in &doc.variables {
        if decl.name.is_empty() || decl.name.starts_with('$') {
            return Err(structure(format!(
                "variable name `{}` is reserved or empty",
                decl.name
            )));
        }
        if by_name.contains_key(&decl.name) {
            return Err(structure(format!("duplicate variable `{}`", decl.name)));
        }
        let mut attrs = VariableAttributes::default();
        for a in &decl.attributes {
            match a.as_str() {
                "positive" => attrs.sign_hint = Sign::Positive,
                "negative" => attrs.sign_hint = Sign::Negative,
                "symmetric" => attrs.symmetric = true,
                "semidefinite" => {
                    attrs.semidefinite = true;
                    attrs.symmetric = true;
                }
                other => {
                    return Err(structure(format!(
                        "unknown attribute `{other}` on variable `{}`",
                        decl.name
                    )))
                }
            }
        }
        let shape = Shape::new(decl.rows, decl.cols)?;
        let e = make_variable(shape, attrs)?;
        by_name.insert(decl.name.clone(), e.clone());
        vars.push((decl.name.clone(), e));
    }

    let objective = match &doc.objective {
        Some(node) => Some(build_expr(node, &by_name)?),
        None => None,
    };
    let mut constraints = Vec::with_capacity(doc.constraints.len());
    for c in &doc.constraints {
        let kind = match c.op.as_str() {
            "<=" => ConstraintKind::Le,
            ">=" => ConstraintKind::Ge,
            "==" => ConstraintKind::Eq,
            other => return Err(structure(format!("unknown comparison `{other}`"))),
        };
        let lhs = build_expr(&c.lhs, &by_name)?;
        let rhs = build_expr(&c.rhs, &by_name)?;
        constraints.push(Constraint::new(kind, lhs, rhs)?);
    }
    let problem = Problem::new(sense, objective, constraints)?;
    Ok(LoadedProblem { problem, vars })
}

fn build_expr(node: &ExprNode, vars: &HashMap<String, Expr>) -> Result<Expr, DocError> {
    match node {
        ExprNode::Var { var } => vars
            .get(var)
            .cloned()
            .ok_or_else(|| structure(format!("undeclared variable `{var}`"))),
        ExprNode::Const { value } => Ok(make_constant(parse_const(value)?)?),
        ExprNode::Atom { atom, args } => {
            if atom == "getindex" || atom == "slice" {
                return build_index(atom, args, vars);
            }
            let tag = atoms::lookup(atom, args.len()).ok_or_else(|| DocError::UnknownAtom {
                name: atom.clone(),
                known: atoms::known_names().join(", "),
            })?;
            let children: Result<Vec<Expr>, DocError> =
                args.iter().map(|a| build_expr(a, vars)).collect();
            Ok(apply_atom(tag, children?)?)
        }
    }
}

fn build_index(
    atom: &str,
    args: &[ExprNode],
    vars: &HashMap<String, Expr>,
) -> Result<Expr, DocError> {
    if args.is_empty() {
        return Err(structure(format!("{atom} needs an expression argument")));
    }
    let child = build_expr(&args[0], vars)?;
    let shape = child.shape();
    let tag = match atom {
        "getindex" => match args.len() {
            2 => {
                let i = const_index(&args[1])?;
                if i == 0 || i > shape.size() {
                    return Err(structure(format!(
                        "getindex position {i} out of bounds for {shape}"
                    )));
                }
                let (r, c) = ((i - 1) % shape.rows, (i - 1) / shape.rows);
                AtomTag::Index { rows: (r, r + 1), cols: (c, c + 1) }
            }
            3 => {
                let i = const_index(&args[1])?;
                let j = const_index(&args[2])?;
                if i == 0 || j == 0 {
                    return Err(structure("getindex positions are 1-based".to_string()));
                }
                AtomTag::Index { rows: (i - 1, i), cols: (j - 1, j) }
            }
            n => {
                return Err(structure(format!(
                    "getindex takes 2 or 3 arguments, got {n}"
                )))
            }
        },
        "slice" => {
            if args.len() != 3 {
                return Err(structure(format!(
                    "slice takes an expression and two ranges, got {} arguments",
                    args.len()
                )));
            }
            let (r1, r2) = const_range(&args[1])?;
            let (c1, c2) = const_range(&args[2])?;
            if r1 == 0 || c1 == 0 || r2 < r1 || c2 < c1 {
                return Err(structure("slice ranges are 1-based and inclusive".to_string()));
            }
            AtomTag::Index { rows: (r1 - 1, r2), cols: (c1 - 1, c2) }
        }
        _ => unreachable!(),
    };
    Ok(apply_atom(tag, vec![child])?)
}

fn const_index(node: &ExprNode) -> Result<usize, DocError> {
    match node {
        ExprNode::Const { value } => value
            .as_f64()
            .filter(|v| v.fract() == 0.0 && *v >= 0.0)
            .map(|v| v as usize)
            .ok_or_else(|| structure(format!("expected an integer index, got {value}"))),
        _ => Err(structure("index arguments must be constants".to_string())),
    }
}

fn const_range(node: &ExprNode) -> Result<(usize, usize), DocError> {
    match node {
        ExprNode::Const { value } => {
            let arr = value
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| structure(format!("expected [lo, hi], got {value}")))?;
            let lo = arr[0]
                .as_f64()
                .filter(|v| v.fract() == 0.0 && *v >= 0.0)
                .ok_or_else(|| structure("range bounds must be integers".to_string()))?;
            let hi = arr[1]
                .as_f64()
                .filter(|v| v.fract() == 0.0 && *v >= 0.0)
                .ok_or_else(|| structure("range bounds must be integers".to_string()))?;
            Ok((lo as usize, hi as usize))
        }
        _ => Err(structure("range arguments must be constants".to_string())),
    }
}

fn parse_const(value: &Value) -> Result<Array2<f64>, DocError> {
    if let Some(v) = value.as_f64() {
        return Ok(Array2::from_elem((1, 1), v));
    }
    let arr = value
        .as_array()
        .ok_or_else(|| structure(format!("constant must be a number or array, got {value}")))?;
    if arr.is_empty() {
        return Err(structure("constant array is empty".to_string()));
    }
    if arr[0].is_array() {
        let rows = arr.len();
        let cols = arr[0].as_array().unwrap().len();
        if cols == 0 {
            return Err(structure("constant matrix has an empty row".to_string()));
        }
        let mut m = Array2::zeros((rows, cols));
        for (i, row) in arr.iter().enumerate() {
            let row = row
                .as_array()
                .filter(|r| r.len() == cols)
                .ok_or_else(|| structure("constant matrix rows have unequal lengths".to_string()))?;
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = v
                    .as_f64()
                    .ok_or_else(|| structure(format!("non-numeric entry {v}")))?;
            }
        }
        Ok(m)
    } else {
        let mut m = Array2::zeros((arr.len(), 1));
        for (i, v) in arr.iter().enumerate() {
            m[(i, 0)] =
                v.as_f64().ok_or_else(|| structure(format!("non-numeric entry {v}")))?;
        }
        Ok(m)
    }
}

// ---------------------------------------------------------------------------
// Canonical serialization

pub fn document_from_loaded(lp: &LoadedProblem) -> ProblemDocument {
    let names = lp.var_names();
    let variables = lp
        .vars
        .iter()
        .map(|(name, e)| {
            let data = e.var_data().unwrap();
            let mut attributes = Vec::new();
            match data.attrs.sign_hint {
                Sign::Positive => attributes.push("positive".to_string()),
                Sign::Negative => attributes.push("negative".to_string()),
                _ => {}
            }
            if data.attrs.semidefinite {
                attributes.push("semidefinite".to_string());
            } else if data.attrs.symmetric {
                attributes.push("symmetric".to_string());
            }
            VarDecl {
                name: name.clone(),
                rows: data.shape.rows,
                cols: data.shape.cols,
                attributes,
            }
        })
        .collect();
    let sense = match lp.problem.sense {
        Sense::Minimize => "minimize",
        Sense::Maximize => "maximize",
        Sense::Satisfy => "satisfy",
    };
    ProblemDocument {
        sense: sense.to_string(),
        variables,
        objective: lp.problem.objective.as_ref().map(|e| node_from_expr(e, &names)),
        constraints: lp
            .problem
            .constraints
            .iter()
            .map(|c| ConstraintDoc {
                op: c.kind.to_string(),
                lhs: node_from_expr(&c.lhs, &names),
                rhs: node_from_expr(&c.rhs, &names),
            })
            .collect(),
    }
}

fn node_from_expr(e: &Expr, names: &HashMap<u64, String>) -> ExprNode {
    if let Some(data) = e.var_data() {
        return ExprNode::Var { var: names[&data.id].clone() };
    }
    if let Some(m) = e.constant_value() {
        return ExprNode::Const { value: const_value(m) };
    }
    let tag = e.atom().unwrap();
    if let AtomTag::Index { rows, cols } = tag {
        let child = node_from_expr(&e.children()[0], names);
        let int = |v: usize| ExprNode::Const { value: Value::from(v as u64) };
        let range = |lo: usize, hi: usize| ExprNode::Const {
            value: Value::from(vec![lo as u64, hi as u64]),
        };
        if e.shape().is_scalar() {
            return ExprNode::Atom {
                atom: "getindex".to_string(),
                args: vec![child, int(rows.0 + 1), int(cols.0 + 1)],
            };
        }
        return ExprNode::Atom {
            atom: "slice".to_string(),
            args: vec![child, range(rows.0 + 1, rows.1), range(cols.0 + 1, cols.1)],
        };
    }
    ExprNode::Atom {
        atom: tag.name(),
        args: e.children().iter().map(|c| node_from_expr(c, names)).collect(),
    }
}

fn const_value(m: &Array2<f64>) -> Value {
    if m.len() == 1 {
        return Value::from(m[(0, 0)]);
    }
    if m.ncols() == 1 {
        return Value::from(m.iter().map(|v| Value::from(*v)).collect::<Vec<_>>());
    }
    let rows: Vec<Value> = (0..m.nrows())
        .map(|i| Value::from((0..m.ncols()).map(|j| Value::from(m[(i, j)])).collect::<Vec<_>>()))
        .collect();
    Value::from(rows)
}

/// Canonical pretty rendering with a trailing newline.
pub fn to_json_string(doc: &ProblemDocument) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("document serialization");
    s.push('\n');
    s
}
