//! Serialized standard-form data.
//!
//! The convention string is fixed to `b-Ax-in-K`: row i of `A` and entry i
//! of `b` define the slack `s_i = b_i - (A x)_i`, and the `cones` list
//! partitions rows in order. Triplets are sorted row-major with no
//! duplicates. `var_index` maps variable names (auxiliaries are `$aux0`,
//! `$aux1`, ... in order of introduction) to `[col_start, col_len]`.
//!
//! Dual convention: the multiplier of a user constraint is the dual block
//! of its rows, with `lam >= 0` for inequalities in the internal minimize
//! sense and the Lagrangian `obj + lam^T (lhs - rhs)` for `<=`/`==` rows
//! (`rhs - lhs` for `>=`).

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;
use serde_json::Value;

use cvxkit_core::conic::ConicProblem;

#[derive(Serialize)]
pub struct ConicDocument {
    pub n_vars: usize,
    pub objective_offset: f64,
    pub sense_flip: bool,
    pub c: Vec<f64>,
    pub b: Vec<f64>,
    #[serde(rename = "A")]
    pub a: MatrixDoc,
    pub cones: Vec<ConeDoc>,
    pub var_index: BTreeMap<String, [usize; 2]>,
    pub convention: String,
}

#[derive(Serialize)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub triplets: Vec<Value>,
}

#[derive(Serialize)]
pub struct ConeDoc {
    pub kind: String,
    pub dim: usize,
}

pub fn conic_document(cp: &ConicProblem, names: &HashMap<u64, String>) -> ConicDocument {
    let mut var_index = BTreeMap::new();
    let mut aux = 0usize;
    for v in &cp.vars {
        let name = if v.is_aux {
            let n = format!("$aux{aux}");
            aux += 1;
            n
        } else {
            names.get(&v.id).cloned().unwrap_or_else(|| format!("$v{}", v.id))
        };
        var_index.insert(name, [v.cols.start, v.cols.end - v.cols.start]);
    }
    let triplets = cp
        .a
        .entries()
        .iter()
        .map(|t| Value::from(vec![Value::from(t.row as u64), Value::from(t.col as u64), Value::from(t.val)]))
        .collect();
    ConicDocument {
        n_vars: cp.n_cols(),
        objective_offset: cp.objective_offset,
        sense_flip: cp.sense_flip,
        c: cp.c.clone(),
        b: cp.b.clone(),
        a: MatrixDoc { rows: cp.a.nrows(), cols: cp.a.ncols(), triplets },
        cones: cp
            .cones
            .iter()
            .map(|c| ConeDoc { kind: c.kind.name().to_string(), dim: c.dim })
            .collect(),
        var_index,
        convention: "b-Ax-in-K".to_string(),
    }
}

pub fn to_json_string(doc: &ConicDocument) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("conic document serialization");
    s.push('\n');
    s
}
