//! Command logic behind the binary, returned as (exit code, report text) so
//! integration tests can call it without spawning processes.
//!
//! Exit codes: 0 success/optimal, 1 parse error, 2 not DCP, 3 infeasible or
//! unbounded, 4 iteration limit, 5 unsupported cone, 6 numerical error.

use std::fmt::Write as _;

use ndarray::Array2;

use cvxkit_core::conic::{lower_problem, LowerError};
use cvxkit_core::dcp::{self, DcpDiagnostic};
use cvxkit_core::expr::{Expr, Sense, Vexity};
use cvxkit_core::solver::{solve_conic, SolveSettings, SolveStatus};

use crate::conic_doc;
use crate::doc::{self, LoadedProblem};

pub const EXIT_OK: u8 = 0;
pub const EXIT_PARSE: u8 = 1;
pub const EXIT_NOT_DCP: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;
pub const EXIT_ITER_LIMIT: u8 = 4;
pub const EXIT_UNSUPPORTED: u8 = 5;
pub const EXIT_NUMERICAL: u8 = 6;

pub struct CmdResult {
    pub code: u8,
    pub stdout: String,
}

fn vexity_name(v: Vexity) -> &'static str {
    match v {
        Vexity::Constant => "constant",
        Vexity::Affine => "affine",
        Vexity::Convex => "convex",
        Vexity::Concave => "concave",
        Vexity::NotDcp => "not DCP",
    }
}

/// Atom names from the root to the node with the given uid.
fn path_to(e: &Expr, uid: u64) -> Option<Vec<String>> {
    fn walk(e: &Expr, uid: u64, trail: &mut Vec<String>) -> bool {
        let label = match e.atom() {
            Some(tag) => tag.name(),
            None if e.is_variable() => "variable".to_string(),
            None => "constant".to_string(),
        };
        trail.push(label);
        if e.uid() == uid {
            return true;
        }
        for c in e.children() {
            if walk(c, uid, trail) {
                return true;
            }
        }
        trail.pop();
        false
    }
    let mut trail = Vec::new();
    walk(e, uid, &mut trail).then_some(trail)
}

fn describe_verdict(root: &Expr, d: &DcpDiagnostic) -> String {
    match &d.offending {
        None => vexity_name(d.verdict).to_string(),
        Some(off) => {
            let path = path_to(root, off.uid)
                .map(|p| p.join(" -> "))
                .unwrap_or_else(|| off.atom.name());
            format!(
                "not DCP at [{path}]: `{}` applied to {} children",
                off.atom,
                off.child_vexities.iter().map(|v| vexity_name(*v)).collect::<Vec<_>>().join(", ")
            )
        }
    }
}

pub fn cmd_lint(json: &str) -> CmdResult {
    let lp = match doc::parse_document(json) {
        Ok(lp) => lp,
        Err(e) => return CmdResult { code: EXIT_PARSE, stdout: format!("parse error: {e}\n") },
    };
    let mut out = String::new();
    let mut ok = true;
    let sense_word = match lp.problem.sense {
        Sense::Minimize => "minimize",
        Sense::Maximize => "maximize",
        Sense::Satisfy => "satisfy",
    };
    let mut objective_vexity = None;
    if let Some(obj) = &lp.problem.objective {
        let d = dcp::diagnose(obj);
        writeln!(out, "objective: {}", describe_verdict(obj, &d)).unwrap();
        let sense_ok = match lp.problem.sense {
            Sense::Minimize => d.verdict.is_convex(),
            Sense::Maximize => d.verdict.is_concave(),
            Sense::Satisfy => false,
        };
        if !sense_ok {
            ok = false;
            writeln!(
                out,
                "  sense rule violated: {} needs a {} objective, got {}",
                sense_word,
                if lp.problem.sense == Sense::Minimize { "convex" } else { "concave" },
                vexity_name(d.verdict)
            )
            .unwrap();
        }
        objective_vexity = Some(d.verdict);
    }
    for (i, c) in lp.problem.constraints.iter().enumerate() {
        let (c_ok, diag) = dcp::constraint_is_dcp(c);
        writeln!(
            out,
            "constraint {i}: {} {} {}{}",
            describe_verdict(&c.lhs, &diag.lhs),
            c.kind,
            describe_verdict(&c.rhs, &diag.rhs),
            if c_ok { "" } else { "  <- violates the constraint rule" }
        )
        .unwrap();
        ok &= c_ok;
    }
    if ok {
        match objective_vexity {
            Some(v) => writeln!(out, "DCP: {} {}", sense_word, vexity_name(v)).unwrap(),
            None => writeln!(out, "DCP: satisfy").unwrap(),
        }
        CmdResult { code: EXIT_OK, stdout: out }
    } else {
        writeln!(out, "not DCP").unwrap();
        CmdResult { code: EXIT_NOT_DCP, stdout: out }
    }
}

pub fn cmd_compile(json: &str) -> (CmdResult, Option<String>) {
    let lp = match doc::parse_document(json) {
        Ok(lp) => lp,
        Err(e) => {
            return (
                CmdResult { code: EXIT_PARSE, stdout: format!("parse error: {e}\n") },
                None,
            )
        }
    };
    match lower_problem(&lp.problem) {
        Ok(cp) => {
            let doc = conic_doc::conic_document(&cp, &lp.var_names());
            let text = conic_doc::to_json_string(&doc);
            let summary = format!(
                "compiled: {} rows, {} cols, cones {:?}\n",
                cp.n_rows(),
                cp.n_cols(),
                cp.cones.iter().map(|c| (c.kind.name(), c.dim)).collect::<Vec<_>>()
            );
            (CmdResult { code: EXIT_OK, stdout: summary }, Some(text))
        }
        Err(LowerError::NotDcp(msg)) => (
            CmdResult { code: EXIT_NOT_DCP, stdout: format!("not DCP: {msg}\n") },
            None,
        ),
        Err(e) => (
            CmdResult { code: EXIT_NUMERICAL, stdout: format!("lowering failed: {e}\n") },
            None,
        ),
    }
}

fn format_matrix(m: &Array2<f64>) -> String {
    if m.len() == 1 {
        return format!("{:.6}", m[(0, 0)]);
    }
    if m.ncols() == 1 {
        let entries: Vec<String> = m.iter().map(|v| format!("{v:.6}")).collect();
        return format!("[{}]", entries.join(", "));
    }
    let rows: Vec<String> = (0..m.nrows())
        .map(|i| {
            let row: Vec<String> =
                (0..m.ncols()).map(|j| format!("{:.6}", m[(i, j)])).collect();
            format!("[{}]", row.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

pub fn cmd_solve(json: &str, settings: &SolveSettings) -> CmdResult {
    let lp = match doc::parse_document(json) {
        Ok(lp) => lp,
        Err(e) => return CmdResult { code: EXIT_PARSE, stdout: format!("parse error: {e}\n") },
    };
    solve_loaded(&lp, settings)
}

pub fn solve_loaded(lp: &LoadedProblem, settings: &SolveSettings) -> CmdResult {
    let cp = match lower_problem(&lp.problem) {
        Ok(cp) => cp,
        Err(LowerError::NotDcp(msg)) => {
            return CmdResult { code: EXIT_NOT_DCP, stdout: format!("not DCP: {msg}\n") }
        }
        Err(e) => {
            return CmdResult { code: EXIT_NUMERICAL, stdout: format!("lowering failed: {e}\n") }
        }
    };
    let sol = solve_conic(&cp, settings);
    let mut out = String::new();
    writeln!(out, "status: {}", sol.status).unwrap();
    let code = match sol.status {
        SolveStatus::Optimal => {
            let optval = if cp.sense_flip { -sol.optval } else { sol.optval };
            writeln!(out, "optval: {optval:.9}").unwrap();
            writeln!(out, "iterations: {}", sol.iterations).unwrap();
            for (name, e) in &lp.vars {
                let id = e.var_data().unwrap().id;
                match sol.primal.get(&id) {
                    Some(m) => writeln!(out, "{name} = {}", format_matrix(m)).unwrap(),
                    None => writeln!(out, "{name} = (unused in the problem)").unwrap(),
                }
            }
            for (i, d) in sol.duals.iter().enumerate() {
                if let Some(m) = d {
                    writeln!(out, "dual[{i}] = {}", format_matrix(m)).unwrap();
                }
            }
            EXIT_OK
        }
        SolveStatus::Infeasible => {
            writeln!(out, "the constraints admit no solution").unwrap();
            EXIT_INFEASIBLE
        }
        SolveStatus::Unbounded => {
            writeln!(out, "the objective is unbounded over the feasible set").unwrap();
            EXIT_INFEASIBLE
        }
        SolveStatus::IterLimit => {
            writeln!(
                out,
                "stopped after {} iterations with residuals {:?}",
                sol.iterations, sol.residuals
            )
            .unwrap();
            EXIT_ITER_LIMIT
        }
        SolveStatus::UnsupportedCone => {
            let kinds: Vec<&str> = cp.required_cones().iter().map(|k| k.name()).collect();
            writeln!(
                out,
                "the embedded solver handles zero/nonneg/soc cones; this problem needs {:?}\n\
                 use `cvxkit compile` to export the conic form for an external solver",
                kinds
            )
            .unwrap();
            EXIT_UNSUPPORTED
        }
        SolveStatus::NumericalError => {
            writeln!(out, "factorization or iteration failed numerically").unwrap();
            EXIT_NUMERICAL
        }
    };
    CmdResult { code, stdout: out }
}
