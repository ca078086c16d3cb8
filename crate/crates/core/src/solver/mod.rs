//! Embedded first-order conic solver and the end-to-end solve pipeline.
//!
//! The embedded backend handles the Zero, Free, NonNeg, and SecondOrder
//! cones. Problems lowering to PSD or exponential cones compile fine (for
//! export to an external solver) but solving them here returns
//! [`SolveStatus::UnsupportedCone`]. Dispatch is a seam: backends are chosen
//! by the set of cones required.

pub mod cones;
mod hsde;
pub mod ldl;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use ndarray::Array2;

use crate::conic::{self, ConeKind, ConicProblem, LowerError};
use crate::expr::{Problem, VarId};
use crate::linalg;

/// Solver parameters. The three tolerances default to 1e-7; `max_iters`
/// defaults to 100000 because a first-order method takes many cheap
/// iterations to reach that accuracy. `alpha` is the over-relaxation
/// parameter in (0, 2); `scale` multiplies the objective during the solve
/// (results are reported unscaled).
#[derive(Clone, Copy, Debug)]
pub struct SolveSettings {
    pub abstol: f64,
    pub reltol: f64,
    pub feastol: f64,
    pub max_iters: usize,
    pub alpha: f64,
    pub scale: f64,
}

impl Default for SolveSettings {
    fn default() -> Self {
        SolveSettings {
            abstol: 1e-7,
            reltol: 1e-7,
            feastol: 1e-7,
            max_iters: 100_000,
            alpha: 1.5,
            scale: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterLimit,
    UnsupportedCone,
    NumericalError,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::IterLimit => "iteration_limit",
            SolveStatus::UnsupportedCone => "unsupported_cone",
            SolveStatus::NumericalError => "numerical_error",
        };
        write!(f, "{s}")
    }
}

/// Result of a conic or end-to-end solve.
#[derive(Clone, Debug)]
pub struct Solution {
    pub status: SolveStatus,
    /// Optimal value. From [`solve`] this is in the user's sense
    /// (maximization un-flipped); from [`solve_conic`] it is the internal
    /// minimization value. NaN unless status is Optimal.
    pub optval: f64,
    /// Values per variable id (user and auxiliary), shaped column-major.
    pub primal: BTreeMap<VarId, Array2<f64>>,
    /// Dual value per user constraint, shaped like the constraint.
    pub duals: Vec<Option<Array2<f64>>>,
    /// Full dual vector over all conic rows (attribute and template rows
    /// included), in row order.
    pub dual_rows: Vec<f64>,
    /// Slack vector s with b - Ax = s, in row order.
    pub slack: Vec<f64>,
    pub iterations: usize,
    /// (primal residual, dual residual, duality gap), inf-norm based.
    pub residuals: (f64, f64, f64),
}

/// Cones the embedded backend accepts.
pub fn supported_cones() -> BTreeSet<ConeKind> {
    [ConeKind::Zero, ConeKind::Free, ConeKind::NonNeg, ConeKind::SecondOrder]
        .into_iter()
        .collect()
}

/// Solve standard-form conic data with the embedded backend.
pub fn solve_conic(cp: &ConicProblem, settings: &SolveSettings) -> Solution {
    let required = cp.required_cones();
    if !required.is_subset(&supported_cones()) {
        let missing: Vec<&str> = required
            .difference(&supported_cones())
            .map(|k| k.name())
            .collect();
        let _ = missing;
        return Solution {
            status: SolveStatus::UnsupportedCone,
            optval: f64::NAN,
            primal: BTreeMap::new(),
            duals: vec![None; cp.constraint_rows.len()],
            dual_rows: Vec::new(),
            slack: Vec::new(),
            iterations: 0,
            residuals: (f64::NAN, f64::NAN, f64::NAN),
        };
    }

    let raw = hsde::solve(cp, settings);
    let mut primal = BTreeMap::new();
    let mut duals = vec![None; cp.constraint_rows.len()];
    let mut optval = f64::NAN;
    if raw.status == SolveStatus::Optimal || raw.status == SolveStatus::IterLimit {
        for v in &cp.vars {
            let vals = &raw.x[v.cols.clone()];
            primal.insert(v.id, linalg::from_vec_cm(vals, v.shape.rows, v.shape.cols));
        }
        for (i, span) in cp.constraint_rows.iter().enumerate() {
            let block = &raw.y[span.start..span.start + span.len];
            duals[i] = Some(linalg::from_vec_cm(block, span.shape.rows, span.shape.cols));
        }
        if raw.status == SolveStatus::Optimal {
            let ctx: f64 = cp.c.iter().zip(&raw.x).map(|(c, x)| c * x).sum();
            optval = ctx + cp.objective_offset;
        }
    }
    Solution {
        status: raw.status,
        optval,
        primal,
        duals,
        dual_rows: raw.y,
        slack: raw.s,
        iterations: raw.iterations,
        residuals: raw.residuals,
    }
}

/// End-to-end pipeline: verify DCP, lower to conic form, dispatch on the
/// required cones, solve, and write results back onto the problem: optval
/// (maximization un-flipped), each variable's value, each constraint's dual.
pub fn solve(p: &mut Problem, settings: &SolveSettings) -> Result<Solution, LowerError> {
    let cp = conic::lower_problem(p)?;
    let mut sol = solve_conic(&cp, settings);
    if sol.status == SolveStatus::Optimal {
        if cp.sense_flip {
            sol.optval = -sol.optval;
        }
        p.optval = Some(sol.optval);
        for var in p.variables() {
            if let Some(m) = sol.primal.get(&var.id) {
                var.set_value(m.clone());
            }
        }
        for (i, c) in p.constraints.iter_mut().enumerate() {
            c.dual_value = sol.duals[i].clone();
        }
    } else {
        p.optval = None;
    }
    p.status = Some(sol.status);
    Ok(sol)
}
