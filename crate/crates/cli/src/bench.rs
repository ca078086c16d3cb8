//! Construction/solve benchmarks over four problems that are trivial to
//! solve but heavy to build: a long scalar summation, elementwise indexing
//! of a vector, a transposed matrix residual, and a fully pinned matrix.
//! Parse time covers AST construction, the DCP check, and lowering; solve
//! time covers the conic solve. Every run asserts its analytic optimum
//! before any timing is reported, and repeats run sequentially so timings
//! stay honest.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cvxkit_core::conic::lower_problem;
use cvxkit_core::dcp::problem_is_dcp;
use cvxkit_core::expr::{Problem, Shape, VariableAttributes};
use cvxkit_core::ops::*;
use cvxkit_core::solver::{solve_conic, SolveSettings, SolveStatus};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchTest {
    Sum,
    Index,
    Transpose,
    Matrix,
}

impl BenchTest {
    pub fn name(&self) -> &'static str {
        match self {
            BenchTest::Sum => "sum",
            BenchTest::Index => "index",
            BenchTest::Transpose => "transpose",
            BenchTest::Matrix => "matrix",
        }
    }

    pub fn all() -> [BenchTest; 4] {
        [BenchTest::Sum, BenchTest::Index, BenchTest::Transpose, BenchTest::Matrix]
    }
}

impl FromStr for BenchTest {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sum" => Ok(BenchTest::Sum),
            "index" => Ok(BenchTest::Index),
            "transpose" => Ok(BenchTest::Transpose),
            "matrix" => Ok(BenchTest::Matrix),
            other => Err(format!("unknown test `{other}` (sum|index|transpose|matrix)")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchRow {
    pub test: &'static str,
    pub n: usize,
    pub repeat_index: usize,
    pub parse_seconds: f64,
    pub solve_seconds: f64,
    pub optval: f64,
    pub status: String,
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, n), |_| rng.gen_range(-1.0..1.0))
}

/// Build one instance; returns the problem and its analytic optimum.
fn build(test: BenchTest, n: usize) -> (Problem, f64) {
    // fixed seed so the analytic optimum is reproducible across repeats
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED ^ n as u64);
    match test {
        BenchTest::Sum => {
            let x = var(1);
            let mut e = constant(0.0);
            for _ in 0..n {
                e = add(&e, &x);
            }
            let obj = norm_2(&sub(&e, &constant(1.0)));
            let p = Problem::minimize(obj, vec![ge(&x, &constant(0.0))]).unwrap();
            (p, 0.0)
        }
        BenchTest::Index => {
            let x = var(n);
            let mut e = constant(0.0);
            for i in 0..n {
                e = add(&e, &index(&x, i));
            }
            let obj = norm_2(&sub(&e, &constant(1.0)));
            let p = Problem::minimize(obj, vec![ge(&x, &constant(0.0))]).unwrap();
            (p, 0.0)
        }
        BenchTest::Transpose => {
            let a = random_matrix(&mut rng, n);
            let optimum = (1.0 - a[(0, 0)]).abs();
            let x = var_shaped(n, n, VariableAttributes::default());
            let obj = norm_fro(&sub(&transpose(&x), &constant_mat(a)));
            let p =
                Problem::minimize(obj, vec![eq(&entry(&x, 0, 0), &constant(1.0))]).unwrap();
            (p, optimum)
        }
        BenchTest::Matrix => {
            let a = random_matrix(&mut rng, n);
            let b = random_matrix(&mut rng, n);
            let optimum = (&b - &a).iter().map(|v| v * v).sum::<f64>().sqrt();
            let x = var_shaped(n, n, VariableAttributes::default());
            let obj = norm_fro(&sub(&x, &constant_mat(a)));
            let p = Problem::minimize(obj, vec![eq(&x, &constant_mat(b))]).unwrap();
            (p, optimum)
        }
    }
}

/// Run one benchmark `repeat` times. Returns an error (and no rows) if any
/// run fails its correctness check against the analytic optimum.
pub fn run(
    test: BenchTest,
    n: usize,
    repeat: usize,
    settings: &SolveSettings,
) -> Result<Vec<BenchRow>, String> {
    let _ = Shape::scalar();
    let mut rows = Vec::with_capacity(repeat);
    for repeat_index in 0..repeat {
        let t0 = Instant::now();
        let (problem, optimum) = build(test, n);
        let (dcp_ok, _) = problem_is_dcp(&problem);
        if !dcp_ok {
            return Err(format!("{}: benchmark problem is not DCP", test.name()));
        }
        let cp = lower_problem(&problem).map_err(|e| e.to_string())?;
        let parse_seconds = t0.elapsed().as_secs_f64();

        let t1 = Instant::now();
        let sol = solve_conic(&cp, settings);
        let solve_seconds = t1.elapsed().as_secs_f64();

        if sol.status != SolveStatus::Optimal {
            return Err(format!(
                "{} n={n} repeat={repeat_index}: solver returned {} after {} iterations",
                test.name(),
                sol.status,
                sol.iterations
            ));
        }
        let optval = sol.optval;
        if (optval - optimum).abs() > 1e-4 * (1.0 + optimum.abs()) {
            return Err(format!(
                "{} n={n}: optval {optval} disagrees with the analytic optimum {optimum}",
                test.name()
            ));
        }
        rows.push(BenchRow {
            test: test.name(),
            n,
            repeat_index,
            parse_seconds,
            solve_seconds,
            optval,
            status: sol.status.to_string(),
        });
    }
    Ok(rows)
}

pub const CSV_HEADER: &str = "test,n,repeat_index,parse_seconds,solve_seconds,optval,status";

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{:.6},{:.6},{},{}",
            r.test, r.n, r.repeat_index, r.parse_seconds, r.solve_seconds, r.optval, r.status
        )
        .unwrap();
    }
    out
}
