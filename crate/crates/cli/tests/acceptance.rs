//! Acceptance suite. Each test covers one numbered criterion, asserts its
//! stated tolerances, enforces its runtime budget, and prints one PASS line
//! (run with `--nocapture` to see them).
//!
//!  1. atom classification table and >= 40 composed-expression cases
//!  2. the guide problem end-to-end against an LP brute-force oracle
//!  3. graph-form tightness of auxiliary variables over a mixed corpus
//!  4. solver optima vs multi-level grid search on 200 random problems
//!  5. LP duality and complementary slackness on 100 random LPs
//!  6. memoized lowering collapses repeated subexpressions
//!  7. the four construction benchmarks: analytic optima and warm parses
//!  8. byte-identical compiles and identical iteration counts across runs
//!  9. cone projection properties on 1e4 random vectors per cone

use std::collections::HashMap;
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use cvxkit_core::atoms::{self, infos_from_signs, AtomTag};
use cvxkit_core::conic::{lower_problem, lower_problem_with, ConeKind, LowerOptions};
use cvxkit_core::dcp;
use cvxkit_core::expr::{
    evaluate, sign_of, Expr, Monotonicity, Problem, Sign, VariableAttributes, Vexity,
};
use cvxkit_core::ops::*;
use cvxkit_core::solver::cones::{dual_kind, project};
use cvxkit_core::solver::{solve, solve_conic, SolveSettings, SolveStatus};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn criterion(id: u32, name: &str, budget_seconds: f64, body: impl FnOnce()) {
    let t0 = Instant::now();
    body();
    let elapsed = t0.elapsed().as_secs_f64();
    println!("ACCEPTANCE {id} ({name}): PASS in {elapsed:.2}s (budget {budget_seconds}s)");
    assert!(
        elapsed < budget_seconds,
        "criterion {id} exceeded its runtime budget: {elapsed:.2}s >= {budget_seconds}s"
    );
}

fn settings() -> SolveSettings {
    SolveSettings::default()
}

fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cvxkit"))
}

// ===========================================================================
// 1. DCP classification

#[test]
fn acceptance_1_dcp_classification() {
    criterion(1, "DCP classification suite", 1.0, || {
        atom_table_matches();
        composed_expression_cases();
    });
}

fn atom_table_matches() {
    use AtomTag::*;
    use Monotonicity::*;
    use Sign::*;
    use Vexity::*;
    // (tag, child signs, curvature, monotonicity per child); the square
    // row's second branch reads nonincreasing for x <= 0, and the
    // absolute-value family shares abs's signed rule
    let nd = &[Nondecreasing][..];
    let ni = &[Nonincreasing][..];
    let nd2 = &[Nondecreasing, Nondecreasing][..];
    let table: Vec<(AtomTag, Vec<Sign>, Vexity, &[Monotonicity])> = vec![
        (Index { rows: (0, 1), cols: (0, 1) }, vec![NoSign], Affine, nd),
        (Hcat, vec![NoSign, NoSign], Affine, nd2),
        (Vcat, vec![NoSign, NoSign], Affine, nd2),
        (Diag, vec![NoSign], Affine, nd),
        (Transpose, vec![NoSign], Affine, nd),
        (Sum, vec![NoSign], Affine, nd),
        (Add, vec![NoSign, NoSign], Affine, nd2),
        (Sub, vec![NoSign, NoSign], Affine, &[Nondecreasing, Nonincreasing]),
        (Neg, vec![NoSign], Affine, ni),
        (MaxEntries, vec![NoSign], Convex, nd),
        (MinEntries, vec![NoSign], Concave, nd),
        (MaxElem, vec![NoSign, NoSign], Convex, nd2),
        (MinElem, vec![NoSign, NoSign], Concave, nd2),
        (Pos, vec![NoSign], Convex, nd),
        (NegPart, vec![NoSign], Convex, ni),
        (Sqrt, vec![Positive], Concave, nd),
        (GeoMean, vec![Positive, Positive], Concave, nd2),
        (InvPos, vec![Positive], Convex, ni),
        (QuadOverLin, vec![Positive, Positive], Convex, &[Nondecreasing, Nonincreasing]),
        (QuadOverLin, vec![Negative, Positive], Convex, &[Nonincreasing, Nonincreasing]),
        (Exp, vec![NoSign], Convex, nd),
        (Log, vec![Positive], Concave, nd),
        (LogSumExp, vec![NoSign], Convex, nd),
        (OperatorNorm, vec![NoSign], Convex, &[NotMonotonic]),
        (NuclearNorm, vec![NoSign], Convex, &[NotMonotonic]),
    ];
    for (tag, signs, curv, monos) in table {
        let infos = infos_from_signs(&signs);
        assert_eq!(atoms::curvature(&tag, &infos), curv, "curvature of {tag}");
        assert_eq!(atoms::monotonicity(&tag, &infos), monos.to_vec(), "monotonicity of {tag}");
    }
    for tag in [Abs, Norm1, NormInf, Norm2, NormFro, Square, SumSquares] {
        for (sign, mono) in [
            (Positive, Nondecreasing),
            (Zero, Nondecreasing),
            (Negative, Nonincreasing),
            (NoSign, NotMonotonic),
        ] {
            let infos = infos_from_signs(&[sign]);
            assert_eq!(atoms::curvature(&tag, &infos), Convex);
            assert_eq!(
                atoms::monotonicity(&tag, &infos),
                vec![mono],
                "{tag} on {sign:?} children"
            );
        }
    }
}

fn composed_expression_cases() {
    use Vexity::*;
    let x = var(1);
    let y = var(1);
    let z = var(3);
    let p = var_shaped(1, 1, VariableAttributes::positive());
    let q = var_shaped(3, 1, VariableAttributes::positive());
    let m = var_shaped(1, 1, VariableAttributes::negative());

    let cases: Vec<(&str, Expr, Vexity)> = vec![
        ("variable", x.clone(), Affine),
        ("constant", constant(2.0), Constant),
        ("2 + square(x)", add(&constant(2.0), &square(&x)), Convex),
        ("square(x) + x - x", add(&square(&x), &sub(&x, &x)), Convex),
        ("sqrt(p) + log(p)", add(&sqrt(&p), &log(&p)), Concave),
        ("square(log(x))", square(&log(&x)), NotDcp),
        ("norm_inf(z)", norm_inf(&z), Convex),
        ("norm_2(z)", norm_2(&z), Convex),
        ("norm_1(z)", norm_1(&z), Convex),
        ("sum(z)", sum(&z), Affine),
        ("3 |x|", scale(3.0, &abs(&x)), Convex),
        ("-3 |x|", scale(-3.0, &abs(&x)), Concave),
        ("1 - |x|", sub(&constant(1.0), &abs(&x)), Concave),
        ("max(square(x), |y|)", max2(&square(&x), &abs(&y)), Convex),
        ("min(sqrt(p), x)", min2(&sqrt(&p), &x), Concave),
        ("pos(x - y)", pos(&sub(&x, &y)), Convex),
        ("negpart(x)", neg_part(&x), Convex),
        ("sum_squares(z)", sum_squares(&z), Convex),
        ("quad_over_lin(x, p)", quad_over_lin(&x, &p), Convex),
        ("exp(square(x))", exp(&square(&x)), Convex),
        ("logsumexp(z)", logsumexp(&z), Convex),
        ("geo_mean(p, p)", geo_mean(&p, &p), Concave),
        ("inv_pos(p)", inv_pos(&p), Convex),
        ("abs(abs(x))", abs(&abs(&x)), Convex),
        ("square(positive var)", square(&p), Convex),
        ("square(abs(x))", square(&abs(&x)), Convex),
        ("square(x - 3)", square(&sub(&x, &constant(3.0))), Convex),
        ("square(negative var)", square(&m), Convex),
        ("square of nosign affine", square(&add(&x, &y)), Convex),
        ("max entries", max_entries(&z), Convex),
        ("min entries", min_entries(&z), Concave),
        ("norm_1 + sum", add(&norm_1(&z), &sum(&z)), Convex),
        ("sqrt - square", sub(&sqrt(&p), &square(&x)), Concave),
        ("square - sqrt", sub(&square(&x), &sqrt(&p)), Convex),
        ("square + sqrt", add(&square(&x), &sqrt(&p)), NotDcp),
        ("abs of concave positive", abs(&sqrt(&p)), NotDcp),
        ("abs of log", abs(&log(&p)), NotDcp),
        ("x * y", mul(&x, &y), NotDcp),
        ("exp(exp(x))", exp(&exp(&x)), Convex),
        ("exp(-sqrt(p)) is exp of convex", exp(&sub(&constant(0.0), &sqrt(&p))), Convex),
        ("exp(sqrt(p)) is exp of concave", exp(&sqrt(&p)), NotDcp),
        ("inv_pos(sqrt(p))", inv_pos(&sqrt(&p)), Convex),
        ("norm_2 of positive square", norm_2(&square(&q)), Convex),
        ("norm_2 of square is convex by sign", norm_2(&square(&z)), Convex),
        ("norm_2 of general affine minus square", norm_2(&sub(&z, &square(&z))), NotDcp),
        ("transpose keeps affinity", transpose(&z), Affine),
        ("sum of abs vector", sum(&abs(&z)), Convex),
        ("neg of norm", neg(&norm_2(&z)), Concave),
        ("nested scaling", scale(2.0, &scale(-1.0, &square(&x))), Concave),
        ("sum(z) == affine under indexing", index(&z, 1), Affine),
    ];
    assert!(cases.len() >= 40, "need at least 40 composed cases, have {}", cases.len());
    for (name, e, want) in &cases {
        assert_eq!(dcp::vexity(e), *want, "composed case `{name}`");
    }
    // the sign counterpart of the guide's cancellation example
    assert_eq!(sign_of(&add(&square(&x), &sub(&x, &x))), Sign::NoSign);
    // and the intrinsic-vs-composed distinction for +
    assert_eq!(
        atoms::curvature(&AtomTag::Add, &infos_from_signs(&[Sign::NoSign, Sign::Positive])),
        Vexity::Affine
    );
}

// ===========================================================================
// 2. Guide example end-to-end

#[test]
fn acceptance_2_guide_example() {
    criterion(2, "guide example end-to-end", 1.0, || {
        // brute-force LP oracle: eliminate x1 = 5 - x2, take the best
        // feasible x3 = min(x2, 0), scan x2
        let mut oracle = f64::INFINITY;
        let mut x2 = -10.0;
        while x2 <= 10.0 {
            let x1: f64 = 5.0 - x2;
            let x3 = x2.min(0.0);
            oracle = oracle.min(x1.abs().max(x2.abs()).max(x3.abs()));
            x2 += 1e-4;
        }

        let x = var(3);
        let mut p = Problem::minimize(
            norm_inf(&x),
            vec![
                eq(&add(&index(&x, 0), &index(&x, 1)), &constant(5.0)),
                le(&index(&x, 2), &index(&x, 1)),
            ],
        )
        .unwrap();
        let sol = solve(&mut p, &settings()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        let optval = p.optval.unwrap();
        assert!((optval - oracle).abs() < 1e-5, "optval {optval} vs oracle {oracle}");
        assert!((optval - 2.5).abs() < 1e-5);
        // both constraints hold at the recovered point
        let xv = x.value().unwrap();
        assert!((xv[(0, 0)] + xv[(1, 0)] - 5.0).abs() < 1e-6);
        assert!(xv[(2, 0)] <= xv[(1, 0)] + 1e-6);
    });
}

// ===========================================================================
// 3. Graph-form tightness

fn tightness_corpus(rng: &mut ChaCha8Rng) -> Vec<Problem> {
    let mut problems = Vec::new();
    for n in [2usize, 3, 4] {
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let apos: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
        let target = constant_vec(&a);

        let x = var(n);
        let shift = sub(&x, &target);
        // norms and elementwise epigraph atoms under direct pressure
        problems.push(
            Problem::minimize(
                add(&norm_2(&shift), &scale(0.05, &sum(&x))),
                vec![ge(&x, &constant(-4.0)), le(&x, &constant(4.0))],
            )
            .unwrap(),
        );
        problems.push(
            Problem::minimize(
                add(&norm_1(&shift), &scale(0.05, &sum(&x))),
                vec![ge(&x, &constant(-4.0))],
            )
            .unwrap(),
        );
        problems.push(Problem::minimize(norm_inf(&shift), vec![]).unwrap());
        problems.push(Problem::minimize(sum(&abs(&shift)), vec![]).unwrap());
        problems.push(Problem::minimize(sum(&square(&shift)), vec![]).unwrap());
        problems.push(
            Problem::minimize(quad_over_lin(&shift, &constant(1.5)), vec![]).unwrap(),
        );
        problems.push(
            Problem::minimize(
                add(&max_entries(&x), &scale(0.01, &sum(&x))),
                vec![ge(&x, &constant_vec(&a))],
            )
            .unwrap(),
        );
        // hypograph atoms under upward pressure
        let y = var(n);
        problems.push(
            Problem::maximize(
                sum(&sqrt(&y)),
                vec![ge(&y, &constant(0.04)), le(&sum(&y), &constant(2.0 * n as f64))],
            )
            .unwrap(),
        );
        problems.push(
            Problem::maximize(
                sum(&geo_mean(&y, &constant_vec(&apos))),
                vec![ge(&y, &constant(0.04)), le(&y, &constant(3.0))],
            )
            .unwrap(),
        );
        // an active second-order constraint
        let z = var(n);
        problems.push(
            Problem::maximize(sum(&z), vec![le(&norm_2(&z), &constant(1.5))]).unwrap(),
        );
    }
    problems
}

#[test]
fn acceptance_3_graph_tightness() {
    criterion(3, "graph-form tightness", 30.0, || {
        let mut rng = ChaCha8Rng::seed_from_u64(0xAAA);
        let problems = tightness_corpus(&mut rng);
        assert!(problems.len() >= 25, "corpus has {} problems", problems.len());
        let mut audited = 0usize;
        for (pi, p) in problems.into_iter().enumerate() {
            let cp = lower_problem(&p).unwrap();
            let sol = solve_conic(&cp, &settings());
            assert_eq!(sol.status, SolveStatus::Optimal, "problem {pi}");
            // write primal values back so the record arguments can evaluate
            for v in p.variables() {
                if let Some(mv) = sol.primal.get(&v.id) {
                    v.set_value(mv.clone());
                }
            }
            assert!(!cp.graph_records.is_empty(), "problem {pi} has no records");
            for rec in &cp.graph_records {
                let args: Vec<Array2<f64>> =
                    rec.args.iter().map(|e| evaluate(e).unwrap()).collect();
                let expected = atoms::evaluate_atom(&rec.atom, &args).unwrap();
                let aux = &sol.primal[&rec.aux];
                assert_eq!(aux.len(), expected.len());
                for (a, b) in aux.iter().zip(expected.iter()) {
                    assert!(
                        (a - b).abs() <= 1e-5 * (1.0 + b.abs()),
                        "problem {pi}, atom {}: aux {a} vs value {b}",
                        rec.atom
                    );
                }
                audited += 1;
            }
        }
        assert!(audited >= 25, "audited only {audited} epigraph variables");
    });
}

// ===========================================================================
// 4. Oracle equivalence on random problems

use std::rc::Rc;

type Ev = Rc<dyn Fn(&[f64]) -> f64>;
type Gr = Rc<dyn Fn(&[f64]) -> Vec<f64>>;

/// A generated objective: the expression for the solver side, and an
/// independent value/subgradient pair for the oracle side.
#[derive(Clone)]
struct Fun {
    e: Expr,
    v: Ev,
    g: Gr,
}

/// Random affine combination of the scalar variables.
fn gen_affine(rng: &mut ChaCha8Rng, vars: &[Expr]) -> Fun {
    let n = vars.len();
    let c0: f64 = rng.gen_range(-1.5..1.5);
    let coeffs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect();
    let mut e = constant(c0);
    for (i, v) in vars.iter().enumerate() {
        e = add(&e, &mul(&constant(coeffs[i]), v));
    }
    let cv = coeffs.clone();
    let v = move |p: &[f64]| c0 + cv.iter().zip(p).map(|(c, x)| c * x).sum::<f64>();
    let g = move |_p: &[f64]| coeffs.clone();
    Fun { e, v: Rc::new(v), g: Rc::new(g) }
}

/// Bound on |affine| over the box [-b, b]^n, for domain-safe shifts.
fn box_bound(f: &Fun, n: usize, b: f64) -> f64 {
    let mut bound = 0.0f64;
    for mask in 0..(1u32 << n) {
        let pt: Vec<f64> = (0..n).map(|i| if mask >> i & 1 == 1 { b } else { -b }).collect();
        bound = bound.max((f.v)(&pt).abs());
    }
    bound
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn gen_convex(rng: &mut ChaCha8Rng, vars: &[Expr], depth: usize, b: f64) -> Fun {
    let n = vars.len();
    if depth == 0 {
        return gen_affine(rng, vars);
    }
    match rng.gen_range(0..12u32) {
        0 => gen_affine(rng, vars),
        1 => {
            let a = gen_affine(rng, vars);
            let (av, ag) = (a.v.clone(), a.g.clone());
            Fun {
                e: abs(&a.e),
                v: Rc::new(move |p| av(p).abs()),
                g: Rc::new(move |p| {
                    let s = (a.v)(p).signum();
                    let mut out = vec![0.0; n];
                    axpy(s, &ag(p), &mut out);
                    out
                }),
            }
        }
        2 => {
            let a = gen_affine(rng, vars);
            let (av, ag) = (a.v.clone(), a.g.clone());
            Fun {
                e: pos(&a.e),
                v: Rc::new(move |p| av(p).max(0.0)),
                g: Rc::new(move |p| {
                    if (a.v)(p) > 0.0 {
                        ag(p)
                    } else {
                        vec![0.0; n]
                    }
                }),
            }
        }
        3 => {
            let a = gen_affine(rng, vars);
            let (av, ag) = (a.v.clone(), a.g.clone());
            Fun {
                e: square(&a.e),
                v: Rc::new(move |p| av(p) * av(p)),
                g: Rc::new(move |p| {
                    let mut out = vec![0.0; n];
                    axpy(2.0 * (a.v)(p), &ag(p), &mut out);
                    out
                }),
            }
        }
        4 | 5 | 6 => {
            // a norm of a stacked vector of affine parts
            let which = rng.gen_range(4..7u32);
            let k = rng.gen_range(2..4usize);
            let parts: Vec<Fun> = (0..k).map(|_| gen_affine(rng, vars)).collect();
            let exprs: Vec<Expr> = parts.iter().map(|f| f.e.clone()).collect();
            let refs: Vec<&Expr> = exprs.iter().collect();
            let stacked = vcat(&refs);
            let pv: Vec<Ev> = parts.iter().map(|f| f.v.clone()).collect();
            let pg: Vec<Gr> = parts.iter().map(|f| f.g.clone()).collect();
            match which {
                4 => Fun {
                    e: norm_2(&stacked),
                    v: {
                        let pv = pv.clone();
                        Rc::new(move |p| pv.iter().map(|v| v(p) * v(p)).sum::<f64>().sqrt())
                    },
                    g: Rc::new(move |p| {
                        let r = pv.iter().map(|v| v(p) * v(p)).sum::<f64>().sqrt();
                        let mut out = vec![0.0; n];
                        if r > 1e-12 {
                            for (v, g) in pv.iter().zip(&pg) {
                                axpy(v(p) / r, &g(p), &mut out);
                            }
                        }
                        out
                    }),
                },
                5 => Fun {
                    e: norm_1(&stacked),
                    v: {
                        let pv = pv.clone();
                        Rc::new(move |p| pv.iter().map(|v| v(p).abs()).sum())
                    },
                    g: Rc::new(move |p| {
                        let mut out = vec![0.0; n];
                        for (v, g) in pv.iter().zip(&pg) {
                            axpy(v(p).signum(), &g(p), &mut out);
                        }
                        out
                    }),
                },
                _ => Fun {
                    e: norm_inf(&stacked),
                    v: {
                        let pv = pv.clone();
                        Rc::new(move |p| pv.iter().map(|v| v(p).abs()).fold(0.0, f64::max))
                    },
                    g: Rc::new(move |p| {
                        let mut best = 0usize;
                        let mut mag = -1.0;
                        for (i, v) in pv.iter().enumerate() {
                            if v(p).abs() > mag {
                                mag = v(p).abs();
                                best = i;
                            }
                        }
                        let mut out = vec![0.0; n];
                        axpy(pv[best](p).signum(), &pg[best](p), &mut out);
                        out
                    }),
                },
            }
        }
        7 => {
            let a = gen_affine(rng, vars);
            let d: f64 = rng.gen_range(0.5..2.0);
            let (av, ag) = (a.v.clone(), a.g.clone());
            Fun {
                e: quad_over_lin(&a.e, &constant(d)),
                v: Rc::new(move |p| av(p) * av(p) / d),
                g: Rc::new(move |p| {
                    let mut out = vec![0.0; n];
                    axpy(2.0 * (a.v)(p) / d, &ag(p), &mut out);
                    out
                }),
            }
        }
        8 => {
            let f1 = gen_convex(rng, vars, depth - 1, b);
            let f2 = gen_convex(rng, vars, depth - 1, b);
            let (v1, v2) = (f1.v.clone(), f2.v.clone());
            let (w1, w2) = (f1.v.clone(), f2.v.clone());
            let (g1, g2) = (f1.g.clone(), f2.g.clone());
            Fun {
                e: max2(&f1.e, &f2.e),
                v: Rc::new(move |p| v1(p).max(v2(p))),
                g: Rc::new(move |p| if w1(p) >= w2(p) { g1(p) } else { g2(p) }),
            }
        }
        9 => {
            let f1 = gen_convex(rng, vars, depth - 1, b);
            let f2 = gen_convex(rng, vars, depth - 1, b);
            let (v1, v2) = (f1.v.clone(), f2.v.clone());
            let (g1, g2) = (f1.g.clone(), f2.g.clone());
            Fun {
                e: add(&f1.e, &f2.e),
                v: Rc::new(move |p| v1(p) + v2(p)),
                g: Rc::new(move |p| {
                    let mut out = g1(p);
                    axpy(1.0, &g2(p), &mut out);
                    out
                }),
            }
        }
        10 => {
            let k: f64 = rng.gen_range(0.2..2.0);
            let f = gen_convex(rng, vars, depth - 1, b);
            let (fv, fg) = (f.v.clone(), f.g.clone());
            Fun {
                e: scale(k, &f.e),
                v: Rc::new(move |p| k * fv(p)),
                g: Rc::new(move |p| {
                    let mut out = vec![0.0; n];
                    axpy(k, &fg(p), &mut out);
                    out
                }),
            }
        }
        _ => {
            // negated concave with a domain-safe shift: -sqrt(a + S)
            let a = gen_affine(rng, vars);
            let s = box_bound(&a, n, b) + 1.0;
            let (av, ag) = (a.v.clone(), a.g.clone());
            Fun {
                e: neg(&sqrt(&add(&a.e, &constant(s)))),
                v: Rc::new(move |p| -((a.v)(p) + s).sqrt()),
                g: Rc::new(move |p| {
                    let root = (av(p) + s).sqrt();
                    let mut out = vec![0.0; n];
                    axpy(-0.5 / root, &ag(p), &mut out);
                    out
                }),
            }
        }
    }
}

/// Multi-level grid refinement over the box; an upper bound on the minimum
/// that localizes well but can lose a slowly descending curved valley.
fn grid_minimize(ev: &Ev, n: usize, b: f64) -> f64 {
    let points = 13usize;
    let mut lo = vec![-b; n];
    let mut hi = vec![b; n];
    let mut best_val = f64::INFINITY;
    for _ in 0..9 {
        let mut idx = vec![0usize; n];
        let mut level_pt = lo.clone();
        let mut level_val = f64::INFINITY;
        loop {
            let pt: Vec<f64> = (0..n)
                .map(|d| lo[d] + (hi[d] - lo[d]) * idx[d] as f64 / (points - 1) as f64)
                .collect();
            let v = ev(&pt);
            if v < level_val {
                level_val = v;
                level_pt = pt;
            }
            let mut d = 0;
            loop {
                if d == n {
                    break;
                }
                idx[d] += 1;
                if idx[d] < points {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
            if d == n {
                break;
            }
        }
        best_val = best_val.min(level_val);
        for d in 0..n {
            let h = (hi[d] - lo[d]) / (points - 1) as f64;
            lo[d] = (level_pt[d] - 2.0 * h).max(-b);
            hi[d] = (level_pt[d] + 2.0 * h).min(b);
        }
    }
    best_val
}

/// Ellipsoid method over the box with exact test-side subgradients: volume
/// shrinks geometrically, so for these convex objectives the value converges
/// well past the comparison tolerance. One-dimensional problems fall back to
/// ternary search, which is exact for convex functions.
fn ellipsoid_minimize(f: &Fun, n: usize, b: f64) -> f64 {
    if n == 1 {
        let (mut lo, mut hi) = (-b, b);
        for _ in 0..200 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if (f.v)(&[m1]) <= (f.v)(&[m2]) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        return (f.v)(&[(lo + hi) / 2.0]);
    }
    let nf = n as f64;
    let r = b * nf.sqrt() * 1.01;
    let mut p = vec![vec![0.0; n]; n];
    for (d, row) in p.iter_mut().enumerate() {
        row[d] = r * r;
    }
    let mut c: Vec<f64> = vec![0.0; n];
    let mut best = f64::INFINITY;
    for _ in 0..4000 {
        // feasibility cut on the box, else an objective cut
        let g: Vec<f64> = match (0..n).find(|&d| c[d].abs() > b) {
            Some(d) => {
                let mut g = vec![0.0; n];
                g[d] = c[d].signum();
                g
            }
            None => {
                best = best.min((f.v)(&c));
                (f.g)(&c)
            }
        };
        let pg: Vec<f64> =
            (0..n).map(|i| (0..n).map(|j| p[i][j] * g[j]).sum()).collect();
        let gpg: f64 = g.iter().zip(&pg).map(|(a, b)| a * b).sum();
        if gpg <= 1e-300 {
            break;
        }
        let sq = gpg.sqrt();
        let gt: Vec<f64> = pg.iter().map(|v| v / sq).collect();
        for d in 0..n {
            c[d] -= gt[d] / (nf + 1.0);
        }
        let scale = nf * nf / (nf * nf - 1.0);
        let k = 2.0 / (nf + 1.0);
        for i in 0..n {
            for j in 0..n {
                p[i][j] = scale * (p[i][j] - k * gt[i] * gt[j]);
            }
        }
    }
    best
}

#[test]
fn acceptance_4_oracle_equivalence() {
    criterion(4, "grid-oracle equivalence on 200 random problems", 300.0, || {
        let mut rng = ChaCha8Rng::seed_from_u64(0x04AC1E);
        let b = 2.0;
        let mut worst_gap = 0.0f64;
        for trial in 0..200 {
            let nvars = rng.gen_range(1..=4usize);
            let vars: Vec<Expr> = (0..nvars).map(|_| var(1)).collect();
            let fun = gen_convex(&mut rng, &vars, 2, b);
            let maximize = rng.gen_bool(0.25);

            let mut constraints = Vec::new();
            for v in &vars {
                constraints.push(ge(v, &constant(-b)));
                constraints.push(le(v, &constant(b)));
            }
            let mut p = if maximize {
                Problem::maximize(neg(&fun.e), constraints).unwrap()
            } else {
                Problem::minimize(fun.e.clone(), constraints).unwrap()
            };
            let st = SolveSettings { max_iters: 200_000, ..settings() };
            let sol = solve(&mut p, &st).unwrap();
            assert_eq!(sol.status, SolveStatus::Optimal, "trial {trial}");
            let solver_min = if maximize { -p.optval.unwrap() } else { p.optval.unwrap() };
            let oracle = grid_minimize(&fun.v, nvars, b)
                .min(ellipsoid_minimize(&fun, nvars, b));
            worst_gap = worst_gap.max((solver_min - oracle).abs());
            assert!(
                (solver_min - oracle).abs() <= 1e-3,
                "trial {trial}: solver {solver_min} vs oracle {oracle}"
            );
        }
        println!("  worst solver-vs-oracle gap over 200 trials: {worst_gap:.2e}");
    });
}

// ===========================================================================
// 5. LP duality

#[test]
fn acceptance_5_lp_duality() {
    criterion(5, "LP duality on 100 random LPs", 60.0, || {
        let mut rng = ChaCha8Rng::seed_from_u64(0xD0A1);
        for trial in 0..100 {
            let n = rng.gen_range(2..=6usize);
            let m = rng.gen_range(1..=4usize);
            let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let g: Vec<Vec<f64>> =
                (0..m).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            let h: Vec<f64> = g
                .iter()
                .map(|gi| {
                    gi.iter().zip(&x0).map(|(a, b)| a * b).sum::<f64>() + rng.gen_range(0.1..1.0)
                })
                .collect();
            let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let bound = 3.0;

            let x = var(n);
            let mut constraints = vec![ge(&x, &constant(-bound)), le(&x, &constant(bound))];
            for (gi, hi) in g.iter().zip(&h) {
                let grow = Array2::from_shape_fn((1, n), |(_, j)| gi[j]);
                constraints.push(le(&mul(&constant_mat(grow), &x), &constant(*hi)));
            }
            let crow = Array2::from_shape_fn((1, n), |(_, j)| c[j]);
            let mut p =
                Problem::minimize(sum(&mul(&constant_mat(crow), &x)), constraints).unwrap();
            let sol = solve(&mut p, &settings()).unwrap();
            assert_eq!(sol.status, SolveStatus::Optimal, "trial {trial}");
            let primal = p.optval.unwrap();
            let xv = x.value().unwrap();

            let lam_lo = p.constraints[0].dual_value.clone().unwrap();
            let lam_hi = p.constraints[1].dual_value.clone().unwrap();
            let mu: Vec<f64> = (0..m)
                .map(|i| p.constraints[2 + i].dual_value.clone().unwrap()[(0, 0)])
                .collect();

            let dual = -bound * lam_lo.iter().sum::<f64>()
                - bound * lam_hi.iter().sum::<f64>()
                - h.iter().zip(&mu).map(|(a, b)| a * b).sum::<f64>();
            assert!(
                (dual - primal).abs() < 1e-5,
                "trial {trial}: primal {primal} vs dual {dual}"
            );

            for j in 0..n {
                assert!(lam_lo[(j, 0)] >= -1e-7 && lam_hi[(j, 0)] >= -1e-7);
                assert!((lam_lo[(j, 0)] * (xv[(j, 0)] + bound)).abs() < 1e-5, "trial {trial}");
                assert!((lam_hi[(j, 0)] * (bound - xv[(j, 0)])).abs() < 1e-5, "trial {trial}");
            }
            for i in 0..m {
                assert!(mu[i] >= -1e-7);
                let slack: f64 =
                    h[i] - g[i].iter().enumerate().map(|(j, a)| a * xv[(j, 0)]).sum::<f64>();
                assert!((mu[i] * slack).abs() < 1e-5, "trial {trial}");
            }
        }
    });
}

// ===========================================================================
// 6. Memoization effect

#[test]
fn acceptance_6_memoization() {
    criterion(6, "memoization of repeated subexpressions", 30.0, || {
        let build = |k: usize| {
            let x = var(4);
            let a = abs(&x);
            let mut e = sum(&a);
            for _ in 1..k {
                e = add(&e, &sum(&a));
            }
            Problem::minimize(
                e,
                vec![ge(&x, &constant(-2.0)), le(&x, &constant(2.0))],
            )
            .unwrap()
        };
        let p1 = build(1);
        let p100 = build(100);
        let cp1 = lower_problem(&p1).unwrap();
        let cp100 = lower_problem(&p100).unwrap();
        assert_eq!(
            cp1.n_rows(),
            cp100.n_rows(),
            "constraint rows must not grow with the repetition count"
        );
        assert_eq!(cp1.n_cols(), cp100.n_cols(), "one abs template either way");

        let off = lower_problem_with(&p100, LowerOptions { memoize: false }).unwrap();
        assert!(off.n_rows() > cp100.n_rows());
        let tight = SolveSettings {
            abstol: 1e-10,
            reltol: 1e-10,
            feastol: 1e-10,
            ..settings()
        };
        let a = solve_conic(&cp100, &tight);
        let b = solve_conic(&off, &tight);
        assert_eq!(a.status, SolveStatus::Optimal);
        assert_eq!(b.status, SolveStatus::Optimal);
        assert!(
            (a.optval - b.optval).abs() < 1e-8,
            "memo on {} vs off {}",
            a.optval,
            b.optval
        );
    });
}

// ===========================================================================
// 7. Benchmark harness

#[test]
fn acceptance_7_benchmarks() {
    criterion(7, "construction benchmarks", 120.0, || {
        // fresh process per benchmark so the first repeat is genuinely cold
        for (test, n) in [("sum", 100usize), ("index", 100), ("transpose", 50), ("matrix", 50)]
        {
            let out = bin()
                .args(["bench", "--test", test, "--n", &n.to_string(), "--repeat", "5"])
                .output()
                .unwrap();
            assert_eq!(
                out.status.code(),
                Some(0),
                "{test}: {}",
                String::from_utf8_lossy(&out.stderr)
            );
            let text = String::from_utf8(out.stdout).unwrap();
            let rows: Vec<Vec<String>> = text
                .lines()
                .skip(1)
                .map(|l| l.split(',').map(|s| s.to_string()).collect())
                .collect();
            assert_eq!(rows.len(), 5);
            // the analytic optimum is asserted inside the harness (within
            // 1e-4) before any row is printed; re-check status here
            for r in &rows {
                assert_eq!(r[6], "optimal", "{test}");
            }
            let parse: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
            let cold = parse[0];
            let warm = parse[1..].iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(
                warm <= cold,
                "{test}: warm parse {warm}s exceeds cold parse {cold}s"
            );
            // sum and index are equivalent formulations of the same problem
            if test == "index" {
                let optval: f64 = rows[0][5].parse().unwrap();
                assert!(optval.abs() < 1e-4);
            }
        }
    });
}

// ===========================================================================
// 8. Determinism

#[test]
fn acceptance_8_determinism() {
    criterion(8, "compile and solve determinism", 60.0, || {
        let corpus =
            ["guide.json", "satisfy_eq.json", "exp_cone.json", "max_sqrt.json", "matrix_pin.json", "lp_box.json"];
        for name in corpus {
            let mut outputs = Vec::new();
            for _ in 0..5 {
                let out = bin()
                    .args(["compile"])
                    .arg(data_path(name))
                    .arg("-")
                    .output()
                    .unwrap();
                assert_eq!(out.status.code(), Some(0), "{name}");
                outputs.push(out.stdout);
            }
            for o in &outputs[1..] {
                assert_eq!(o, &outputs[0], "{name}: compile output differs across runs");
            }
        }
        for name in ["guide.json", "satisfy_eq.json", "max_sqrt.json", "matrix_pin.json", "lp_box.json"] {
            let mut iteration_lines = Vec::new();
            for _ in 0..3 {
                let out = bin().args(["solve"]).arg(data_path(name)).output().unwrap();
                assert_eq!(out.status.code(), Some(0), "{name}");
                let text = String::from_utf8(out.stdout).unwrap();
                let iters = text
                    .lines()
                    .find(|l| l.starts_with("iterations:"))
                    .map(|l| l.to_string())
                    .unwrap();
                iteration_lines.push(iters);
            }
            assert!(
                iteration_lines.windows(2).all(|w| w[0] == w[1]),
                "{name}: iteration counts differ: {iteration_lines:?}"
            );
        }
    });
}

// ===========================================================================
// 9. Projection properties

#[test]
fn acceptance_9_projections() {
    criterion(9, "cone projection unit suite", 10.0, || {
        let mut rng = ChaCha8Rng::seed_from_u64(0x9999);
        for kind in [ConeKind::Zero, ConeKind::Free, ConeKind::NonNeg, ConeKind::SecondOrder] {
            for _ in 0..10_000 {
                let dim = rng.gen_range(1..8usize)
                    + usize::from(kind == ConeKind::SecondOrder);
                let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-10.0..10.0)).collect();
                let w: Vec<f64> = (0..dim).map(|_| rng.gen_range(-10.0..10.0)).collect();
                let pv = project(kind, &v).unwrap();
                let ppv = project(kind, &pv).unwrap();
                for (a, b) in pv.iter().zip(&ppv) {
                    assert!((a - b).abs() <= 1e-10, "{kind:?} idempotence");
                }
                let pw = project(kind, &w).unwrap();
                let dp: f64 =
                    pv.iter().zip(&pw).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                let dv: f64 =
                    v.iter().zip(&w).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                assert!(dp <= dv + 1e-12, "{kind:?} nonexpansiveness");
                let minus_v: Vec<f64> = v.iter().map(|a| -a).collect();
                let pd = project(dual_kind(kind), &minus_v).unwrap();
                for i in 0..dim {
                    assert!(
                        (v[i] - (pv[i] - pd[i])).abs() <= 1e-10,
                        "{kind:?} Moreau decomposition"
                    );
                }
            }
        }
        let _: HashMap<(), ()> = HashMap::new();
    });
}
