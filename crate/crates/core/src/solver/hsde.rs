//! Operator splitting on the homogeneous self-dual embedding.
//!
//! For data (A, b, c) with cone K, the embedding seeks u = (x, y, tau),
//! v = (0, s, kappa) with v = Q u, u in C, v in C*, where
//!
//! ```text
//!     [ 0    A^T  c ]                 C  = R^n x K* x R+
//! Q = [ -A   0    b ]
//!     [ -c^T -b^T 0 ]
//! ```
//!
//! The splitting alternates the linear solve utilde = (I + Q)^{-1}(u + v)
//! with the cone projection u = Pi_C(utilde - v), then v = v - utilde + u
//! (with over-relaxation on utilde). The linear solve reduces to one
//! factorization of the quasi-definite matrix [[I, A^T], [A, -I]], reused
//! every iteration:
//!
//! ```text
//! M [p_x; p_y] = [r_x; r_y]  with M = [[I, A^T], [-A, I]]
//! is K [p_x; p_y] = [r_x; -r_y]  with K = [[I, A^T], [A, -I]]
//! ```
//!
//! tau > 0 at a fixed point recovers (x, y, s) = (u_x, u_y, v_s) / tau;
//! tau = 0 with kappa > 0 exposes an infeasibility or unboundedness
//! certificate ray. No randomness anywhere: iteration counts and outputs
//! are reproducible bit for bit.

use crate::conic::{ConeKind, ConicProblem};
use crate::sparse::Csc;

use super::cones;
use super::ldl;
use super::{SolveSettings, SolveStatus};

pub(super) struct RawSolution {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    pub iterations: usize,
    /// (primal residual, dual residual, duality gap), inf-norm based.
    pub residuals: (f64, f64, f64),
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(super) fn solve(cp: &ConicProblem, st: &SolveSettings) -> RawSolution {
    let n = cp.n_cols();
    let m = cp.n_rows();
    let nm = n + m;
    let c_scaled: Vec<f64> = cp.c.iter().map(|v| v * st.scale).collect();
    let b = &cp.b;

    let fail = |status: SolveStatus| RawSolution {
        status,
        x: vec![0.0; n],
        y: vec![0.0; m],
        s: vec![0.0; m],
        iterations: 0,
        residuals: (f64::NAN, f64::NAN, f64::NAN),
    };

    // upper triangle of K = [[I, A^T], [A, -I]]
    let mut trips = Vec::with_capacity(nm + cp.a.nnz());
    for i in 0..n {
        trips.push((i, i, 1.0));
    }
    for e in cp.a.entries() {
        trips.push((e.col, n + e.row, e.val));
    }
    for j in 0..m {
        trips.push((n + j, n + j, -1.0));
    }
    let upper = Csc::from_triplets(nm, nm, trips);
    let fac = match ldl::factorize(&upper) {
        Ok(f) => f,
        Err(_) => return fail(SolveStatus::NumericalError),
    };
    // M^{-1} [rx; ry] = K^{-1} [rx; -ry]
    let m_solve = |rx: &[f64], ry: &[f64]| -> Vec<f64> {
        let mut z = Vec::with_capacity(nm);
        z.extend_from_slice(rx);
        z.extend(ry.iter().map(|v| -v));
        fac.solve_in_place(&mut z);
        z
    };

    let g = m_solve(&c_scaled, b);
    let denom = 1.0 + dot(&c_scaled, &g[..n]) + dot(b, &g[n..]);

    // cone block offsets within the y rows
    let blocks: Vec<(usize, usize, ConeKind)> = {
        let mut out = Vec::with_capacity(cp.cones.len());
        let mut at = 0;
        for cone in &cp.cones {
            out.push((at, cone.dim, cone.kind));
            at += cone.dim;
        }
        out
    };

    let norm_b = inf_norm(b);
    let norm_c = inf_norm(&c_scaled);

    let mut u = vec![0.0; nm + 1];
    let mut v = vec![0.0; nm + 1];
    u[nm] = 1.0;
    v[nm] = 1.0;
    let mut ur = vec![0.0; nm + 1];
    let mut iterations = 0;

    let extract = |u: &[f64], v: &[f64]| -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let tau = u[nm];
        let x: Vec<f64> = u[..n].iter().map(|w| w / tau).collect();
        let y: Vec<f64> = u[n..nm].iter().map(|w| w / tau / st.scale).collect();
        let s: Vec<f64> = v[n..nm].iter().map(|w| w / tau).collect();
        (x, y, s)
    };
    // residuals against the unscaled data
    let residuals = |x: &[f64], y: &[f64], s: &[f64]| -> (f64, f64, f64) {
        let ax = cp.a.matvec(x);
        let pres = (0..m).fold(0.0f64, |mx, i| mx.max((cp.b[i] - ax[i] - s[i]).abs()));
        let aty = cp.a.matvec_t(y);
        let dres = (0..n).fold(0.0f64, |mx, j| mx.max((aty[j] + cp.c[j]).abs()));
        let gap = (dot(&cp.c, x) + dot(&cp.b, y)).abs();
        (pres, dres, gap)
    };

    for iter in 1..=st.max_iters {
        iterations = iter;

        // utilde = (I + Q)^{-1} (u + v)
        let wx: Vec<f64> = (0..n).map(|i| u[i] + v[i]).collect();
        let wy: Vec<f64> = (0..m).map(|i| u[n + i] + v[n + i]).collect();
        let wtau = u[nm] + v[nm];
        let p = m_solve(&wx, &wy);
        let hp = dot(&c_scaled, &p[..n]) + dot(b, &p[n..]);
        let ztau = (wtau + hp) / denom;
        for i in 0..nm {
            ur[i] = st.alpha * (p[i] - ztau * g[i]) + (1.0 - st.alpha) * u[i];
        }
        ur[nm] = st.alpha * ztau + (1.0 - st.alpha) * u[nm];

        // u = Pi_C(ur - v): x free, y per dual-cone block, tau clamped
        for i in 0..n {
            u[i] = ur[i] - v[i];
        }
        for &(at, dim, kind) in &blocks {
            let lo = n + at;
            for i in lo..lo + dim {
                u[i] = ur[i] - v[i];
            }
            cones::project_in_place(cones::dual_kind(kind), &mut u[lo..lo + dim])
                .expect("dispatch admits supported cones only");
        }
        u[nm] = (ur[nm] - v[nm]).max(0.0);

        // v = v - ur + u
        for i in 0..=nm {
            v[i] += u[i] - ur[i];
        }

        if !u[nm].is_finite() {
            return fail(SolveStatus::NumericalError);
        }

        let tau = u[nm];
        if tau > 1e-10 {
            let (x, y, s) = extract(&u, &v);
            let (pres, dres, gap) = residuals(&x, &y, &s);
            let ctx = dot(&cp.c, &x);
            if pres <= st.feastol * (1.0 + inf_norm(&cp.b))
                && dres <= st.feastol * (1.0 + inf_norm(&cp.c))
                && gap <= st.abstol + st.reltol * ctx.abs()
            {
                return RawSolution {
                    status: SolveStatus::Optimal,
                    x,
                    y,
                    s,
                    iterations,
                    residuals: (pres, dres, gap),
                };
            }
        }

        // certificate rays
        let bty = dot(b, &u[n..nm]);
        if bty < -1e-12 {
            let aty = cp.a.matvec_t(&u[n..nm]);
            if inf_norm(&aty) * norm_b.max(1.0) <= st.feastol * (-bty) {
                let scale_cert = -1.0 / bty;
                let y: Vec<f64> =
                    u[n..nm].iter().map(|w| w * scale_cert / st.scale).collect();
                return RawSolution {
                    status: SolveStatus::Infeasible,
                    x: vec![0.0; n],
                    y,
                    s: vec![0.0; m],
                    iterations,
                    residuals: (f64::INFINITY, 0.0, f64::INFINITY),
                };
            }
        }
        let ctx_u = dot(&c_scaled, &u[..n]);
        if ctx_u < -1e-12 {
            let ax = cp.a.matvec(&u[..n]);
            let viol = (0..m).fold(0.0f64, |mx, i| mx.max((ax[i] + v[n + i]).abs()));
            if viol * norm_c.max(1.0) <= st.feastol * (-ctx_u) {
                let scale_cert = -1.0 / ctx_u;
                let x: Vec<f64> = u[..n].iter().map(|w| w * scale_cert).collect();
                let s: Vec<f64> = v[n..nm].iter().map(|w| w * scale_cert).collect();
                return RawSolution {
                    status: SolveStatus::Unbounded,
                    x,
                    y: vec![0.0; m],
                    s,
                    iterations,
                    residuals: (0.0, f64::INFINITY, f64::INFINITY),
                };
            }
        }
    }

    // iteration limit: report the current candidate
    let (x, y, s) = if u[nm] > 1e-10 {
        extract(&u, &v)
    } else {
        (vec![0.0; n], vec![0.0; m], vec![0.0; m])
    };
    let res = residuals(&x, &y, &s);
    RawSolution { status: SolveStatus::IterLimit, x, y, s, iterations, residuals: res }
}
