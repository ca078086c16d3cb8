//! Disciplined convex programming in Rust.
//!
//! Optimization problems are built as immutable expression trees over
//! variables, constants, and a catalog of atoms with known curvature,
//! monotonicity, and sign. Curvature of composed expressions is verified
//! locally ([`dcp`]), compliant problems are lowered to a standard conic
//! form ([`conic`]), and LP/SOCP instances are solved by an embedded
//! first-order operator-splitting solver ([`solver`]).
//!
//! ```
//! use cvxkit_core::prelude::*;
//!
//! let x = var(3);
//! let p = Problem::minimize(
//!     norm_inf(&x),
//!     vec![
//!         eq(&add(&index(&x, 0), &index(&x, 1)), &constant(5.0)),
//!         le(&index(&x, 2), &index(&x, 1)),
//!     ],
//! )
//! .unwrap();
//! let mut p = p;
//! let sol = cvxkit_core::solver::solve(&mut p, &SolveSettings::default()).unwrap();
//! assert!((p.optval.unwrap() - 2.5).abs() < 1e-5);
//! assert_eq!(sol.status, SolveStatus::Optimal);
//! ```

pub mod atoms;
pub mod conic;
pub mod dcp;
pub mod expr;
pub mod linalg;
pub mod ops;
pub mod solver;
pub mod sparse;

pub mod prelude {
    pub use crate::atoms::AtomTag;
    pub use crate::expr::{
        Constraint, ConstraintKind, Expr, Monotonicity, Problem, Sense, Shape, Sign,
        VariableAttributes, Vexity,
    };
    pub use crate::ops::*;
    pub use crate::solver::{SolveSettings, SolveStatus};
}
