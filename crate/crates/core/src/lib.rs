//! Forward-backward splitting for `min f(x) + g(x)` with `f` smooth convex and
//! `g` convex with a computable prox, using linesearches that need no global
//! Lipschitz constant for `∇f`.
//!
//! * [`problem`]: the composite problem and solver configuration types.
//! * [`prox`]: proximal operators and the forward-backward map `J(x, α)`.
//! * [`linesearch`]: the backtracking procedures.
//! * [`solvers`]: the iterations and their traces.
//! * [`diagnostics`]: certificates checking convergence inequalities on traces.
//! * [`problems`]: catalog of test problems.
//! * [`cli`]: configuration files, runs and output files.

// `!(a > b)` is how the linesearch and certificate tests treat NaN as a rejection.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod linesearch;
pub mod problem;
pub mod problems;
pub mod prox;
pub mod solvers;

pub use error::{Error, Result};
pub use problem::{CompositeProblem, LinesearchParams, Method, NonsmoothPart, SmoothPart, SolverConfig, Vector};
pub use problems::{build_problem, ProblemSpec};
pub use solvers::{solve, SolverTrace, Termination};
