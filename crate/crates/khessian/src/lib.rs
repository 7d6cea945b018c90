//! Numerical laboratory for parabolic k-Hessian equations
//! `-u_t σ_k(λ(D²u)) = ψ(x, t, u)` on space-time domains.
//!
//! The crate has four layers:
//!
//! * [`sigma`] — exact algebra of elementary symmetric functions of matrix
//!   spectra: values, restrictions, derivative tensors, cone tests and the
//!   classical inequalities.
//! * [`solver`] (with [`grid`], [`field`], [`problem`]) — backward-Euler
//!   finite differences plus a damped Newton iteration that keeps every
//!   iterate k-convex in space and uniformly decreasing in time.
//! * [`estimates`] — the interior-estimate functionals evaluated on discrete
//!   solutions: weighted gradient functionals, Pogorelov-type weighted
//!   second-derivative suprema, parabolic Hölder seminorms, sublevel-set
//!   geometry and the rescaling pipeline behind the Liouville argument.
//! * [`config`]/[`cli`] — a JSON-configured command-line front end that runs
//!   solve and verification pipelines and emits machine-readable reports.
//!
//! The accompanying mdbook under `book/` walks through the mathematics with
//! runnable snippets; those snippets compile as doc-tests of the
//! `khessian-book` helper crate.

pub mod cli;
pub mod config;
pub mod error;
pub mod estimates;
pub mod expr;
pub mod field;
pub mod grid;
pub mod problem;
pub mod report;
pub mod sample;
pub mod sigma;
pub mod solver;

pub use error::{ConfigError, ExprError, GridError, SigmaError, SolverError, VerifyError};
pub use expr::Expr;
pub use field::SolutionField;
pub use grid::{build_grid, Grid, SpaceTimeDomain};
pub use problem::ProblemSpec;
pub use sigma::{ConeVerdict, Spectrum, SymMatrix};
