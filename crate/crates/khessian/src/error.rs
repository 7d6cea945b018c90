//! Error types shared across the crate.

use thiserror::Error;

/// Errors from the symmetric-function calculus.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum SigmaError {
    #[error("order {order} out of range for dimension {n}")]
    OrderOutOfRange { order: usize, n: usize },
    #[error("index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("spectrum not in the admissible cone: {detail}")]
    OutsideCone { detail: String },
    #[error("spectrum must be sorted in descending order")]
    NotSorted,
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
}

/// Errors from expression parsing, evaluation and differentiation.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("division by zero in `{expr}`")]
    DivisionByZero { expr: String },
    #[error("`{expr}` is not differentiable")]
    NotDifferentiable { expr: String },
    #[error("expression references x{needed} but only {have} spatial variables are bound")]
    ArityMismatch { needed: usize, have: usize },
}

/// Errors from grid construction.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum GridError {
    #[error("degenerate grid: {0}")]
    Degenerate(String),
    #[error("unsupported spatial dimension {0} (must be 2 or 3)")]
    BadDimension(usize),
    #[error("invalid grid parameters: {0}")]
    BadParameters(String),
}

/// Errors from the implicit solver.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum SolverError {
    #[error(
        "Newton stagnation at level {level}: {iterations} iterations, residual {residual:.3e} (tolerance {tolerance:.3e})"
    )]
    Nonconvergence {
        level: usize,
        iterations: usize,
        residual: f64,
        tolerance: f64,
    },
    #[error("cone collapse at level {level}: {detail}")]
    ConeCollapse { level: usize, detail: String },
    #[error("linear solve failed at level {level}: {detail}")]
    LinearSolve { level: usize, detail: String },
    #[error("initial iterate rejected at level {level}: {detail}")]
    BadInitialIterate { level: usize, detail: String },
    #[error("manufactured data rejected: {0}")]
    ManufacturedRejected(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Errors from estimate verification.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum VerifyError {
    #[error("field inconsistency: {0}")]
    Inconsistent(String),
    #[error("input field invalid: {0}")]
    InvalidInput(String),
    #[error("empty subdomain")]
    EmptySubdomain,
    #[error("grids not aligned: {0}")]
    Misaligned(String),
    #[error("computational box too small: {0}")]
    BoxTooSmall(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Configuration errors carry every violation found, each with a JSON path.
#[derive(Debug, Clone, Error, PartialEq)]
#[error("invalid configuration:\n{}", .violations.join("\n"))]
pub struct ConfigError {
    pub violations: Vec<String>,
}

impl ConfigError {
    pub fn one(msg: impl Into<String>) -> Self {
        ConfigError {
            violations: vec![msg.into()],
        }
    }
}
