//! Problem specifications: the right-hand side, boundary data and the
//! monotonicity floor that define one solvable instance, plus manufactured
//! problems built by symbolic differentiation of a chosen exact solution.

use crate::error::{ExprError, SolverError};
use crate::expr::{ops, EvalPoint, Expr, Var};
use crate::field::matrix_cone_margin;
use crate::grid::SpaceTimeDomain;
use crate::sample::rng_from_seed;
use crate::sigma::{subsets, SymMatrix, CONE_CLOSURE_TOL};
use rand::Rng;

/// One solvable instance of `-u_t S_k(D²u) = ψ(x, t, u)` with Dirichlet data
/// `g` on the parabolic boundary and monotonicity floor `-u_t >= m1 > 0`.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub k: usize,
    /// Right-hand side ψ as an expression in `x1..xn`, `t`, `z`.
    pub psi: Expr,
    /// Parabolic-boundary data as an expression in `x1..xn`, `t`.
    pub g: Expr,
    /// Monotonicity floor: solutions are required to satisfy `-u_t >= m1/2`
    /// discretely (the solver safeguards enforce it).
    pub m1: f64,
}

impl ProblemSpec {
    pub fn new(k: usize, psi: Expr, g: Expr, m1: f64) -> Self {
        ProblemSpec { k, psi, g, m1 }
    }

    pub fn eval_psi(&self, x: &[f64], t: f64, z: f64) -> Result<f64, ExprError> {
        self.psi.eval(&EvalPoint { x, t, z })
    }

    pub fn eval_g(&self, x: &[f64], t: f64) -> Result<f64, ExprError> {
        self.g.eval(&EvalPoint::space_time(x, t))
    }
}

/// Symbolic `σ_k` of an n×n matrix of expressions via the principal-minor
/// expansion (n ≤ 3).
pub fn sk_expr(hess: &[Vec<Expr>], k: usize) -> Expr {
    let n = hess.len();
    let mut acc = ops::num(0.0);
    for idx in subsets(n, k) {
        acc = ops::add(acc, det_expr(hess, &idx, &idx));
    }
    acc
}

fn det_expr(hess: &[Vec<Expr>], rows: &[usize], cols: &[usize]) -> Expr {
    match rows.len() {
        0 => ops::num(1.0),
        1 => hess[rows[0]][cols[0]].clone(),
        m => {
            let mut acc = ops::num(0.0);
            for c in 0..m {
                let sub_cols: Vec<usize> = (0..m).filter(|&p| p != c).map(|p| cols[p]).collect();
                let term = ops::mul(
                    hess[rows[0]][cols[c]].clone(),
                    det_expr(hess, &rows[1..], &sub_cols),
                );
                acc = if c % 2 == 0 {
                    ops::add(acc, term)
                } else {
                    ops::sub(acc, term)
                };
            }
            acc
        }
    }
}

/// Builds a problem whose exact solution is `u_exact`: the right-hand side
/// `ψ := -∂_t u · σ_k(λ(D²u))` is assembled symbolically, and the boundary
/// data is `u_exact` itself. The exact solution must be k-convex and
/// uniformly decreasing on the domain; this is checked by seeded sampling
/// and any violation is reported with the offending point.
pub fn manufactured_problem(
    u_exact: &Expr,
    domain: SpaceTimeDomain,
    n: usize,
    k: usize,
) -> Result<ProblemSpec, SolverError> {
    if !(n == 2 || n == 3) {
        return Err(SolverError::ManufacturedRejected(format!(
            "dimension {n} unsupported"
        )));
    }
    if k == 0 || k > n {
        return Err(SolverError::ManufacturedRejected(format!(
            "order k = {k} outside 1..={n}"
        )));
    }
    let ut = u_exact.differentiate(Var::T)?;
    let mut grad = Vec::with_capacity(n);
    for i in 0..n {
        grad.push(u_exact.differentiate(Var::X(i))?);
    }
    let mut hess = vec![vec![ops::num(0.0); n]; n];
    for i in 0..n {
        for j in 0..n {
            hess[i][j] = grad[i].differentiate(Var::X(j))?;
        }
    }
    let psi = ops::mul(ops::neg(ut.clone()), sk_expr(&hess, k));

    // sampling sweep: lattice plus seeded random points in the closure
    let extent = domain.spatial_extent();
    let t_start = domain.t_start();
    let mut points: Vec<(Vec<f64>, f64)> = Vec::new();
    let steps = 6;
    for mt in 0..=steps {
        let t = t_start * (mt as f64) / steps as f64;
        let mut idx = vec![-(steps as i64); n];
        loop {
            let x: Vec<f64> = idx.iter().map(|&i| extent * i as f64 / steps as f64).collect();
            if domain.closure_slice_contains(&x, t) {
                points.push((x, t));
            }
            let mut a = 0;
            loop {
                idx[a] += 1;
                if idx[a] <= steps as i64 {
                    break;
                }
                idx[a] = -(steps as i64);
                a += 1;
                if a == n {
                    break;
                }
            }
            if a == n {
                break;
            }
        }
    }
    let mut rng = rng_from_seed(0x6d66);
    while points.len() < 600 {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-extent..extent)).collect();
        let t = rng.gen_range(t_start..=0.0);
        if domain.closure_slice_contains(&x, t) {
            points.push((x, t));
        }
    }

    let mut min_neg_ut = f64::INFINITY;
    for (x, t) in &points {
        let p = EvalPoint::space_time(x, *t);
        let neg_ut = -ut.eval(&p)?;
        let h = SymMatrix::from_fn(n, |i, j| {
            hess[i][j].eval(&p).unwrap_or(f64::NAN)
        })
        .map_err(|e| SolverError::ManufacturedRejected(e.to_string()))?;
        let margin = matrix_cone_margin(&h, k)
            .map_err(|e| SolverError::ManufacturedRejected(e.to_string()))?;
        if !margin.is_finite() || margin < -CONE_CLOSURE_TOL {
            return Err(SolverError::ManufacturedRejected(format!(
                "cone margin {margin:.3e} at x = {x:?}, t = {t}"
            )));
        }
        if !neg_ut.is_finite() || neg_ut <= 0.0 {
            return Err(SolverError::ManufacturedRejected(format!(
                "-u_t = {neg_ut:.3e} at x = {x:?}, t = {t} is not positive"
            )));
        }
        min_neg_ut = min_neg_ut.min(neg_ut);
    }

    Ok(ProblemSpec::new(k, psi, u_exact.clone(), 0.9 * min_neg_ut))
}
