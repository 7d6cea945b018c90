//! Implicit backward-Euler solver for `-u_t S_k(D²u) = ψ(x, t, u)`.
//!
//! Each time level is a nonlinear system in the interior values, solved by a
//! damped Newton iteration with an exact banded Jacobian. Step damping is
//! keyed to three conditions at once: the residual must decrease, the
//! spectrum of every interior Hessian must stay in the closure of `Γ_k`
//! (margin at least `-1e-12`), and the backward time difference must keep
//! `(u_prev - u)/tau >= m1/2`. The estimates downstream assume solutions in
//! the k-convex-monotone class, so the solver refuses to leave it rather
//! than merely converging.

pub mod band;

use crate::error::SolverError;
use crate::expr::{EvalPoint, Expr, Var};
use crate::field::SolutionField;
use crate::grid::{Grid, NodeClass};
use crate::problem::ProblemSpec;
use crate::sigma::{s_k, s_k_grad, CONE_CLOSURE_TOL};
use band::BandMatrix;
use rayon::prelude::*;
use std::sync::Arc;

/// Relative equation tolerance: `max |residual| <= 1e-10 (1 + |ψ|_max)`.
pub const EQ_TOL_FACTOR: f64 = 1e-10;
pub const MAX_NEWTON_ITERS: usize = 50;
pub const MAX_HALVINGS: usize = 40;

/// Per-level Newton statistics.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SliceStats {
    pub level: usize,
    pub iterations: usize,
    pub residual: f64,
    pub tolerance: f64,
    pub damped_steps: usize,
}

/// A solved field together with per-level statistics.
#[derive(Debug)]
pub struct SolveOutcome {
    pub field: SolutionField,
    pub stats: Vec<SliceStats>,
}

/// Pointwise equation residual `-u_t S_k(D²u) - ψ(x, t, u)` at an interior
/// node, with centered second differences and a backward time difference.
pub fn residual(
    field: &SolutionField,
    spec: &ProblemSpec,
    m: usize,
    id: usize,
) -> Result<f64, SolverError> {
    let grid = field.grid();
    let hess = field
        .hessian(m, id)
        .ok_or_else(|| SolverError::ConeCollapse {
            level: m,
            detail: format!("hessian undefined at node {id}"),
        })?;
    let ut = field.ut(m, id).ok_or_else(|| SolverError::ConeCollapse {
        level: m,
        detail: format!("time difference undefined at node {id}"),
    })?;
    let sk = s_k(&hess, spec.k).map_err(|e| SolverError::ConeCollapse {
        level: m,
        detail: e.to_string(),
    })?;
    let x = grid.coords(id);
    let u = field.value(m, id);
    let psi = spec
        .psi
        .eval(&EvalPoint {
            x: &x[..grid.n],
            t: grid.t(m),
            z: u,
        })
        .map_err(SolverError::Expr)?;
    Ok(-ut * sk - psi)
}

fn residual_vec(
    field: &SolutionField,
    spec: &ProblemSpec,
    m: usize,
) -> Result<Vec<f64>, SolverError> {
    let ids = field.grid().interior_ids(m);
    ids.par_iter()
        .map(|&id| residual(field, spec, m, id))
        .collect()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()))
}

/// Maximum |slot distance| between stencil-coupled unknowns at a level.
fn level_bandwidth(grid: &Grid, m: usize) -> usize {
    let mut bw = 0usize;
    for &id in grid.interior_ids(m) {
        let sp = grid.slot(m, id).unwrap();
        for o in grid.stencil() {
            if let Some(q) = grid.shift(id, o) {
                if let Some(sq) = grid.slot(m, q) {
                    bw = bw.max(sp.abs_diff(sq));
                }
            }
        }
    }
    bw
}

/// Exact Jacobian of the level-`m` residual vector with respect to the
/// interior unknowns: `-S_k/tau - ψ_z` on the diagonal and `-u_t S_k^{ij}`
/// against the second-difference stencils.
fn assemble_jacobian(
    field: &SolutionField,
    spec: &ProblemSpec,
    psi_z: &Expr,
    m: usize,
    bw: usize,
) -> Result<BandMatrix, SolverError> {
    let grid = field.grid();
    let n = grid.n;
    let h2 = grid.h * grid.h;
    let ids = grid.interior_ids(m);
    let mut jac = BandMatrix::new(ids.len(), bw, bw);

    for &id in ids {
        let sp = grid.slot(m, id).unwrap();
        let hess = field.hessian(m, id).unwrap();
        let ut = field.ut(m, id).unwrap();
        let sk = s_k(&hess, spec.k).map_err(|e| SolverError::ConeCollapse {
            level: m,
            detail: e.to_string(),
        })?;
        let grad = s_k_grad(&hess, spec.k).map_err(|e| SolverError::ConeCollapse {
            level: m,
            detail: e.to_string(),
        })?;
        let x = grid.coords(id);
        let pz = psi_z
            .eval(&EvalPoint {
                x: &x[..n],
                t: grid.t(m),
                z: field.value(m, id),
            })
            .map_err(SolverError::Expr)?;

        jac.add(sp, sp, -sk / grid.tau - pz);

        for i in 0..n {
            let sii = grad.get(i, i);
            if sii != 0.0 {
                jac.add(sp, sp, -ut * sii * (-2.0 / h2));
                for s in [-1i64, 1] {
                    let mut o = [0i64; 3];
                    o[i] = s;
                    if let Some(sq) = grid.shift(id, &o).and_then(|q| grid.slot(m, q)) {
                        jac.add(sp, sq, -ut * sii / h2);
                    }
                }
            }
            for j in 0..n {
                if i == j {
                    continue;
                }
                let sij = grad.get(i, j);
                if sij == 0.0 {
                    continue;
                }
                for (si, sj, w) in [
                    (1i64, 1i64, 1.0),
                    (-1, -1, 1.0),
                    (1, -1, -1.0),
                    (-1, 1, -1.0),
                ] {
                    let mut o = [0i64; 3];
                    o[i] = si;
                    o[j] = sj;
                    if let Some(sq) = grid.shift(id, &o).and_then(|q| grid.slot(m, q)) {
                        jac.add(sp, sq, -ut * sij * w / (4.0 * h2));
                    }
                }
            }
        }
    }
    Ok(jac)
}

/// Minimum cone margin over the interior of a level (`+inf` when empty).
fn level_cone_margin(field: &SolutionField, m: usize, k: usize) -> f64 {
    let ids = field.grid().interior_ids(m);
    ids.par_iter()
        .map(|&id| field.cone_margin(m, id, k).unwrap_or(f64::NEG_INFINITY))
        .reduce(|| f64::INFINITY, f64::min)
}

/// Minimum of `(u_prev - u)/tau` over the interior of a level.
fn level_monotone_floor(field: &SolutionField, m: usize) -> f64 {
    let ids = field.grid().interior_ids(m);
    ids.par_iter()
        .map(|&id| -field.ut(m, id).unwrap_or(f64::NEG_INFINITY))
        .reduce(|| f64::INFINITY, f64::min)
}

fn write_slice(field: &mut SolutionField, m: usize, ids: &[usize], vals: &[f64]) {
    for (&id, &v) in ids.iter().zip(vals) {
        field.set_value(m, id, v);
    }
}

/// Initial-iterate candidates for a level, in order of preference:
/// the strictly monotone continuation `u_prev - m1 tau`, the extended
/// boundary data, and bowl-regularized continuations for degenerate starts.
fn initial_candidates(
    field: &SolutionField,
    spec: &ProblemSpec,
    m: usize,
) -> Result<Vec<Vec<f64>>, SolverError> {
    let grid = field.grid();
    let ids = grid.interior_ids(m);
    let prev: Vec<f64> = ids.iter().map(|&id| field.value(m - 1, id)).collect();
    let shift: Vec<f64> = prev.iter().map(|&p| p - spec.m1 * grid.tau).collect();

    let mut cands = vec![shift.clone()];

    let t = grid.t(m);
    let g_vals: Result<Vec<f64>, _> = ids
        .iter()
        .map(|&id| {
            let x = grid.coords(id);
            spec.eval_g(&x[..grid.n], t)
        })
        .collect();
    if let Ok(g_vals) = g_vals {
        let monotone = g_vals
            .iter()
            .zip(&prev)
            .all(|(&g, &p)| (p - g) / grid.tau >= spec.m1 / 2.0);
        if monotone {
            cands.push(g_vals);
        }
    }

    let extent = grid.domain.spatial_extent();
    for beta in [grid.h, 0.5, 2.0] {
        let bowl: Vec<f64> = ids
            .iter()
            .zip(&shift)
            .map(|(&id, &s)| {
                let x = grid.coords(id);
                let r2: f64 = x[..grid.n].iter().map(|v| v * v).sum();
                s + beta * (r2 - extent * extent)
            })
            .collect();
        cands.push(bowl);
    }
    Ok(cands)
}

/// Solves one time level by damped Newton iteration. Boundary values at the
/// level must already be in place; `init` overrides the default initial
/// iterate when given (one value per interior unknown, in slot order).
pub fn solve_slice(
    field: &mut SolutionField,
    spec: &ProblemSpec,
    m: usize,
    init: Option<Vec<f64>>,
) -> Result<SliceStats, SolverError> {
    let grid = field.grid().clone();
    let ids: Vec<usize> = grid.interior_ids(m).to_vec();
    if ids.is_empty() {
        return Ok(SliceStats {
            level: m,
            iterations: 0,
            residual: 0.0,
            tolerance: 0.0,
            damped_steps: 0,
        });
    }

    let psi_z = spec.psi.differentiate(Var::Z)?;
    let bw = level_bandwidth(&grid, m);

    let candidates = match init {
        Some(v) => vec![v],
        None => initial_candidates(field, spec, m)?,
    };

    let mut last_err: Option<SolverError> = None;
    'candidates: for cand in candidates {
        assert_eq!(cand.len(), ids.len());
        write_slice(field, m, &ids, &cand);

        // admissibility of the initial iterate
        if level_cone_margin(field, m, spec.k) < -CONE_CLOSURE_TOL
            || level_monotone_floor(field, m) < spec.m1 / 2.0 - 1e-13 * (1.0 + spec.m1)
        {
            last_err = Some(SolverError::BadInitialIterate {
                level: m,
                detail: "initial iterate violates cone or monotonicity safeguards".to_string(),
            });
            continue 'candidates;
        }

        // ψ scale for the stopping tolerance, frozen at the initial iterate
        let psi_max = ids
            .iter()
            .map(|&id| {
                let x = grid.coords(id);
                spec.eval_psi(&x[..grid.n], grid.t(m), field.value(m, id))
                    .map(f64::abs)
                    .unwrap_or(f64::INFINITY)
            })
            .fold(0.0f64, f64::max);
        let tol = EQ_TOL_FACTOR * (1.0 + psi_max);
        let floor = 1e-15 * (1.0 + psi_max);

        let mut r = residual_vec(field, spec, m)?;
        let mut rinf = inf_norm(&r);
        let mut damped_steps = 0usize;
        let mut polish_left = 3usize;

        for it in 0..=MAX_NEWTON_ITERS {
            let converged = rinf <= tol;
            if converged && (rinf <= floor || polish_left == 0) {
                return Ok(SliceStats {
                    level: m,
                    iterations: it,
                    residual: rinf,
                    tolerance: tol,
                    damped_steps,
                });
            }
            if it == MAX_NEWTON_ITERS {
                if converged {
                    return Ok(SliceStats {
                        level: m,
                        iterations: it,
                        residual: rinf,
                        tolerance: tol,
                        damped_steps,
                    });
                }
                return Err(SolverError::Nonconvergence {
                    level: m,
                    iterations: it,
                    residual: rinf,
                    tolerance: tol,
                });
            }

            let jac = match assemble_jacobian(field, spec, &psi_z, m, bw) {
                Ok(j) => j,
                Err(e) => {
                    if converged {
                        return Ok(SliceStats {
                            level: m,
                            iterations: it,
                            residual: rinf,
                            tolerance: tol,
                            damped_steps,
                        });
                    }
                    return Err(e);
                }
            };
            let mut step = r.clone();
            if let Err(detail) = jac.solve_in_place(&mut step) {
                if converged {
                    return Ok(SliceStats {
                        level: m,
                        iterations: it,
                        residual: rinf,
                        tolerance: tol,
                        damped_steps,
                    });
                }
                if it == 0 {
                    last_err = Some(SolverError::LinearSolve { level: m, detail });
                    continue 'candidates;
                }
                return Err(SolverError::LinearSolve { level: m, detail });
            }

            let current: Vec<f64> = ids.iter().map(|&id| field.value(m, id)).collect();
            let mut alpha = 1.0f64;
            let mut accepted = false;
            let mut cone_blocked = false;
            for _ in 0..=MAX_HALVINGS {
                let trial: Vec<f64> = current
                    .iter()
                    .zip(&step)
                    .map(|(&u, &d)| u - alpha * d)
                    .collect();
                if trial.iter().all(|v| v.is_finite()) {
                    write_slice(field, m, &ids, &trial);
                    let margin_ok = level_cone_margin(field, m, spec.k) >= -CONE_CLOSURE_TOL;
                    let monotone_ok = level_monotone_floor(field, m)
                        >= spec.m1 / 2.0 - 1e-13 * (1.0 + spec.m1);
                    if margin_ok && monotone_ok {
                        let r_trial = residual_vec(field, spec, m)?;
                        let rinf_trial = inf_norm(&r_trial);
                        if rinf_trial < rinf {
                            r = r_trial;
                            if converged {
                                polish_left -= 1;
                                // stop polishing once the gain per step fades
                                if rinf_trial > rinf / 4.0 {
                                    return Ok(SliceStats {
                                        level: m,
                                        iterations: it + 1,
                                        residual: rinf_trial,
                                        tolerance: tol,
                                        damped_steps,
                                    });
                                }
                            }
                            rinf = rinf_trial;
                            accepted = true;
                            break;
                        }
                    } else {
                        cone_blocked = !margin_ok;
                    }
                }
                alpha /= 2.0;
                damped_steps += 1;
            }
            if !accepted {
                write_slice(field, m, &ids, &current);
                if converged {
                    return Ok(SliceStats {
                        level: m,
                        iterations: it,
                        residual: rinf,
                        tolerance: tol,
                        damped_steps,
                    });
                }
                if cone_blocked {
                    return Err(SolverError::ConeCollapse {
                        level: m,
                        detail: format!(
                            "step rejected after {MAX_HALVINGS} halvings with residual {rinf:.3e}"
                        ),
                    });
                }
                return Err(SolverError::Nonconvergence {
                    level: m,
                    iterations: it,
                    residual: rinf,
                    tolerance: tol,
                });
            }
        }
        unreachable!("newton loop exits via return");
    }
    Err(last_err.unwrap_or(SolverError::Nonconvergence {
        level: m,
        iterations: 0,
        residual: f64::NAN,
        tolerance: 0.0,
    }))
}

/// Fills the boundary values of a level from the problem's Dirichlet data.
pub fn fill_boundary(
    field: &mut SolutionField,
    spec: &ProblemSpec,
    m: usize,
) -> Result<(), SolverError> {
    let grid = field.grid().clone();
    let t = grid.t(m);
    for id in 0..grid.node_count() {
        if grid.class(m, id) == NodeClass::Boundary {
            let x = grid.coords(id);
            let v = spec.eval_g(&x[..grid.n], t)?;
            field.set_value(m, id, v);
        }
    }
    Ok(())
}

/// Marches all levels from the initial slice to `t = 0`.
///
/// Level 0 is filled from `g` (the parabolic boundary includes the initial
/// slice); pass `initial` to override it with explicit per-node values.
pub fn solve_with_initial(
    spec: &ProblemSpec,
    grid: &Arc<Grid>,
    initial: Option<Vec<f64>>,
) -> Result<SolveOutcome, SolverError> {
    let mut field = SolutionField::new(grid.clone());
    match initial {
        Some(vals) => {
            assert_eq!(vals.len(), grid.node_count());
            for (id, v) in vals.into_iter().enumerate() {
                if grid.is_valued(0, id) {
                    field.set_value(0, id, v);
                }
            }
        }
        None => fill_boundary(&mut field, spec, 0)?,
    }
    let mut stats = Vec::with_capacity(grid.levels() - 1);
    for m in 1..grid.levels() {
        fill_boundary(&mut field, spec, m)?;
        stats.push(solve_slice(&mut field, spec, m, None)?);
    }
    Ok(SolveOutcome { field, stats })
}

/// Convenience wrapper: initial slice from the boundary data.
pub fn solve(spec: &ProblemSpec, grid: &Arc<Grid>) -> Result<SolveOutcome, SolverError> {
    solve_with_initial(spec, grid, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::grid::{build_grid, SpaceTimeDomain};
    use crate::problem::manufactured_problem;

    fn cylinder(radius: f64, t_start: f64) -> SpaceTimeDomain {
        SpaceTimeDomain::Cylinder { radius, t_start }
    }

    #[test]
    fn residual_vanishes_on_quadratic_k1_and_k2() {
        for (k, psi) in [(1usize, "2"), (2, "1")] {
            let g = Arc::new(build_grid(cylinder(1.0, -0.5), 2, 0.125, 0.0625).unwrap());
            let spec = ProblemSpec::new(
                k,
                parse(psi).unwrap(),
                parse("(x1^2+x2^2)/2 - t").unwrap(),
                1.0,
            );
            let f =
                SolutionField::from_expression(g.clone(), &parse("(x1^2+x2^2)/2 - t").unwrap())
                    .unwrap();
            for m in 1..g.levels() {
                for &id in g.interior_ids(m) {
                    let r = residual(&f, &spec, m, id).unwrap();
                    assert!(r.abs() < 1e-13, "k={k} residual {r:.3e}");
                }
            }
        }
    }

    #[test]
    fn quartic_residual_is_second_order() {
        let u = parse("(x1^4+x2^4)/12 + (x1^2+x2^2)/2 - t").unwrap();
        let mut sups = Vec::new();
        for h in [0.1, 0.05] {
            let g = Arc::new(build_grid(cylinder(1.0, -0.2), 2, h, 0.1).unwrap());
            let spec = manufactured_problem(&u, g.domain, 2, 2).unwrap();
            let f = SolutionField::from_expression(g.clone(), &u).unwrap();
            let mut sup = 0.0f64;
            for m in 1..g.levels() {
                for &id in g.interior_ids(m) {
                    sup = sup.max(residual(&f, &spec, m, id).unwrap().abs());
                }
            }
            sups.push(sup);
        }
        let order = (sups[0] / sups[1]).log2();
        assert!(order >= 1.8, "observed order {order}, sups {sups:?}");
    }

    #[test]
    fn jacobian_matches_hand_stencil_for_k1() {
        // k = 1: rows reduce to -(1/tau) Δ_h u - u_t Δ_h - ψ_z
        let g = Arc::new(build_grid(cylinder(1.0, -0.25), 2, 0.25, 0.25).unwrap());
        let u0 = parse("(x1^2+x2^2)/2 - t").unwrap();
        let spec = ProblemSpec::new(1, parse("2 - z + z").unwrap(), u0.clone(), 1.0);
        let f = SolutionField::from_expression(g.clone(), &u0).unwrap();
        let m = 1;
        let bw = level_bandwidth(&g, m);
        let psi_z = spec.psi.differentiate(Var::Z).unwrap();
        let jac = assemble_jacobian(&f, &spec, &psi_z, m, bw).unwrap();

        let h2 = g.h * g.h;
        for &id in g.interior_ids(m) {
            let sp = g.slot(m, id).unwrap();
            let lap = {
                let hess = f.hessian(m, id).unwrap();
                hess.get(0, 0) + hess.get(1, 1)
            };
            let ut = f.ut(m, id).unwrap();
            // diagonal: -Δ_h u/tau - u_t(-4/h²) - ψ_z where ψ_z = 0 here
            let want = -lap / g.tau - ut * (-4.0 / h2);
            assert!(
                (jac.get(sp, sp) - want).abs() <= 1e-12 * (1.0 + want.abs()),
                "diag {} vs {}",
                jac.get(sp, sp),
                want
            );
            for o in [[1i64, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0]] {
                if let Some(sq) = g.shift(id, &o).and_then(|q| g.slot(m, q)) {
                    let want = -ut / h2;
                    assert!((jac.get(sp, sq) - want).abs() <= 1e-12 * (1.0 + want.abs()));
                }
            }
        }
    }

    #[test]
    fn jacobian_matches_directional_finite_differences() {
        let g = Arc::new(build_grid(cylinder(1.0, -0.25), 2, 0.125, 0.125).unwrap());
        let u0 = parse("(x1^2+x2^2)/2 - t").unwrap();
        // z-dependent ψ exercises the ψ_z diagonal term
        let spec = ProblemSpec::new(2, parse("1 + z^2/10").unwrap(), u0.clone(), 0.5);
        let mut f = SolutionField::from_expression(g.clone(), &u0).unwrap();
        let m = 2;
        let ids: Vec<usize> = g.interior_ids(m).to_vec();

        // random k-convex-ish perturbation of the iterate
        let mut rng = crate::sample::rng_from_seed(3);
        use rand::Rng;
        for &id in &ids {
            let v = f.value(m, id) + rng.gen_range(-0.01..0.01);
            f.set_value(m, id, v);
        }

        let bw = level_bandwidth(&g, m);
        let psi_z = spec.psi.differentiate(Var::Z).unwrap();
        let jac = assemble_jacobian(&f, &spec, &psi_z, m, bw).unwrap();

        let dir: Vec<f64> = (0..ids.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let eps = 1e-6;
        let base: Vec<f64> = ids.iter().map(|&id| f.value(m, id)).collect();

        let mut shifted = |sgn: f64, f: &mut SolutionField| -> Vec<f64> {
            for ((&id, &b), &d) in ids.iter().zip(&base).zip(&dir) {
                f.set_value(m, id, b + sgn * eps * d);
            }
            residual_vec(f, &spec, m).unwrap()
        };
        let rp = shifted(1.0, &mut f);
        let rm = shifted(-1.0, &mut f);
        write_slice(&mut f, m, &ids, &base);

        for (row, _) in ids.iter().enumerate() {
            let fd = (rp[row] - rm[row]) / (2.0 * eps);
            let mut analytic = 0.0;
            for (col, &d) in dir.iter().enumerate() {
                analytic += jac.get(row, col) * d;
            }
            assert!(
                (fd - analytic).abs() <= 1e-6 * (1.0 + analytic.abs()),
                "row {row}: fd {fd} vs analytic {analytic}"
            );
        }
    }

    #[test]
    fn k1_rows_are_diagonally_dominant_for_nonnegative_psi_z() {
        let g = Arc::new(build_grid(cylinder(1.0, -0.25), 2, 0.125, 0.125).unwrap());
        let u0 = parse("(x1^2+x2^2)/2 - t").unwrap();
        let spec = ProblemSpec::new(1, parse("2 + z^2").unwrap(), u0.clone(), 1.0);
        let f = SolutionField::from_expression(g.clone(), &u0).unwrap();
        let m = 1;
        let ids = g.interior_ids(m);
        let bw = level_bandwidth(&g, m);
        let psi_z = spec.psi.differentiate(Var::Z).unwrap();
        let jac = assemble_jacobian(&f, &spec, &psi_z, m, bw).unwrap();
        for row in 0..ids.len() {
            let diag = jac.get(row, row).abs();
            let mut off = 0.0;
            for col in row.saturating_sub(bw)..(row + bw + 1).min(ids.len()) {
                if col != row {
                    off += jac.get(row, col).abs();
                }
            }
            assert!(diag >= off - 1e-12, "row {row}: diag {diag} < off {off}");
        }
    }

    #[test]
    fn quadratic_solves_to_machine_precision_in_two_iterations() {
        let g = Arc::new(build_grid(cylinder(1.0, -0.5), 2, 0.125, 0.0625).unwrap());
        let exact = parse("(x1^2+x2^2)/2 - t").unwrap();
        let spec = ProblemSpec::new(2, parse("1").unwrap(), exact.clone(), 1.0);
        let out = solve(&spec, &g).unwrap();
        for s in &out.stats {
            assert!(s.iterations <= 2, "level {} took {} iterations", s.level, s.iterations);
        }
        let err = out.field.linf_error(&exact).unwrap();
        assert!(err <= 1e-12, "L∞ error {err:.3e}");
    }

    #[test]
    fn quadratic_in_three_dimensions_all_orders() {
        let exact = parse("(x1^2+x2^2+x3^2)/2 - t").unwrap();
        for k in 1..=3usize {
            let g = Arc::new(build_grid(cylinder(1.0, -0.25), 3, 0.25, 0.125).unwrap());
            let psi_val = crate::sigma::binomial(3, k);
            let spec = ProblemSpec::new(
                k,
                parse(&psi_val.to_string()).unwrap(),
                exact.clone(),
                1.0,
            );
            let out = solve(&spec, &g).unwrap();
            let err = out.field.linf_error(&exact).unwrap();
            assert!(err <= 1e-12, "k={k}: L∞ error {err:.3e}");
        }
    }

    #[test]
    fn degenerate_equation_raises_an_error() {
        // ψ = 0 with k = n is degenerate: the solver must fail loudly
        let g = Arc::new(build_grid(cylinder(1.0, -0.25), 2, 0.125, 0.125).unwrap());
        let spec = ProblemSpec::new(2, parse("0").unwrap(), parse("0").unwrap(), 0.1);
        match solve(&spec, &g) {
            Err(
                SolverError::ConeCollapse { .. }
                | SolverError::Nonconvergence { .. }
                | SolverError::LinearSolve { .. }
                | SolverError::BadInitialIterate { .. },
            ) => {}
            other => panic!("expected a solver error, got {other:?}"),
        }
    }

    #[test]
    fn monotonicity_floor_holds_on_solutions() {
        let g = Arc::new(build_grid(cylinder(1.0, -0.5), 2, 0.125, 0.0625).unwrap());
        let exact = parse("(x1^2+x2^2)/2 - t").unwrap();
        let spec = ProblemSpec::new(2, parse("1").unwrap(), exact, 1.0);
        let out = solve(&spec, &g).unwrap();
        let rep = out.field.admissibility(2, spec.m1);
        assert!(rep.ok(), "{rep:?}");
    }

    /// Independent scalar stepper for k = 1: same discretization assembled
    /// directly from the quasilinear form, dense finite-difference Jacobian,
    /// dense LU. Shares nothing with the banded Newton path.
    fn independent_k1_stepper(
        grid: &Arc<Grid>,
        spec: &ProblemSpec,
    ) -> SolutionField {
        let mut f = SolutionField::new(grid.clone());
        let n = grid.n;
        for m in 0..grid.levels() {
            let t = grid.t(m);
            for id in 0..grid.node_count() {
                if grid.class(m, id) == NodeClass::Boundary {
                    let x = grid.coords(id);
                    f.set_value(m, id, spec.eval_g(&x[..n], t).unwrap());
                }
            }
        }
        for m in 1..grid.levels() {
            let ids: Vec<usize> = grid.interior_ids(m).to_vec();
            if ids.is_empty() {
                continue;
            }
            // start from the previous slice
            for &id in &ids {
                let v = f.value(m - 1, id) - spec.m1 * grid.tau;
                f.set_value(m, id, v);
            }
            let res = |f: &SolutionField| -> Vec<f64> {
                ids.iter()
                    .map(|&id| {
                        let lap: f64 = (0..n)
                            .map(|a| {
                                let mut op = [0i64; 3];
                                op[a] = 1;
                                let mut om = [0i64; 3];
                                om[a] = -1;
                                (f.value(m, grid.shift(id, &op).unwrap())
                                    - 2.0 * f.value(m, id)
                                    + f.value(m, grid.shift(id, &om).unwrap()))
                                    / (grid.h * grid.h)
                            })
                            .sum();
                        let ut = (f.value(m, id) - f.value(m - 1, id)) / grid.tau;
                        let x = grid.coords(id);
                        -ut * lap - spec.eval_psi(&x[..n], grid.t(m), f.value(m, id)).unwrap()
                    })
                    .collect()
            };
            for _ in 0..60 {
                let r0 = res(&f);
                if inf_norm(&r0) < 1e-13 {
                    break;
                }
                let nunk = ids.len();
                let mut jac = nalgebra::DMatrix::<f64>::zeros(nunk, nunk);
                let eps = 1e-7;
                for (col, &id) in ids.iter().enumerate() {
                    let saved = f.value(m, id);
                    f.set_value(m, id, saved + eps);
                    let rp = res(&f);
                    f.set_value(m, id, saved - eps);
                    let rm = res(&f);
                    f.set_value(m, id, saved);
                    for row in 0..nunk {
                        jac[(row, col)] = (rp[row] - rm[row]) / (2.0 * eps);
                    }
                }
                let delta = jac
                    .lu()
                    .solve(&nalgebra::DVector::from_vec(r0.clone()))
                    .expect("dense solve");
                for (row, &id) in ids.iter().enumerate() {
                    let v = f.value(m, id) - delta[row];
                    f.set_value(m, id, v);
                }
            }
        }
        f
    }

    #[test]
    fn k1_agrees_with_independent_stepper() {
        let g = Arc::new(build_grid(cylinder(1.0, -0.25), 2, 0.25, 0.125).unwrap());
        // non-trivial data: tilted quadratic plus a quartic bump
        let u0 = parse("(x1^2+x2^2)/2 + x1^4/24 - t + x1/5").unwrap();
        let spec = manufactured_problem(&u0, g.domain, 2, 1).unwrap();
        let ours = solve(&spec, &g).unwrap().field;
        let theirs = independent_k1_stepper(&g, &spec);
        let mut max_diff = 0.0f64;
        for m in 0..g.levels() {
            for id in 0..g.node_count() {
                let (a, b) = (ours.value(m, id), theirs.value(m, id));
                if a.is_finite() && b.is_finite() {
                    max_diff = max_diff.max((a - b).abs());
                }
            }
        }
        assert!(max_diff <= 1e-9, "solvers disagree by {max_diff:.3e}");
    }
}
