//! Parabolic Hölder seminorms on discrete fields.
//!
//! The seminorm is the exact supremum over all distinct node pairs of
//! `|f(x,t) - f(y,s)| / (|x-y|² + |t-s|)^{α/2}`, evaluated on grid nodes
//! with no subgrid optimization. Pair sweeps parallelize over disjoint
//! index ranges with read-only field access.

use crate::error::VerifyError;
use crate::field::SolutionField;
use crate::sigma::SymMatrix;
use rayon::prelude::*;

/// Parabolic box `{ |x| < radius, t > t_min }` used to cut subdomains.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ParabolicBox {
    pub radius: f64,
    pub t_min: f64,
}

impl ParabolicBox {
    pub fn contains(&self, x: &[f64], t: f64) -> bool {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        r2 < self.radius * self.radius && t > self.t_min
    }

    /// The parabolic rescaling `x -> s·x, t -> s²·t` of this box.
    pub fn scaled(&self, s: f64) -> ParabolicBox {
        ParabolicBox {
            radius: self.radius * s,
            t_min: self.t_min * s * s,
        }
    }
}

/// Node subdomain selector.
#[derive(Debug, Clone, Copy)]
pub enum SubDomain {
    All,
    Box(ParabolicBox),
}

impl SubDomain {
    pub fn contains(&self, x: &[f64], t: f64) -> bool {
        match self {
            SubDomain::All => true,
            SubDomain::Box(b) => b.contains(x, t),
        }
    }
}

/// A scalar sample: spatial coordinates, time, value.
pub type ScalarSample = ([f64; 3], f64, f64);
/// A matrix sample: spatial coordinates, time, matrix value.
pub type MatrixSample = ([f64; 3], f64, SymMatrix);

/// Parabolic Hölder seminorms of a field and its derived quantities, plus
/// the full parabolic `C^{2+α,1+α/2}` norm.
#[derive(Debug, Clone, serde::Serialize)]
pub struct HolderSeminorms {
    pub alpha: f64,
    pub semi_u: f64,
    pub semi_d2u: f64,
    pub semi_ut: f64,
    pub full_norm: f64,
}

#[inline]
fn parabolic_quotient(a: &([f64; 3], f64), b: &([f64; 3], f64), diff: f64, alpha: f64) -> f64 {
    let dx0 = a.0[0] - b.0[0];
    let dx1 = a.0[1] - b.0[1];
    let dx2 = a.0[2] - b.0[2];
    let dist2 = dx0 * dx0 + dx1 * dx1 + dx2 * dx2 + (a.1 - b.1).abs();
    diff.abs() / dist2.powf(alpha / 2.0)
}

/// All-pairs seminorm of scalar samples.
pub fn scalar_seminorm(samples: &[ScalarSample], alpha: f64) -> f64 {
    (0..samples.len())
        .into_par_iter()
        .map(|i| {
            let (xi, ti, vi) = samples[i];
            let mut best = 0.0f64;
            for &(xj, tj, vj) in &samples[i + 1..] {
                best = best.max(parabolic_quotient(&(xi, ti), &(xj, tj), vi - vj, alpha));
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

/// All-pairs seminorm of matrix samples: per pair, the largest entry
/// difference enters the quotient (equivalently the max over entrywise
/// seminorms).
pub fn matrix_seminorm(samples: &[MatrixSample], alpha: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let n = samples[0].2.dim();
    (0..samples.len())
        .into_par_iter()
        .map(|i| {
            let (xi, ti, ref mi) = samples[i];
            let mut best = 0.0f64;
            for (xj, tj, mj) in &samples[i + 1..] {
                let mut diff = 0.0f64;
                for a in 0..n {
                    for b in 0..n {
                        diff = diff.max((mi.get(a, b) - mj.get(a, b)).abs());
                    }
                }
                best = best.max(parabolic_quotient(&(xi, ti), &(*xj, *tj), diff, alpha));
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

/// Collects `u` samples over a subdomain (all valued nodes).
pub fn collect_u(field: &SolutionField, sub: &SubDomain) -> Vec<ScalarSample> {
    let grid = field.grid();
    let mut out = Vec::new();
    for m in 0..grid.levels() {
        let t = grid.t(m);
        for id in 0..grid.node_count() {
            if !grid.is_valued(m, id) {
                continue;
            }
            let x = grid.coords(id);
            if sub.contains(&x[..grid.n], t) {
                out.push((x, t, field.value(m, id)));
            }
        }
    }
    out
}

/// Collects Hessian samples with stencil step `c·h` over a subdomain
/// (nodes where the widened stencil has values).
pub fn collect_hessians(field: &SolutionField, sub: &SubDomain, c: i64) -> Vec<MatrixSample> {
    let grid = field.grid();
    let mut out = Vec::new();
    for m in 0..grid.levels() {
        let t = grid.t(m);
        for id in 0..grid.node_count() {
            if !grid.is_valued(m, id) {
                continue;
            }
            let x = grid.coords(id);
            if !sub.contains(&x[..grid.n], t) {
                continue;
            }
            if let Some(hess) = field.hessian_step(m, id, c) {
                out.push((x, t, hess));
            }
        }
    }
    out
}

/// Collects backward time differences over a subdomain (interior, level ≥ 1).
pub fn collect_ut(field: &SolutionField, sub: &SubDomain) -> Vec<ScalarSample> {
    let grid = field.grid();
    let mut out = Vec::new();
    for m in 1..grid.levels() {
        let t = grid.t(m);
        for &id in grid.interior_ids(m) {
            let x = grid.coords(id);
            if !sub.contains(&x[..grid.n], t) {
                continue;
            }
            if let Some(ut) = field.ut(m, id) {
                out.push((x, t, ut));
            }
        }
    }
    out
}

/// Seminorms of `u`, `D²u` (entrywise max) and `u_t` over a subdomain, plus
/// the full norm: the `C⁰` norms of `u`, `Du`, `D²u`, `u_t` and the two
/// seminorms. `Du` enters with its Euclidean norm and `D²u` with its
/// spectral norm.
pub fn holder_seminorm(
    field: &SolutionField,
    alpha: f64,
    sub: &SubDomain,
) -> Result<HolderSeminorms, VerifyError> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(VerifyError::InvalidInput(format!(
            "alpha = {alpha} outside (0, 1)"
        )));
    }
    let u = collect_u(field, sub);
    if u.len() < 2 {
        return Err(VerifyError::EmptySubdomain);
    }
    let grid = field.grid();
    let semi_u = scalar_seminorm(&u, alpha);
    let hess = collect_hessians(field, sub, 1);
    let semi_d2u = matrix_seminorm(&hess, alpha);
    let ut = collect_ut(field, sub);
    let semi_ut = scalar_seminorm(&ut, alpha);

    let sup_u = u.iter().fold(0.0f64, |m, s| m.max(s.2.abs()));
    let sup_ut = ut.iter().fold(0.0f64, |m, s| m.max(s.2.abs()));
    let sup_d2u = hess.iter().fold(0.0f64, |m, s| m.max(s.2.spectral_norm()));
    let mut sup_du = 0.0f64;
    for m in 1..grid.levels() {
        let t = grid.t(m);
        for &id in grid.interior_ids(m) {
            let x = grid.coords(id);
            if sub.contains(&x[..grid.n], t) {
                if let Some(g) = field.gradient(m, id) {
                    sup_du = sup_du.max(g.iter().map(|v| v * v).sum::<f64>().sqrt());
                }
            }
        }
    }

    Ok(HolderSeminorms {
        alpha,
        semi_u,
        semi_d2u,
        semi_ut,
        full_norm: sup_u + sup_du + sup_d2u + sup_ut + semi_d2u + semi_ut,
    })
}
