//! Discrete solution fields and their derived quantities.

use crate::error::SigmaError;
use crate::expr::{EvalPoint, Expr};
use crate::grid::{Grid, NodeClass};
use crate::sigma::{s_k, SymMatrix};
use std::io::Write;
use std::sync::Arc;

/// Values of `u` on grid nodes across time levels, with derived centered
/// gradients, Hessians and backward time differences.
///
/// Values exist at interior and boundary nodes; exterior slots hold NaN.
/// A frozen field is safe to read from any number of threads.
#[derive(Debug, Clone)]
pub struct SolutionField {
    grid: Arc<Grid>,
    values: Vec<Vec<f64>>,
}

impl SolutionField {
    pub fn new(grid: Arc<Grid>) -> Self {
        let values = (0..grid.levels())
            .map(|_| vec![f64::NAN; grid.node_count()])
            .collect();
        SolutionField { grid, values }
    }

    /// Samples an expression in `(x, t)` at every valued node.
    pub fn from_expression(grid: Arc<Grid>, e: &Expr) -> Result<Self, crate::error::ExprError> {
        let mut f = SolutionField::new(grid.clone());
        for m in 0..grid.levels() {
            let t = grid.t(m);
            for id in 0..grid.node_count() {
                if grid.is_valued(m, id) {
                    let x = grid.coords(id);
                    f.values[m][id] = e.eval(&EvalPoint::space_time(&x[..grid.n], t))?;
                }
            }
        }
        Ok(f)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn value(&self, m: usize, id: usize) -> f64 {
        self.values[m][id]
    }

    pub fn set_value(&mut self, m: usize, id: usize, v: f64) {
        self.values[m][id] = v;
    }

    pub fn level_values(&self, m: usize) -> &[f64] {
        &self.values[m]
    }

    pub fn level_values_mut(&mut self, m: usize) -> &mut [f64] {
        &mut self.values[m]
    }

    /// Centered spatial gradient; available where the axis stencil is valued.
    pub fn gradient(&self, m: usize, id: usize) -> Option<Vec<f64>> {
        self.gradient_step(m, id, 1)
    }

    /// Centered gradient with stencil step `c·h`.
    pub fn gradient_step(&self, m: usize, id: usize, c: i64) -> Option<Vec<f64>> {
        let n = self.grid.n;
        let mut g = vec![0.0; n];
        let step = c as f64 * self.grid.h;
        for (a, ga) in g.iter_mut().enumerate() {
            let mut op = [0i64; 3];
            op[a] = c;
            let mut om = [0i64; 3];
            om[a] = -c;
            let up = self.value_at_shift(m, id, &op)?;
            let um = self.value_at_shift(m, id, &om)?;
            *ga = (up - um) / (2.0 * step);
        }
        Some(g)
    }

    /// Centered second differences: 3-point pure, 4-point mixed stencils.
    pub fn hessian(&self, m: usize, id: usize) -> Option<SymMatrix> {
        self.hessian_step(m, id, 1)
    }

    /// Hessian with stencil step `c·h` (used by matched-scale seminorms).
    pub fn hessian_step(&self, m: usize, id: usize, c: i64) -> Option<SymMatrix> {
        let n = self.grid.n;
        let step = c as f64 * self.grid.h;
        let h2 = step * step;
        let center = self.value_checked(m, id)?;
        let mut entries = [[0.0f64; 3]; 3];
        for a in 0..n {
            let mut op = [0i64; 3];
            op[a] = c;
            let mut om = [0i64; 3];
            om[a] = -c;
            let up = self.value_at_shift(m, id, &op)?;
            let um = self.value_at_shift(m, id, &om)?;
            entries[a][a] = (up - 2.0 * center + um) / h2;
        }
        for a in 0..n {
            for b in (a + 1)..n {
                let mut pp = [0i64; 3];
                pp[a] = c;
                pp[b] = c;
                let mut mm = [0i64; 3];
                mm[a] = -c;
                mm[b] = -c;
                let mut pm = [0i64; 3];
                pm[a] = c;
                pm[b] = -c;
                let mut mp = [0i64; 3];
                mp[a] = -c;
                mp[b] = c;
                let v = (self.value_at_shift(m, id, &pp)? + self.value_at_shift(m, id, &mm)?
                    - self.value_at_shift(m, id, &pm)?
                    - self.value_at_shift(m, id, &mp)?)
                    / (4.0 * h2);
                entries[a][b] = v;
                entries[b][a] = v;
            }
        }
        Some(SymMatrix::from_fn(n, |i, j| entries[i][j]).expect("n <= 3"))
    }

    /// Backward time difference `(u^m - u^{m-1}) / tau`.
    pub fn ut(&self, m: usize, id: usize) -> Option<f64> {
        self.ut_step(m, id, 1)
    }

    /// Backward difference over `c` levels: `(u^m - u^{m-c}) / (c·tau)`.
    pub fn ut_step(&self, m: usize, id: usize, c: usize) -> Option<f64> {
        if m < c {
            return None;
        }
        let now = self.value_checked(m, id)?;
        let prev = self.value_checked(m - c, id)?;
        Some((now - prev) / (c as f64 * self.grid.tau))
    }

    fn value_checked(&self, m: usize, id: usize) -> Option<f64> {
        let v = self.values[m][id];
        v.is_finite().then_some(v)
    }

    fn value_at_shift(&self, m: usize, id: usize, offset: &[i64; 3]) -> Option<f64> {
        let nid = self.grid.shift(id, offset)?;
        self.value_checked(m, nid)
    }

    /// Supremum of |u| over all valued nodes and levels.
    pub fn sup_abs(&self) -> f64 {
        let mut sup = 0.0f64;
        for m in 0..self.grid.levels() {
            for id in 0..self.grid.node_count() {
                let v = self.values[m][id];
                if v.is_finite() {
                    sup = sup.max(v.abs());
                }
            }
        }
        sup
    }

    /// Supremum of |Du| over interior nodes (Euclidean norm).
    pub fn sup_gradient_norm(&self) -> f64 {
        let mut sup = 0.0f64;
        for m in 1..self.grid.levels() {
            for &id in self.grid.interior_ids(m) {
                if let Some(g) = self.gradient(m, id) {
                    sup = sup.max(g.iter().map(|v| v * v).sum::<f64>().sqrt());
                }
            }
        }
        sup
    }

    /// Cone margin `min_{j<=k} S_j(D²u)` at an interior node.
    pub fn cone_margin(&self, m: usize, id: usize, k: usize) -> Option<f64> {
        let hess = self.hessian(m, id)?;
        let mut margin = f64::INFINITY;
        for j in 1..=k {
            margin = margin.min(s_k(&hess, j).ok()?);
        }
        Some(margin)
    }

    /// Scans the admissible-class invariants over every interior node of
    /// every level: cone margin and the monotonicity floor.
    pub fn admissibility(&self, k: usize, m1: f64) -> AdmissibilityReport {
        let mut min_margin = f64::INFINITY;
        let mut max_ut = f64::NEG_INFINITY;
        let mut checked = 0usize;
        for m in 1..self.grid.levels() {
            for &id in self.grid.interior_ids(m) {
                if let (Some(margin), Some(ut)) =
                    (self.cone_margin(m, id, k), self.ut(m, id))
                {
                    min_margin = min_margin.min(margin);
                    max_ut = max_ut.max(ut);
                    checked += 1;
                }
            }
        }
        AdmissibilityReport {
            checked,
            min_cone_margin: min_margin,
            max_ut,
            cone_ok: min_margin >= -crate::sigma::CONE_CLOSURE_TOL,
            monotone_ok: max_ut <= -m1 / 2.0 + 1e-12,
        }
    }

    /// L∞ distance to an exact expression over all valued nodes.
    pub fn linf_error(&self, exact: &Expr) -> Result<f64, crate::error::ExprError> {
        let mut err = 0.0f64;
        for m in 0..self.grid.levels() {
            let t = self.grid.t(m);
            for id in 0..self.grid.node_count() {
                let v = self.values[m][id];
                if v.is_finite() {
                    let x = self.grid.coords(id);
                    let want = exact.eval(&EvalPoint::space_time(&x[..self.grid.n], t))?;
                    err = err.max((v - want).abs());
                }
            }
        }
        Ok(err)
    }

    /// Writes one CSV per level: `level,t,node,x1..xn,u,ut,cone_margin`
    /// (derived columns empty where undefined).
    pub fn write_csv(
        &self,
        dir: &std::path::Path,
        k: usize,
    ) -> std::io::Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let n = self.grid.n;
        let mut paths = Vec::new();
        for m in 0..self.grid.levels() {
            let path = dir.join(format!("solution_{m:03}.csv"));
            let mut out = std::io::BufWriter::new(std::fs::File::create(&path)?);
            let xs: String = (1..=n).map(|a| format!(",x{a}")).collect();
            writeln!(out, "level,t,node{xs},u,ut,cone_margin")?;
            let t = self.grid.t(m);
            for id in 0..self.grid.node_count() {
                let v = self.values[m][id];
                if !v.is_finite() {
                    continue;
                }
                let x = self.grid.coords(id);
                let coords: String = (0..n).map(|a| format!(",{}", x[a])).collect();
                let ut = self
                    .ut(m, id)
                    .map(|w| w.to_string())
                    .unwrap_or_default();
                let margin = self
                    .cone_margin(m, id, k)
                    .map(|w| w.to_string())
                    .unwrap_or_default();
                writeln!(out, "{m},{t},{id}{coords},{v},{ut},{margin}")?;
            }
            paths.push(path);
        }
        Ok(paths)
    }
}

/// Result of the admissible-class scan.
#[derive(Debug, Clone, serde::Serialize)]
pub struct AdmissibilityReport {
    pub checked: usize,
    pub min_cone_margin: f64,
    pub max_ut: f64,
    pub cone_ok: bool,
    pub monotone_ok: bool,
}

impl AdmissibilityReport {
    pub fn ok(&self) -> bool {
        self.cone_ok && self.monotone_ok
    }
}

/// Convenience: cone margin of a matrix (minors route, no eigensolve).
pub fn matrix_cone_margin(h: &SymMatrix, k: usize) -> Result<f64, SigmaError> {
    let mut margin = f64::INFINITY;
    for j in 1..=k {
        margin = margin.min(s_k(h, j)?);
    }
    Ok(margin)
}
