//! Calculus of elementary symmetric functions of matrix spectra.
//!
//! The operator behind the equation is `S_k(D²u) = σ_k(λ(D²u))`, the k-th
//! elementary symmetric function of the eigenvalues of the spatial Hessian.
//! Everything here is polynomial algebra: values of `σ_l`, restrictions
//! `σ_{l;i…}` with coordinates zeroed out, the derivative tensor `S_k^{ij}`,
//! membership tests for the ellipticity cone `Γ_k`, and the classical
//! inequalities (Maclaurin, the λ₁-leverage bound) that the interior
//! estimates lean on.
//!
//! `S_k` and `S_k^{ij}` are computed from principal minors of the matrix,
//! never from an eigendecomposition, so they stay exact and differentiable
//! under repeated eigenvalues. Matrices are capped at n = 4 and spectra at
//! n = 8; this is a desk-scale laboratory, not a BLAS.

use crate::error::SigmaError;

/// Largest spectrum length supported.
pub const MAX_SPECTRUM_LEN: usize = 8;
/// Largest matrix dimension supported by the minor expansion.
pub const MAX_MATRIX_DIM: usize = 4;

/// Tolerance used by the closure test of `Γ_k` (solver safeguards).
pub const CONE_CLOSURE_TOL: f64 = 1e-12;

/// Ordered eigenvalue vector of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
}

impl Spectrum {
    pub fn new(values: Vec<f64>) -> Result<Self, SigmaError> {
        if values.is_empty() || values.len() > MAX_SPECTRUM_LEN {
            return Err(SigmaError::InvalidSpectrum(format!(
                "length {} outside 1..={MAX_SPECTRUM_LEN}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SigmaError::InvalidSpectrum(
                "non-finite entry".to_string(),
            ));
        }
        Ok(Spectrum { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// View with entries sorted descending, as the ratio checks expect.
    pub fn sorted_descending(&self) -> Spectrum {
        let mut v = self.values.clone();
        v.sort_by(|a, b| b.partial_cmp(a).unwrap());
        Spectrum { values: v }
    }

    pub fn is_sorted_descending(&self) -> bool {
        self.values.windows(2).all(|w| w[0] >= w[1])
    }
}

/// Verdict of a `Γ_k` membership test.
///
/// `margin` is the minimum of `σ_j(λ)` over `j = 1..=k`; the point is inside
/// the open cone exactly when the margin is strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeVerdict {
    pub k: usize,
    pub inside: bool,
    pub margin: f64,
}

/// Binomial coefficient as `f64` (arguments stay tiny here).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// All elementary symmetric functions `σ_0..=σ_n` of `values` by the
/// Horner-style coefficient recursion (numerically stable, no subsets).
fn elementary_all(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for (m, &x) in values.iter().enumerate() {
        for l in (1..=m + 1).rev() {
            e[l] += x * e[l - 1];
        }
    }
    e
}

/// `σ_l(λ)`, with the convention `σ_0 ≡ 1`.
pub fn sigma(lambda: &Spectrum, l: usize) -> Result<f64, SigmaError> {
    let n = lambda.len();
    if l > n {
        return Err(SigmaError::OrderOutOfRange { order: l, n });
    }
    Ok(elementary_all(lambda.values())[l])
}

/// Restricted symmetric function `σ_{l;i₁⋯i_j}`: zero out the excluded
/// coordinates, then evaluate `σ_l`. A repeated excluded index yields 0.
/// Indices are 0-based.
pub fn sigma_restricted(
    lambda: &Spectrum,
    l: usize,
    excluded: &[usize],
) -> Result<f64, SigmaError> {
    let n = lambda.len();
    if l == 0 || l > n {
        return Err(SigmaError::OrderOutOfRange { order: l, n });
    }
    for &i in excluded {
        if i >= n {
            return Err(SigmaError::IndexOutOfRange { index: i, n });
        }
    }
    for (a, &i) in excluded.iter().enumerate() {
        if excluded[..a].contains(&i) {
            return Ok(0.0);
        }
    }
    let mut v = lambda.values().to_vec();
    for &i in excluded {
        v[i] = 0.0;
    }
    Ok(elementary_all(&v)[l])
}

/// Membership in the open cone `Γ_k = {λ : σ_j(λ) > 0, j = 1..k}`.
pub fn in_gamma_k(lambda: &Spectrum, k: usize) -> Result<ConeVerdict, SigmaError> {
    let n = lambda.len();
    if k == 0 || k > n {
        return Err(SigmaError::OrderOutOfRange { order: k, n });
    }
    let e = elementary_all(lambda.values());
    let margin = e[1..=k].iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(ConeVerdict {
        k,
        inside: margin > 0.0,
        margin,
    })
}

/// Closure test with tolerance, used by the solver safeguards: membership in
/// `cl(Γ_k)` is accepted when the margin is at least `-tol`.
pub fn in_gamma_k_closure(lambda: &Spectrum, k: usize, tol: f64) -> Result<bool, SigmaError> {
    Ok(in_gamma_k(lambda, k)?.margin >= -tol)
}

/// Symmetric n×n matrix (n ≤ 4), the role of `D²u` at a point.
///
/// Symmetry is enforced at construction; entries are stored dense.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMatrix {
    n: usize,
    a: [f64; MAX_MATRIX_DIM * MAX_MATRIX_DIM],
}

impl SymMatrix {
    /// Builds from a row-major slice of length n², rejecting asymmetry.
    pub fn from_rows(n: usize, rows: &[f64]) -> Result<Self, SigmaError> {
        if n == 0 || n > MAX_MATRIX_DIM {
            return Err(SigmaError::InvalidSpectrum(format!(
                "matrix dimension {n} outside 1..={MAX_MATRIX_DIM}"
            )));
        }
        if rows.len() != n * n {
            return Err(SigmaError::InvalidSpectrum(format!(
                "expected {} entries, got {}",
                n * n,
                rows.len()
            )));
        }
        let mut a = [0.0; MAX_MATRIX_DIM * MAX_MATRIX_DIM];
        for i in 0..n {
            for j in 0..n {
                if rows[i * n + j] != rows[j * n + i] {
                    return Err(SigmaError::InvalidSpectrum(format!(
                        "entry ({i},{j}) breaks symmetry"
                    )));
                }
                a[i * MAX_MATRIX_DIM + j] = rows[i * n + j];
            }
        }
        Ok(SymMatrix { n, a })
    }

    /// Builds from the lower triangle given as closure `(i, j) -> value`,
    /// mirroring across the diagonal so symmetry holds exactly.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self, SigmaError> {
        if n == 0 || n > MAX_MATRIX_DIM {
            return Err(SigmaError::InvalidSpectrum(format!(
                "matrix dimension {n} outside 1..={MAX_MATRIX_DIM}"
            )));
        }
        let mut a = [0.0; MAX_MATRIX_DIM * MAX_MATRIX_DIM];
        for i in 0..n {
            for j in 0..=i {
                let v = f(i, j);
                a[i * MAX_MATRIX_DIM + j] = v;
                a[j * MAX_MATRIX_DIM + i] = v;
            }
        }
        Ok(SymMatrix { n, a })
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self, SigmaError> {
        Self::from_fn(diag.len(), |i, j| if i == j { diag[i] } else { 0.0 })
    }

    pub fn identity(n: usize) -> Result<Self, SigmaError> {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn zero(n: usize) -> Result<Self, SigmaError> {
        Self::from_fn(n, |_, _| 0.0)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.n && j < self.n);
        self.a[i * MAX_MATRIX_DIM + j]
    }

    fn set_raw(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * MAX_MATRIX_DIM + j] = v;
    }

    /// Quadratic form `ξᵀ H ξ`.
    pub fn quad_form(&self, xi: &[f64]) -> f64 {
        debug_assert_eq!(xi.len(), self.n);
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                acc += xi[i] * self.get(i, j) * xi[j];
            }
        }
        acc
    }

    /// Frobenius inner product `Σ_ij A_ij B_ij`.
    pub fn inner(&self, other: &SymMatrix) -> f64 {
        debug_assert_eq!(self.n, other.n);
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                acc += self.get(i, j) * other.get(i, j);
            }
        }
        acc
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        let mut out = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                out.set_raw(i, j, self.get(i, j) * s);
            }
        }
        out
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        debug_assert_eq!(self.n, other.n);
        let mut out = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                out.set_raw(i, j, self.get(i, j) + other.get(i, j));
            }
        }
        out
    }

    /// Eigenvalues via a symmetric eigensolver, sorted descending.
    pub fn spectrum(&self) -> Spectrum {
        let m = nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j));
        let eig = m.symmetric_eigenvalues();
        let mut v: Vec<f64> = eig.iter().cloned().collect();
        v.sort_by(|a, b| b.partial_cmp(a).unwrap());
        Spectrum { values: v }
    }

    /// Spectral norm: largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> f64 {
        self.spectrum()
            .values()
            .iter()
            .fold(0.0, |m, &v| m.max(v.abs()))
    }
}

/// Determinant of the submatrix rows×cols of `h` by cofactor expansion
/// along the first row (sizes up to 4×4, exact polynomial arithmetic).
fn det_general(h: &SymMatrix, rows: &[usize], cols: &[usize]) -> f64 {
    debug_assert_eq!(rows.len(), cols.len());
    match rows.len() {
        0 => 1.0,
        1 => h.get(rows[0], cols[0]),
        2 => {
            h.get(rows[0], cols[0]) * h.get(rows[1], cols[1])
                - h.get(rows[0], cols[1]) * h.get(rows[1], cols[0])
        }
        m => {
            let mut det = 0.0;
            let mut sign = 1.0;
            for c in 0..m {
                let sub_cols: Vec<usize> = (0..m).filter(|&p| p != c).map(|p| cols[p]).collect();
                det += sign * h.get(rows[0], cols[c]) * det_general(h, &rows[1..], &sub_cols);
                sign = -sign;
            }
            det
        }
    }
}

/// Determinant of the principal submatrix of `h` indexed by `idx`.
fn principal_minor(h: &SymMatrix, idx: &[usize]) -> f64 {
    det_general(h, idx, idx)
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// `S_k(H) = σ_k(λ(H))`, computed as the sum of all k×k principal minors.
pub fn s_k(h: &SymMatrix, k: usize) -> Result<f64, SigmaError> {
    let n = h.dim();
    if k > n {
        return Err(SigmaError::OrderOutOfRange { order: k, n });
    }
    if k == 0 {
        return Ok(1.0);
    }
    let mut acc = 0.0;
    for idx in subsets(n, k) {
        acc += principal_minor(h, &idx);
    }
    Ok(acc)
}

/// Derivative tensor `S_k^{ij} = ∂S_k/∂H_ij`, obtained by differentiating the
/// principal-minor expansion entrywise (each entry treated as independent, as
/// the linearized operator requires). Well-defined for repeated eigenvalues.
pub fn s_k_grad(h: &SymMatrix, k: usize) -> Result<SymMatrix, SigmaError> {
    let n = h.dim();
    if k == 0 || k > n {
        return Err(SigmaError::OrderOutOfRange { order: k, n });
    }
    let mut out = SymMatrix::zero(n)?;
    for idx in subsets(n, k) {
        // d det(H_II)/dH_{I_a I_b} = cofactor at (a, b) in the submatrix
        let m = idx.len();
        for a in 0..m {
            for b in 0..m {
                let rows: Vec<usize> = (0..m).filter(|&r| r != a).map(|r| idx[r]).collect();
                let cols: Vec<usize> = (0..m).filter(|&c| c != b).map(|c| idx[c]).collect();
                let sign = if (a + b) % 2 == 0 { 1.0 } else { -1.0 };
                let cof = sign * det_general(h, &rows, &cols);
                let (i, j) = (idx[a], idx[b]);
                out.set_raw(i, j, out.get(i, j) + cof);
            }
        }
    }
    Ok(out)
}

/// `F = S_k^{1/k}` and its gradient `F_ij = (1/k) S_k^{1/k-1} S_k^{ij}`.
/// Requires `S_k(H) > 0`.
pub fn f_and_grad(h: &SymMatrix, k: usize) -> Result<(f64, SymMatrix), SigmaError> {
    let sk = s_k(h, k)?;
    if sk <= 0.0 {
        return Err(SigmaError::OutsideCone {
            detail: format!("S_{k} = {sk:.3e} is not positive"),
        });
    }
    let f = sk.powf(1.0 / k as f64);
    let scale = sk.powf(1.0 / k as f64 - 1.0) / k as f64;
    let grad = s_k_grad(h, k)?.scale(scale);
    Ok((f, grad))
}

/// Residual of the degree-k homogeneity identity `Σ S_k^{ij} H_ij = k S_k`.
pub fn euler_identity_residual(h: &SymMatrix, k: usize) -> Result<f64, SigmaError> {
    let sk = s_k(h, k)?;
    let grad = s_k_grad(h, k)?;
    Ok((grad.inner(h) - k as f64 * sk).abs())
}

/// Maclaurin gap `(σ_{k-1}/C(n,k-1))^{1/(k-1)} - (σ_k/C(n,k))^{1/k}`,
/// nonnegative on `Γ_k`. For k = 1 the inequality degenerates; by convention
/// the mean `σ_1/n` is returned so the operation stays total over 1 ≤ k ≤ n.
pub fn maclaurin_gap(lambda: &Spectrum, k: usize) -> Result<f64, SigmaError> {
    let n = lambda.len();
    let verdict = in_gamma_k(lambda, k)?;
    if !verdict.inside {
        return Err(SigmaError::OutsideCone {
            detail: format!("margin {:.3e} for k = {k}", verdict.margin),
        });
    }
    if k == 1 {
        return Ok(sigma(lambda, 1)? / n as f64);
    }
    let mk1 = (sigma(lambda, k - 1)? / binomial(n, k - 1)).powf(1.0 / (k - 1) as f64);
    let mk = (sigma(lambda, k)? / binomial(n, k)).powf(1.0 / k as f64);
    Ok(mk1 - mk)
}

/// Leverage ratio `λ₁ σ_{k-1;1}(λ) / σ_k(λ)` of the largest eigenvalue
/// (the Chou–Wang lower bound asserts it stays above a positive constant
/// on `Γ_k`). Requires λ sorted descending with `σ_k(λ) > 0`.
pub fn chou_wang_ratio(lambda: &Spectrum, k: usize) -> Result<f64, SigmaError> {
    if !lambda.is_sorted_descending() {
        return Err(SigmaError::NotSorted);
    }
    let verdict = in_gamma_k(lambda, k)?;
    if !verdict.inside {
        return Err(SigmaError::OutsideCone {
            detail: format!("margin {:.3e} for k = {k}", verdict.margin),
        });
    }
    let sk = sigma(lambda, k)?;
    let restricted = sigma_restricted(lambda, k - 1, &[0])?;
    let l1 = lambda.values()[0];
    if k == 1 {
        // σ_{0;1} = 1 by convention
        return Ok(l1 / sk);
    }
    Ok(l1 * restricted / sk)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{random_gamma_k_spectrum, random_orthogonal, random_sym_matrix};
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(v: &[f64]) -> Spectrum {
        Spectrum::new(v.to_vec()).unwrap()
    }

    /// Brute-force oracle: sum over all l-subsets of products.
    fn sigma_enumeration(values: &[f64], l: usize) -> f64 {
        subsets(values.len(), l)
            .iter()
            .map(|idx| idx.iter().map(|&i| values[i]).product::<f64>())
            .sum()
    }

    #[test]
    fn sigma_hand_values() {
        assert_eq!(sigma(&spec(&[1.0, 1.0, 1.0]), 2).unwrap(), 3.0);
        assert_eq!(sigma(&spec(&[1.0, 2.0, 3.0]), 2).unwrap(), 11.0);
        assert_eq!(sigma(&spec(&[1.0, 2.0, 3.0]), 3).unwrap(), 6.0);
        assert_eq!(sigma(&spec(&[1.0, 2.0, 3.0]), 0).unwrap(), 1.0);
        assert!(matches!(
            sigma(&spec(&[1.0, 2.0]), 3),
            Err(SigmaError::OrderOutOfRange { .. })
        ));
    }

    #[test]
    fn sigma_matches_enumeration_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        for _ in 0..1000 {
            let v: Vec<f64> = (0..5).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let lam = spec(&v);
            for l in 0..=5 {
                let got = sigma(&lam, l).unwrap();
                let want = sigma_enumeration(&v, l);
                assert!(
                    (got - want).abs() <= 1e-12 * (1.0 + want.abs()),
                    "l={l} got={got} want={want}"
                );
            }
        }
    }

    #[test]
    fn restricted_hand_values() {
        let lam = spec(&[1.0, 2.0, 3.0]);
        assert_eq!(sigma_restricted(&lam, 2, &[0]).unwrap(), 6.0);
        assert_eq!(sigma_restricted(&lam, 1, &[1, 2]).unwrap(), 1.0);
        // repeated index in the excluded multiset
        assert_eq!(sigma_restricted(&lam, 2, &[1, 1]).unwrap(), 0.0);
        assert!(matches!(
            sigma_restricted(&lam, 2, &[7]),
            Err(SigmaError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn cone_hand_values() {
        let v = in_gamma_k(&spec(&[1.0, 1.0, 1.0]), 3).unwrap();
        assert!(v.inside);
        let v = in_gamma_k(&spec(&[3.0, 3.0, -1.0]), 2).unwrap();
        assert!(v.inside);
        assert_eq!(v.margin, 3.0); // min(σ₁=5, σ₂=3)
        let v = in_gamma_k(&spec(&[1.0, -2.0, 5.0]), 2).unwrap();
        assert!(!v.inside);
        assert_eq!(v.margin, -7.0);
        // verdict invariant: inside == (margin > 0)
        assert_eq!(v.inside, v.margin > 0.0);
    }

    #[test]
    fn cone_zero_margin_is_outside_open_cone() {
        let v = in_gamma_k(&spec(&[1.0, 0.0]), 2).unwrap();
        assert!(!v.inside);
        assert!(in_gamma_k_closure(&spec(&[1.0, 0.0]), 2, CONE_CLOSURE_TOL).unwrap());
    }

    #[test]
    fn s_k_hand_values() {
        let id3 = SymMatrix::identity(3).unwrap();
        assert_eq!(s_k(&id3, 2).unwrap(), 3.0);
        let d = SymMatrix::diagonal(&[1.0, 2.0]).unwrap();
        assert_eq!(s_k(&d, 2).unwrap(), 2.0);
    }

    #[test]
    fn s_k_matches_eigenvalue_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(2..=4);
            let h = random_sym_matrix(&mut rng, n, 2.0);
            let lam = h.spectrum();
            for k in 1..=n {
                let via_minors = s_k(&h, k).unwrap();
                let via_eigen = sigma(&lam, k).unwrap();
                assert!(
                    (via_minors - via_eigen).abs() <= 1e-10 * (1.0 + via_eigen.abs()),
                    "n={n} k={k}: {via_minors} vs {via_eigen}"
                );
            }
        }
    }

    #[test]
    fn grad_hand_values() {
        let d = SymMatrix::diagonal(&[1.0, 2.0]).unwrap();
        let g = s_k_grad(&d, 2).unwrap();
        assert_eq!(g.get(0, 0), 2.0);
        assert_eq!(g.get(1, 1), 1.0);
        assert_eq!(g.get(0, 1), 0.0);
        // S_1 = trace, so the gradient is the identity
        let h = SymMatrix::from_rows(3, &[1.0, 0.5, 0.0, 0.5, 2.0, -1.0, 0.0, -1.0, 0.3]).unwrap();
        let g1 = s_k_grad(&h, 1).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(g1.get(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    /// Central finite differences along symmetric basis directions.
    /// Perturbing the (i,j) pair for i≠j moves both entries, so the
    /// directional derivative equals S_k^{ij} + S_k^{ji} = 2 S_k^{ij}.
    fn grad_fd_check(h: &SymMatrix, k: usize, step: f64, tol: f64) {
        let n = h.dim();
        let g = s_k_grad(h, k).unwrap();
        let scale = 1.0 + (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .fold(0.0f64, |m, (i, j)| m.max(g.get(i, j).abs()));
        for i in 0..n {
            for j in 0..=i {
                let mut hp = *h;
                let mut hm = *h;
                hp.set_raw(i, j, h.get(i, j) + step);
                hm.set_raw(i, j, h.get(i, j) - step);
                if i != j {
                    hp.set_raw(j, i, h.get(j, i) + step);
                    hm.set_raw(j, i, h.get(j, i) - step);
                }
                let fd = (s_k(&hp, k).unwrap() - s_k(&hm, k).unwrap()) / (2.0 * step);
                let analytic = if i == j { g.get(i, i) } else { 2.0 * g.get(i, j) };
                assert!(
                    (fd - analytic).abs() <= tol * scale,
                    "k={k} entry ({i},{j}): fd={fd} analytic={analytic}"
                );
            }
        }
    }

    #[test]
    fn grad_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let n = rng.gen_range(2..=4);
            let h = random_sym_matrix(&mut rng, n, 2.0);
            for k in 1..=n {
                grad_fd_check(&h, k, 1e-5, 1e-6);
            }
        }
    }

    #[test]
    fn f_and_grad_hand_values() {
        let d = SymMatrix::diagonal(&[1.0, 2.0]).unwrap();
        let (f, g) = f_and_grad(&d, 2).unwrap();
        assert!((f - 2.0f64.sqrt()).abs() < 1e-15);
        let c = 1.0 / (2.0 * 2.0f64.sqrt());
        assert!((g.get(0, 0) - 2.0 * c).abs() < 1e-15);
        assert!((g.get(1, 1) - c).abs() < 1e-15);

        for n in 2..=4usize {
            for k in 1..=n {
                let (f, _) = f_and_grad(&SymMatrix::identity(n).unwrap(), k).unwrap();
                let want = binomial(n, k).powf(1.0 / k as f64);
                assert!((f - want).abs() < 1e-14, "n={n} k={k}");
            }
        }

        let neg = SymMatrix::diagonal(&[-1.0, -2.0]).unwrap();
        assert!(matches!(
            f_and_grad(&neg, 2),
            Err(SigmaError::OutsideCone { .. })
        ));
    }

    #[test]
    fn f_grad_matches_finite_differences_on_cone() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let mut found = 0;
        while found < 40 {
            let n = rng.gen_range(2..=4);
            let h = random_sym_matrix(&mut rng, n, 1.5);
            if s_k(&h, n).unwrap_or(-1.0) <= 0.1 {
                continue;
            }
            let lam = h.spectrum();
            for k in 1..=n {
                if !in_gamma_k(&lam, k).unwrap().inside {
                    continue;
                }
                let (_, g) = f_and_grad(&h, k).unwrap();
                let step = 1e-5;
                for i in 0..n {
                    for j in 0..=i {
                        let mut hp = h;
                        let mut hm = h;
                        hp.set_raw(i, j, h.get(i, j) + step);
                        hm.set_raw(i, j, h.get(i, j) - step);
                        if i != j {
                            hp.set_raw(j, i, h.get(j, i) + step);
                            hm.set_raw(j, i, h.get(j, i) - step);
                        }
                        let fp = f_and_grad(&hp, k).unwrap().0;
                        let fm = f_and_grad(&hm, k).unwrap().0;
                        let fd = (fp - fm) / (2.0 * step);
                        let analytic = if i == j { g.get(i, i) } else { 2.0 * g.get(i, j) };
                        assert!(
                            (fd - analytic).abs() <= 1e-6 * (1.0 + analytic.abs()),
                            "n={n} k={k} ({i},{j}): {fd} vs {analytic}"
                        );
                    }
                }
            }
            found += 1;
        }
    }

    #[test]
    fn euler_identity_hand_and_sweep() {
        let d = SymMatrix::diagonal(&[1.0, 2.0]).unwrap();
        assert_eq!(euler_identity_residual(&d, 2).unwrap(), 0.0);
        let z = SymMatrix::zero(3).unwrap();
        for k in 1..=3 {
            assert_eq!(euler_identity_residual(&z, k).unwrap(), 0.0);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..1000 {
            let n = rng.gen_range(2..=4);
            let h = random_sym_matrix(&mut rng, n, 3.0);
            for k in 1..=n {
                let res = euler_identity_residual(&h, k).unwrap();
                let sk = s_k(&h, k).unwrap();
                assert!(res <= 1e-10 * (1.0 + sk.abs()), "n={n} k={k} res={res:.3e}");
            }
        }
    }

    #[test]
    fn maclaurin_hand_values() {
        let ones = spec(&[1.0, 1.0, 1.0]);
        assert!(maclaurin_gap(&ones, 2).unwrap().abs() < 1e-15);
        assert!(maclaurin_gap(&ones, 3).unwrap().abs() < 1e-15);

        let lam = spec(&[1.0, 2.0, 3.0]);
        let gap = maclaurin_gap(&lam, 2).unwrap();
        let want = 2.0 - (11.0f64 / 3.0).sqrt();
        assert!((gap - want).abs() < 1e-12);

        // k = 1 convention: the mean
        assert!((maclaurin_gap(&lam, 1).unwrap() - 2.0).abs() < 1e-15);

        assert!(matches!(
            maclaurin_gap(&spec(&[1.0, -2.0, 5.0]), 2),
            Err(SigmaError::OutsideCone { .. })
        ));
    }

    #[test]
    fn maclaurin_nonnegative_on_cone_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..1000 {
            let n = rng.gen_range(2..=4);
            let k = rng.gen_range(1..=n);
            let lam = random_gamma_k_spectrum(&mut rng, n, k);
            let gap = maclaurin_gap(&lam, k).unwrap();
            assert!(gap >= -1e-12, "gap={gap:.3e} for {:?} k={k}", lam.values());
        }
    }

    #[test]
    fn chou_wang_hand_values() {
        assert!((chou_wang_ratio(&spec(&[1.0, 1.0, 1.0]), 2).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((chou_wang_ratio(&spec(&[1.0, 1.0]), 2).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            chou_wang_ratio(&spec(&[1.0, 2.0]), 2),
            Err(SigmaError::NotSorted)
        ));
    }

    #[test]
    fn chou_wang_positive_infimum_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let mut inf = f64::INFINITY;
        for _ in 0..100_000 {
            let lam = random_gamma_k_spectrum(&mut rng, 3, 2).sorted_descending();
            let ratio = chou_wang_ratio(&lam, 2).unwrap();
            assert!(ratio > 0.0);
            inf = inf.min(ratio);
        }
        // measured lower bound for (n, k) = (3, 2); must stay positive
        assert!(inf > 0.0, "measured infimum {inf}");
        assert!(inf < 1.0, "sampling should find ratios below 1, got {inf}");
    }

    #[test]
    fn diagonal_derivatives_are_restricted_sigmas() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for _ in 0..300 {
            let n = rng.gen_range(2..=4);
            let k = rng.gen_range(1..=n);
            let lam = random_gamma_k_spectrum(&mut rng, n, k);
            let h = SymMatrix::diagonal(lam.values()).unwrap();
            let g = s_k_grad(&h, k).unwrap();
            for i in 0..n {
                let want = if k == 1 {
                    1.0
                } else {
                    sigma_restricted(&lam, k - 1, &[i]).unwrap()
                };
                assert!(
                    (g.get(i, i) - want).abs() <= 1e-12 * (1.0 + want.abs()),
                    "S_k^{{{i}{i}}} = {} vs σ_{{k-1;{i}}} = {want}",
                    g.get(i, i)
                );
                assert!(g.get(i, i) > 0.0, "diagonal derivative must be positive on Γ_k");
            }
        }
    }

    #[test]
    fn orthogonal_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..200 {
            let n = rng.gen_range(2..=4);
            let h = random_sym_matrix(&mut rng, n, 2.0);
            let q = random_orthogonal(&mut rng, n);
            let rotated = SymMatrix::from_fn(n, |i, j| {
                let mut acc = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        acc += q[(a, i)] * h.get(a, b) * q[(b, j)];
                    }
                }
                acc
            })
            .unwrap();
            for k in 1..=n {
                let s0 = s_k(&h, k).unwrap();
                let s1 = s_k(&rotated, k).unwrap();
                assert!(
                    (s0 - s1).abs() <= 1e-10 * (1.0 + s0.abs()),
                    "n={n} k={k}: {s0} vs {s1}"
                );
            }
        }
    }

    #[test]
    fn f_concavity_on_cone() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let mut tested = 0;
        while tested < 500 {
            let n = rng.gen_range(2..=3);
            let k = rng.gen_range(1..=n);
            let h1 = random_sym_matrix(&mut rng, n, 1.5);
            let h2 = random_sym_matrix(&mut rng, n, 1.5);
            let ok = |h: &SymMatrix| in_gamma_k(&h.spectrum(), k).map(|v| v.inside).unwrap_or(false);
            if !ok(&h1) || !ok(&h2) {
                continue;
            }
            let theta: f64 = rng.gen_range(0.05..0.95);
            let mid = h1.scale(theta).add(&h2.scale(1.0 - theta));
            let f_mid = f_and_grad(&mid, k).unwrap().0;
            let f1 = f_and_grad(&h1, k).unwrap().0;
            let f2 = f_and_grad(&h2, k).unwrap().0;
            assert!(
                f_mid >= theta * f1 + (1.0 - theta) * f2 - 1e-10,
                "concavity violated: n={n} k={k} θ={theta}"
            );
            tested += 1;
        }
    }

    proptest! {
        #[test]
        fn sigma_permutation_invariant(
            v in proptest::collection::vec(-3.0f64..3.0, 2..=6),
            shift in 0usize..6,
        ) {
            let n = v.len();
            let lam = spec(&v);
            let mut w = v.clone();
            w.rotate_left(shift % n);
            let perm = spec(&w);
            for l in 0..=n {
                let a = sigma(&lam, l).unwrap();
                let b = sigma(&perm, l).unwrap();
                prop_assert!((a - b).abs() <= 1e-14 * (1.0 + a.abs()));
            }
        }

        #[test]
        fn split_identity(
            v in proptest::collection::vec(-3.0f64..3.0, 2..=6),
            i in 0usize..6,
            l in 1usize..6,
        ) {
            let n = v.len();
            let i = i % n;
            let l = 1 + (l % n);
            let lam = spec(&v);
            // σ_l(λ) = σ_{l;i}(λ) + λ_i σ_{l-1;i}(λ)
            let lhs = sigma(&lam, l).unwrap();
            let a = sigma_restricted(&lam, l, &[i]).unwrap();
            let b = if l == 1 { 1.0 } else { sigma_restricted(&lam, l - 1, &[i]).unwrap() };
            let rhs = a + v[i] * b;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }
}
