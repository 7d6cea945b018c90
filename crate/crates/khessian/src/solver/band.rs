//! Banded LU factorization with partial pivoting.
//!
//! The Newton systems couple each interior node to its spatial stencil, so
//! under lexicographic numbering the Jacobian is banded with bandwidth about
//! one lattice plane. LAPACK-style storage with `kl` extra superdiagonal
//! rows absorbs pivoting fill-in.

/// Band matrix prepared for in-place factorization.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    /// column-major: entry A(i, j) at `ab[j * ldab + (kl + ku + i - j)]`
    ab: Vec<f64>,
}

impl BandMatrix {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            ldab,
            ab: vec![0.0; ldab * n.max(1)],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        debug_assert!(j as i64 - i as i64 <= self.ku as i64 + self.kl as i64);
        debug_assert!(i as i64 - j as i64 <= self.kl as i64);
        j * self.ldab + (self.kl + self.ku + i - j)
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let p = self.idx(i, j);
        self.ab[p] += v;
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let di = i as i64 - j as i64;
        if di > self.kl as i64 || -di > (self.ku + self.kl) as i64 {
            return 0.0;
        }
        self.ab[self.idx(i, j)]
    }

    /// Factors in place and solves `A x = b`, overwriting `b` with `x`.
    pub fn solve_in_place(mut self, b: &mut [f64]) -> Result<(), String> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        if n == 0 {
            return Ok(());
        }
        let (kl, kv) = (self.kl, self.kl + self.ku);
        let mut pivots = vec![0usize; n];

        for j in 0..n {
            let imax = (j + kl).min(n - 1);
            // pivot search in column j
            let mut ip = j;
            let mut best = self.ab[self.idx(j, j)].abs();
            for i in (j + 1)..=imax {
                let v = self.ab[self.idx(i, j)].abs();
                if v > best {
                    best = v;
                    ip = i;
                }
            }
            pivots[j] = ip;
            if best == 0.0 || !best.is_finite() {
                return Err(format!("singular pivot at column {j}"));
            }
            if ip != j {
                let cmax = (j + kv).min(n - 1);
                for c in j..=cmax {
                    let a = self.idx(j, c);
                    let bidx = self.idx(ip, c);
                    self.ab.swap(a, bidx);
                }
            }
            let diag = self.ab[self.idx(j, j)];
            for i in (j + 1)..=imax {
                let l = self.ab[self.idx(i, j)] / diag;
                let li = self.idx(i, j);
                self.ab[li] = l;
                if l != 0.0 {
                    let cmax = (j + kv).min(n - 1);
                    for c in (j + 1)..=cmax {
                        let jc = self.ab[self.idx(j, c)];
                        let ic = self.idx(i, c);
                        self.ab[ic] -= l * jc;
                    }
                }
            }
        }

        // forward substitution with the stored multipliers
        for j in 0..n {
            if pivots[j] != j {
                b.swap(j, pivots[j]);
            }
            let bj = b[j];
            if bj != 0.0 {
                let imax = (j + kl).min(n - 1);
                for i in (j + 1)..=imax {
                    b[i] -= self.ab[self.idx(i, j)] * bj;
                }
            }
        }
        // back substitution
        for j in (0..n).rev() {
            b[j] /= self.ab[self.idx(j, j)];
            let bj = b[j];
            if bj != 0.0 {
                let imin = j.saturating_sub(kv);
                for i in imin..j {
                    b[i] -= self.ab[self.idx(i, j)] * bj;
                }
            }
        }
        Ok(())
    }
}
