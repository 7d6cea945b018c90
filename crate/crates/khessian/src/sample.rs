//! Seeded sampling utilities for the randomized sweeps.
//!
//! Every sweep in the crate draws from a `ChaCha8Rng` with an explicit seed,
//! so reported numbers replay exactly. Cone points come from rejection
//! sampling on the box `[-1, 3]^n`, which straddles `Γ_k` and its complement.

use crate::sigma::{in_gamma_k, Spectrum, SymMatrix};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Sampling box for cone rejection sampling.
pub const GAMMA_BOX: (f64, f64) = (-1.0, 3.0);

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Rejection-samples a spectrum from `[-1, 3]^n ∩ Γ_k`.
pub fn random_gamma_k_spectrum(rng: &mut impl Rng, n: usize, k: usize) -> Spectrum {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(GAMMA_BOX.0..GAMMA_BOX.1)).collect();
        let lam = Spectrum::new(v).unwrap();
        if in_gamma_k(&lam, k).unwrap().inside {
            return lam;
        }
    }
}

/// Random symmetric matrix with entries uniform in `[-scale, scale]`.
pub fn random_sym_matrix(rng: &mut impl Rng, n: usize, scale: f64) -> SymMatrix {
    SymMatrix::from_fn(n, |_, _| rng.gen_range(-scale..scale)).unwrap()
}

/// Random symmetric matrix whose spectrum lies in `Γ_k` (rejection).
pub fn random_gamma_k_matrix(rng: &mut impl Rng, n: usize, k: usize, scale: f64) -> SymMatrix {
    loop {
        let h = random_sym_matrix(rng, n, scale);
        if in_gamma_k(&h.spectrum(), k).unwrap().inside {
            return h;
        }
    }
}

/// Random orthogonal matrix via QR of a Gaussian matrix.
pub fn random_orthogonal(rng: &mut impl Rng, n: usize) -> nalgebra::DMatrix<f64> {
    let g = nalgebra::DMatrix::from_fn(n, n, |_, _| {
        <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
    });
    let qr = g.qr();
    qr.q()
}

/// Random unit vector in `R^n`.
pub fn random_unit_vector(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n)
            .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
            .collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}

/// Direction set for ξ-maxima: the n axis directions plus `extra` seeded
/// random unit vectors. Axis directions catch the diagonalized worst case;
/// the fixed seed keeps the supremum reproducible.
pub fn direction_set(n: usize, extra: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut dirs = Vec::with_capacity(n + extra);
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        dirs.push(e);
    }
    let mut rng = rng_from_seed(seed);
    for _ in 0..extra {
        dirs.push(random_unit_vector(&mut rng, n));
    }
    dirs
}

/// Number of extra random directions used by the estimate sweeps.
pub const EXTRA_DIRECTIONS: usize = 64;
