//! Reproducible test symbols.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::laurent::MatrixLaurentSeries;
use crate::linalg::{identity, op_norm, CMat};

/// Off-diagonal weight of random symbols.
pub const SAMPLE_EPS: f64 = 0.2;
/// Random symbols carry powers `z^k` for `0 < |k| <= SAMPLE_REACH`.
pub const SAMPLE_REACH: i64 = 2;

/// `γ(z) = I + Σ_{0<|k|≤2} ε A_k z^k` with complex `A_k`, `‖A_k‖ = 1`, `ε = 0.2`.
///
/// `Σ ε‖A_k‖ = 0.8 < 1`, so every section is strictly diagonally dominant in
/// the block sense and all leading minors are nonsingular.
pub fn random_symbol(n: usize, seed: u64) -> MatrixLaurentSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms = vec![(0, identity(n))];
    for k in -SAMPLE_REACH..=SAMPLE_REACH {
        if k == 0 {
            continue;
        }
        let a = CMat::from_fn(n, n, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let norm = op_norm(&a).max(f64::MIN_POSITIVE);
        terms.push((k, a * Complex64::new(SAMPLE_EPS / norm, 0.0)));
    }
    MatrixLaurentSeries::from_terms(n, &terms).expect("blocks are n x n")
}

/// `1 + 0.2 (z + z⁻¹)` with band widened to `[-reach, reach]`.
pub fn tridiagonal_scalar(reach: usize) -> MatrixLaurentSeries {
    let r = reach.max(1) as i64;
    MatrixLaurentSeries::scalar(-1, &[0.2, 1.0, 0.2])
        .expect("non-empty")
        .widened(-r, r)
}
