//! Finite block Toeplitz sections and their triangular dressings.
//!
//! * right section: block `(i, j) = γ^(i-j)`
//! * left section:  block `(i, j) = γ^(j-i)`
//!
//! The left section factors as `T^l = S1⁻¹ S2` and the right one as
//! `T^r = Z2 Z1⁻¹`, with `S1`, `Z2` unit block-lower-triangular. Both come
//! from block Gaussian elimination without pivoting; a vanishing pivot is
//! reported, never repaired.

use crate::error::{Error, Result};
use crate::laurent::{MatrixLaurentSeries, Side};
use crate::linalg::{block, identity, inverse, op_norm, set_block, sigma_min, solve, zeros, CMat};

/// A pivot block is singular when `σ_min < SINGULAR_RTOL · ‖section‖`.
pub const SINGULAR_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockToeplitzSection {
    n: usize,
    size: usize,
    side: Side,
    data: CMat,
}

impl BlockToeplitzSection {
    pub fn block_size(&self) -> usize {
        self.n
    }

    /// Number of block rows (and columns).
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn matrix(&self) -> &CMat {
        &self.data
    }

    pub fn block(&self, i: usize, j: usize) -> CMat {
        block(&self.data, i, j, self.n)
    }

    /// Spectral norm of the whole section.
    pub fn norm(&self) -> f64 {
        op_norm(&self.data)
    }
}

/// `size x size` block section of `T^r(γ)` or `T^l(γ)`.
pub fn section(gamma: &MatrixLaurentSeries, size: usize, side: Side) -> Result<BlockToeplitzSection> {
    let reach = size.saturating_sub(1) as i64;
    gamma.require_band(-reach, reach)?;
    let n = gamma.block_size();
    let mut data = zeros(size * n, size * n);
    for i in 0..size {
        for j in 0..size {
            let k = match side {
                Side::Right => i as i64 - j as i64,
                Side::Left => j as i64 - i as i64,
            };
            if let Some(c) = gamma.coeff_ref(k) {
                set_block(&mut data, i, j, c);
            }
        }
    }
    Ok(BlockToeplitzSection { n, size, side, data })
}

/// `D - C A⁻¹ B` for `M = [[A, B], [C, D]]`, with `A` the leading `split x split` part.
pub fn schur_complement(m: &CMat, split: usize) -> Result<CMat> {
    if m.nrows() != m.ncols() || split > m.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "cannot split a {}x{} matrix at {split}",
            m.nrows(),
            m.ncols()
        )));
    }
    let rest = m.nrows() - split;
    let d = m.view((split, split), (rest, rest)).into_owned();
    if split == 0 {
        return Ok(d);
    }
    let a = m.view((0, 0), (split, split)).into_owned();
    let b = m.view((0, split), (split, rest)).into_owned();
    let c = m.view((split, 0), (rest, split)).into_owned();
    let smin = sigma_min(&a);
    if smin < SINGULAR_RTOL * op_norm(m).max(f64::MIN_POSITIVE) {
        return Err(Error::SingularLeadingBlock { sigma_min: smin });
    }
    Ok(d - c * solve(&a, &b)?)
}

/// Triangular factors of a section.
///
/// For `Side::Left`, `unit_lower = S1` and `upper = S2` with `T^l = S1⁻¹ S2`.
/// For `Side::Right`, `unit_lower = Z2` and `upper = Z1` with `T^r = Z2 Z1⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct DressingPair {
    side: Side,
    n: usize,
    size: usize,
    unit_lower: CMat,
    upper: CMat,
    pivots: Vec<CMat>,
}

impl DressingPair {
    pub fn side(&self) -> Side {
        self.side
    }

    pub fn block_size(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// `S1` (left) or `Z2` (right).
    pub fn unit_lower(&self) -> &CMat {
        &self.unit_lower
    }

    /// `S2` (left) or `Z1` (right).
    pub fn upper(&self) -> &CMat {
        &self.upper
    }

    /// Elimination pivots; they equal the h-values of the section's side.
    ///
    /// For the left side these are the diagonal blocks of `S2`; for the right
    /// side they are the diagonal blocks of `Z1⁻¹`, i.e. `(Z1)_kk⁻¹`.
    pub fn pivots(&self) -> &[CMat] {
        &self.pivots
    }

    /// Multiply the factors back together.
    pub fn reconstruct(&self) -> Result<CMat> {
        match self.side {
            Side::Left => Ok(unit_lower_inverse(&self.unit_lower, self.n) * &self.upper),
            Side::Right => Ok(&self.unit_lower * block_upper_inverse(&self.upper, self.n)?),
        }
    }
}

/// Inverse of a unit block-lower-triangular matrix by forward substitution.
pub fn unit_lower_inverse(l: &CMat, n: usize) -> CMat {
    let size = l.nrows() / n;
    let mut inv = identity(size * n);
    for i in 0..size {
        for j in 0..i {
            // (L⁻¹)_ij = -Σ_{k=j}^{i-1} L_ik (L⁻¹)_kj
            let mut acc = zeros(n, n);
            for k in j..i {
                acc -= block(l, i, k, n) * block(&inv, k, j, n);
            }
            set_block(&mut inv, i, j, &acc);
        }
    }
    inv
}

/// Inverse of a block-upper-triangular matrix with nonsingular diagonal blocks.
pub fn block_upper_inverse(u: &CMat, n: usize) -> Result<CMat> {
    let size = u.nrows() / n;
    let mut inv = zeros(size * n, size * n);
    let mut diag_inv = Vec::with_capacity(size);
    for k in 0..size {
        diag_inv.push(inverse(&block(u, k, k, n)).map_err(|_| Error::SingularDressing(k))?);
    }
    for j in 0..size {
        set_block(&mut inv, j, j, &diag_inv[j]);
        for i in (0..j).rev() {
            // (U⁻¹)_ij = -U_ii⁻¹ Σ_{k=i+1}^{j} U_ik (U⁻¹)_kj
            let mut acc = zeros(n, n);
            for k in i + 1..=j {
                acc += block(u, i, k, n) * block(&inv, k, j, n);
            }
            set_block(&mut inv, i, j, &(-&diag_inv[i] * acc));
        }
    }
    Ok(inv)
}

/// Block LU without pivoting: `M = L U`, `L` unit block-lower.
fn block_lu(m: &CMat, n: usize, scale: f64) -> Result<(CMat, CMat, Vec<CMat>)> {
    let size = m.nrows() / n;
    let mut l = identity(size * n);
    let mut u = m.clone();
    let mut pivots = Vec::with_capacity(size);
    for k in 0..size {
        let piv = block(&u, k, k, n);
        if sigma_min(&piv) < SINGULAR_RTOL * scale {
            return Err(Error::FactorizationDegenerate(k));
        }
        let piv_inv = inverse(&piv).map_err(|_| Error::FactorizationDegenerate(k))?;
        for i in k + 1..size {
            let f = block(&u, i, k, n) * &piv_inv;
            set_block(&mut l, i, k, &f);
            let row_k = u.view((k * n, 0), (n, size * n)).into_owned();
            let mut row_i = u.view_mut((i * n, 0), (n, size * n));
            row_i -= &f * row_k;
            // exact zero below the pivot
            set_block(&mut u, i, k, &zeros(n, n));
        }
        pivots.push(piv);
    }
    Ok((l, u, pivots))
}

/// Normalized triangular factorization of a section.
pub fn block_factorize(sec: &BlockToeplitzSection) -> Result<DressingPair> {
    let n = sec.block_size();
    let scale = sec.norm().max(f64::MIN_POSITIVE);
    let (l, u, pivots) = block_lu(sec.matrix(), n, scale)?;
    let (unit_lower, upper) = match sec.side() {
        // T^l = L U = S1⁻¹ S2
        Side::Left => (unit_lower_inverse(&l, n), u),
        // T^r = L U = Z2 Z1⁻¹
        Side::Right => {
            let z1 = block_upper_inverse(&u, n).map_err(|e| match e {
                Error::SingularDressing(k) => Error::FactorizationDegenerate(k),
                other => other,
            })?;
            (l, z1)
        }
    };
    Ok(DressingPair {
        side: sec.side(),
        n,
        size: sec.size(),
        unit_lower,
        upper,
        pivots,
    })
}

/// `h_k = SC(T_{k+1})` for `k = 0 ..= n_max`.
pub fn h_values(gamma: &MatrixLaurentSeries, n_max: usize, side: Side) -> Result<Vec<CMat>> {
    let n = gamma.block_size();
    let full = section(gamma, n_max + 1, side)?;
    (0..=n_max)
        .map(|k| {
            let sub = full.matrix().view((0, 0), ((k + 1) * n, (k + 1) * n)).into_owned();
            schur_complement(&sub, k * n)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dist;
    use num_complex::Complex64;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    fn derived() -> MatrixLaurentSeries {
        MatrixLaurentSeries::scalar(-1, &[0.2, 1.0, 0.2]).unwrap()
    }

    fn nilpotent_symbol() -> MatrixLaurentSeries {
        let b = CMat::from_row_slice(2, 2, &[c(0.0), c(0.3), c(0.0), c(0.0)]);
        MatrixLaurentSeries::from_terms(2, &[(0, identity(2)), (-1, b)]).unwrap()
    }

    #[test]
    fn identity_symbol_sections_are_identity() {
        let g = MatrixLaurentSeries::identity(2);
        for side in [Side::Left, Side::Right] {
            let s = section(&g.widened(-2, 2), 3, side).unwrap();
            assert_eq!(*s.matrix(), identity(6));
            let d = block_factorize(&s).unwrap();
            assert_eq!(*d.unit_lower(), identity(6));
            assert_eq!(*d.upper(), identity(6));
        }
    }

    #[test]
    fn scalar_left_section() {
        let s = section(&derived(), 2, Side::Left).unwrap();
        let expect = CMat::from_row_slice(2, 2, &[c(1.0), c(0.2), c(0.2), c(1.0)]);
        assert_eq!(*s.matrix(), expect);
    }

    #[test]
    fn nilpotent_left_section_has_b_below_diagonal() {
        let g = nilpotent_symbol();
        let s = section(&g.widened(-1, 1), 2, Side::Left).unwrap();
        assert_eq!(s.block(0, 0), identity(2));
        assert_eq!(s.block(0, 1), zeros(2, 2));
        assert_eq!(s.block(1, 0), g.coeff(-1));
        assert_eq!(s.block(1, 1), identity(2));
    }

    #[test]
    fn section_requires_band() {
        assert!(matches!(
            section(&derived(), 3, Side::Left),
            Err(Error::BandTooNarrow { .. })
        ));
    }

    #[test]
    fn schur_complement_examples() {
        let m = CMat::from_row_slice(2, 2, &[c(1.0), c(0.2), c(0.2), c(1.0)]);
        assert!((schur_complement(&m, 1).unwrap()[(0, 0)] - c(0.96)).norm() < 1e-15);

        let mut bd = zeros(4, 4);
        bd[(0, 0)] = c(2.0);
        bd[(1, 1)] = c(3.0);
        bd[(2, 2)] = c(5.0);
        bd[(3, 3)] = c(7.0);
        bd[(2, 3)] = c(1.0);
        let sc = schur_complement(&bd, 2).unwrap();
        assert_eq!(sc, bd.view((2, 2), (2, 2)).into_owned());

        assert_eq!(schur_complement(&identity(5), 3).unwrap(), identity(2));
    }

    #[test]
    fn schur_complement_singular_leading_block() {
        let m = CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(1.0)]);
        assert!(matches!(
            schur_complement(&m, 1),
            Err(Error::SingularLeadingBlock { .. })
        ));
    }

    #[test]
    fn scalar_factorization_pivots() {
        let s = section(&derived(), 2, Side::Left).unwrap();
        let d = block_factorize(&s).unwrap();
        assert!((d.upper()[(0, 0)] - c(1.0)).norm() < 1e-15);
        assert!((d.upper()[(1, 1)] - c(0.96)).norm() < 1e-15);
        assert!(dist(&d.reconstruct().unwrap(), s.matrix()) < 1e-15);
    }

    #[test]
    fn vanishing_first_minor_is_degenerate() {
        let g = MatrixLaurentSeries::scalar(-1, &[1.0, 0.0, 1.0]).unwrap();
        let s = section(&g, 2, Side::Left).unwrap();
        assert_eq!(block_factorize(&s), Err(Error::FactorizationDegenerate(0)));
    }

    #[test]
    fn h_values_derived_symbol() {
        let g = derived().widened(-2, 2);
        for side in [Side::Left, Side::Right] {
            let h = h_values(&g, 2, side).unwrap();
            assert!((h[0][(0, 0)] - c(1.0)).norm() < 1e-15);
            assert!((h[1][(0, 0)] - c(0.96)).norm() < 1e-15);
            assert!((h[2][(0, 0)] - c(0.96 * 575.0 / 576.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn h_values_identity_and_nilpotent() {
        let g = MatrixLaurentSeries::identity(3).widened(-3, 3);
        for h in h_values(&g, 3, Side::Right).unwrap() {
            assert_eq!(h, identity(3));
        }
        let g = nilpotent_symbol().widened(-1, 1);
        let h = h_values(&g, 1, Side::Left).unwrap();
        assert!(dist(&h[0], &identity(2)) < 1e-15);
        assert!(dist(&h[1], &identity(2)) < 1e-15);
    }

    #[test]
    fn right_pivots_are_inverse_z1_diagonal() {
        let g = MatrixLaurentSeries::scalar(-2, &[0.05, 0.3, 1.0, -0.1, 0.15]).unwrap();
        let s = section(&g.widened(-3, 3), 4, Side::Right).unwrap();
        let d = block_factorize(&s).unwrap();
        let h = h_values(&g.widened(-3, 3), 3, Side::Right).unwrap();
        for k in 0..4 {
            let z1kk = block(d.upper(), k, k, 1);
            assert!(dist(&inverse(&z1kk).unwrap(), &h[k]) < 1e-14);
            assert!(dist(&d.pivots()[k], &h[k]) < 1e-14);
        }
        assert!(dist(&d.reconstruct().unwrap(), s.matrix()) < 1e-14);
    }
}
