//! Dense complex matrix helpers shared by every module.
//!
//! Block matrices are stored as plain `DMatrix` values of size `(N n) x (N n)`;
//! block `(i, j)` is the `n x n` view starting at `(i n, j n)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;

pub fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

pub fn cone() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

/// Spectral (operator 2-) norm.
pub fn op_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if m.nrows() == 1 || m.ncols() == 1 {
        return m.norm();
    }
    m.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

pub fn sigma_min(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if m.nrows() == 1 && m.ncols() == 1 {
        return m[(0, 0)].norm();
    }
    m.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// `op_norm(a - b)`.
pub fn dist(a: &CMat, b: &CMat) -> f64 {
    op_norm(&(a - b))
}

pub fn block(m: &CMat, i: usize, j: usize, n: usize) -> CMat {
    m.view((i * n, j * n), (n, n)).into_owned()
}

pub fn set_block(m: &mut CMat, i: usize, j: usize, b: &CMat) {
    let n = b.nrows();
    m.view_mut((i * n, j * n), (n, b.ncols())).copy_from(b);
}

/// Inverse of a square matrix, failing on numerical singularity.
pub fn inverse(m: &CMat) -> Result<CMat> {
    let tol = 1e-14 * op_norm(m).max(f64::MIN_POSITIVE);
    if sigma_min(m) <= tol {
        return Err(Error::SingularLeadingBlock {
            sigma_min: sigma_min(m),
        });
    }
    m.clone()
        .try_inverse()
        .ok_or(Error::SingularLeadingBlock { sigma_min: 0.0 })
}

/// Solve `a x = b` by partially pivoted LU.
pub fn solve(a: &CMat, b: &CMat) -> Result<CMat> {
    a.clone()
        .lu()
        .solve(b)
        .ok_or(Error::SingularLeadingBlock { sigma_min: 0.0 })
}

/// Stack blocks horizontally.
pub fn hcat(blocks: &[CMat]) -> CMat {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        out.view_mut((0, c), (rows, b.ncols())).copy_from(b);
        c += b.ncols();
    }
    out
}

/// Stack blocks vertically.
pub fn vcat(blocks: &[CMat]) -> CMat {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        out.view_mut((r, 0), (b.nrows(), cols)).copy_from(b);
        r += b.nrows();
    }
    out
}

/// Assemble a 2x2 block matrix.
pub fn block2(a: &CMat, b: &CMat, c: &CMat, d: &CMat) -> CMat {
    vcat(&[hcat(&[a.clone(), b.clone()]), hcat(&[c.clone(), d.clone()])])
}

/// Conjugate transpose.
pub fn dagger(m: &CMat) -> CMat {
    m.adjoint()
}

pub fn scalar(v: Complex64, n: usize) -> CMat {
    CMat::from_diagonal_element(n, n, v)
}
