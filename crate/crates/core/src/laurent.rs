//! Matrix-valued Laurent series and matrix polynomials.
//!
//! A symbol `γ(z) = Σ γ^(k) z^k` is stored as a dense band of `n x n` blocks.
//! Products are direct block convolutions; bands stay small enough (tens of
//! exponents) that a transform-based product would buy nothing.
//!
//! Time evolution of a symbol follows
//! `γ(t, s; z) = exp(-ξ(s, z⁻¹)) γ(z) exp(ξ(t, z))` with `ξ(t, z) = Σ t_i z^i`.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{czero, identity, op_norm, zeros, CMat};

/// Relative floor on the dropped tail of a truncated exponential factor.
pub const TRUNCATION_FLOOR: f64 = 1e-16;

/// Default truncation order of the exponential factors (enough for |t_i| <= 1).
pub const DEFAULT_ORDER: usize = 25;

/// Which pairing / Toeplitz orientation an object belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "l",
            Side::Right => "r",
        })
    }
}

/// Finitely supported flow times `t_1, ..., t_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeVector(Vec<Complex64>);

impl TimeVector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument(
                "time vector needs at least one entry".into(),
            ));
        }
        Ok(TimeVector(entries))
    }

    pub fn zero() -> Self {
        TimeVector(vec![czero()])
    }

    /// Only `t_1` set.
    pub fn first(t1: f64) -> Self {
        TimeVector(vec![Complex64::new(t1, 0.0)])
    }

    pub fn from_real(entries: &[f64]) -> Result<Self> {
        Self::new(entries.iter().map(|&t| Complex64::new(t, 0.0)).collect())
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|t| *t == czero())
    }

    /// Majorant `Σ |t_i|`.
    pub fn abs_sum(&self) -> f64 {
        self.0.iter().map(|t| t.norm()).sum()
    }

    pub fn neg(&self) -> Self {
        TimeVector(self.0.iter().map(|t| -t).collect())
    }

    pub fn add(&self, other: &TimeVector) -> Self {
        let m = self.0.len().max(other.0.len());
        let get = |v: &[Complex64], i: usize| v.get(i).copied().unwrap_or_else(czero);
        TimeVector((0..m).map(|i| get(&self.0, i) + get(&other.0, i)).collect())
    }
}

/// Banded matrix Laurent series.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixLaurentSeries {
    n: usize,
    k_min: i64,
    coeffs: Vec<CMat>,
}

impl MatrixLaurentSeries {
    /// Build from a contiguous band starting at exponent `k_min`.
    pub fn new(n: usize, k_min: i64, coeffs: Vec<CMat>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("block size must be positive".into()));
        }
        if coeffs.is_empty() {
            return Err(Error::InvalidArgument("empty coefficient band".into()));
        }
        if let Some(bad) = coeffs.iter().position(|c| c.nrows() != n || c.ncols() != n) {
            return Err(Error::DimensionMismatch(format!(
                "coefficient {} is not {n}x{n}",
                k_min + bad as i64
            )));
        }
        Ok(MatrixLaurentSeries { n, k_min, coeffs })
    }

    /// Build from `(exponent, block)` pairs; missing exponents inside the band are zero.
    /// The band always contains exponent 0.
    pub fn from_terms(n: usize, terms: &[(i64, CMat)]) -> Result<Self> {
        let lo = terms.iter().map(|t| t.0).min().unwrap_or(0).min(0);
        let hi = terms.iter().map(|t| t.0).max().unwrap_or(0).max(0);
        let mut coeffs = vec![zeros(n, n); (hi - lo + 1) as usize];
        for (k, c) in terms {
            if c.nrows() != n || c.ncols() != n {
                return Err(Error::DimensionMismatch(format!("coefficient {k} is not {n}x{n}")));
            }
            coeffs[(k - lo) as usize] += c;
        }
        Self::new(n, lo, coeffs)
    }

    pub fn identity(n: usize) -> Self {
        MatrixLaurentSeries {
            n,
            k_min: 0,
            coeffs: vec![identity(n)],
        }
    }

    /// Scalar (`n = 1`) symbol from real coefficients, `coeffs[i]` at exponent `k_min + i`.
    pub fn scalar(k_min: i64, coeffs: &[f64]) -> Result<Self> {
        let blocks = coeffs
            .iter()
            .map(|&c| CMat::from_element(1, 1, Complex64::new(c, 0.0)))
            .collect();
        Self::new(1, k_min, blocks)
    }

    pub fn block_size(&self) -> usize {
        self.n
    }

    /// Inclusive exponent range `[k_min, k_max]`.
    pub fn band(&self) -> (i64, i64) {
        (self.k_min, self.k_min + self.coeffs.len() as i64 - 1)
    }

    pub fn coeff(&self, k: i64) -> CMat {
        self.coeff_ref(k).cloned().unwrap_or_else(|| zeros(self.n, self.n))
    }

    pub fn coeff_ref(&self, k: i64) -> Option<&CMat> {
        let idx = k - self.k_min;
        if idx < 0 {
            return None;
        }
        self.coeffs.get(idx as usize)
    }

    /// Fail unless the band covers `[lo, hi]`.
    pub fn require_band(&self, lo: i64, hi: i64) -> Result<()> {
        let (have_lo, have_hi) = self.band();
        if have_lo > lo || have_hi < hi {
            return Err(Error::BandTooNarrow {
                need_lo: lo,
                need_hi: hi,
                have_lo,
                have_hi,
            });
        }
        Ok(())
    }

    /// Same coefficients on a band widened to cover `[lo, hi]`.
    pub fn widened(&self, lo: i64, hi: i64) -> Self {
        let (a, b) = self.band();
        let (lo, hi) = (lo.min(a), hi.max(b));
        let coeffs = (lo..=hi).map(|k| self.coeff(k)).collect();
        MatrixLaurentSeries {
            n: self.n,
            k_min: lo,
            coeffs,
        }
    }

    /// Drop exactly-zero blocks at either end, keeping exponent 0 in the band.
    pub fn trimmed(&self) -> Self {
        let (lo, hi) = self.band();
        let is_zero = |k: i64| self.coeff_ref(k).is_none_or(|c| c.iter().all(|v| *v == czero()));
        let mut a = lo;
        while a < 0 && is_zero(a) {
            a += 1;
        }
        let mut b = hi;
        while b > 0 && is_zero(b) {
            b -= 1;
        }
        let coeffs = (a..=b).map(|k| self.coeff(k)).collect();
        MatrixLaurentSeries {
            n: self.n,
            k_min: a,
            coeffs,
        }
    }

    /// Block-convolution product `self(z) * other(z)`.
    pub fn mul(&self, other: &MatrixLaurentSeries) -> Result<Self> {
        self.check_same_n(other)?;
        let (a0, _) = self.band();
        let (b0, _) = other.band();
        let len = self.coeffs.len() + other.coeffs.len() - 1;
        let mut coeffs = vec![zeros(self.n, self.n); len];
        for (i, p) in self.coeffs.iter().enumerate() {
            if p.iter().all(|v| *v == czero()) {
                continue;
            }
            for (j, q) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += p * q;
            }
        }
        Self::new(self.n, a0 + b0, coeffs)
    }

    pub fn add(&self, other: &MatrixLaurentSeries) -> Result<Self> {
        self.check_same_n(other)?;
        let (a0, a1) = self.band();
        let (b0, b1) = other.band();
        let lo = a0.min(b0);
        let hi = a1.max(b1);
        let coeffs = (lo..=hi).map(|k| self.coeff(k) + other.coeff(k)).collect();
        Self::new(self.n, lo, coeffs)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        MatrixLaurentSeries {
            n: self.n,
            k_min: self.k_min,
            coeffs: self.coeffs.iter().map(|b| b * c).collect(),
        }
    }

    /// The symbol `γ(z⁻¹)`.
    pub fn reflected(&self) -> Self {
        let (_, hi) = self.band();
        MatrixLaurentSeries {
            n: self.n,
            k_min: -hi,
            coeffs: self.coeffs.iter().rev().cloned().collect(),
        }
    }

    /// Largest block operator norm, used as the section scale.
    pub fn max_block_norm(&self) -> f64 {
        self.coeffs.iter().map(op_norm).fold(0.0, f64::max)
    }

    /// Blockwise distance over the union of both bands.
    pub fn max_diff(&self, other: &MatrixLaurentSeries) -> f64 {
        let (a0, a1) = self.band();
        let (b0, b1) = other.band();
        (a0.min(b0)..=a1.max(b1))
            .map(|k| op_norm(&(self.coeff(k) - other.coeff(k))))
            .fold(0.0, f64::max)
    }

    /// Time evolution `exp(-ξ(s, z⁻¹)) γ(z) exp(ξ(t, z))` with exponentials truncated at `order`.
    pub fn evolve(&self, t: &TimeVector, s: &TimeVector, order: usize) -> Result<Self> {
        evolve_symbol(self, t, s, order)
    }

    fn check_same_n(&self, other: &MatrixLaurentSeries) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(format!(
                "block sizes {} and {}",
                self.n, other.n
            )));
        }
        Ok(())
    }
}

/// Scalar Taylor coefficients of `exp(Σ t_i z^i)` up to `z^order`.
///
/// Uses `k f_k = Σ_i i t_i f_{k-i}`, which follows from `f' = ξ' f`.
fn exp_coefficients(t: &[Complex64], order: usize) -> Vec<Complex64> {
    let mut f = vec![czero(); order + 1];
    f[0] = Complex64::new(1.0, 0.0);
    for k in 1..=order {
        let mut acc = czero();
        for (i, ti) in t.iter().enumerate() {
            let p = i + 1;
            if p > k {
                break;
            }
            acc += *ti * (p as f64) * f[k - p];
        }
        f[k] = acc / (k as f64);
    }
    f
}

/// Estimated relative mass of the dropped terms of `exp(ξ)` beyond `order`.
///
/// Bounded by the majorant series `exp(Σ |t_i| z^i)` evaluated at `z = 1`.
fn truncation_tail(t: &TimeVector, order: usize) -> f64 {
    let abs: Vec<Complex64> = t.entries().iter().map(|v| Complex64::new(v.norm(), 0.0)).collect();
    let total = t.abs_sum();
    if total == 0.0 {
        return 0.0;
    }
    // Tail terms of the majorant decay factorially; a few hundred extra terms suffice.
    let extra = order + 400;
    let major = exp_coefficients(&abs, extra);
    let tail: f64 = major[order + 1..].iter().map(|c| c.re).sum();
    tail / total.exp()
}

/// Truncation of `exp(ξ(t, z)) · I` to powers `z⁰ ..= z^order`.
pub fn exp_xi(t: &TimeVector, order: usize, n: usize) -> MatrixLaurentSeries {
    let coeffs = exp_coefficients(t.entries(), order)
        .into_iter()
        .map(|c| CMat::from_diagonal_element(n, n, c))
        .collect();
    MatrixLaurentSeries { n, k_min: 0, coeffs }.trimmed()
}

/// `γ(t, s; z) = exp(-ξ(s, z⁻¹)) γ(z) exp(ξ(t, z))`.
pub fn evolve_symbol(
    gamma: &MatrixLaurentSeries,
    t: &TimeVector,
    s: &TimeVector,
    order: usize,
) -> Result<MatrixLaurentSeries> {
    for tv in [t, s] {
        let tail = truncation_tail(tv, order);
        if tail > TRUNCATION_FLOOR {
            return Err(Error::TruncationInsufficient {
                order,
                tail,
                floor: TRUNCATION_FLOOR,
            });
        }
    }
    if t.is_zero() && s.is_zero() {
        return Ok(gamma.clone());
    }
    let n = gamma.block_size();
    let right = exp_xi(t, order, n);
    let left = exp_xi(&s.neg(), order, n).reflected();
    left.mul(gamma)?.mul(&right)
}

/// Smallest truncation order meeting the floor for the given times.
pub fn order_for(t: &TimeVector, s: &TimeVector) -> usize {
    let mut order = DEFAULT_ORDER;
    while order < 2000
        && (truncation_tail(t, order) > TRUNCATION_FLOOR || truncation_tail(s, order) > TRUNCATION_FLOOR)
    {
        order += 5;
    }
    order
}

/// Orientation of a polynomial's coefficient vector: where it sits in a pairing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolyOrientation {
    /// Coefficients act from the left (a row of blocks times `χ`).
    Row,
    /// Coefficients act from the right (`χᵀ` times a column of blocks).
    Column,
}

/// `P(z) = Σ_{j=0}^{d} c_j z^j` with `n x n` block coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPolynomial {
    n: usize,
    coeffs: Vec<CMat>,
    orientation: PolyOrientation,
    monic: bool,
}

impl MatrixPolynomial {
    pub fn new(coeffs: Vec<CMat>, orientation: PolyOrientation) -> Result<Self> {
        let n = coeffs
            .first()
            .map(|c| c.nrows())
            .ok_or_else(|| Error::InvalidArgument("polynomial needs a coefficient".into()))?;
        if coeffs.iter().any(|c| c.nrows() != n || c.ncols() != n) {
            return Err(Error::DimensionMismatch("polynomial blocks differ in size".into()));
        }
        Ok(MatrixPolynomial {
            n,
            coeffs,
            orientation,
            monic: false,
        })
    }

    /// Monic polynomial; the leading block must be exactly the identity.
    pub fn new_monic(coeffs: Vec<CMat>, orientation: PolyOrientation) -> Result<Self> {
        let mut p = Self::new(coeffs, orientation)?;
        if p.coeffs.last() != Some(&identity(p.n)) {
            return Err(Error::InvalidArgument("leading coefficient is not the identity".into()));
        }
        p.monic = true;
        Ok(p)
    }

    /// `z^d I`.
    pub fn monomial(n: usize, d: usize, orientation: PolyOrientation) -> Self {
        let mut coeffs = vec![zeros(n, n); d + 1];
        coeffs[d] = identity(n);
        MatrixPolynomial {
            n,
            coeffs,
            orientation,
            monic: true,
        }
    }

    pub fn block_size(&self) -> usize {
        self.n
    }

    /// Formal degree (number of stored coefficients minus one).
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_monic(&self) -> bool {
        self.monic
    }

    pub fn orientation(&self) -> PolyOrientation {
        self.orientation
    }

    pub fn coeffs(&self) -> &[CMat] {
        &self.coeffs
    }

    pub fn coeff(&self, j: usize) -> CMat {
        self.coeffs.get(j).cloned().unwrap_or_else(|| zeros(self.n, self.n))
    }

    /// Constant term `P(0)`.
    pub fn at_zero(&self) -> CMat {
        self.coeffs[0].clone()
    }

    pub fn eval(&self, z: Complex64) -> CMat {
        // Horner
        let mut acc = zeros(self.n, self.n);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    /// Reversed polynomial `z^d P(z⁻¹)ᵀ`: coefficient `j` is `c_{d-j}ᵀ`.
    pub fn reverse(&self) -> MatrixPolynomial {
        let coeffs: Vec<CMat> = self.coeffs.iter().rev().map(|c| c.transpose()).collect();
        MatrixPolynomial {
            n: self.n,
            orientation: self.orientation,
            monic: self.coeffs[0] == identity(self.n),
            coeffs,
        }
    }

    /// `z P(z)`.
    pub fn shift(&self) -> MatrixPolynomial {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(zeros(self.n, self.n));
        coeffs.extend(self.coeffs.iter().cloned());
        MatrixPolynomial {
            n: self.n,
            coeffs,
            orientation: self.orientation,
            monic: self.monic,
        }
    }

    /// `A P(z)`.
    pub fn left_mul(&self, a: &CMat) -> MatrixPolynomial {
        self.map(|c| a * c)
    }

    /// `P(z) A`.
    pub fn right_mul(&self, a: &CMat) -> MatrixPolynomial {
        self.map(|c| c * a)
    }

    pub fn add(&self, other: &MatrixPolynomial) -> MatrixPolynomial {
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..len).map(|j| self.coeff(j) + other.coeff(j)).collect();
        MatrixPolynomial {
            n: self.n,
            coeffs,
            orientation: self.orientation,
            monic: false,
        }
    }

    pub fn sub(&self, other: &MatrixPolynomial) -> MatrixPolynomial {
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..len).map(|j| self.coeff(j) - other.coeff(j)).collect();
        MatrixPolynomial {
            n: self.n,
            coeffs,
            orientation: self.orientation,
            monic: false,
        }
    }

    /// Largest coefficient operator norm.
    pub fn max_norm(&self) -> f64 {
        self.coeffs.iter().map(op_norm).fold(0.0, f64::max)
    }

    /// Coefficient-wise distance (padding the shorter one with zeros).
    pub fn max_diff(&self, other: &MatrixPolynomial) -> f64 {
        self.sub(other).max_norm()
    }

    fn map(&self, f: impl Fn(&CMat) -> CMat) -> MatrixPolynomial {
        MatrixPolynomial {
            n: self.n,
            coeffs: self.coeffs.iter().map(f).collect(),
            orientation: self.orientation,
            monic: false,
        }
    }
}

/// Residue pairing.
///
/// * `Side::Left`:  `⟨P, Q⟩_l = res P(z) γ(z) Q*(z)`
/// * `Side::Right`: `⟨P, Q⟩_r = res P*(z) γ(z) Q(z)`
///
/// with `P*(z) = P(z⁻¹)ᵀ` (plain transpose) and `res` the `z⁰` coefficient.
pub fn pair(
    p: &MatrixPolynomial,
    q: &MatrixPolynomial,
    gamma: &MatrixLaurentSeries,
    side: Side,
) -> Result<CMat> {
    let d = p.degree().max(q.degree()) as i64;
    gamma.require_band(-d, d)?;
    let n = gamma.block_size();
    if p.block_size() != n || q.block_size() != n {
        return Err(Error::DimensionMismatch("polynomial and symbol block sizes differ".into()));
    }
    let mut acc = zeros(n, n);
    for (a, pa) in p.coeffs().iter().enumerate() {
        for (b, qb) in q.coeffs().iter().enumerate() {
            let (a, b) = (a as i64, b as i64);
            match side {
                Side::Left => {
                    if let Some(g) = gamma.coeff_ref(b - a) {
                        acc += pa * g * qb.transpose();
                    }
                }
                Side::Right => {
                    if let Some(g) = gamma.coeff_ref(a - b) {
                        acc += pa.transpose() * g * qb;
                    }
                }
            }
        }
    }
    Ok(acc)
}
