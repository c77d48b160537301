//! Monic matrix biorthogonal polynomials on the unit circle.
//!
//! Four families are built from bordered Schur complements of the block
//! Toeplitz sections `T_N = T^{l|r}_N`:
//!
//! ```text
//! P1l_N      = z^N I − (γ^(−N) … γ^(−1)) (T^l_N)⁻¹ χ_N
//! (P2r_N)ᵀ   = z^N I − (γ^(N)  … γ^(1))  (T^r_N)⁻¹ χ_N
//! P1r_N      = z^N I − χ_Nᵀ (T^r_N)⁻¹ (γ^(−N); …; γ^(−1))
//! (P2l_N)ᵀ   = z^N I − χ_Nᵀ (T^l_N)⁻¹ (γ^(N);  …; γ^(1))
//! ```
//!
//! with `χ_N = (I, zI, …, z^{N−1}I)ᵀ`. The orientation of each border is the
//! one for which `⟨P1l_k, P2l_j⟩_l = δ_kj h^l_k` and `⟨P2r_k, P1r_j⟩_r = δ_kj h^r_k`.
//!
//! Reflection coefficients are `x_N = P1_N(0)` and `y_N = P2_N(0)ᵀ` on each side.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::laurent::{pair, MatrixLaurentSeries, MatrixPolynomial, PolyOrientation, Side};
use crate::linalg::{block, block2, dist, hcat, identity, inverse, op_norm, sigma_min, vcat, zeros, CMat};
use crate::toeplitz::{block_factorize, block_upper_inverse, schur_complement, section, SINGULAR_RTOL};

/// Reflection coefficients `x^l, x^r, y^l, y^r` indexed by degree `0 ..= n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reflections {
    pub n: usize,
    pub xl: Vec<CMat>,
    pub xr: Vec<CMat>,
    pub yl: Vec<CMat>,
    pub yr: Vec<CMat>,
}

impl Reflections {
    pub fn len(&self) -> usize {
        self.xl.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xl.is_empty()
    }

    /// `(x, y) ↦ (λ x, λ⁻¹ y)`, the rescaling generated by the `t0` / `s0` flows.
    pub fn gauged(&self, lambda: Complex64) -> Reflections {
        let inv = Complex64::new(1.0, 0.0) / lambda;
        Reflections {
            n: self.n,
            xl: self.xl.iter().map(|m| m * lambda).collect(),
            xr: self.xr.iter().map(|m| m * lambda).collect(),
            yl: self.yl.iter().map(|m| m * inv).collect(),
            yr: self.yr.iter().map(|m| m * inv).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BiorthFamily {
    symbol: MatrixLaurentSeries,
    n: usize,
    n_max: usize,
    p1l: Vec<MatrixPolynomial>,
    p2l: Vec<MatrixPolynomial>,
    p1r: Vec<MatrixPolynomial>,
    p2r: Vec<MatrixPolynomial>,
    refl: Reflections,
    hl: Vec<CMat>,
    hr: Vec<CMat>,
}

impl BiorthFamily {
    pub fn symbol(&self) -> &MatrixLaurentSeries {
        &self.symbol
    }
    pub fn block_size(&self) -> usize {
        self.n
    }
    pub fn n_max(&self) -> usize {
        self.n_max
    }
    pub fn p1l(&self, k: usize) -> &MatrixPolynomial {
        &self.p1l[k]
    }
    pub fn p2l(&self, k: usize) -> &MatrixPolynomial {
        &self.p2l[k]
    }
    pub fn p1r(&self, k: usize) -> &MatrixPolynomial {
        &self.p1r[k]
    }
    pub fn p2r(&self, k: usize) -> &MatrixPolynomial {
        &self.p2r[k]
    }
    pub fn reflections(&self) -> &Reflections {
        &self.refl
    }
    pub fn xl(&self, k: usize) -> &CMat {
        &self.refl.xl[k]
    }
    pub fn xr(&self, k: usize) -> &CMat {
        &self.refl.xr[k]
    }
    pub fn yl(&self, k: usize) -> &CMat {
        &self.refl.yl[k]
    }
    pub fn yr(&self, k: usize) -> &CMat {
        &self.refl.yr[k]
    }
    pub fn hl(&self, k: usize) -> &CMat {
        &self.hl[k]
    }
    pub fn hr(&self, k: usize) -> &CMat {
        &self.hr[k]
    }
    pub fn h(&self, side: Side) -> &[CMat] {
        match side {
            Side::Left => &self.hl,
            Side::Right => &self.hr,
        }
    }

    /// Biorthonormal `Q1l_k = P1l_k`.
    pub fn q1l(&self, k: usize) -> MatrixPolynomial {
        self.p1l[k].clone()
    }

    /// Biorthonormal `Q2l_k = (h^l_k)⁻ᵀ P2l_k`.
    pub fn q2l(&self, k: usize) -> Result<MatrixPolynomial> {
        Ok(self.p2l[k].left_mul(&inverse(&self.hl[k])?.transpose()))
    }

    /// Biorthonormal `Q1r_k = P1r_k (h^r_k)⁻¹`.
    pub fn q1r(&self, k: usize) -> Result<MatrixPolynomial> {
        Ok(self.p1r[k].right_mul(&inverse(&self.hr[k])?))
    }

    /// Biorthonormal `Q2r_k = P2r_k`.
    pub fn q2r(&self, k: usize) -> MatrixPolynomial {
        self.p2r[k].clone()
    }
}

fn monic(coeffs: Vec<CMat>, orientation: PolyOrientation) -> MatrixPolynomial {
    MatrixPolynomial::new_monic(coeffs, orientation).expect("leading block is the identity")
}

/// Compute all four monic families up to degree `n_max`.
pub fn biorth_family(gamma: &MatrixLaurentSeries, n_max: usize) -> Result<BiorthFamily> {
    let n = gamma.block_size();
    let reach = n_max as i64;
    gamma.require_band(-reach, reach)?;
    let tl = section(gamma, n_max + 1, Side::Left)?;
    let tr = section(gamma, n_max + 1, Side::Right)?;

    let h_of = |sec: &CMat, scale: f64| -> Result<Vec<CMat>> {
        (0..=n_max)
            .map(|k| {
                let sub = sec.view((0, 0), ((k + 1) * n, (k + 1) * n)).into_owned();
                let h = schur_complement(&sub, k * n).map_err(|_| Error::FactorizationDegenerate(k))?;
                if sigma_min(&h) < SINGULAR_RTOL * scale {
                    return Err(Error::FactorizationDegenerate(k));
                }
                Ok(h)
            })
            .collect()
    };
    let scale = tl.norm().max(f64::MIN_POSITIVE);
    let hl = h_of(tl.matrix(), scale)?;
    let hr = h_of(tr.matrix(), scale)?;

    let id = identity(n);
    let mut p1l = vec![MatrixPolynomial::monomial(n, 0, PolyOrientation::Row)];
    let mut p2l = vec![MatrixPolynomial::monomial(n, 0, PolyOrientation::Row)];
    let mut p1r = vec![MatrixPolynomial::monomial(n, 0, PolyOrientation::Column)];
    let mut p2r = vec![MatrixPolynomial::monomial(n, 0, PolyOrientation::Column)];

    for big_n in 1..=n_max {
        let dim = big_n * n;
        let tl_n = tl.matrix().view((0, 0), (dim, dim)).into_owned();
        let tr_n = tr.matrix().view((0, 0), (dim, dim)).into_owned();
        let lu_l = tl_n.clone().lu();
        let lu_r = tr_n.clone().lu();
        let lu_lt = tl_n.transpose().lu();
        let lu_rt = tr_n.transpose().lu();
        let fail = || Error::FactorizationDegenerate(big_n - 1);

        let neg_tail: Vec<CMat> = (0..big_n).map(|j| gamma.coeff(j as i64 - big_n as i64)).collect();
        let pos_tail: Vec<CMat> = (0..big_n).map(|j| gamma.coeff(big_n as i64 - j as i64)).collect();

        // row (γ^(−N) … γ^(−1)) times (T^l_N)⁻¹
        let row = hcat(&neg_tail);
        let c = lu_lt.solve(&row.transpose()).ok_or_else(fail)?.transpose();
        let mut coeffs: Vec<CMat> = (0..big_n).map(|b| -block(&c, 0, b, n)).collect();
        coeffs.push(id.clone());
        p1l.push(monic(coeffs, PolyOrientation::Row));

        // row (γ^(N) … γ^(1)) times (T^r_N)⁻¹, coefficients are transposed blocks
        let row = hcat(&pos_tail);
        let d = lu_rt.solve(&row.transpose()).ok_or_else(fail)?.transpose();
        let mut coeffs: Vec<CMat> = (0..big_n).map(|b| -block(&d, 0, b, n).transpose()).collect();
        coeffs.push(id.clone());
        p2r.push(monic(coeffs, PolyOrientation::Column));

        // (T^r_N)⁻¹ (γ^(−N); …; γ^(−1))
        let col = vcat(&neg_tail);
        let c = lu_r.solve(&col).ok_or_else(fail)?;
        let mut coeffs: Vec<CMat> = (0..big_n).map(|b| -block(&c, b, 0, n)).collect();
        coeffs.push(id.clone());
        p1r.push(monic(coeffs, PolyOrientation::Column));

        // (T^l_N)⁻¹ (γ^(N); …; γ^(1)), coefficients are transposed blocks
        let col = vcat(&pos_tail);
        let c = lu_l.solve(&col).ok_or_else(fail)?;
        let mut coeffs: Vec<CMat> = (0..big_n).map(|b| -block(&c, b, 0, n).transpose()).collect();
        coeffs.push(id.clone());
        p2l.push(monic(coeffs, PolyOrientation::Row));
    }

    let refl = Reflections {
        n,
        xl: p1l.iter().map(|p| p.at_zero()).collect(),
        xr: p1r.iter().map(|p| p.at_zero()).collect(),
        yl: p2l.iter().map(|p| p.at_zero().transpose()).collect(),
        yr: p2r.iter().map(|p| p.at_zero().transpose()).collect(),
    };

    Ok(BiorthFamily {
        symbol: gamma.clone(),
        n,
        n_max,
        p1l,
        p2l,
        p1r,
        p2r,
        refl,
        hl,
        hr,
    })
}

/// The four monic families read off the triangular dressings.
///
/// `P1l = S1 χ`, `P2l_j = Σ_b ((S2⁻¹)_bj h^l_j)ᵀ z^b`, `P1r_j = Σ_b z^b (Z1)_bj h^r_j`,
/// `P2r_i = Σ_b ((Z2⁻¹)_ib)ᵀ z^b`. Kept as an independent cross-check of
/// [`biorth_family`].
pub struct DressingPolynomials {
    pub p1l: Vec<MatrixPolynomial>,
    pub p2l: Vec<MatrixPolynomial>,
    pub p1r: Vec<MatrixPolynomial>,
    pub p2r: Vec<MatrixPolynomial>,
}

pub fn polynomials_from_dressings(gamma: &MatrixLaurentSeries, n_max: usize) -> Result<DressingPolynomials> {
    let n = gamma.block_size();
    let size = n_max + 1;
    let left = block_factorize(&section(gamma, size, Side::Left)?)?;
    let right = block_factorize(&section(gamma, size, Side::Right)?)?;
    let s1 = left.unit_lower();
    let s2_inv = block_upper_inverse(left.upper(), n)?;
    let z1 = right.upper();
    let z2_inv = crate::toeplitz::unit_lower_inverse(right.unit_lower(), n);
    let hl = left.pivots();
    let hr = right.pivots();

    let mut out = DressingPolynomials {
        p1l: vec![],
        p2l: vec![],
        p1r: vec![],
        p2r: vec![],
    };
    for k in 0..size {
        let coeffs = (0..=k).map(|b| block(s1, k, b, n)).collect();
        out.p1l.push(MatrixPolynomial::new(coeffs, PolyOrientation::Row)?);
        let coeffs = (0..=k).map(|b| (block(&s2_inv, b, k, n) * &hl[k]).transpose()).collect();
        out.p2l.push(MatrixPolynomial::new(coeffs, PolyOrientation::Row)?);
        let coeffs = (0..=k).map(|b| block(z1, b, k, n) * &hr[k]).collect();
        out.p1r.push(MatrixPolynomial::new(coeffs, PolyOrientation::Column)?);
        let coeffs = (0..=k).map(|b| block(&z2_inv, k, b, n).transpose()).collect();
        out.p2r.push(MatrixPolynomial::new(coeffs, PolyOrientation::Column)?);
    }
    Ok(out)
}

/// The twelve polynomial / reflection-coefficient identities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Recursion {
    /// `P1l_{N+1} − z P1l_N = x^l_{N+1} P̃2r_N`
    R1,
    /// `P̃2r_{N+1} − P̃2r_N = z y^r_{N+1} P1l_N`
    R2,
    /// `P1r_{N+1} − z P1r_N = P̃2l_N x^r_{N+1}`
    R3,
    /// `P̃2l_{N+1} − P̃2l_N = z P1r_N y^l_{N+1}`
    R4,
    /// `x^l_N h^r_N = h^l_N x^r_N`
    R5,
    /// `y^r_N h^l_N = h^r_N y^l_N`
    R6,
    /// `P1r_{N+1} = z P1r_N (I − y^l_{N+1} x^r_{N+1}) + P̃2l_{N+1} x^r_{N+1}`
    R7,
    /// `P1l_{N+1} = z (I − x^l_{N+1} y^r_{N+1}) P1l_N + x^l_{N+1} P̃2r_{N+1}`
    R8,
    /// `P̃2r_{N+1} = (I − y^r_{N+1} x^l_{N+1}) P̃2r_N + y^r_{N+1} P1l_{N+1}`
    R9,
    /// `P̃2l_{N+1} = P̃2l_N (I − x^r_{N+1} y^l_{N+1}) + P1r_{N+1} y^l_{N+1}`
    R10,
    /// `(h^r_N)⁻¹ h^r_{N+1} = I − y^l_{N+1} x^r_{N+1}`
    R11,
    /// `h^l_{N+1} (h^l_N)⁻¹ = I − x^l_{N+1} y^r_{N+1}`
    R12,
}

impl Recursion {
    pub const ALL: [Recursion; 12] = [
        Recursion::R1,
        Recursion::R2,
        Recursion::R3,
        Recursion::R4,
        Recursion::R5,
        Recursion::R6,
        Recursion::R7,
        Recursion::R8,
        Recursion::R9,
        Recursion::R10,
        Recursion::R11,
        Recursion::R12,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Recursion::R1 => "r1",
            Recursion::R2 => "r2",
            Recursion::R3 => "r3",
            Recursion::R4 => "r4",
            Recursion::R5 => "r5",
            Recursion::R6 => "r6",
            Recursion::R7 => "r7",
            Recursion::R8 => "r8",
            Recursion::R9 => "r9",
            Recursion::R10 => "r10",
            Recursion::R11 => "r11",
            Recursion::R12 => "r12",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RecursionEntry {
    pub identity: Recursion,
    pub degree: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RecursionTable {
    pub entries: Vec<RecursionEntry>,
}

impl RecursionTable {
    pub fn max_for(&self, id: Recursion) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.identity == id)
            .map(|e| e.residual)
            .fold(0.0, f64::max)
    }

    pub fn max(&self) -> f64 {
        self.entries.iter().map(|e| e.residual).fold(0.0, f64::max)
    }
}

/// Residual `‖LHS − RHS‖` of every identity at every applicable degree.
pub fn recursion_residuals(fam: &BiorthFamily) -> Result<RecursionTable> {
    let id = identity(fam.n);
    let mut table = RecursionTable::default();
    let mut push = |identity, degree, residual| {
        table.entries.push(RecursionEntry {
            identity,
            degree,
            residual,
        })
    };
    let r = &fam.refl;
    for big_n in 0..=fam.n_max {
        push(Recursion::R5, big_n, dist(&(&r.xl[big_n] * &fam.hr[big_n]), &(&fam.hl[big_n] * &r.xr[big_n])));
        push(Recursion::R6, big_n, dist(&(&r.yr[big_n] * &fam.hl[big_n]), &(&fam.hr[big_n] * &r.yl[big_n])));
    }
    for big_n in 0..fam.n_max {
        let m = big_n + 1;
        let (p1l, p1l1) = (&fam.p1l[big_n], &fam.p1l[m]);
        let (p1r, p1r1) = (&fam.p1r[big_n], &fam.p1r[m]);
        let (t2r, t2r1) = (fam.p2r[big_n].reverse(), fam.p2r[m].reverse());
        let (t2l, t2l1) = (fam.p2l[big_n].reverse(), fam.p2l[m].reverse());
        let (xl, xr, yl, yr) = (&r.xl[m], &r.xr[m], &r.yl[m], &r.yr[m]);

        let res = p1l1.sub(&p1l.shift()).max_diff(&t2r.left_mul(xl));
        push(Recursion::R1, big_n, res);
        let res = t2r1.sub(&t2r).max_diff(&p1l.left_mul(yr).shift());
        push(Recursion::R2, big_n, res);
        let res = p1r1.sub(&p1r.shift()).max_diff(&t2l.right_mul(xr));
        push(Recursion::R3, big_n, res);
        let res = t2l1.sub(&t2l).max_diff(&p1r.right_mul(yl).shift());
        push(Recursion::R4, big_n, res);

        let rhs = p1r.right_mul(&(&id - yl * xr)).shift().add(&t2l1.right_mul(xr));
        push(Recursion::R7, big_n, p1r1.max_diff(&rhs));
        let rhs = p1l.left_mul(&(&id - xl * yr)).shift().add(&t2r1.left_mul(xl));
        push(Recursion::R8, big_n, p1l1.max_diff(&rhs));
        let rhs = t2r.left_mul(&(&id - yr * xl)).add(&p1l1.left_mul(yr));
        push(Recursion::R9, big_n, t2r1.max_diff(&rhs));
        let rhs = t2l.right_mul(&(&id - xr * yl)).add(&p1r1.right_mul(yl));
        push(Recursion::R10, big_n, t2l1.max_diff(&rhs));

        let lhs = inverse(&fam.hr[big_n])? * &fam.hr[m];
        push(Recursion::R11, big_n, dist(&lhs, &(&id - yl * xr)));
        let lhs = &fam.hl[m] * inverse(&fam.hl[big_n])?;
        push(Recursion::R12, big_n, dist(&lhs, &(&id - xl * yr)));
    }
    Ok(table)
}

/// `A + z B + z⁻¹ C` with `2n x 2n` blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPencil {
    pub n: usize,
    pub a: CMat,
    pub b: CMat,
    pub c: CMat,
}

impl SpectralPencil {
    pub fn zero(n: usize) -> Self {
        SpectralPencil {
            n,
            a: zeros(2 * n, 2 * n),
            b: zeros(2 * n, 2 * n),
            c: zeros(2 * n, 2 * n),
        }
    }

    pub fn eval(&self, z: Complex64) -> CMat {
        &self.a + &self.b * z + &self.c / z
    }

    pub fn add(&self, other: &SpectralPencil) -> SpectralPencil {
        SpectralPencil {
            n: self.n,
            a: &self.a + &other.a,
            b: &self.b + &other.b,
            c: &self.c + &other.c,
        }
    }

    pub fn sub(&self, other: &SpectralPencil) -> SpectralPencil {
        SpectralPencil {
            n: self.n,
            a: &self.a - &other.a,
            b: &self.b - &other.b,
            c: &self.c - &other.c,
        }
    }

    /// Blockwise maximum distance of the three coefficient matrices.
    pub fn max_diff(&self, other: &SpectralPencil) -> f64 {
        dist(&self.a, &other.a).max(dist(&self.b, &other.b)).max(dist(&self.c, &other.c))
    }

    fn quadrant(m: &CMat, n: usize, i: usize, j: usize) -> CMat {
        block(m, i, j, n)
    }

    /// `pencil · (top; bottom)` for a column of polynomials (no `z⁻¹` part allowed).
    pub fn apply_column(&self, top: &MatrixPolynomial, bottom: &MatrixPolynomial) -> (MatrixPolynomial, MatrixPolynomial) {
        let n = self.n;
        let q = |m: &CMat, i, j| Self::quadrant(m, n, i, j);
        let row = |i: usize| {
            let a = top.left_mul(&q(&self.a, i, 0)).add(&bottom.left_mul(&q(&self.a, i, 1)));
            let b = top.left_mul(&q(&self.b, i, 0)).add(&bottom.left_mul(&q(&self.b, i, 1)));
            a.add(&b.shift())
        };
        (row(0), row(1))
    }

    /// `(first, second) · pencil` for a row of polynomials (no `z⁻¹` part allowed).
    pub fn apply_row(&self, first: &MatrixPolynomial, second: &MatrixPolynomial) -> (MatrixPolynomial, MatrixPolynomial) {
        let n = self.n;
        let q = |m: &CMat, i, j| Self::quadrant(m, n, i, j);
        let col = |j: usize| {
            let a = first.right_mul(&q(&self.a, 0, j)).add(&second.right_mul(&q(&self.a, 1, j)));
            let b = first.right_mul(&q(&self.b, 0, j)).add(&second.right_mul(&q(&self.b, 1, j)));
            a.add(&b.shift())
        };
        (col(0), col(1))
    }
}

/// Transfer matrix from reflection data.
///
/// * left:  `[[zI, x^l_{N+1}], [z y^r_{N+1}, I]]`
/// * right: `[[zI, z y^l_{N+1}], [x^r_{N+1}, I]]`
pub fn transfer_pencil_from(refl: &Reflections, big_n: usize, side: Side) -> Result<SpectralPencil> {
    let m = big_n + 1;
    if m >= refl.len() {
        return Err(Error::InvalidArgument(format!(
            "transfer matrix {big_n} needs reflection coefficients up to degree {m}"
        )));
    }
    let n = refl.n;
    let (id, o) = (identity(n), zeros(n, n));
    let p = match side {
        Side::Left => SpectralPencil {
            n,
            a: block2(&o, &refl.xl[m], &o, &id),
            b: block2(&id, &o, &refl.yr[m], &o),
            c: zeros(2 * n, 2 * n),
        },
        Side::Right => SpectralPencil {
            n,
            a: block2(&o, &o, &refl.xr[m], &id),
            b: block2(&id, &refl.yl[m], &o, &o),
            c: zeros(2 * n, 2 * n),
        },
    };
    Ok(p)
}

pub fn transfer_pencil(fam: &BiorthFamily, big_n: usize, side: Side) -> Result<SpectralPencil> {
    transfer_pencil_from(&fam.refl, big_n, side)
}

/// Coefficient-wise residual of the block transfer recursion at degree `big_n`.
///
/// Left: `(P1l_{N+1}; P̃2r_{N+1}) = 𝓛^l_N (P1l_N; P̃2r_N)`.
/// Right: `(P1r_{N+1}, P̃2l_{N+1}) = (P1r_N, P̃2l_N) 𝓛^r_N`.
pub fn transfer_residual(fam: &BiorthFamily, big_n: usize, side: Side) -> Result<f64> {
    let pencil = transfer_pencil(fam, big_n, side)?;
    let m = big_n + 1;
    let res = match side {
        Side::Left => {
            let (a, b) = pencil.apply_column(&fam.p1l[big_n], &fam.p2r[big_n].reverse());
            a.max_diff(&fam.p1l[m]).max(b.max_diff(&fam.p2r[m].reverse()))
        }
        Side::Right => {
            let (a, b) = pencil.apply_row(&fam.p1r[big_n], &fam.p2l[big_n].reverse());
            a.max_diff(&fam.p1r[m]).max(b.max_diff(&fam.p2l[m].reverse()))
        }
    };
    Ok(res)
}

/// Biorthonormality residual `max |⟨Q1l_i, Q2l_j⟩_l − δ_ij I|`, and the right analogue.
pub fn biorthonormality_residual(fam: &BiorthFamily) -> Result<(f64, f64)> {
    let n = fam.n;
    let g = &fam.symbol;
    let (mut left, mut right) = (0.0f64, 0.0f64);
    let q2l: Vec<_> = (0..=fam.n_max).map(|j| fam.q2l(j)).collect::<Result<_>>()?;
    let q1r: Vec<_> = (0..=fam.n_max).map(|j| fam.q1r(j)).collect::<Result<_>>()?;
    for i in 0..=fam.n_max {
        for j in 0..=fam.n_max {
            let target = if i == j { identity(n) } else { zeros(n, n) };
            left = left.max(dist(&pair(&fam.q1l(i), &q2l[j], g, Side::Left)?, &target));
            right = right.max(dist(&pair(&fam.q2r(i), &q1r[j], g, Side::Right)?, &target));
        }
    }
    Ok((left, right))
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct DualityTable {
    /// `‖x^l[γ(z⁻¹)]_N − y^r[γ]_N‖`
    pub xl_vs_yr: Vec<f64>,
    /// `‖y^l[γ(z⁻¹)]_N − x^r[γ]_N‖`
    pub yl_vs_xr: Vec<f64>,
    /// `‖h^l[γ(z⁻¹)]_N − h^r[γ]_N‖`
    pub hl_vs_hr: Vec<f64>,
}

impl DualityTable {
    pub fn max(&self) -> f64 {
        self.xl_vs_yr
            .iter()
            .chain(&self.yl_vs_xr)
            .chain(&self.hl_vs_hr)
            .cloned()
            .fold(0.0, f64::max)
    }
}

/// Compare the left theory of `γ(z⁻¹)` with the right theory of `γ(z)`.
pub fn ts_dual_check(gamma: &MatrixLaurentSeries, n_max: usize) -> Result<DualityTable> {
    let fam = biorth_family(gamma, n_max)?;
    let dual = biorth_family(&gamma.reflected(), n_max)?;
    let mut t = DualityTable::default();
    for k in 0..=n_max {
        t.xl_vs_yr.push(dist(dual.xl(k), fam.yr(k)));
        t.yl_vs_xr.push(dist(dual.yl(k), fam.xr(k)));
        t.hl_vs_hr.push(dist(dual.hl(k), fam.hr(k)));
    }
    Ok(t)
}

/// `max_k |det 𝓛_k(z) − z det(h_{k+1}) / det(h_k)|` for scalar symbols (left side).
pub fn scalar_transfer_det_residual(fam: &BiorthFamily, z: Complex64) -> Result<f64> {
    if fam.n != 1 {
        return Err(Error::InvalidArgument("determinant identity is scalar-only".into()));
    }
    let mut worst = 0.0f64;
    for k in 0..fam.n_max {
        let det = transfer_pencil(fam, k, Side::Left)?.eval(z).determinant();
        let ratio = fam.hl[k + 1][(0, 0)] / fam.hl[k][(0, 0)];
        let direct = z * (Complex64::new(1.0, 0.0) - fam.xl(k + 1)[(0, 0)] * fam.yl(k + 1)[(0, 0)]);
        worst = worst.max((det - z * ratio).norm()).max((det - direct).norm());
    }
    Ok(worst)
}

/// Largest operator norm among the reflection coefficients of degree >= 1.
pub fn reflection_scale(refl: &Reflections) -> f64 {
    refl.xl
        .iter()
        .chain(&refl.xr)
        .chain(&refl.yl)
        .chain(&refl.yr)
        .skip(1)
        .map(op_norm)
        .fold(0.0, f64::max)
}
