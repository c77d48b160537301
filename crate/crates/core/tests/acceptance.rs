//! End-to-end acceptance run. Prints one line per criterion and exits nonzero if any fails.

use num_complex::Complex64;
use toeplitz_lattice::biorth::{
    biorth_family, biorthonormality_residual, recursion_residuals, transfer_residual, ts_dual_check, BiorthFamily,
};
use toeplitz_lattice::flows::{
    hermitian_check, step_halving, CompareSettings, HermitianData, LatticeSystem, ReductionSign,
};
use toeplitz_lattice::lax::{
    default_z_samples, eigen_residual, lax_from_reflections, lax_section, zero_curvature_convergence, FlowId, LaxKind,
};
use toeplitz_lattice::linalg::CMat;
use toeplitz_lattice::samples::{random_symbol, tridiagonal_scalar};
use toeplitz_lattice::{MatrixLaurentSeries, Side};

const SEEDS: u64 = 20;
const SIZES: [usize; 3] = [1, 2, 3];

struct Outcome {
    id: usize,
    name: &'static str,
    detail: String,
    pass: bool,
}

fn sweep() -> impl Iterator<Item = (u64, usize, MatrixLaurentSeries)> {
    (0..SEEDS).flat_map(|seed| SIZES.into_iter().map(move |n| (seed, n, random_symbol(n, 1000 + seed))))
}

fn family(g: &MatrixLaurentSeries, n_max: usize) -> BiorthFamily {
    let r = n_max as i64;
    biorth_family(&g.widened(-r, r), n_max).expect("well-conditioned symbol")
}

fn c1() -> Outcome {
    let mut worst = 0.0f64;
    for (_, _, g) in sweep() {
        let (l, r) = biorthonormality_residual(&family(&g, 10)).unwrap();
        worst = worst.max(l).max(r);
    }
    Outcome {
        id: 1,
        name: "biorthonormality",
        detail: format!("max {worst:.2e} <= 1e-10 over {} symbols", SEEDS * 3),
        pass: worst <= 1e-10,
    }
}

fn c2() -> Outcome {
    let mut worst = 0.0f64;
    let mut worst_id = "";
    for (_, _, g) in sweep() {
        let t = recursion_residuals(&family(&g, 10)).unwrap();
        for e in &t.entries {
            if e.residual > worst {
                worst = e.residual;
                worst_id = e.identity.label();
            }
        }
    }
    Outcome {
        id: 2,
        name: "recursions r1-r12",
        detail: format!("max {worst:.2e} ({worst_id}) <= 1e-10"),
        pass: worst <= 1e-10,
    }
}

fn c3_c4() -> (Outcome, Outcome) {
    let (mut lax, mut eig) = (0.0f64, 0.0f64);
    let zs = default_z_samples();
    for (_, _, g) in sweep() {
        let fam = family(&g, 12);
        let gw = g.widened(-12, 12);
        for kind in LaxKind::ALL {
            let d = lax_section(&gw, 12, kind).unwrap();
            lax = lax.max(lax_from_reflections(&fam, kind).unwrap().trusted_diff(&d).unwrap());
            eig = eig.max(eigen_residual(&d, &fam, &zs).unwrap());
        }
    }
    (
        Outcome {
            id: 3,
            name: "two-path Lax equality",
            detail: format!("max {lax:.2e} <= 1e-8 at N = 12"),
            pass: lax <= 1e-8,
        },
        Outcome {
            id: 4,
            name: "eigenvalue equations",
            detail: format!("max {eig:.2e} <= 1e-9 at 4 z-samples"),
            pass: eig <= 1e-9,
        },
    )
}

fn c5() -> Outcome {
    let zs = default_z_samples();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let mut symbols: Vec<MatrixLaurentSeries> = vec![tridiagonal_scalar(1)];
    symbols.extend(SIZES.iter().flat_map(|&n| (0..3).map(move |s| random_symbol(n, 2000 + s))));
    for g in &symbols {
        for flow in [FlowId::T1, FlowId::S1, FlowId::Tau] {
            for side in [Side::Left, Side::Right] {
                let c = zero_curvature_convergence(g, flow, side, 1, 1e-4, &zs).unwrap();
                lo = lo.min(c.ratio);
                hi = hi.max(c.ratio);
            }
        }
    }
    Outcome {
        id: 5,
        name: "zero-curvature O(eps^2)",
        detail: format!("ratios in [{lo:.4}, {hi:.4}] within [0.15, 0.35]"),
        pass: lo >= 0.15 && hi <= 0.35,
    }
}

fn c6() -> Outcome {
    let cfg = CompareSettings::new(0.1, 1e-3, 16, 6);
    let scalar = step_halving(&tridiagonal_scalar(1), LatticeSystem::Scalar, &cfg).unwrap();
    let g2 = random_symbol(2, 3000);
    let left = step_halving(&g2, LatticeSystem::Left, &cfg).unwrap();
    let right = step_halving(&g2, LatticeSystem::Right, &cfg).unwrap();
    let matrix_err = left.coarse.max_error.max(right.coarse.max_error);
    let improvement = scalar.improvement.min(left.improvement).min(right.improvement);
    Outcome {
        id: 6,
        name: "flow vs moment oracle",
        detail: format!(
            "scalar {:.2e} <= 1e-6, n=2 {:.2e} <= 1e-5, halving gain {:.1} >= 8",
            scalar.coarse.max_error, matrix_err, improvement
        ),
        pass: scalar.coarse.max_error <= 1e-6 && matrix_err <= 1e-5 && improvement >= 8.0,
    }
}

/// Dense Gram oracle for the scalar monic polynomials of `1 + 0.2(z + z⁻¹)`:
/// `x_N = p_N(0)` with `Σ_a p_a G[a][b] = 0` for `b < N`, and `y_N = q_N(0)`
/// with `Σ_b G[a][b] q_b = 0` for `a < N`, where `G[a][b] = γ^(b−a)`.
fn dense_scalar(n_max: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let g = |k: i64| match k {
        0 => 1.0,
        1 | -1 => 0.2,
        _ => 0.0,
    };
    let (mut xs, mut ys, mut hs) = (vec![1.0], vec![1.0], vec![1.0]);
    for big_n in 1..=n_max {
        let gram = nalgebra::DMatrix::<f64>::from_fn(big_n, big_n, |a, b| g(b as i64 - a as i64));
        let rhs_p = nalgebra::DVector::<f64>::from_fn(big_n, |b, _| -g(big_n as i64 - b as i64));
        let p = gram.transpose().lu().solve(&rhs_p).unwrap();
        let rhs_q = nalgebra::DVector::<f64>::from_fn(big_n, |a, _| -g(big_n as i64 - a as i64));
        let q = gram.clone().lu().solve(&rhs_q).unwrap();
        xs.push(p[0]);
        ys.push(q[0]);
        let full = nalgebra::DMatrix::<f64>::from_fn(big_n + 1, big_n + 1, |a, b| g(b as i64 - a as i64));
        hs.push(full.determinant() / gram.determinant());
    }
    (xs, ys, hs)
}

fn c7() -> Outcome {
    let n_max = 10;
    let fam = family(&tridiagonal_scalar(1), n_max);
    let (xs, ys, hs) = dense_scalar(n_max);
    let s = |m: &CMat| m[(0, 0)];
    let re = |v: f64| Complex64::new(v, 0.0);
    let mut worst = 0.0f64;
    for k in 0..=n_max {
        worst = worst
            .max((s(fam.xl(k)) - re(xs[k])).norm())
            .max((s(fam.xr(k)) - re(xs[k])).norm())
            .max((s(fam.yl(k)) - re(ys[k])).norm())
            .max((s(fam.yr(k)) - re(ys[k])).norm())
            .max((s(fam.hl(k)) - re(hs[k])).norm())
            .max((s(fam.hr(k)) - re(hs[k])).norm());
    }
    // transfer recursion and the h-ratio equation
    for k in 0..n_max {
        worst = worst.max(transfer_residual(&fam, k, Side::Left).unwrap());
        worst = worst.max((hs[k + 1] / hs[k] - (1.0 - xs[k + 1] * ys[k + 1])).abs());
    }
    // h⁻¹ L1 h: −x_{i+1} y_j below and on the diagonal, 1 − x_{i+1} y_{i+1} above it.
    // L2: −x_i y_{j+1} on and above the diagonal, 1 − x_{i+1} y_{i+1} below it.
    let l1 = lax_from_reflections(&fam, LaxKind::L1).unwrap();
    let l2 = lax_from_reflections(&fam, LaxKind::L2).unwrap();
    for i in 0..n_max {
        for j in 0..n_max {
            let conj = s(&l1.block(i, j)) * re(hs[j] / hs[i]);
            let want1 = if j <= i {
                -xs[i + 1] * ys[j]
            } else if j == i + 1 {
                1.0 - xs[i + 1] * ys[i + 1]
            } else {
                0.0
            };
            let want2 = if i <= j {
                -xs[i] * ys[j + 1]
            } else if i == j + 1 {
                1.0 - xs[i] * ys[i]
            } else {
                0.0
            };
            worst = worst.max((conj - re(want1)).norm()).max((s(&l2.block(i, j)) - re(want2)).norm());
        }
    }
    let derived = [
        (xs[1], -0.2),
        (ys[1], -0.2),
        (xs[2], 1.0 / 24.0),
        (ys[2], 1.0 / 24.0),
        (hs[1], 0.96),
        (hs[2], 0.96 * 575.0 / 576.0),
    ];
    let derived_err = derived.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Outcome {
        id: 7,
        name: "scalar reduction",
        detail: format!("pipeline vs dense oracle {worst:.2e}, derived values {derived_err:.2e} <= 1e-10"),
        pass: worst <= 1e-10 && derived_err <= 1e-10,
    }
}

fn c8() -> Outcome {
    let mut worst = 0.0f64;
    for (_, _, g) in sweep() {
        worst = worst.max(ts_dual_check(&g.widened(-10, 10), 10).unwrap().max());
    }
    Outcome {
        id: 8,
        name: "t-s symmetry",
        detail: format!("max {worst:.2e} <= 1e-10"),
        pass: worst <= 1e-10,
    }
}

fn c9() -> Outcome {
    let mut worst = 0.0f64;
    let k = 16;
    let a = Complex64::new(0.1, 0.0);
    let rng_block = |i: usize, shift: f64| {
        CMat::from_fn(2, 2, |r, c| {
            let t = (i * 4 + r * 2 + c) as f64 + shift;
            Complex64::new(0.08 * t.sin(), 0.05 * (1.3 * t).cos())
        })
    };
    for sign in [ReductionSign::Plus, ReductionSign::Minus] {
        let mut cases = vec![
            HermitianData::scalar(&vec![a; k], sign).unwrap(),
            HermitianData::matrix(&vec![toeplitz_lattice::linalg::identity(2) * a; k], &vec![toeplitz_lattice::linalg::identity(2) * a; k], sign)
                .unwrap(),
        ];
        let xl: Vec<CMat> = (0..k).map(|i| rng_block(i, 0.0)).collect();
        let xr: Vec<CMat> = (0..k).map(|i| rng_block(i, 0.7)).collect();
        cases.push(HermitianData::matrix(&xl, &xr, sign).unwrap());
        for d in &cases {
            let r = hermitian_check(d, sign, 0.1, 1e-3).unwrap();
            worst = worst.max(r.max_deviation).max(r.reduced_form_gap);
        }
    }
    Outcome {
        id: 9,
        name: "Hermitian reduction",
        detail: format!("max deviation {worst:.2e} <= 1e-8, both signs, scalar and n=2"),
        pass: worst <= 1e-8,
    }
}

fn main() {
    let start = std::time::Instant::now();
    let (o3, o4) = c3_c4();
    let outcomes = vec![c1(), c2(), o3, o4, c5(), c6(), c7(), c8(), c9()];
    let mut failed = 0;
    for o in &outcomes {
        println!(
            "acceptance {}: {:<26} {}  {}",
            o.id,
            o.name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.pass {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.1}s",
        outcomes.len() - failed,
        outcomes.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
