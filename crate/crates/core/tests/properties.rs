use num_complex::Complex64;
use proptest::prelude::*;
use toeplitz_lattice::biorth::{biorth_family, biorthonormality_residual, polynomials_from_dressings, ts_dual_check};
use toeplitz_lattice::flows::{integrate, Integrator, LatticeState, LatticeSystem};
use toeplitz_lattice::laurent::{evolve_symbol, order_for, TimeVector};
use toeplitz_lattice::linalg::{block, op_norm};
use toeplitz_lattice::samples::random_symbol;
use toeplitz_lattice::toeplitz::{block_factorize, section};
use toeplitz_lattice::{MatrixLaurentSeries, Side};

const N_MAX: usize = 6;

fn widened(g: &MatrixLaurentSeries, r: usize) -> MatrixLaurentSeries {
    g.widened(-(r as i64), r as i64)
}

fn small_state(n: usize, seed: u64, system: LatticeSystem) -> LatticeState {
    let fam = biorth_family(&widened(&random_symbol(n, seed), 10), 10).unwrap();
    LatticeState::from_reflections(fam.reflections(), system, 10).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn families_are_biorthonormal(seed in 0u64..10_000, n in 1usize..=3) {
        let fam = biorth_family(&widened(&random_symbol(n, seed), N_MAX), N_MAX).unwrap();
        let (l, r) = biorthonormality_residual(&fam).unwrap();
        prop_assert!(l <= 1e-10 && r <= 1e-10, "l = {l:e}, r = {r:e}");
    }

    #[test]
    fn ts_duality_holds(seed in 0u64..10_000, n in 1usize..=3) {
        let d = ts_dual_check(&widened(&random_symbol(n, seed), N_MAX), N_MAX).unwrap();
        prop_assert!(d.max() <= 1e-10, "{d:?}");
    }

    #[test]
    fn dressing_polynomials_match_schur(seed in 0u64..10_000, n in 1usize..=3) {
        let g = widened(&random_symbol(n, seed), N_MAX);
        let fam = biorth_family(&g, N_MAX).unwrap();
        let dr = polynomials_from_dressings(&g, N_MAX).unwrap();
        for k in 0..=N_MAX {
            prop_assert!(fam.p1l(k).max_diff(&dr.p1l[k]) <= 1e-10);
            prop_assert!(fam.p2l(k).max_diff(&dr.p2l[k]) <= 1e-10);
            prop_assert!(fam.p1r(k).max_diff(&dr.p1r[k]) <= 1e-10);
            prop_assert!(fam.p2r(k).max_diff(&dr.p2r[k]) <= 1e-10);
        }
    }

    #[test]
    fn lower_factor_is_nested(seed in 0u64..10_000, n in 1usize..=3, size in 2usize..6) {
        let g = widened(&random_symbol(n, seed), size + 1);
        for side in [Side::Left, Side::Right] {
            let small = block_factorize(&section(&g, size, side).unwrap()).unwrap();
            let big = block_factorize(&section(&g, size + 1, side).unwrap()).unwrap();
            let lead = big.unit_lower().view((0, 0), (size * n, size * n)).into_owned();
            prop_assert!(op_norm(&(lead - small.unit_lower())) <= 1e-12);
        }
    }

    #[test]
    fn determinant_telescopes(seed in 0u64..10_000, n in 1usize..=3) {
        let g = widened(&random_symbol(n, seed), N_MAX);
        let fam = biorth_family(&g, N_MAX).unwrap();
        for side in [Side::Left, Side::Right] {
            let mut prod = Complex64::new(1.0, 0.0);
            for size in 1..=N_MAX {
                prod *= block(&fam.h(side)[size - 1], 0, 0, n).determinant();
                let det = section(&g, size, side).unwrap().matrix().determinant();
                prop_assert!((det - prod).norm() <= 1e-10 * det.norm().max(1.0), "side {side:?} size {size}");
            }
        }
    }

    #[test]
    fn evolution_is_additive(n in 1usize..=2, seed in 0u64..1000, a in -0.3f64..0.3, b in -0.3f64..0.3) {
        let g = random_symbol(n, seed);
        let zero = TimeVector::zero();
        let ta = TimeVector::first(a);
        let tb = TimeVector::first(b);
        let tab = TimeVector::first(a + b);
        let step = |g: &MatrixLaurentSeries, t: &TimeVector, s: &TimeVector| evolve_symbol(g, t, s, order_for(t, s)).unwrap();
        let two = step(&step(&g, &ta, &zero), &zero, &tb);
        let one = step(&step(&g, &zero, &tb), &ta, &zero);
        prop_assert!(two.max_diff(&one) <= 1e-12);
        let tt = step(&step(&g, &ta, &zero), &tb, &zero);
        prop_assert!(tt.max_diff(&step(&g, &tab, &zero)) <= 1e-12);
    }

    #[test]
    fn reverse_is_an_involution(seed in 0u64..10_000, n in 1usize..=3, k in 0usize..=N_MAX) {
        let fam = biorth_family(&widened(&random_symbol(n, seed), N_MAX), N_MAX).unwrap();
        let p = fam.p1l(k);
        let back = p.reverse().reverse();
        prop_assert_eq!(back.coeffs(), p.coeffs());
    }

    #[test]
    fn flow_commutes_with_gauge(seed in 0u64..1000, n in 1usize..=2, phase in 0.0f64..std::f64::consts::TAU, left in any::<bool>()) {
        let system = if left { LatticeSystem::Left } else { LatticeSystem::Right };
        let state = small_state(n, seed, system);
        let lambda = Complex64::from_polar(1.0, phase);
        let cfg = Integrator::new(1e-2);
        let a = integrate(&state.gauged(lambda), 0.05, &cfg).unwrap();
        let b = integrate(&state, 0.05, &cfg).unwrap().last().gauged(lambda);
        prop_assert!(a.last().max_diff_on(&b, 0..=state.sites() - 1) <= 1e-9);
    }
}
