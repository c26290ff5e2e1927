use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sjq_core::causet::CausalSet;
use sjq_core::cfield::HbarGrid;
use sjq_core::diagnostics::random_pauli_jordan;
use sjq_core::fock::{dequantize, toeplitz_of_symbol, FockOperator, FockTruncation};
use sjq_core::kahler::polar_decompose;
use sjq_core::linalg::{c, max_abs_c};
use sjq_core::pipeline::sj_summary;
use sjq_core::symbol::{berezin_transform_poly, poisson_bracket, random_polynomial, star_t, star_xi};

fn complex() -> impl Strategy<Value = Complex64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| Complex64::new(a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn enumeration_round_trips(modes in 1usize..4, cutoff in 0usize..6, pick in 0usize..10_000) {
        let t = FockTruncation::new(modes, cutoff).unwrap();
        let idx = pick % t.dim();
        let occ = t.occupation(idx);
        prop_assert!(occ.iter().all(|&n| n <= cutoff));
        prop_assert_eq!(t.index(&occ), idx);
    }

    #[test]
    fn decomposition_identities(seed in any::<u64>(), half in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = random_pauli_jordan(2 * half, &mut rng);
        let k = polar_decompose(&e).unwrap();
        prop_assert!(k.residuals().max() < 1e-9, "{:?}", k.residuals());
        prop_assert!(k.thetas().windows(2).all(|w| w[0] >= w[1]));
        let s = sj_summary(&e, &k, 1.0).unwrap();
        prop_assert!(s.uniqueness < 1e-10 && s.is_pure, "{:?}", s);
    }

    #[test]
    fn toeplitz_respects_involution(seed in any::<u64>(), hbar in 0.05..1.5f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_polynomial(2, 3, &mut rng);
        let t = FockTruncation::new(2, 6).unwrap();
        let a = toeplitz_of_symbol(&f, hbar, t).unwrap();
        let b = toeplitz_of_symbol(&f.conj(), hbar, t).unwrap();
        prop_assert!(a.adjoint().interior_diff(&b, 3).unwrap() < 1e-12);
    }

    #[test]
    fn dequantized_toeplitz_is_berezin(seed in any::<u64>(), hbar in 0.05..1.5f64, modes in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_polynomial(modes, 4, &mut rng);
        let t = FockTruncation::new(modes, 9).unwrap();
        let xi = dequantize(&toeplitz_of_symbol(&f, hbar, t).unwrap(), hbar).unwrap();
        let b = berezin_transform_poly(&f, &c(hbar));
        prop_assert!(xi.max_coeff_diff(&b).unwrap() <= 1e-10 * b.max_coeff().max(1.0));
    }

    #[test]
    fn star_products_are_associative(seed in any::<u64>(), hbar in 0.05..1.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, g, h) = (
            random_polynomial(1, 2, &mut rng),
            random_polynomial(1, 2, &mut rng),
            random_polynomial(1, 2, &mut rng),
        );
        let hb = c(hbar);
        for star in [star_t::<Complex64>, star_xi::<Complex64>] {
            let left = star(&star(&f, &g, &hb).unwrap(), &h, &hb).unwrap();
            let right = star(&f, &star(&g, &h, &hb).unwrap(), &hb).unwrap();
            prop_assert!(left.max_coeff_diff(&right).unwrap() < 1e-11);
        }
    }

    #[test]
    fn bracket_is_antisymmetric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_polynomial(2, 3, &mut rng);
        let g = random_polynomial(2, 3, &mut rng);
        let fg = poisson_bracket(&f, &g).unwrap();
        let gf = poisson_bracket(&g, &f).unwrap();
        prop_assert!(fg.add(&gf).unwrap().max_coeff() < 1e-13);
    }

    #[test]
    fn vacuum_state_is_unital_and_real_on_adjoints(entries in prop::collection::vec(complex(), 9)) {
        let t = FockTruncation::new(1, 2).unwrap();
        let m = sjq_core::linalg::CMatrix::from_row_slice(3, 3, &entries);
        let a = FockOperator::new(t, m, 0).unwrap();
        prop_assert_eq!(FockOperator::identity(t).vacuum_expectation(), c(1.0));
        prop_assert_eq!(a.adjoint().vacuum_expectation(), a.vacuum_expectation().conj());
        prop_assert!(max_abs_c(a.adjoint().adjoint().matrix()) == max_abs_c(a.matrix()));
    }

    #[test]
    fn sprinkled_orders_are_partial_orders(points in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64), 0..25)) {
        let coords: Vec<[f64; 2]> = points.iter().map(|&(u, v)| [(u + v) / 2f64.sqrt(), (u - v) / 2f64.sqrt()]).collect();
        let cs = CausalSet::from_coords(coords);
        prop_assert!(cs.is_valid());
        for x in 0..cs.len() {
            prop_assert!(!cs.precedes(x, x));
        }
    }

    #[test]
    fn grids_are_descending_with_classical_point(vals in prop::collection::btree_set(1u32..1000, 1..10)) {
        let text: Vec<String> = vals.iter().map(|v| format!("{}", *v as f64 / 100.0)).collect();
        let g: HbarGrid = text.join(",").parse().unwrap();
        prop_assert_eq!(*g.values().last().unwrap(), 0.0);
        prop_assert!(g.values().windows(2).all(|w| w[0] > w[1]));
    }
}
