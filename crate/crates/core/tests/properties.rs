use num_complex::Complex64;
use proptest::prelude::*;

use kscert::engine::{bit_tuples, random_states, sequential_probability};
use kscert::game::{valid_rounds, SquareGame};
use kscert::linalg::ComplexMatrix;

fn matrix(dim: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim * dim).prop_map(move |v| {
        let entries = v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect();
        ComplexMatrix::new(dim, entries).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tensor_is_associative(a in matrix(2), b in matrix(2), c in matrix(2)) {
        let left = a.tensor(&b).tensor(&c);
        let right = a.tensor(&b.tensor(&c));
        prop_assert!(left.approx_eq(&right, 1e-12).unwrap());
    }

    #[test]
    fn mixed_product_property(a in matrix(2), b in matrix(2), c in matrix(2), d in matrix(2)) {
        let lhs = a.tensor(&b).mul(&c.tensor(&d)).unwrap();
        let rhs = a.mul(&c).unwrap().tensor(&b.mul(&d).unwrap());
        prop_assert!(lhs.approx_eq(&rhs, 1e-12).unwrap());
    }

    #[test]
    fn trace_is_cyclic(a in matrix(4), b in matrix(4)) {
        let ab = a.mul(&b).unwrap().trace();
        let ba = b.mul(&a).unwrap().trace();
        prop_assert!((ab - ba).norm() < 1e-12);
    }

    #[test]
    fn adjoint_is_an_involution(a in matrix(4), b in matrix(4)) {
        prop_assert_eq!(a.adjoint().adjoint(), a.clone());
        let lhs = a.mul(&b).unwrap().adjoint();
        let rhs = b.adjoint().mul(&a.adjoint()).unwrap();
        prop_assert!(lhs.approx_eq(&rhs, 1e-12).unwrap());
    }

    #[test]
    fn random_states_are_valid(seed in any::<u64>()) {
        for rho in random_states(4, 4, seed) {
            let m = rho.matrix();
            prop_assert!(m.is_hermitian(1e-12));
            prop_assert!((m.trace().re - 1.0).abs() < 1e-12);
            prop_assert!(m.is_psd(1e-9));
        }
    }

    #[test]
    fn square_probabilities_ignore_measurement_order(seed in any::<u64>(), round in 0usize..6) {
        let game = SquareGame::new();
        let rho = &random_states(4, 1, seed)[0];
        let inputs = valid_rounds()[round];
        let [a, b, c] = game.triple(inputs);
        for t in bit_tuples(3) {
            let abc = sequential_probability(rho, &[(a, t[0]), (b, t[1]), (c, t[2])], 1e-9).unwrap();
            let cba = sequential_probability(rho, &[(c, t[2]), (b, t[1]), (a, t[0])], 1e-9).unwrap();
            let bca = sequential_probability(rho, &[(b, t[1]), (c, t[2]), (a, t[0])], 1e-9).unwrap();
            prop_assert!((abc - cba).abs() < 1e-9);
            prop_assert!((abc - bca).abs() < 1e-9);
        }
    }

    #[test]
    fn square_distribution_sums_to_one(seed in any::<u64>()) {
        let game = SquareGame::new();
        let rho = &random_states(4, 1, seed)[0];
        for inputs in valid_rounds() {
            let total: f64 = bit_tuples(3)
                .map(|t| game.probability(rho, inputs, [t[0], t[1], t[2]]).unwrap())
                .sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
        }
    }
}
