mod common;

use common::*;
use ddmem::tensor::{
    embed, hermitian_eig, kron, partial_trace, qubit, trace_distance, trace_norm, unitary_exp, TensorOperator, C64,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn eigen_decomposition_reconstructs(seed in any::<u64>(), n in 1usize..=64) {
        let h = random_hermitian(&mut rng(seed), n);
        let spec = hermitian_eig(&h).unwrap();
        prop_assert!(spec.reconstruct().max_abs_diff(&h) < 1e-10 * n as f64);
        prop_assert!(spec.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        let v = &spec.eigenvectors;
        prop_assert!(v.adjoint().dot(v).max_abs_diff(&TensorOperator::identity(&[n])) < 1e-10 * n as f64);
    }

    #[test]
    fn eigenvalues_match_inertia_bisection(seed in any::<u64>(), n in 1usize..=12) {
        let h = random_hermitian(&mut rng(seed), n);
        let want = bisection_eigenvalues(&h);
        let got = hermitian_eig(&h).unwrap().eigenvalues;
        for (a, b) in got.iter().zip(&want) {
            prop_assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn trace_distance_matches_oracle(seed in any::<u64>(), n in 1usize..=6) {
        let mut r = rng(seed);
        let a = random_density(&mut r, n);
        let b = random_density(&mut r, n);
        let got = trace_distance(&a, &b).unwrap();
        let want = trace_distance_oracle(a.data(), b.data(), n);
        prop_assert!((got - want).abs() < 1e-10);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&got));
    }

    #[test]
    fn kron_is_associative_and_traces_multiply(seed in any::<u64>(), na in 1usize..4, nb in 1usize..4, nc in 1usize..4) {
        let mut r = rng(seed);
        let a = random_hermitian(&mut r, na);
        let b = random_hermitian(&mut r, nb);
        let c = random_hermitian(&mut r, nc);
        let left = kron(&kron(&a, &b), &c);
        let right = kron(&a, &kron(&b, &c));
        prop_assert!(left.max_abs_diff(&right) < 1e-14);
        prop_assert_eq!(left.dims(), &[na, nb, nc][..]);
        let tr = left.trace() - a.trace() * b.trace() * c.trace();
        prop_assert!(tr.norm() < 1e-12);
    }

    #[test]
    fn partial_trace_matches_summation_and_keeps_positivity(seed in any::<u64>(), na in 1usize..5, nb in 1usize..5) {
        let rho = random_density(&mut rng(seed), na * nb).with_dims(&[na, nb]).unwrap();
        let keep_a = partial_trace(&rho, &[0]).unwrap();
        let keep_b = partial_trace(&rho, &[1]).unwrap();
        prop_assert!(max_diff(keep_a.data(), &trace_out_second(rho.data(), na, nb)) < 1e-14);
        prop_assert!(max_diff(keep_b.data(), &trace_out_first(rho.data(), na, nb)) < 1e-14);
        for m in [&keep_a, &keep_b] {
            prop_assert!(m.validate_density().is_ok());
        }
    }

    #[test]
    fn unitary_exp_is_unitary_and_additive(seed in any::<u64>(), n in 1usize..8, t in -3.0f64..3.0) {
        let h = random_hermitian(&mut rng(seed), n);
        let u = unitary_exp(&h, t).unwrap();
        prop_assert!(u.is_unitary(1e-12));
        let half = unitary_exp(&h, t / 2.0).unwrap();
        prop_assert!(half.dot(&half).max_abs_diff(&u) < 1e-12);
        let minus_i_t = C64::new(0.0, -t);
        let taylor = expm(&h.data().iter().map(|v| v * minus_i_t).collect::<Vec<_>>(), n);
        prop_assert!(max_diff(u.data(), &taylor) < 1e-11);
    }

    #[test]
    fn embedded_local_operators_commute_across_factors(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_hermitian(&mut r, 2);
        let b = random_hermitian(&mut r, 3);
        let ea = embed(&a, &[2, 3], 0).unwrap();
        let eb = embed(&b, &[2, 3], 1).unwrap();
        prop_assert!(ea.dot(&eb).max_abs_diff(&eb.dot(&ea)) < 1e-14);
        prop_assert!(ea.dot(&eb).max_abs_diff(&kron(&a, &b)) < 1e-14);
    }
}

#[test]
fn trace_distance_metric_axioms_on_random_triples() {
    let mut r = rng(7);
    for n in [2, 3, 4, 6] {
        for _ in 0..125 {
            let (a, b, c) = (
                random_density(&mut r, n),
                random_density(&mut r, n),
                random_density(&mut r, n),
            );
            let ab = trace_distance(&a, &b).unwrap();
            let ba = trace_distance(&b, &a).unwrap();
            let bc = trace_distance(&b, &c).unwrap();
            let ac = trace_distance(&a, &c).unwrap();
            assert!(trace_distance(&a, &a).unwrap().abs() < 1e-10);
            assert!((ab - ba).abs() < 1e-10);
            assert!((-1e-10..=1.0 + 1e-10).contains(&ab));
            assert!(ac <= ab + bc + 1e-10);
        }
    }
}

#[test]
fn trace_norm_of_pauli_and_dims_mismatch() {
    assert!((trace_norm(&qubit::sigma_z()).unwrap() - 2.0).abs() < 1e-14);
    let a = TensorOperator::identity(&[2]);
    let b = TensorOperator::identity(&[3]);
    assert!(trace_distance(&a, &b).is_err());
    assert!(partial_trace(&kron(&a, &b), &[2]).is_err());
    assert!(partial_trace(&kron(&a, &b), &[0, 0]).is_err());
}

#[test]
fn degenerate_spectra_are_handled() {
    let p = TensorOperator::identity(&[5]).scaled(C64::new(2.0, 0.0));
    let spec = hermitian_eig(&p).unwrap();
    assert!(spec.eigenvalues.iter().all(|x| (x - 2.0).abs() < 1e-14));
    let z = kron(&qubit::sigma_z(), &TensorOperator::identity(&[3]));
    let spec = hermitian_eig(&z).unwrap();
    assert!(spec.reconstruct().max_abs_diff(&z) < 1e-13);
    assert_eq!(bisection_eigenvalues(&z).iter().filter(|x| **x < 0.0).count(), 3);
}
