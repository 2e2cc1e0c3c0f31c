use afalg::constructions::*;
use afalg::homkit::*;
use afalg::semiring::{classify_vclass, vclass_distance, VClass};
use afalg::{SpectralClass, ToleranceProfile};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tol() -> ToleranceProfile {
    ToleranceProfile::default()
}

#[test]
fn constructions_are_homomorphisms() {
    let mut maps = vec![phi_alpha_t3(0.35).unwrap(), rho_theta_l2(1.1).unwrap(), tau_l2().unwrap(), phi_t_v(0.25).unwrap()];
    maps.extend((0..3).map(|i| theta_t2(i).unwrap()));
    maps.extend((0..4).map(|i| theta_v(i).unwrap()));
    maps.extend((2..=4).map(|n| bipartite_theta(n).unwrap()));
    for m in &maps {
        assert!(m.homomorphism_residual() < 1e-10, "{}", m.domain().descriptor());
    }
}

#[test]
fn t2_classes_add_over_direct_sums() {
    let thetas: Vec<_> = (0..3).map(|i| theta_t2(i).unwrap()).collect();
    for i in 0..3 {
        for j in 0..3 {
            let mut want = [0usize; 3];
            want[i] += 1;
            want[j] += 1;
            let got = classify_t2(&direct_sum(&thetas[i], &thetas[j]).unwrap(), &tol()).unwrap();
            assert_eq!([got.0, got.1, got.2], want);
        }
    }
}

#[test]
fn tau_squared_splits_into_two_taus() {
    let t = tau_l2().unwrap();
    let tt = compose(&t, &t).unwrap();
    let dec = krull_schmidt(&tt, &tol()).unwrap();
    assert_eq!(dec.summands.len(), 2);
    for s in &dec.summands {
        assert_eq!(s.total_multiplicity(), t.total_multiplicity());
        assert!(inner_equivalent(s, &t, &tol()).unwrap().is_equivalent());
    }
}

#[test]
fn rotations_compose_additively() {
    let (a, b) = (0.4, 1.3);
    let comp = compose(&rho_theta_l2(a).unwrap(), &rho_theta_l2(b).unwrap()).unwrap();
    let direct = rho_theta_l2(a + b).unwrap();
    assert!(inner_equivalent(&comp, &direct, &tol()).unwrap().is_equivalent());
    let other = rho_theta_l2(a + b + 0.5).unwrap();
    assert!(!inner_equivalent(&comp, &other, &tol()).unwrap().is_equivalent());
}

#[test]
fn decreasing_family_separates() {
    let (f, g) = (phi_alpha_t3(0.3).unwrap(), phi_alpha_t3(0.7).unwrap());
    assert!(map_distance_lower(&f, &g).unwrap() > 0.39);
    assert_eq!(krull_schmidt(&f, &tol()).unwrap().summands.len(), 1);
}

#[test]
fn stability_bound_holds_for_small_n() {
    for n in 2..=6 {
        let r = stability_counterexample(n, 3).unwrap();
        assert!(r.delta <= 1.0 / n as f64 + 1e-12, "n={n} δ={}", r.delta);
        assert!(r.certified_lower_bound >= 0.5 - 1e-9, "n={n}");
    }
}

fn spectrum() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..0.95, 1..=2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn v_classes_survive_inner_conjugation(vals in spectrum(), seed in any::<u64>()) {
        let m = phi_c_v(&SpectralClass::from_values(&vals, 1e-12)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let conj = m.conjugate(&random_inner_unitary(m.codomain(), &mut rng));
        let (a, b) = (classify_vclass(&m, &tol()).unwrap(), classify_vclass(&conj, &tol()).unwrap());
        prop_assert!(vclass_distance(&a, &b) < 1e-6);
        prop_assert!(map_distance_lower(&m, &conj).unwrap() < 1e-6);
        prop_assert!(inner_equivalent(&m, &conj, &tol()).unwrap().is_equivalent());
    }

    #[test]
    fn product_law_for_v_classes(t in 0.05f64..0.95, s in 0.05f64..0.95) {
        let comp = compose(&phi_t_v(t).unwrap(), &phi_t_v(s).unwrap()).unwrap();
        let class = classify_vclass(&comp, &tol()).unwrap();
        let u = t + (1.0 - t) * s;
        let want = VClass::irregular(SpectralClass::from_values(&[u, u], 1e-12)).unwrap();
        prop_assert!(vclass_distance(&class, &want) < 1e-8, "{class}");
    }

    #[test]
    fn t2_classification_is_conjugation_invariant(picks in prop::collection::vec(0usize..3, 1..=3), seed in any::<u64>()) {
        let parts: Vec<StarMap> = picks.iter().map(|&i| theta_t2(i).unwrap()).collect();
        let m = direct_sum_all(&parts).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let conj = m.conjugate(&random_inner_unitary(m.codomain(), &mut rng));
        prop_assert_eq!(classify_t2(&m, &tol()).unwrap(), classify_t2(&conj, &tol()).unwrap());
        prop_assert_eq!(krull_schmidt_seeded(&conj, &tol(), seed).unwrap().summands.len(), picks.len());
    }
}
