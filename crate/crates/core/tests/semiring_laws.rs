use afalg::semiring::*;
use proptest::prelude::*;

fn vector(table: &SemigroupTable) -> impl Strategy<Value = SemiringVector> {
    let table = table.clone();
    prop::collection::vec(0u64..4, table.len()).prop_map(move |c| SemiringVector::from_coeffs(&table, c).unwrap())
}

fn triple(table: SemigroupTable) -> impl Strategy<Value = (SemigroupTable, SemiringVector, SemiringVector, SemiringVector)> {
    (vector(&table), vector(&table), vector(&table)).prop_map(move |(a, b, c)| (table.clone(), a, b, c))
}

fn tables() -> impl Strategy<Value = (SemigroupTable, SemiringVector, SemiringVector, SemiringVector)> {
    prop_oneof![triple(t2_semigroup().unwrap().clone()), triple(pend_table(2).unwrap()), triple(pend_table(3).unwrap())]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn semiring_axioms((t, a, b, c) in tables()) {
        let mul = |x: &SemiringVector, y: &SemiringVector| semiring_mul(&t, x, y).unwrap();
        prop_assert_eq!(mul(&mul(&a, &b), &c), mul(&a, &mul(&b, &c)));
        prop_assert_eq!(mul(&a, &b.add(&c).unwrap()), mul(&a, &b).add(&mul(&a, &c)).unwrap());
        prop_assert_eq!(mul(&a.add(&b).unwrap(), &c), mul(&a, &c).add(&mul(&b, &c)).unwrap());
        prop_assert_eq!(a.add(&b).unwrap(), b.add(&a).unwrap());
        prop_assert!(mul(&a, &SemiringVector::zero(&t)).is_zero());
        if let Some(id) = t.identity_element() {
            let e = SemiringVector::basis_element(&t, id);
            prop_assert_eq!(mul(&e, &a), a.clone());
            prop_assert_eq!(mul(&a, &e), a.clone());
        }
    }

    #[test]
    fn grading_is_additive((t, a, b, _c) in tables()) {
        prop_assert_eq!(grading(&t, &a.add(&b).unwrap()).unwrap(), grading(&t, &a).unwrap() + grading(&t, &b).unwrap());
    }

    #[test]
    fn t2_grading_is_multiplicative((_t, a, b, _c) in triple(t2_semigroup().unwrap().clone())) {
        let t = t2_semigroup().unwrap();
        prop_assert_eq!(grading(t, &semiring_mul(t, &a, &b).unwrap()).unwrap(), grading(t, &a).unwrap() * grading(t, &b).unwrap());
    }

    #[test]
    fn l2_rules(x in 0.0f64..6.0, y in 0.0f64..6.0, k in 0u64..3) {
        let (rx, ry, tau) = (L2Element::rho(x), L2Element::rho(y), L2Element::tau());
        let prod = rx.mul(&ry);
        prop_assert_eq!(prod.rotations.len(), 1);
        prop_assert!((prod.rotations[0] - (x + y).rem_euclid(std::f64::consts::TAU)).abs() < 1e-12);
        prop_assert_eq!(rx.mul(&tau).tau, 1);
        prop_assert_eq!(tau.mul(&tau).tau, 2);
        let mut sum = rx.clone();
        for _ in 0..k {
            sum = sum.add(&tau);
        }
        prop_assert_eq!(sum.mul(&ry).grading(), sum.grading() * ry.grading());
    }
}

#[test]
fn action_matrix_rows_follow_the_table() {
    let t = pend_table(2).unwrap();
    let c = SemiringVector::basis_element(&t, 1);
    let m = action_matrix(&t, &c).unwrap();
    for j in 0..t.len() {
        let col: u64 = (0..t.len()).map(|i| m[i][j]).sum();
        assert!(col <= 1);
    }
}

#[test]
fn mismatched_bases_are_rejected() {
    let (a, b) = (pend_table(2).unwrap(), t2_semigroup().unwrap());
    let x = SemiringVector::zero(&a);
    let y = SemiringVector::zero(b);
    assert!(x.add(&y).is_err());
    assert!(semiring_mul(&a, &x, &y).is_err());
    assert!(SemiringVector::from_coeffs(&a, vec![1]).is_err());
}
