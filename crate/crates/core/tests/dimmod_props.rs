use std::time::Duration;

use afalg::dimmod::*;
use afalg::semiring::{t2_semigroup, SemiringVector};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

fn big(m: &IntMatrix) -> Vec<Vec<BigInt>> {
    m.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
}

/// Leibniz expansion; fine for the tiny sizes used here.
fn det(m: &[Vec<BigInt>]) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::from(1);
    }
    (0..n)
        .map(|j| {
            let minor: Vec<Vec<BigInt>> = m[1..].iter().map(|r| r.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, x)| x.clone()).collect()).collect();
            let term = &m[0][j] * det(&minor);
            if j % 2 == 0 { term } else { -term }
        })
        .sum()
}

fn matrix(d: usize) -> impl Strategy<Value = IntMatrix> {
    prop::collection::vec(prop::collection::vec(0u64..4, d), d)
}

fn permuted(m: &IntMatrix, p: &[usize]) -> IntMatrix {
    let d = m.len();
    (0..d).map(|i| (0..d).map(|j| m[p[i]][p[j]]).collect()).collect()
}

fn perm(d: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..d).collect::<Vec<_>>()).prop_shuffle()
}

fn sized() -> impl Strategy<Value = (IntMatrix, Vec<usize>)> {
    (1usize..=4).prop_flat_map(|d| (matrix(d), perm(d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn smith_form_multiplies_to_determinant(m in (1usize..=4).prop_flat_map(matrix)) {
        let b = big(&m);
        let d = det(&b);
        let inv = smith_invariants(&b);
        let nonzero: Vec<&BigInt> = inv.iter().filter(|x| !x.is_zero()).collect();
        prop_assert_eq!(nonzero.len(), exact_rank(&b));
        for w in nonzero.windows(2) {
            prop_assert!((w[1] % w[0]).is_zero(), "{:?}", inv);
        }
        if !d.is_zero() {
            prop_assert_eq!(nonzero.into_iter().product::<BigInt>(), d.abs());
        }
    }

    #[test]
    fn rank_of_transpose_agrees(m in (1usize..=5).prop_flat_map(matrix)) {
        let d = m.len();
        let t: IntMatrix = (0..d).map(|i| (0..d).map(|j| m[j][i]).collect()).collect();
        prop_assert_eq!(exact_rank(&big(&m)), exact_rank(&big(&t)));
    }

    #[test]
    fn invariants_ignore_basis_order((m, p) in sized()) {
        let (a, b) = (matrix_invariants(&m).unwrap(), matrix_invariants(&permuted(&m, &p)).unwrap());
        prop_assert_eq!(a.eventual_rank, b.eventual_rank);
        prop_assert_eq!(&a.smith_invariants_sequence, &b.smith_invariants_sequence);
        prop_assert_eq!(&a.bowen_franks, &b.bowen_franks);
        prop_assert_eq!(&a.power_traces, &b.power_traces);
        prop_assert!((a.perron_radius - b.perron_radius).abs() <= 1e-9 * (1.0 + a.perron_radius));
    }

    #[test]
    fn permuted_matrices_get_a_verified_witness((m, p) in sized()) {
        let q = permuted(&m, &p);
        match module_isomorphic_matrices(&m, &q, 3, Duration::from_secs(5)).unwrap() {
            ModuleVerdict::Iso(w) => prop_assert!(verify_witness(&m, &q, &w)),
            other => prop_assert!(false, "{:?}", other),
        }
    }
}

#[test]
fn lag_one_splitting() {
    let a: IntMatrix = vec![vec![2]];
    let b: IntMatrix = vec![vec![1, 1], vec![1, 1]];
    match module_isomorphic_matrices(&a, &b, 3, Duration::from_secs(5)).unwrap() {
        ModuleVerdict::Iso(w) => assert!(verify_witness(&a, &b, &w)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn different_perron_radius_is_not_isomorphic() {
    let a: IntMatrix = vec![vec![2]];
    let b: IntMatrix = vec![vec![3]];
    assert!(matches!(module_isomorphic_matrices(&a, &b, 3, Duration::from_secs(1)).unwrap(), ModuleVerdict::NotIso(_)));
}

#[test]
fn stationary_scales_grow_by_grading() {
    let t = t2_semigroup().unwrap();
    let c = SemiringVector::from_coeffs(t, vec![1, 1, 0]).unwrap();
    let s = build_stationary(t, &c, 5).unwrap();
    assert_eq!(s.stage_sizes, vec![1, 2, 4, 8, 16]);
    let inv = limit_invariants(&s).unwrap();
    assert!((inv.perron_radius - 2.0).abs() < 1e-9);
}
