use std::collections::BTreeSet;

use afalg::combinat::*;
use afalg::semiring::{pend_compose, pend_elements, pend_table};
use num_bigint::BigUint;
use proptest::prelude::*;

/// Every function from a `t`-set into an `r`-set, filtered to monotone ones.
fn brute_monotone(r: usize, t: usize) -> usize {
    (0..r.pow(t as u32))
        .filter(|&code| {
            let vals: Vec<usize> = (0..t).map(|i| code / r.pow(i as u32) % r).collect();
            vals.windows(2).all(|w| w[0] <= w[1])
        })
        .count()
}

/// Monotone partial maps from a `t`-chain to an `r`-chain with interval domain.
fn brute_interval_partial(r: usize, t: usize) -> usize {
    (0..t).flat_map(|a| (a..t).map(move |b| brute_monotone(r, b - a + 1))).sum()
}

#[test]
fn order_preserving_matches_brute_force() {
    for r in 1..=6 {
        for t in 1..=6 {
            assert_eq!(count_order_preserving(r, t).unwrap(), BigUint::from(brute_monotone(r as usize, t as usize)), "[{r},{t}]");
            assert_eq!(enumerate_order_preserving(r as usize, t as usize).len(), brute_monotone(r as usize, t as usize));
            assert_eq!(count_interval_partial(r, t).unwrap(), BigUint::from(brute_interval_partial(r as usize, t as usize)));
        }
    }
}

#[test]
fn pend_counts_match_embedding_rank() {
    let expected = [1u64, 7, 31, 121, 456, 1709, 6427, 24301];
    for (r, &e) in (1..=8).zip(&expected) {
        assert_eq!(pend_elements(r).unwrap().len() as u64, e);
        assert_eq!(embedding_rank_trmax(r as u64).unwrap(), BigUint::from(e));
    }
}

#[test]
fn pend_is_closed_under_composition() {
    let elems = pend_elements(3).unwrap();
    let set: BTreeSet<_> = elems.iter().cloned().collect();
    for g in &elems {
        for h in &elems {
            if let Some(c) = pend_compose(g, h).unwrap() {
                assert!(set.contains(&c), "{g} ∘ {h} = {c}");
            }
        }
    }
}

#[test]
fn pend_table_is_associative() {
    let t = pend_table(3).unwrap();
    let n = t.len();
    for i in 0..n {
        for j in 0..n {
            for k in (0..n).step_by(3) {
                let left = t.mul(i, j).and_then(|ij| t.mul(ij, k));
                let right = t.mul(j, k).and_then(|jk| t.mul(i, jk));
                assert_eq!(left, right);
            }
        }
    }
}

#[test]
fn recurrences_hold() {
    assert!(verify_recurrence(12, 12).unwrap().passed());
    assert!((1..=25).all(path_identity_holds));
}

#[test]
fn out_of_range_arguments_are_rejected() {
    assert!(count_order_preserving(0, 3).is_err());
    assert!(count_interval_partial(3, 0).is_err());
    assert!(embedding_rank_trmax(0).is_err());
    assert!(pend_elements(11).is_err());
    assert!(verify_recurrence(13, 4).is_err());
}

proptest! {
    #[test]
    fn pascal_rule(n in 1u64..60, k in 1u64..60) {
        prop_assert_eq!(binomial(n, k), binomial(n - 1, k - 1) + binomial(n - 1, k));
    }

    #[test]
    fn order_preserving_recurrence(r in 2u64..25, t in 2u64..25) {
        let lhs = count_order_preserving(r, t).unwrap();
        let rhs = count_order_preserving(r - 1, t).unwrap() + count_order_preserving(r, t - 1).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn interval_partial_counts_diagonal(r in 1u64..30) {
        prop_assert_eq!(count_interval_partial(r, r).unwrap(), embedding_rank_trmax(r).unwrap());
    }
}
