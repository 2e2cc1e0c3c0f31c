//! Exact counts of order-preserving maps between chains and of monotone
//! partial self-maps with interval domains.
//!
//! `[r,t]` denotes the number of order-preserving maps from a `t`-chain into an
//! `r`-chain and `⟨r,t⟩` the number of such partial maps whose domain is a
//! nonempty interval of the `t`-chain.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// `[r,t] = binom(r+t−1, t)`.
pub fn count_order_preserving(r: u64, t: u64) -> Result<BigUint> {
    if r == 0 || t == 0 || r + t > 64 {
        return Err(Error::InvalidInput(format!("need r,t >= 1 and r+t <= 64, got ({r},{t})")));
    }
    Ok(binomial(r + t - 1, t))
}

/// `⟨r,t⟩ = Σ_{c=1}^{t} (t−c+1)[r,c]`: an interval of length `c` can sit in
/// `t−c+1` places and carries `[r,c]` monotone value lists.
pub fn count_interval_partial(r: u64, t: u64) -> Result<BigUint> {
    if r == 0 || t == 0 || r > 64 || t > 64 {
        return Err(Error::InvalidInput(format!("need 1 <= r,t <= 64, got ({r},{t})")));
    }
    let mut acc = BigUint::zero();
    for c in 1..=t {
        acc += BigUint::from(t - c + 1) * binomial(r + c - 1, c);
    }
    Ok(acc)
}

/// `d_r = binom(2r+1, r+1) − (r+1)`.
pub fn embedding_rank_trmax(r: u64) -> Result<BigUint> {
    if r == 0 || r > 30 {
        return Err(Error::InvalidInput(format!("need 1 <= r <= 30, got {r}")));
    }
    Ok(binomial(2 * r + 1, r + 1) - BigUint::from(r + 1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountTable {
    pub r_max: u64,
    pub t_max: u64,
    /// `values[r-1][t-1] = [r,t]`.
    pub values: Vec<Vec<BigUint>>,
}

impl CountTable {
    pub fn new(r_max: u64, t_max: u64) -> Result<Self> {
        let values = (1..=r_max)
            .map(|r| (1..=t_max).map(|t| count_order_preserving(r, t)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { r_max, t_max, values })
    }

    pub fn get(&self, r: u64, t: u64) -> &BigUint {
        &self.values[(r - 1) as usize][(t - 1) as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceViolation {
    pub identity: &'static str,
    pub r: u64,
    pub t: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceReport {
    pub r_max: u64,
    pub t_max: u64,
    pub checked: usize,
    pub violations: Vec<RecurrenceViolation>,
}

impl RecurrenceReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `[r+1,t] = [r,t] + … + [r,1] + 1` and `[r+1,t+1] = [r,t+1] + [r+1,t]`
/// for all `r < r_max`, `t < t_max`.
pub fn verify_recurrence(r_max: u64, t_max: u64) -> Result<RecurrenceReport> {
    if r_max == 0 || t_max == 0 || r_max > 12 || t_max > 12 {
        return Err(Error::InvalidInput("grid bounds must lie in 1..=12".into()));
    }
    let table = CountTable::new(r_max, t_max)?;
    let mut violations = Vec::new();
    let mut checked = 0;
    for r in 1..r_max {
        for t in 1..=t_max {
            let rhs = (1..=t).map(|c| table.get(r, c).clone()).sum::<BigUint>() + BigUint::one();
            checked += 1;
            if *table.get(r + 1, t) != rhs {
                violations.push(RecurrenceViolation { identity: "row-sum", r, t });
            }
            if t < t_max {
                checked += 1;
                if *table.get(r + 1, t + 1) != table.get(r, t + 1) + table.get(r + 1, t) {
                    violations.push(RecurrenceViolation { identity: "pascal", r, t });
                }
            }
        }
    }
    Ok(RecurrenceReport { r_max, t_max, checked, violations })
}

/// `binom(2r+1, r+1) = Σ_{k=0}^{r} (r+1−k)·binom(r−1+k, k)` (paths through
/// Pascal's triangle grouped by their first step off the boundary).
pub fn path_identity_holds(r: u64) -> bool {
    let lhs = binomial(2 * r + 1, r + 1);
    let rhs: BigUint = (0..=r)
        .map(|k| BigUint::from(r + 1 - k) * binomial(r + k - 1, k))
        .sum();
    lhs == rhs
}

/// All order-preserving maps from a `t`-chain into an `r`-chain as value
/// lists (values 1-based). Brute-force reference used by tests and reports.
pub fn enumerate_order_preserving(r: usize, t: usize) -> Vec<Vec<usize>> {
    fn go(r: usize, t: usize, lo: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == t {
            out.push(cur.clone());
            return;
        }
        for v in lo..=r {
            cur.push(v);
            go(r, t, v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(r, t, 1, &mut Vec::new(), &mut out);
    out
}
