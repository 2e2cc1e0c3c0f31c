//! Dimension modules of direct systems and the asymptotic equivalence test
//! for contraction sequences.
//!
//! Stationary systems over a semigroup table are compared through
//! shift-equivalence invariants of their action matrix; isomorphism is
//! confirmed only by an explicit nonnegative integer witness.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{unitary_orbit_distance, SpectralClass};
use crate::semiring::{action_matrix, grading, SemigroupTable, SemiringVector, VClass};

pub type IntMatrix = Vec<Vec<u64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StationaryClass {
    Table(SemiringVector),
    /// Stored symbolically; the V-class semiring has no finite basis.
    V(VClass),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionSystem {
    pub basis_dim: usize,
    pub stage_summands: Vec<usize>,
    /// `action_matrices[k]` maps stage `k` to stage `k+1`.
    pub action_matrices: Vec<IntMatrix>,
    pub scale_vectors: Vec<Vec<u64>>,
    /// Matrix size of the building block at each stage, in units of the template.
    pub stage_sizes: Vec<u64>,
    pub stationary: Option<(IntMatrix, StationaryClass)>,
}

fn mat_vec(m: &IntMatrix, v: &[u64]) -> Vec<u64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

impl DimensionSystem {
    /// General system from explicit matrices; shapes must chain.
    pub fn new(basis_dim: usize, stage_summands: Vec<usize>, action_matrices: Vec<IntMatrix>, scale0: Vec<u64>, size0: u64) -> Result<Self> {
        if stage_summands.len() != action_matrices.len() + 1 {
            return Err(Error::ShapeMismatch("k stages need k−1 maps".into()));
        }
        for (k, m) in action_matrices.iter().enumerate() {
            let (rows, cols) = (basis_dim * stage_summands[k + 1], basis_dim * stage_summands[k]);
            if m.len() != rows || m.iter().any(|r| r.len() != cols) {
                return Err(Error::ShapeMismatch(format!("map {k} should be {rows}x{cols}")));
            }
        }
        if scale0.len() != basis_dim * stage_summands[0] {
            return Err(Error::ShapeMismatch("initial scale vector has the wrong length".into()));
        }
        let mut scale_vectors = vec![scale0];
        let mut stage_sizes = vec![size0];
        for m in &action_matrices {
            let next = mat_vec(m, scale_vectors.last().expect("nonempty"));
            let growth = next.iter().sum::<u64>().max(1) as f64 / scale_vectors.last().unwrap().iter().sum::<u64>().max(1) as f64;
            stage_sizes.push((*stage_sizes.last().unwrap() as f64 * growth).round() as u64);
            scale_vectors.push(next);
        }
        Ok(Self { basis_dim, stage_summands, action_matrices, scale_vectors, stage_sizes, stationary: None })
    }
}

/// Constant system with action matrix `M(c)`; the stage-0 scale is the
/// identity class and later scales are its images.
pub fn build_stationary(table: &SemigroupTable, c: &SemiringVector, stages: usize) -> Result<DimensionSystem> {
    if stages == 0 {
        return Err(Error::InvalidInput("need at least one stage".into()));
    }
    let m = action_matrix(table, c)?;
    let d = table.len();
    let id = table
        .identity_element()
        .ok_or_else(|| Error::InvalidInput(format!("table {} has no identity class for the unit scale", table.name)))?;
    let mut scale0 = vec![0; d];
    scale0[id] = 1;
    let g = grading(table, c)?;
    let mut scale_vectors = vec![scale0];
    let mut stage_sizes = vec![1u64];
    for _ in 1..stages {
        let next = mat_vec(&m, scale_vectors.last().unwrap());
        scale_vectors.push(next);
        stage_sizes.push(stage_sizes.last().unwrap().saturating_mul(g));
    }
    Ok(DimensionSystem {
        basis_dim: d,
        stage_summands: vec![1; stages],
        action_matrices: vec![m.clone(); stages - 1],
        scale_vectors,
        stage_sizes,
        stationary: Some((m, StationaryClass::Table(c.clone()))),
    })
}

/// Stationary V-algebra system; only stage sizes are tracked.
pub fn build_stationary_v(c: &VClass, stages: usize) -> Result<DimensionSystem> {
    if stages == 0 || c.is_zero() {
        return Err(Error::InvalidInput("need at least one stage and a nonzero class".into()));
    }
    let g = c.grading();
    let stage_sizes = (0..stages as u32).map(|k| g.saturating_pow(k)).collect();
    Ok(DimensionSystem {
        basis_dim: 0,
        stage_summands: vec![1; stages],
        action_matrices: Vec::new(),
        scale_vectors: Vec::new(),
        stage_sizes,
        stationary: Some((Vec::new(), StationaryClass::V(c.clone()))),
    })
}

/// Whether `v` (over the table basis, at stage `k`) lies in the stage scale:
/// its grading fits in the stage's matrix size.
pub fn scale_contains(s: &DimensionSystem, table: &SemigroupTable, k: usize, v: &[u64]) -> Result<bool> {
    if k >= s.stage_sizes.len() {
        return Err(Error::InvalidInput(format!("stage {k} out of range")));
    }
    if v.len() != table.len() {
        return Err(Error::ShapeMismatch("vector length differs from the basis".into()));
    }
    let g: u64 = v.iter().zip(&table.multiplicities).map(|(a, m)| a * m).sum();
    Ok(g <= s.stage_sizes[k])
}

fn to_big(m: &IntMatrix) -> Vec<Vec<BigInt>> {
    m.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
}

fn big_mul(a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let n = a.len();
    let m = b.first().map_or(0, Vec::len);
    let inner = b.len();
    let mut out = vec![vec![BigInt::zero(); m]; n];
    for i in 0..n {
        for k in 0..inner {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..m {
                if !b[k][j].is_zero() {
                    out[i][j] += &a[i][k] * &b[k][j];
                }
            }
        }
    }
    out
}

fn big_identity(n: usize) -> Vec<Vec<BigInt>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect()).collect()
}

/// Exact rank by fraction-free elimination.
pub fn exact_rank(m: &[Vec<BigInt>]) -> usize {
    let mut a: Vec<Vec<BigInt>> = m.to_vec();
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut rank = 0;
    let mut prev = BigInt::one();
    for c in 0..cols {
        let Some(p) = (rank..rows).find(|&r| !a[r][c].is_zero()) else { continue };
        a.swap(rank, p);
        for r in rank + 1..rows {
            for j in c + 1..cols {
                let v = (&a[rank][c] * &a[r][j] - &a[r][c] * &a[rank][j]) / &prev;
                a[r][j] = v;
            }
            a[r][c] = BigInt::zero();
        }
        prev = a[rank][c].clone();
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

/// Smith normal form diagonal (nonnegative, each dividing the next; zeros last).
pub fn smith_invariants(m: &[Vec<BigInt>]) -> Vec<BigInt> {
    let mut a: Vec<Vec<BigInt>> = m.to_vec();
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut diag = Vec::new();
    let mut t = 0;
    while t < rows.min(cols) {
        // Pivot: smallest nonzero absolute value in the remaining submatrix.
        let mut best: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if !a[i][j].is_zero() && best.is_none_or(|(bi, bj)| a[i][j].abs() < a[bi][bj].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        a.swap(t, pi);
        for row in a.iter_mut() {
            row.swap(t, pj);
        }
        loop {
            let mut dirty = false;
            for i in t + 1..rows {
                if a[i][t].is_zero() {
                    continue;
                }
                let q = &a[i][t] / &a[t][t];
                for j in t..cols {
                    let v = &a[i][j] - &q * &a[t][j];
                    a[i][j] = v;
                }
                if !a[i][t].is_zero() {
                    a.swap(t, i);
                    dirty = true;
                }
            }
            for j in t + 1..cols {
                if a[t][j].is_zero() {
                    continue;
                }
                let q = &a[t][j] / &a[t][t];
                for row in a.iter_mut().skip(t) {
                    let v = &row[j] - &q * &row[t];
                    row[j] = v;
                }
                if !a[t][j].is_zero() {
                    for row in a.iter_mut() {
                        row.swap(t, j);
                    }
                    dirty = true;
                }
            }
            if dirty {
                continue;
            }
            // Enforce divisibility of the remaining block by the pivot.
            let mut fix = None;
            'outer: for i in t + 1..rows {
                for j in t + 1..cols {
                    if !(&a[i][j] % &a[t][t]).is_zero() {
                        fix = Some(i);
                        break 'outer;
                    }
                }
            }
            match fix {
                Some(i) => {
                    for j in t..cols {
                        let v = &a[t][j] + &a[i][j];
                        a[t][j] = v;
                    }
                }
                None => break,
            }
        }
        diag.push(a[t][t].abs());
        t += 1;
    }
    diag.resize(rows.min(cols), BigInt::zero());
    diag
}

/// `tr(M^k)` for `k = 1..=count`.
fn big_power_traces(m: &[Vec<BigInt>], count: usize) -> Vec<BigInt> {
    let d = m.len();
    let mut p = big_identity(d);
    (0..count)
        .map(|_| {
            p = big_mul(&p, m);
            (0..d).map(|i| p[i][i].clone()).sum()
        })
        .collect()
}

/// Characteristic polynomial from power traces (Newton's identities), highest
/// degree first.
fn charpoly_from_traces(traces: &[BigInt]) -> Vec<BigInt> {
    let mut c = vec![BigInt::one()];
    for k in 1..=traces.len() {
        let acc: BigInt = (0..k).map(|i| &c[i] * &traces[k - 1 - i]).sum();
        c.push(-acc / BigInt::from(k));
    }
    c
}

type Poly = Vec<BigRational>;

fn poly_trim(mut p: Poly) -> Poly {
    while p.len() > 1 && p[0].is_zero() {
        p.remove(0);
    }
    p
}

/// Remainder and quotient of `a / b`, both highest degree first.
fn poly_divmod(a: &Poly, b: &Poly) -> (Poly, Poly) {
    let mut r = a.clone();
    let mut q = Vec::new();
    while r.len() >= b.len() && !(r.len() == 1 && r[0].is_zero()) {
        let f = &r[0] / &b[0];
        for (i, bi) in b.iter().enumerate() {
            r[i] = &r[i] - &f * bi;
        }
        r.remove(0);
        q.push(f);
    }
    if q.is_empty() {
        q.push(BigRational::zero());
    }
    (q, poly_trim(if r.is_empty() { vec![BigRational::zero()] } else { r }))
}

fn poly_gcd(a: &Poly, b: &Poly) -> Poly {
    let (mut a, mut b) = (a.clone(), b.clone());
    while !(b.len() == 1 && b[0].is_zero()) {
        let (_, r) = poly_divmod(&a, &b);
        a = b;
        b = r;
    }
    a
}

/// Spectral radius from the exact characteristic polynomial: repeated roots
/// are divided out first, so the root finding sees only simple roots.
fn spectral_radius_exact(traces: &[BigInt]) -> f64 {
    let f: Poly = charpoly_from_traces(traces).into_iter().map(BigRational::from_integer).collect();
    let n = f.len() - 1;
    let df: Poly = poly_trim(f[..n].iter().enumerate().map(|(i, c)| c * BigRational::from_integer(BigInt::from(n - i))).collect());
    let g = if n == 0 { f.clone() } else { poly_divmod(&f, &poly_gcd(&f, &df)).0 };
    let mut sq: Vec<f64> = g.iter().map(|c| c.to_f64().unwrap_or(0.0)).collect();
    while sq.len() > 1 && sq[sq.len() - 1] == 0.0 {
        sq.pop();
    }
    let deg = sq.len() - 1;
    if deg == 0 {
        return 0.0;
    }
    let comp = nalgebra::DMatrix::<f64>::from_fn(deg, deg, |i, j| if i == 0 { -sq[j + 1] / sq[0] } else { f64::from(u8::from(i == j + 1)) });
    let mut r = comp.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
    // The Perron root is real and simple in `sq`; polish it with Newton steps.
    for _ in 0..50 {
        let (mut v, mut dv) = (0.0, 0.0);
        for &c in &sq {
            dv = dv * r + v;
            v = v * r + c;
        }
        if dv == 0.0 {
            break;
        }
        let step = v / dv;
        r -= step;
        if step.abs() <= f64::EPSILON * r.abs() {
            break;
        }
    }
    r
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitInvariant {
    pub eventual_rank: usize,
    pub stabilization_stage: usize,
    /// Smith invariants of `M^k` at the stabilization stage and the next.
    pub smith_invariants_sequence: Vec<Vec<String>>,
    /// Smith invariants of `I − M` other than 1.
    pub bowen_franks: Vec<String>,
    /// `tr(M^k)` for `k = 1..=d`; determines the nonzero spectrum.
    pub power_traces: Vec<String>,
    pub perron_radius: f64,
    pub perron_sign_pattern: Vec<i8>,
    pub scale_description: String,
}

const MAX_EXACT_DIM: usize = 40;

pub fn limit_invariants(s: &DimensionSystem) -> Result<LimitInvariant> {
    let (m, _) = s
        .stationary
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("limit invariants are computed for stationary systems".into()))?;
    if m.is_empty() {
        return Err(Error::InvalidInput("symbolic stationary systems carry no action matrix".into()));
    }
    matrix_invariants(m)
}

pub fn matrix_invariants(m: &IntMatrix) -> Result<LimitInvariant> {
    let d = m.len();
    if d == 0 || m.iter().any(|r| r.len() != d) {
        return Err(Error::ShapeMismatch("action matrix must be square and nonempty".into()));
    }
    let mb = to_big(m);
    let mut power = mb.clone();
    let mut prev_rank = exact_rank(&power);
    let mut stage = 1;
    loop {
        let next = big_mul(&power, &mb);
        let r = exact_rank(&next);
        if r == prev_rank {
            break;
        }
        if stage > d {
            return Err(Error::NonStabilizing(stage));
        }
        power = next;
        prev_rank = r;
        stage += 1;
    }
    let fmt = |v: Vec<BigInt>| v.into_iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let snf_seq = vec![fmt(smith_invariants(&power)), fmt(smith_invariants(&big_mul(&power, &mb)))];
    let i_minus: Vec<Vec<BigInt>> = (0..d)
        .map(|i| (0..d).map(|j| if i == j { BigInt::one() } else { BigInt::zero() } - &mb[i][j]).collect())
        .collect();
    let bowen_franks = fmt(smith_invariants(&i_minus).into_iter().filter(|x| !x.is_one()).collect());
    let mf = nalgebra::DMatrix::<f64>::from_fn(d, d, |i, j| m[i][j] as f64);
    let (power_traces, perron_radius) = if d <= MAX_EXACT_DIM {
        let traces = big_power_traces(&mb, d);
        let radius = spectral_radius_exact(&traces);
        (traces.iter().map(ToString::to_string).collect(), radius)
    } else {
        (Vec::new(), mf.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max))
    };
    let shifted = &mf + nalgebra::DMatrix::<f64>::identity(d, d);
    let mut v = nalgebra::DVector::<f64>::from_element(d, 1.0);
    for _ in 0..2000 {
        let w = &shifted * &v;
        let n = w.norm();
        if n == 0.0 {
            break;
        }
        v = w / n;
    }
    let perron_sign_pattern = v.iter().map(|&x| i8::from(x > 1e-9)).collect();
    Ok(LimitInvariant {
        eventual_rank: prev_rank,
        stabilization_stage: stage,
        smith_invariants_sequence: snf_seq,
        bowen_franks,
        power_traces,
        perron_radius,
        perron_sign_pattern,
        scale_description: format!("unit class pushed forward by M; {d} basis classes"),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftWitness {
    pub lag: usize,
    pub r: IntMatrix,
    pub s: IntMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModuleVerdict {
    Iso(ShiftWitness),
    NotIso(String),
    Unknown(String),
}

fn imul(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let inner = b.len();
    let m = b.first().map_or(0, Vec::len);
    a.iter().map(|row| (0..m).map(|j| (0..inner).map(|k| row[k] * b[k][j]).sum()).collect()).collect()
}

fn ipow(a: &IntMatrix, k: usize) -> IntMatrix {
    let d = a.len();
    let mut p: IntMatrix = (0..d).map(|i| (0..d).map(|j| u64::from(i == j)).collect()).collect();
    for _ in 0..k {
        p = imul(&p, a);
    }
    p
}

/// `R M₁ = M₂ R`, `S M₂ = M₁ S`, `R S = M₂^ℓ`, `S R = M₁^ℓ`.
pub fn verify_witness(m1: &IntMatrix, m2: &IntMatrix, w: &ShiftWitness) -> bool {
    let (r, s) = (&w.r, &w.s);
    imul(r, m1) == imul(m2, r)
        && imul(s, m2) == imul(m1, s)
        && imul(r, s) == ipow(m2, w.lag)
        && imul(s, r) == ipow(m1, w.lag)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                go(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Enumerates `rows × cols` matrices with entries `0..=bound` in odometer order.
fn for_each_matrix(rows: usize, cols: usize, bound: u64, deadline: Instant, mut f: impl FnMut(&IntMatrix) -> bool) -> Option<bool> {
    let n = rows * cols;
    let mut digits = vec![0u64; n];
    loop {
        if Instant::now() > deadline {
            return None;
        }
        let m: IntMatrix = (0..rows).map(|i| digits[i * cols..(i + 1) * cols].to_vec()).collect();
        if f(&m) {
            return Some(true);
        }
        let mut k = 0;
        loop {
            if k == n {
                return Some(false);
            }
            digits[k] += 1;
            if digits[k] <= bound {
                break;
            }
            digits[k] = 0;
            k += 1;
        }
    }
}

const MAX_SEARCH_CELLS: usize = 12;

/// Isomorphism of stationary dimension modules: invariant comparison, then a
/// bounded search for a shift-equivalence witness.
pub fn module_isomorphic_stationary(s1: &DimensionSystem, s2: &DimensionSystem, search_bound: u64, deadline: Duration) -> Result<ModuleVerdict> {
    let get = |s: &DimensionSystem| {
        s.stationary
            .as_ref()
            .map(|x| x.0.clone())
            .filter(|m| !m.is_empty())
            .ok_or_else(|| Error::InvalidInput("module comparison needs stationary table systems".into()))
    };
    let (m1, m2) = (get(s1)?, get(s2)?);
    module_isomorphic_matrices(&m1, &m2, search_bound, deadline)
}

pub fn module_isomorphic_matrices(m1: &IntMatrix, m2: &IntMatrix, search_bound: u64, deadline: Duration) -> Result<ModuleVerdict> {
    let stop = Instant::now() + deadline;
    let (i1, i2) = (matrix_invariants(m1)?, matrix_invariants(m2)?);
    if i1.eventual_rank != i2.eventual_rank {
        return Ok(ModuleVerdict::NotIso(format!("eventual rank {} vs {}", i1.eventual_rank, i2.eventual_rank)));
    }
    if i1.bowen_franks != i2.bowen_franks {
        return Ok(ModuleVerdict::NotIso(format!("coker(I−M) {:?} vs {:?}", i1.bowen_franks, i2.bowen_franks)));
    }
    let (d1, d2) = (m1.len(), m2.len());
    // Traces of the first max(d1, d2) powers pin down the nonzero spectrum
    // exactly; the floating Perron radius is only reported, never compared.
    let k = d1.max(d2);
    if k <= MAX_EXACT_DIM && big_power_traces(&to_big(m1), k) != big_power_traces(&to_big(m2), k) {
        return Ok(ModuleVerdict::NotIso("nonzero spectra differ (power traces)".into()));
    }
    if m1 == m2 {
        let id = ipow(m1, 0);
        return Ok(ModuleVerdict::Iso(ShiftWitness { lag: 0, r: id.clone(), s: id }));
    }
    if d1 == d2 && d1 <= 8 {
        for p in permutations(d1) {
            let r: IntMatrix = (0..d1).map(|i| (0..d1).map(|j| u64::from(p[j] == i)).collect()).collect();
            let s: IntMatrix = (0..d1).map(|i| (0..d1).map(|j| u64::from(p[i] == j)).collect()).collect();
            let w = ShiftWitness { lag: 0, r, s };
            if verify_witness(m1, m2, &w) {
                return Ok(ModuleVerdict::Iso(w));
            }
        }
    }
    if d1 * d2 > MAX_SEARCH_CELLS {
        return Ok(ModuleVerdict::Unknown(format!("invariants agree; {d2}x{d1} witness search exceeds the enumeration limit")));
    }
    for lag in 1..=search_bound as usize {
        let p1 = ipow(m1, lag);
        let p2 = ipow(m2, lag);
        let mut found = None;
        let outcome = for_each_matrix(d2, d1, search_bound, stop, |r| {
            if imul(r, m1) != imul(m2, r) {
                return false;
            }
            let inner = for_each_matrix(d1, d2, search_bound, stop, |s| {
                if imul(r, s) == p2 && imul(s, r) == p1 && imul(s, m2) == imul(m1, s) {
                    found = Some(ShiftWitness { lag, r: r.clone(), s: s.clone() });
                    true
                } else {
                    false
                }
            });
            inner == Some(true)
        });
        if let Some(w) = found {
            return Ok(ModuleVerdict::Iso(w));
        }
        if outcome.is_none() {
            return Ok(ModuleVerdict::Unknown("witness search hit the deadline".into()));
        }
    }
    Ok(ModuleVerdict::Unknown(format!("invariants agree; no witness with entries and lag <= {search_bound}")))
}

/// Spectra `σ(C_k)` of positive contractions. Zero eigenvalues are allowed so
/// that rank-deficient stationary contractions can be expressed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionSequence {
    pub items: Vec<SpectralClass>,
}

impl ContractionSequence {
    pub fn new(items: Vec<SpectralClass>) -> Result<Self> {
        if items.is_empty() || items.len() > 12 {
            return Err(Error::InvalidInput("sequences hold 1..=12 contractions".into()));
        }
        for c in &items {
            if c.is_empty() || c.pairs().iter().any(|&(t, _)| !(0.0..=1.0).contains(&t)) {
                return Err(Error::InvalidInput(format!("{c} is not the spectrum of a contraction")));
            }
        }
        Ok(Self { items })
    }

    pub fn stationary(c: SpectralClass, len: usize) -> Result<Self> {
        Self::new(vec![c; len])
    }

    /// `σ(⊗_{i ∈ range} (I − C_i))`.
    pub fn complement_product(&self, range: std::ops::Range<usize>) -> SpectralClass {
        let mut acc = SpectralClass::from_pairs(&[(1.0, 1)]).expect("unit");
        for c in &self.items[range] {
            acc = tensor(&acc, &c.map_values(|t| 1.0 - t, 1e-12));
        }
        acc
    }
}

fn tensor(a: &SpectralClass, b: &SpectralClass) -> SpectralClass {
    let mut vals = Vec::new();
    for &(x, m) in a.pairs() {
        for &(y, n) in b.pairs() {
            vals.extend(std::iter::repeat_n(x * y, m * n));
        }
    }
    SpectralClass::from_values(&vals, 1e-12)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockWitness {
    /// `(start, end)` of each C-block and the split point separating `X_k` from `Y_k`.
    pub c_blocks: Vec<(usize, usize, usize)>,
    pub d_blocks: Vec<(usize, usize)>,
    pub max_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AsymptoticVerdict {
    Yes(BlockWitness),
    /// Second-largest eigenvalues `a`, `b` of `I − C`, `I − D`: every block
    /// product has top eigenvalue 1 and second eigenvalue `a` (resp. `b`),
    /// and a factorization forces the two to agree up to `3ε_k`.
    No { a: f64, b: f64 },
    Unknown(String),
}

/// Returns `(t)` when `σ(C) = {0, t}` with `0 < t < 1`.
fn rank_one_value(c: &SpectralClass) -> Option<f64> {
    match c.pairs() {
        [(z, 1), (t, 1)] if z.abs() < 1e-12 && *t > 0.0 && *t < 1.0 => Some(*t),
        _ => None,
    }
}

fn stationary_rank_one(c: &ContractionSequence) -> Option<f64> {
    let t = rank_one_value(&c.items[0])?;
    c.items.iter().all(|x| rank_one_value(x).is_some_and(|s| (s - t).abs() < 1e-12)).then_some(t)
}

/// Bounded search for the block structure of asymptotic equivalence on the
/// truncated sequences, plus the decidable stationary rank-one case.
pub fn asymptotically_equivalent(c: &ContractionSequence, d: &ContractionSequence, eps_budget: f64, window: usize) -> AsymptoticVerdict {
    if let (Some(t), Some(s)) = (stationary_rank_one(c), stationary_rank_one(d)) {
        let (a, b) = (1.0 - t, 1.0 - s);
        if (a - b).abs() > 1e-7 {
            return AsymptoticVerdict::No { a, b };
        }
    }
    let window = window.clamp(1, 6);
    let mut failed = HashSet::new();
    let mut path = Search { c, d, eps: eps_budget, window, c_blocks: Vec::new(), d_blocks: Vec::new(), worst: 0.0 };
    for c0 in 0..window.min(c.items.len()) {
        for len in 1..=window {
            if c0 + len > c.items.len() {
                break;
            }
            for split in 0..=len {
                path.c_blocks.push((c0, c0 + len, c0 + split));
                for d0 in 0..window.min(d.items.len()) {
                    if path.extend(c0 + len, d0, c0 + split, &mut failed) {
                        let w = BlockWitness { c_blocks: path.c_blocks.clone(), d_blocks: path.d_blocks.clone(), max_distance: path.worst };
                        return AsymptoticVerdict::Yes(w);
                    }
                }
                path.c_blocks.pop();
            }
        }
    }
    AsymptoticVerdict::Unknown(format!("no block witness within window {window} at tolerance {eps_budget:e}"))
}

struct Search<'a> {
    c: &'a ContractionSequence,
    d: &'a ContractionSequence,
    eps: f64,
    window: usize,
    c_blocks: Vec<(usize, usize, usize)>,
    d_blocks: Vec<(usize, usize)>,
    worst: f64,
}

impl Search<'_> {
    /// State: C consumed up to `c_pos`, D up to `d_pos`, and the pending
    /// `Y_k` is `C[y_start..c_pos]`.
    fn extend(&mut self, c_pos: usize, d_pos: usize, y_start: usize, failed: &mut HashSet<(usize, usize, usize)>) -> bool {
        let (lc, ld) = (self.c.items.len(), self.d.items.len());
        if c_pos == lc && ld - d_pos < self.window.max(1) && self.d_blocks.len() + 1 >= self.c_blocks.len().min(2) {
            return !self.d_blocks.is_empty() || lc == 1;
        }
        if failed.contains(&(c_pos, d_pos, y_start)) {
            return false;
        }
        let y = self.c.complement_product(y_start..c_pos);
        for clen in 1..=self.window {
            if c_pos + clen > lc {
                break;
            }
            for split in 0..=clen {
                let x_next = self.c.complement_product(c_pos..c_pos + split);
                let target = tensor(&y, &x_next);
                for dlen in 1..=self.window {
                    if d_pos + dlen > ld {
                        break;
                    }
                    let block = self.d.complement_product(d_pos..d_pos + dlen);
                    let dist = unitary_orbit_distance(&block, &target);
                    if dist > self.eps {
                        continue;
                    }
                    let saved = self.worst;
                    self.worst = self.worst.max(dist);
                    self.c_blocks.push((c_pos, c_pos + clen, c_pos + split));
                    self.d_blocks.push((d_pos, d_pos + dlen));
                    if self.extend(c_pos + clen, d_pos + dlen, c_pos + split, failed) {
                        return true;
                    }
                    self.c_blocks.pop();
                    self.d_blocks.pop();
                    self.worst = saved;
                }
            }
        }
        failed.insert((c_pos, d_pos, y_start));
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semiring::{pend_table, t2_semigroup};

    fn big(m: &[&[i64]]) -> Vec<Vec<BigInt>> {
        m.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
    }

    #[test]
    fn radius_of_defective_perron_root() {
        // Perron root 3 sits in a 2x2 Jordan block.
        let m: IntMatrix = vec![vec![3, 1, 0], vec![0, 3, 0], vec![1, 0, 2]];
        let r = matrix_invariants(&m).unwrap().perron_radius;
        assert!((r - 3.0).abs() < 1e-12, "{r}");
        assert_eq!(matrix_invariants(&vec![vec![0, 1], vec![0, 0]]).unwrap().perron_radius, 0.0);
    }

    #[test]
    fn smith_forms() {
        let s = smith_invariants(&big(&[&[2, 4, 4], &[-6, 6, 12], &[10, -4, -16]]));
        assert_eq!(s, vec![BigInt::from(2), BigInt::from(6), BigInt::from(12)]);
        let s = smith_invariants(&big(&[&[1, 1], &[1, 1]]));
        assert_eq!(s, vec![BigInt::from(1), BigInt::from(0)]);
        assert_eq!(exact_rank(&big(&[&[1, 2], &[2, 4]])), 1);
        assert_eq!(exact_rank(&big(&[&[0, 1], &[1, 0]])), 2);
    }

    #[test]
    fn identity_and_rank_one_invariants() {
        let inv = matrix_invariants(&vec![vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(inv.eventual_rank, 2);
        assert!((inv.perron_radius - 1.0).abs() < 1e-12);
        let inv = matrix_invariants(&vec![vec![1, 1], vec![1, 1]]).unwrap();
        assert_eq!(inv.eventual_rank, 1);
        assert!((inv.perron_radius - 2.0).abs() < 1e-12);
    }

    #[test]
    fn t2_stationary_systems() {
        let t = t2_semigroup().unwrap();
        let c = SemiringVector::from_coeffs(t, vec![1, 1, 1]).unwrap();
        let s = build_stationary(t, &c, 4).unwrap();
        assert_eq!(s.action_matrices[0].len(), 3);
        assert_eq!(s.stage_sizes, vec![1, 3, 9, 27]);
        let two = SemiringVector::from_coeffs(t, vec![0, 2, 0]).unwrap();
        let inv = limit_invariants(&build_stationary(t, &two, 2).unwrap()).unwrap();
        assert!((inv.perron_radius - 2.0).abs() < 1e-9);
        assert!(scale_contains(&s, t, 1, &[1, 1, 1]).unwrap());
        assert!(!scale_contains(&s, t, 1, &[2, 1, 1]).unwrap());
        let pushed = mat_vec(&s.action_matrices[1], &[1, 1, 1]);
        assert!(scale_contains(&s, t, 2, &pushed).unwrap());
    }

    #[test]
    fn pend_stationary_is_seven_dimensional() {
        let t = pend_table(2).unwrap();
        let id = t.identity_element().unwrap();
        let mut coeffs = vec![0; t.len()];
        coeffs[id] = 1;
        coeffs[(id + 1) % t.len()] += 1;
        let s = build_stationary(&t, &SemiringVector::from_coeffs(&t, coeffs).unwrap(), 3).unwrap();
        assert_eq!(s.action_matrices[0].len(), 7);
    }

    #[test]
    fn module_verdicts() {
        let d = Duration::from_secs(5);
        let a = vec![vec![2, 1], vec![1, 1]];
        assert!(matches!(module_isomorphic_matrices(&a, &a, 4, d).unwrap(), ModuleVerdict::Iso(_)));
        let b = vec![vec![1, 1], vec![1, 2]];
        match module_isomorphic_matrices(&a, &b, 4, d).unwrap() {
            ModuleVerdict::Iso(w) => assert!(verify_witness(&a, &b, &w)),
            other => panic!("{other:?}"),
        }
        let c = vec![vec![3]];
        assert!(matches!(module_isomorphic_matrices(&vec![vec![2]], &c, 4, d).unwrap(), ModuleVerdict::NotIso(_)));
        match module_isomorphic_matrices(&vec![vec![2]], &vec![vec![1, 1], vec![1, 1]], 4, d).unwrap() {
            ModuleVerdict::Iso(w) => {
                assert_eq!(w.lag, 1);
                assert!(verify_witness(&vec![vec![2]], &vec![vec![1, 1], vec![1, 1]], &w));
            }
            other => panic!("{other:?}"),
        }
    }

    fn rank_one(t: f64) -> SpectralClass {
        SpectralClass::from_pairs(&[(0.0, 1), (t, 1)]).unwrap()
    }

    #[test]
    fn stationary_rank_one_classification() {
        let c = ContractionSequence::stationary(rank_one(0.4), 8).unwrap();
        let d = ContractionSequence::stationary(rank_one(0.6), 8).unwrap();
        assert!(matches!(asymptotically_equivalent(&c, &d, 1e-6, 3), AsymptoticVerdict::No { .. }));
        assert!(matches!(asymptotically_equivalent(&c, &c, 1e-6, 3), AsymptoticVerdict::Yes(_)));
        // Orbit distance of equal-length products never drops below |t − s|.
        for n in 1..=8 {
            let dist = unitary_orbit_distance(&c.complement_product(0..n), &d.complement_product(0..n));
            assert!(dist >= 0.2 - 1e-12);
        }
    }

    #[test]
    fn regrouped_sequence_is_equivalent() {
        let items: Vec<SpectralClass> = [0.2, 0.5, 0.3, 0.7, 0.4, 0.6]
            .iter()
            .map(|&t| SpectralClass::from_pairs(&[(t, 1)]).unwrap())
            .collect();
        let c = ContractionSequence::new(items.clone()).unwrap();
        // Pair consecutive items: I − D_k = (I − C_{2k})(I − C_{2k+1}).
        let paired: Vec<SpectralClass> = (0..3)
            .map(|k| {
                let v = 1.0 - (1.0 - [0.2, 0.3, 0.4][k]) * (1.0 - [0.5, 0.7, 0.6][k]);
                SpectralClass::from_pairs(&[(v, 1)]).unwrap()
            })
            .collect();
        let d = ContractionSequence::new(paired).unwrap();
        assert!(matches!(asymptotically_equivalent(&c, &d, 1e-9, 3), AsymptoticVerdict::Yes(_)));
    }
}
