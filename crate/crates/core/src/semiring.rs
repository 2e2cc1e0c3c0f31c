//! Embedding semirings: finite semigroup semirings `ℤ₊[S]` with composition
//! tables, the V-algebra class semiring, and the `L₂` rotation rule.
//!
//! Products follow composition order: `a · b` is the class of `a ∘ b`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::Digraph;
use crate::constructions::{phi_t_v, theta_t2, theta_v};
use crate::error::{Error, Result};
use crate::homkit::{classify_t2, classify_valg, compose, direct_sum_all, krull_schmidt, StarMap, VClassInvariant};
use crate::numkit::{unitary_orbit_distance, SpectralClass, ToleranceProfile};

/// Monotone map from the interval `[dom_start, dom_end]` of the `r`-chain
/// into the `r`-chain (all 1-based).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PartialEndo {
    pub r: usize,
    pub dom_start: usize,
    pub dom_end: usize,
    pub values: Vec<usize>,
}

impl PartialEndo {
    pub fn new(r: usize, dom_start: usize, dom_end: usize, values: Vec<usize>) -> Result<Self> {
        let ok = 1 <= dom_start
            && dom_start <= dom_end
            && dom_end <= r
            && values.len() == dom_end - dom_start + 1
            && values.iter().all(|&v| (1..=r).contains(&v))
            && values.windows(2).all(|w| w[0] <= w[1]);
        if !ok {
            return Err(Error::InvalidInput(format!("invalid partial endomorphism [{dom_start},{dom_end}] -> {values:?} on {r}")));
        }
        Ok(Self { r, dom_start, dom_end, values })
    }

    pub fn identity(r: usize) -> Self {
        Self { r, dom_start: 1, dom_end: r, values: (1..=r).collect() }
    }

    pub fn apply(&self, x: usize) -> Option<usize> {
        (self.dom_start..=self.dom_end).contains(&x).then(|| self.values[x - self.dom_start])
    }
}

impl fmt::Display for PartialEndo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vals: Vec<String> = self.values.iter().map(ToString::to_string).collect();
        write!(f, "[{},{}]→({})", self.dom_start, self.dom_end, vals.join(","))
    }
}

/// All interval-domain monotone partial self-maps of the `r`-chain, ordered by
/// domain then values.
pub fn pend_elements(r: usize) -> Result<Vec<PartialEndo>> {
    if !(1..=10).contains(&r) {
        return Err(Error::InvalidInput(format!("need 1 <= r <= 10, got {r}")));
    }
    let mut out = Vec::new();
    for a in 1..=r {
        for b in a..=r {
            for values in crate::combinat::enumerate_order_preserving(r, b - a + 1) {
                out.push(PartialEndo { r, dom_start: a, dom_end: b, values });
            }
        }
    }
    Ok(out)
}

/// `g ∘ h`, or `None` (the absorbing zero) when `h` misses the domain of `g`.
pub fn pend_compose(g: &PartialEndo, h: &PartialEndo) -> Result<Option<PartialEndo>> {
    if g.r != h.r {
        return Err(Error::ShapeMismatch(format!("chains of length {} and {}", g.r, h.r)));
    }
    let dom: Vec<usize> = (h.dom_start..=h.dom_end).filter(|&x| g.apply(h.values[x - h.dom_start]).is_some()).collect();
    let (Some(&a), Some(&b)) = (dom.first(), dom.last()) else { return Ok(None) };
    let values = (a..=b).map(|x| g.apply(h.values[x - h.dom_start]).expect("preimage of an interval")).collect();
    Ok(Some(PartialEndo { r: g.r, dom_start: a, dom_end: b, values }))
}

/// Finite semigroup given by labels and a product table; `None` entries are
/// an adjoined absorbing zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemigroupTable {
    pub name: String,
    pub labels: Vec<String>,
    /// `table[i][j]` = index of `i · j`.
    pub table: Vec<Vec<Option<usize>>>,
    pub has_zero: bool,
    /// Multiplicity of the class each element labels.
    pub multiplicities: Vec<u64>,
}

impl SemigroupTable {
    pub fn from_fn(
        name: &str,
        labels: Vec<String>,
        multiplicities: Vec<u64>,
        mut product: impl FnMut(usize, usize) -> Result<Option<usize>>,
    ) -> Result<Self> {
        let n = labels.len();
        let mut table = vec![vec![None; n]; n];
        let mut has_zero = false;
        for (i, row) in table.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = product(i, j)?;
                has_zero |= cell.is_none();
            }
        }
        Ok(Self { name: name.to_string(), labels, table, has_zero, multiplicities })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn mul(&self, i: usize, j: usize) -> Option<usize> {
        self.table[i][j]
    }

    fn mul_opt(&self, i: Option<usize>, j: Option<usize>) -> Option<usize> {
        self.mul(i?, j?)
    }

    fn triple_ok(&self, i: usize, j: usize, k: usize) -> bool {
        self.mul_opt(self.mul(i, j), Some(k)) == self.mul_opt(Some(i), self.mul(j, k))
    }

    /// Exhaustive when `n³ ≤ exhaustive_limit`, else `samples` random triples.
    /// Returns the first failing triple.
    pub fn check_associativity<R: Rng + ?Sized>(
        &self,
        exhaustive_limit: usize,
        samples: usize,
        rng: &mut R,
    ) -> Option<(usize, usize, usize)> {
        let n = self.len();
        if n.pow(3) <= exhaustive_limit {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        if !self.triple_ok(i, j, k) {
                            return Some((i, j, k));
                        }
                    }
                }
            }
            return None;
        }
        (0..samples)
            .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n)))
            .find(|&(i, j, k)| !self.triple_ok(i, j, k))
    }

    pub fn identity_element(&self) -> Option<usize> {
        (0..self.len()).find(|&e| (0..self.len()).all(|i| self.mul(e, i) == Some(i) && self.mul(i, e) == Some(i)))
    }
}

pub fn pend_table(r: usize) -> Result<SemigroupTable> {
    if r > 5 {
        return Err(Error::InvalidInput("composition tables are built for r <= 5".into()));
    }
    let elems = pend_elements(r)?;
    let index: BTreeMap<&PartialEndo, usize> = elems.iter().enumerate().map(|(i, e)| (e, i)).collect();
    SemigroupTable::from_fn(
        &format!("Pend({r})"),
        elems.iter().map(ToString::to_string).collect(),
        vec![1; elems.len()],
        |i, j| Ok(pend_compose(&elems[i], &elems[j])?.map(|p| index[&p])),
    )
}

/// Semigroup of the three regular classes of `T₂`, derived by composing the
/// concrete maps and classifying the result.
pub fn t2_semigroup() -> Result<&'static SemigroupTable> {
    static TABLE: OnceLock<SemigroupTable> = OnceLock::new();
    if let Some(t) = TABLE.get() {
        return Ok(t);
    }
    let tol = ToleranceProfile::default();
    let maps = (0..3).map(theta_t2).collect::<Result<Vec<_>>>()?;
    let t = SemigroupTable::from_fn(
        "T2",
        (0..3).map(|i| format!("θ{i}")).collect(),
        vec![1; 3],
        |i, j| {
            let c = compose(&maps[i], &maps[j])?;
            let (a, b, d) = classify_t2(&c, &tol)?;
            match (a, b, d) {
                (1, 0, 0) => Ok(Some(0)),
                (0, 1, 0) => Ok(Some(1)),
                (0, 0, 1) => Ok(Some(2)),
                other => Err(Error::InvalidInput(format!("θ{i}·θ{j} classified as {other:?}"))),
            }
        },
    )?;
    Ok(TABLE.get_or_init(|| t))
}

/// Endomorphisms of a reflexive transitive digraph under composition, labelled
/// by their value lists (1-based).
pub fn end_digraph_semigroup(g: &Digraph) -> Result<SemigroupTable> {
    g.validate()?;
    let n = g.vertices();
    if n == 0 || n > 8 {
        return Err(Error::InvalidDigraph(format!("need 1..=8 vertices, got {n}")));
    }
    fn extend(g: &Digraph, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let n = g.vertices();
        let u = cur.len();
        if u == n {
            out.push(cur.clone());
            return;
        }
        for fu in 0..n {
            let ok = (0..u).all(|v| {
                (!g.has_edge(u, v) || g.has_edge(fu, cur[v])) && (!g.has_edge(v, u) || g.has_edge(cur[v], fu))
            });
            if ok && (!g.has_edge(u, u) || g.has_edge(fu, fu)) {
                cur.push(fu);
                extend(g, cur, out);
                cur.pop();
            }
        }
    }
    let mut maps = Vec::new();
    extend(g, &mut Vec::new(), &mut maps);
    let index: BTreeMap<Vec<usize>, usize> = maps.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
    let labels = maps
        .iter()
        .map(|m| format!("({})", m.iter().map(|v| (v + 1).to_string()).collect::<Vec<_>>().join(",")))
        .collect();
    SemigroupTable::from_fn("End", labels, vec![1; maps.len()], |i, j| {
        let c: Vec<usize> = maps[j].iter().map(|&v| maps[i][v]).collect();
        Ok(Some(index[&c]))
    })
}

/// Element of `ℤ₊[S]`; the zero of `S` carries no coefficient.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemiringVector {
    pub basis: String,
    pub coeffs: Vec<u64>,
}

impl SemiringVector {
    pub fn zero(table: &SemigroupTable) -> Self {
        Self { basis: table.name.clone(), coeffs: vec![0; table.len()] }
    }

    pub fn basis_element(table: &SemigroupTable, i: usize) -> Self {
        let mut v = Self::zero(table);
        v.coeffs[i] = 1;
        v
    }

    pub fn from_coeffs(table: &SemigroupTable, coeffs: Vec<u64>) -> Result<Self> {
        if coeffs.len() != table.len() {
            return Err(Error::ShapeMismatch(format!("{} coefficients for a basis of {}", coeffs.len(), table.len())));
        }
        Ok(Self { basis: table.name.clone(), coeffs })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.basis != other.basis || self.coeffs.len() != other.coeffs.len() {
            return Err(Error::ShapeMismatch("vectors over different bases".into()));
        }
        Ok(Self { basis: self.basis.clone(), coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect() })
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }
}

fn check_basis(table: &SemigroupTable, v: &SemiringVector) -> Result<()> {
    if v.basis != table.name || v.coeffs.len() != table.len() {
        return Err(Error::ShapeMismatch(format!("vector over {} used with table {}", v.basis, table.name)));
    }
    Ok(())
}

pub fn semiring_mul(table: &SemigroupTable, a: &SemiringVector, b: &SemiringVector) -> Result<SemiringVector> {
    check_basis(table, a)?;
    check_basis(table, b)?;
    let mut out = SemiringVector::zero(table);
    for (i, &ca) in a.coeffs.iter().enumerate().filter(|p| *p.1 != 0) {
        for (j, &cb) in b.coeffs.iter().enumerate().filter(|p| *p.1 != 0) {
            if let Some(k) = table.mul(i, j) {
                out.coeffs[k] += ca * cb;
            }
        }
    }
    Ok(out)
}

/// `M[j][i]` = coefficient of basis element `j` in `c · e_i`.
pub fn action_matrix(table: &SemigroupTable, c: &SemiringVector) -> Result<Vec<Vec<u64>>> {
    check_basis(table, c)?;
    let d = table.len();
    let mut m = vec![vec![0u64; d]; d];
    for i in 0..d {
        for (k, &ck) in c.coeffs.iter().enumerate() {
            if ck != 0 {
                if let Some(j) = table.mul(k, i) {
                    m[j][i] += ck;
                }
            }
        }
    }
    Ok(m)
}

pub fn grading(table: &SemigroupTable, a: &SemiringVector) -> Result<u64> {
    check_basis(table, a)?;
    Ok(a.coeffs.iter().zip(&table.multiplicities).map(|(c, m)| c * m).sum())
}

/// Class in the V-algebra semiring: counts of the regular generators
/// `θ₀..θ₃` and the spectrum of the contraction of the irregular part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VClass {
    pub regular: [u64; 4],
    pub irregular: SpectralClass,
}

impl fmt::Display for VClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.regular;
        write!(f, "{}θ0+{}θ1+{}θ2+{}θ3", r[0], r[1], r[2], r[3])?;
        if !self.irregular.is_empty() {
            write!(f, "+φ{}", self.irregular)?;
        }
        Ok(())
    }
}

impl VClass {
    pub fn new(regular: [u64; 4], irregular: SpectralClass) -> Result<Self> {
        if irregular.pairs().iter().any(|&(t, _)| t <= 0.0 || t >= 1.0) {
            return Err(Error::InvalidInput(format!("irregular spectrum {irregular} not inside (0, 1)")));
        }
        Ok(Self { regular, irregular })
    }

    pub fn regular(i: usize) -> Self {
        let mut r = [0; 4];
        r[i] = 1;
        Self { regular: r, irregular: SpectralClass::empty() }
    }

    /// Class of the identity map `A(V) → A(V)`.
    pub fn identity() -> Self {
        Self::regular(0)
    }

    pub fn irregular(c: SpectralClass) -> Result<Self> {
        Self::new([0; 4], c)
    }

    pub fn is_zero(&self) -> bool {
        self.regular == [0; 4] && self.irregular.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut regular = self.regular;
        for (a, b) in regular.iter_mut().zip(other.regular) {
            *a += b;
        }
        let mut pairs = self.irregular.pairs().to_vec();
        pairs.extend_from_slice(other.irregular.pairs());
        Self { regular, irregular: merge_pairs(&pairs) }
    }

    pub fn grading(&self) -> u64 {
        self.regular.iter().sum::<u64>() + 2 * self.irregular.total_rank() as u64
    }

    /// Reads the class off the invariant of a map in the upper-ideal
    /// preserving family.
    pub fn from_invariant(inv: &VClassInvariant, tol: &ToleranceProfile) -> Result<Self> {
        let k0 = inv.domain_ampl;
        let near_one = 1e3 * tol.eps_spec;
        let mut r3 = 0usize;
        let mut irr = Vec::new();
        for &(t, m) in inv.overlap.pairs() {
            if t >= 1.0 - near_one {
                r3 += m;
            } else {
                irr.push((t, m));
            }
        }
        let k: usize = irr.iter().map(|p| p.1).sum();
        let [rv1, rv2, rw1, rw2] = inv.ranks;
        let sub = |a: usize, b: usize| {
            a.checked_sub(b).ok_or_else(|| Error::InvalidInput(format!("inconsistent V invariant {:?}", inv.ranks)))
        };
        let r0 = sub(rv1, r3 + k)?;
        let r1 = sub(rw1, r3 + k)?;
        let r2 = sub(rv2, r1 + k)?;
        if rw2 != r0 + r2 + k {
            return Err(Error::InvalidInput(format!("inconsistent V invariant {:?}", inv.ranks)));
        }
        let div = |x: usize| {
            if !x.is_multiple_of(k0) {
                Err(Error::ToleranceAmbiguity(format!("count {x} not divisible by domain amplification {k0}")))
            } else {
                Ok((x / k0) as u64)
            }
        };
        let irr = irr.iter().map(|&(t, m)| Ok((t, div(m)? as usize))).collect::<Result<Vec<_>>>()?;
        Ok(Self { regular: [div(r0)?, div(r1)?, div(r2)?, div(r3)?], irregular: merge_pairs(&irr) })
    }

    /// Concrete map `⊕ θ_i^{r_i} ⊕ φ_{t}` per eigenvalue.
    pub fn representative(&self) -> Result<StarMap> {
        let mut parts = Vec::new();
        for (i, &c) in self.regular.iter().enumerate() {
            for _ in 0..c {
                parts.push(theta_v(i)?);
            }
        }
        for &(t, m) in self.irregular.pairs() {
            for _ in 0..m {
                parts.push(phi_t_v(t)?);
            }
        }
        if parts.is_empty() {
            return Err(Error::InvalidInput("the zero class has no representative".into()));
        }
        direct_sum_all(&parts)
    }
}

fn merge_pairs(pairs: &[(f64, usize)]) -> SpectralClass {
    let expanded: Vec<f64> = pairs.iter().flat_map(|&(t, m)| std::iter::repeat_n(t, m)).collect();
    SpectralClass::from_values(&expanded, 1e-12)
}

/// Class of a map between V-algebras, via Krull–Schmidt and the invariant of
/// each summand.
pub fn classify_vclass(m: &StarMap, tol: &ToleranceProfile) -> Result<VClass> {
    let d = krull_schmidt(m, tol)?;
    let mut acc = VClass { regular: [0; 4], irregular: SpectralClass::empty() };
    for s in &d.summands {
        acc = acc.add(&VClass::from_invariant(&classify_valg(s, tol)?, tol)?);
    }
    Ok(acc)
}

/// Product of indecomposables given as `Ok(i)` for `θ_i`, `Err(t)` for `φ_t`.
fn indecomposable_mul(a: std::result::Result<usize, f64>, b: std::result::Result<usize, f64>, tol: &ToleranceProfile) -> Result<VClass> {
    if let (Err(t), Err(s)) = (a, b) {
        let v = 1.0 - (1.0 - t) * (1.0 - s);
        return VClass::irregular(SpectralClass::from_pairs(&[(v, 2)])?);
    }
    let build = |x: std::result::Result<usize, f64>| match x {
        Ok(i) => theta_v(i),
        Err(t) => phi_t_v(t),
    };
    let c = compose(&build(a)?, &build(b)?)?;
    classify_vclass(&c, tol)
}

/// `a · b` (class of `a ∘ b`). Irregular × irregular terms use
/// `t + (1 − t)s` with doubled multiplicity; terms with a regular factor are
/// computed from concrete maps.
pub fn valg_mul(a: &VClass, b: &VClass, tol: &ToleranceProfile) -> Result<VClass> {
    let terms = |x: &VClass| {
        let mut v: Vec<(std::result::Result<usize, f64>, u64)> =
            x.regular.iter().enumerate().filter(|p| *p.1 > 0).map(|(i, &c)| (Ok(i), c)).collect();
        v.extend(x.irregular.pairs().iter().map(|&(t, m)| (Err(t), m as u64)));
        v
    };
    let mut acc = VClass { regular: [0; 4], irregular: SpectralClass::empty() };
    for (x, cx) in terms(a) {
        for (y, cy) in terms(b) {
            let p = indecomposable_mul(x, y, tol)?;
            let n = cx * cy;
            let mut scaled = VClass { regular: p.regular.map(|r| r * n), irregular: SpectralClass::empty() };
            let pairs: Vec<(f64, usize)> = p.irregular.pairs().iter().map(|&(t, m)| (t, m * n as usize)).collect();
            scaled.irregular = merge_pairs(&pairs);
            acc = acc.add(&scaled);
        }
    }
    Ok(acc)
}

/// 1 when regular counts or irregular ranks differ, else the orbit distance of
/// the irregular spectra.
pub fn vclass_distance(a: &VClass, b: &VClass) -> f64 {
    if a.regular != b.regular || a.irregular.total_rank() != b.irregular.total_rank() {
        return 1.0;
    }
    unitary_orbit_distance(&a.irregular, &b.irregular)
}

/// Element of the `L₂` semiring: a multiset of rotation angles (classes
/// `[ρ_θ]`) and a count of `[τ]`. Only the products stated for the circle
/// semiring are modelled: `ρ_a ρ_b = ρ_{a+b}`, `ρ τ = τ ρ = τ`, `τ τ = 2τ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L2Element {
    pub rotations: Vec<f64>,
    pub tau: u64,
}

fn wrap_angle(a: f64) -> f64 {
    a.rem_euclid(std::f64::consts::TAU)
}

impl L2Element {
    pub fn rho(angle: f64) -> Self {
        Self { rotations: vec![wrap_angle(angle)], tau: 0 }
    }

    pub fn tau() -> Self {
        Self { rotations: Vec::new(), tau: 1 }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut rotations = self.rotations.clone();
        rotations.extend_from_slice(&other.rotations);
        rotations.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Self { rotations, tau: self.tau + other.tau }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut rotations: Vec<f64> =
            self.rotations.iter().flat_map(|a| other.rotations.iter().map(move |b| wrap_angle(a + b))).collect();
        rotations.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (ra, rb) = (self.rotations.len() as u64, other.rotations.len() as u64);
        let tau = ra * other.tau + self.tau * rb + 2 * self.tau * other.tau;
        Self { rotations, tau }
    }

    pub fn grading(&self) -> u64 {
        self.rotations.len() as u64 + 2 * self.tau
    }
}
