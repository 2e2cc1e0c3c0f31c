//! Star-extendible homomorphisms between finitely acting algebras.
//!
//! A [`StarMap`] stores its C*-extension through the images `F^b_i` of the
//! matrix units `e^b_{i1}` of each summand `M_{s_b}` of the domain's generated
//! C*-algebra; every other matrix unit maps to `F^b_i (F^b_j)*`. Generator
//! images, composition, direct sums, decomposition and equivalence are all
//! computed from that data.
//!
//! Reducing projections and intertwiners are found inside the codomain's
//! diagonal part `D = A ∩ A*`. Anything commuting with the extension has the
//! form `Σ_b Σ_i A^b_i z_b (B^b_i)*` with `A^b_i = F^b_i W_b` (`W_b` an
//! orthonormal basis of the range of `F^b_1`), so the search runs over the small
//! parameters `z_b` subject to the linear condition of landing in `D`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraKind, OperatorAlgebra};
use crate::error::{Error, Result};
use crate::numkit::{
    hermitian_spectrum, is_partial_isometry, rank_eps, ComplexMatrix,
    SpectralClass, ToleranceProfile, C64, ONE, ZERO,
};

#[derive(Debug, Clone, PartialEq)]
pub struct StarMap {
    domain: OperatorAlgebra,
    codomain: OperatorAlgebra,
    /// `cols[b][i]` is the image of the matrix unit `e^b_{i1}`.
    cols: Vec<Vec<ComplexMatrix>>,
}

/// Dense coordinates of an element of `⊕ M_{s_b}` given as a block-diagonal matrix.
fn cstar_coords(a: &OperatorAlgebra, x: &ComplexMatrix) -> (Vec<C64>, f64) {
    let shape = a.shape();
    let offs = shape.offsets();
    let mut v = Vec::with_capacity(shape.cstar_dim());
    let mut inside = 0.0;
    for (b, &s) in shape.blocks.iter().enumerate() {
        for i in 0..s {
            for j in 0..s {
                let z = x[(offs[b] + i, offs[b] + j)];
                inside += z.norm_sqr();
                v.push(z);
            }
        }
    }
    let outside = (x.frobenius().powi(2) - inside).max(0.0).sqrt();
    (v, outside)
}

/// Reduced row echelon store of (domain coordinates, image) pairs.
struct Echelon {
    rows: Vec<(Vec<C64>, ComplexMatrix, usize, String)>,
}

enum Insert {
    Added,
    InSpan,
    Inconsistent(f64),
}

impl Echelon {
    fn insert(&mut self, mut d: Vec<C64>, mut m: ComplexMatrix, word: String, eps_dom: f64, eps_img: f64) -> Insert {
        for (rd, rm, p, _) in &self.rows {
            let c = d[*p];
            if c != ZERO {
                for (x, y) in d.iter_mut().zip(rd) {
                    *x -= c * y;
                }
                m.add_scaled(-c, rm);
            }
        }
        let (p, big) = d
            .iter()
            .enumerate()
            .map(|(k, z)| (k, z.norm()))
            .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if big <= eps_dom {
            let r = m.frobenius();
            return if r <= eps_img { Insert::InSpan } else { Insert::Inconsistent(r) };
        }
        let c = ONE / d[p];
        for x in d.iter_mut() {
            *x *= c;
        }
        let m = m.scale(c);
        for (rd, rm, _, _) in self.rows.iter_mut() {
            let c = rd[p];
            if c != ZERO {
                for (x, y) in rd.iter_mut().zip(&d) {
                    *x -= c * y;
                }
                rm.add_scaled(-c, &m);
            }
        }
        self.rows.push((d, m, p, word));
        Insert::Added
    }
}

impl StarMap {
    /// Builds a map from the images of the matrix units `e^b_{i1}` after
    /// checking the matrix-unit relations and that generators land in the codomain.
    pub fn from_extension(
        domain: OperatorAlgebra,
        codomain: OperatorAlgebra,
        cols: Vec<Vec<ComplexMatrix>>,
        tol: &ToleranceProfile,
    ) -> Result<Self> {
        let m = Self { domain, codomain, cols };
        m.check_relations(tol)?;
        m.check_codomain(tol)?;
        Ok(m)
    }

    pub fn domain(&self) -> &OperatorAlgebra {
        &self.domain
    }

    pub fn codomain(&self) -> &OperatorAlgebra {
        &self.codomain
    }

    pub fn extension_columns(&self) -> &[Vec<ComplexMatrix>] {
        &self.cols
    }

    /// Image of the matrix unit `e^b_{ij}` of `C*(domain)`.
    pub fn extension_unit(&self, b: usize, i: usize, j: usize) -> ComplexMatrix {
        self.cols[b][i].matmul(&self.cols[b][j].adjoint())
    }

    /// Star extension applied to an element of `C*(domain)`.
    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let shape = self.domain.shape();
        let offs = shape.offsets();
        let n = self.codomain.size();
        let mut out = ComplexMatrix::zeros(n, n);
        for (b, &s) in shape.blocks.iter().enumerate() {
            let adj: Vec<Option<ComplexMatrix>> = (0..s)
                .map(|j| {
                    if (0..s).any(|i| x[(offs[b] + i, offs[b] + j)] != ZERO) {
                        Some(self.cols[b][j].adjoint())
                    } else {
                        None
                    }
                })
                .collect();
            for i in 0..s {
                let mut g: Option<ComplexMatrix> = None;
                for j in 0..s {
                    let c = x[(offs[b] + i, offs[b] + j)];
                    if c == ZERO {
                        continue;
                    }
                    let fj = adj[j].as_ref().expect("adjoint prepared for nonzero column");
                    match g.as_mut() {
                        Some(acc) => acc.add_scaled(c, fj),
                        None => g = Some(fj.scale(c)),
                    }
                }
                if let Some(g) = g {
                    let p = self.cols[b][i].matmul(&g);
                    out.add_scaled(ONE, &p);
                }
            }
        }
        out
    }

    pub fn image(&self, label: &str) -> Option<ComplexMatrix> {
        self.domain.generators().into_iter().find(|g| g.label == label).map(|g| self.apply(&g.matrix))
    }

    /// Generator images in the domain's generator order.
    pub fn images(&self) -> Vec<(String, ComplexMatrix)> {
        self.domain.generators().into_iter().map(|g| (g.label, self.apply(&g.matrix))).collect()
    }

    /// `φ̃(1)`.
    pub fn unit_image(&self) -> ComplexMatrix {
        let n = self.codomain.size();
        let mut out = ComplexMatrix::zeros(n, n);
        for col in &self.cols {
            for f in col {
                out.add_scaled(ONE, &f.matmul(&f.adjoint()));
            }
        }
        out
    }

    /// Multiplicity of each summand of `C*(domain)`: the rank of `φ̃(e^b_{11})`.
    pub fn block_multiplicities(&self) -> Vec<usize> {
        self.cols.iter().map(|c| c[0].trace().re.round().max(0.0) as usize).collect()
    }

    /// Rank of the image of a rank-one diagonal unit; needs a simple `C*(domain)`.
    pub fn multiplicity(&self) -> Result<usize> {
        let m = self.block_multiplicities();
        if m.len() != 1 {
            return Err(Error::NonSimpleDomain);
        }
        Ok(m[0])
    }

    /// Sum of the block multiplicities (the multiplicity when the domain is simple).
    pub fn total_multiplicity(&self) -> usize {
        self.block_multiplicities().iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.block_multiplicities().iter().all(|&m| m == 0)
    }

    fn check_relations(&self, tol: &ToleranceProfile) -> Result<()> {
        let shape = self.domain.shape();
        let n = self.codomain.size();
        if self.cols.len() != shape.blocks.len()
            || self.cols.iter().zip(&shape.blocks).any(|(c, &s)| c.len() != s)
        {
            return Err(Error::ShapeMismatch("extension columns do not match the domain shape".into()));
        }
        if self.cols.iter().flatten().any(|f| f.rows() != n || f.cols() != n) {
            return Err(Error::ShapeMismatch("extension matrices do not match the codomain size".into()));
        }
        let eps = tol.eps_report;
        let mut all_v = Vec::new();
        for (b, col) in self.cols.iter().enumerate() {
            let p = &col[0];
            let herm = p.hermitian_residual();
            let idem = (&p.matmul(p) - p).max_abs();
            if herm.max(idem) > eps {
                return Err(Error::NotStarExtendible {
                    relation: format!("e^{}_11 is a projection", b + 1),
                    residual: herm.max(idem),
                });
            }
            let w = p.range_basis(0.5);
            let mu = w.cols() as f64;
            for (i, f) in col.iter().enumerate() {
                let v = f.matmul(&w);
                let spill = (f.frobenius().powi(2) - mu).abs();
                if spill > eps {
                    return Err(Error::NotStarExtendible {
                        relation: format!("e^{}_{}1 = e^{}_{}1 e^{}_11", b + 1, i + 1, b + 1, i + 1, b + 1),
                        residual: spill,
                    });
                }
                all_v.push(v);
            }
        }
        if !all_v.is_empty() {
            let v = ComplexMatrix::hcat(&all_v);
            let gram = &v.adjoint().matmul(&v) - &ComplexMatrix::identity(v.cols());
            let r = gram.max_abs();
            if r > eps {
                return Err(Error::NotStarExtendible {
                    relation: "e_1i e_j1 = δ_ij e_11 across all summands".into(),
                    residual: r,
                });
            }
        }
        Ok(())
    }

    fn check_codomain(&self, tol: &ToleranceProfile) -> Result<()> {
        let sub = self.codomain.template_subspace();
        for (label, img) in self.images() {
            let r = self.codomain.slice_residual(&sub, &img);
            if r > tol.eps_report {
                return Err(Error::NotStarExtendible {
                    relation: format!("image of {label} lies in the codomain"),
                    residual: r,
                });
            }
        }
        Ok(())
    }

    /// `max ‖φ̃(e)φ̃(f) − φ̃(ef)‖` and `‖φ̃(e*) − φ̃(e)*‖` over all pairs of matrix units.
    pub fn homomorphism_residual(&self) -> f64 {
        let shape = self.domain.shape();
        let mut units = Vec::new();
        for (b, &s) in shape.blocks.iter().enumerate() {
            for i in 0..s {
                for j in 0..s {
                    units.push((b, i, j, self.extension_unit(b, i, j)));
                }
            }
        }
        let n = self.codomain.size();
        let zero = ComplexMatrix::zeros(n, n);
        let mut worst: f64 = 0.0;
        for (b, i, j, e) in &units {
            let star = self.extension_unit(*b, *j, *i);
            worst = worst.max((&star - &e.adjoint()).max_abs());
            for (c, k, l, f) in &units {
                let prod = e.matmul(f);
                let expected = if b == c && j == k { &units_lookup(&units, *b, *i, *l) } else { &zero };
                worst = worst.max((&prod - expected).max_abs());
            }
        }
        worst
    }

    /// Largest residual between stored generator images and `images`.
    pub fn image_residual(&self, images: &[(String, ComplexMatrix)]) -> f64 {
        let mine: BTreeMap<String, ComplexMatrix> = self.images().into_iter().collect();
        images
            .iter()
            .map(|(l, m)| mine.get(l).map_or(f64::INFINITY, |x| (x - m).max_abs()))
            .fold(0.0, f64::max)
    }

    /// `(Ad u) ∘ self`.
    pub fn conjugate(&self, u: &ComplexMatrix) -> Self {
        let ua = u.adjoint();
        Self {
            domain: self.domain.clone(),
            codomain: self.codomain.clone(),
            cols: self.cols.iter().map(|c| c.iter().map(|f| u.matmul(f).matmul(&ua)).collect()).collect(),
        }
    }

    /// `self ⊗ id_n : A ⊗ M_n → B ⊗ M_n`.
    pub fn ampliate(&self, n: usize) -> Self {
        if n == 1 {
            return self.clone();
        }
        let domain = self.domain.with_ampl(self.domain.ampl() * n);
        let codomain = self.codomain.with_ampl(self.codomain.ampl() * n);
        let cols = self
            .cols
            .iter()
            .map(|col| {
                let mut out = Vec::with_capacity(col.len() * n);
                for f in col {
                    for k in 0..n {
                        out.push(f.kron(&ComplexMatrix::unit(n, n, k, 0)));
                    }
                }
                out
            })
            .collect();
        Self { domain, codomain, cols }
    }

    /// Re-embeds the codomain `E ⊗ M_a` into `E ⊗ M_total` at inner offset `offset`.
    pub fn embed_codomain(&self, total: usize, offset: usize) -> Result<Self> {
        let a = self.codomain.ampl();
        if offset + a > total {
            return Err(Error::ShapeMismatch("codomain embedding out of range".into()));
        }
        let t = self.codomain.template_size();
        let idx = |p: usize| (p / a) * total + offset + p % a;
        let cols = self
            .cols
            .iter()
            .map(|col| {
                col.iter()
                    .map(|f| {
                        let mut m = ComplexMatrix::zeros(t * total, t * total);
                        for r in 0..f.rows() {
                            for c in 0..f.cols() {
                                let z = f[(r, c)];
                                if z != ZERO {
                                    m[(idx(r), idx(c))] = z;
                                }
                            }
                        }
                        m
                    })
                    .collect()
            })
            .collect();
        Ok(Self { domain: self.domain.clone(), codomain: self.codomain.with_ampl(total), cols })
    }

    pub fn pad_codomain(&self, total: usize) -> Result<Self> {
        self.embed_codomain(total, 0)
    }
}

fn units_lookup(units: &[(usize, usize, usize, ComplexMatrix)], b: usize, i: usize, l: usize) -> ComplexMatrix {
    units.iter().find(|u| u.0 == b && u.1 == i && u.2 == l).map(|u| u.3.clone()).expect("unit present")
}

/// Builds the star extension of a map given on generators by closing the
/// generators and their adjoints under multiplication, tracking images, and
/// checks every relation met along the way.
pub fn validate_star_extendible(
    domain: &OperatorAlgebra,
    codomain: &OperatorAlgebra,
    images: &[(String, ComplexMatrix)],
    tol: &ToleranceProfile,
) -> Result<StarMap> {
    let gens = domain.generators();
    let n = codomain.size();
    let given: BTreeMap<&str, &ComplexMatrix> = images.iter().map(|(l, m)| (l.as_str(), m)).collect();
    for (l, m) in images {
        if !gens.iter().any(|g| &g.label == l) {
            return Err(Error::InvalidInput(format!("unknown generator label {l:?}")));
        }
        if m.rows() != n || m.cols() != n {
            return Err(Error::ShapeMismatch(format!(
                "image of {l} is {}x{}, codomain needs {n}x{n}",
                m.rows(),
                m.cols()
            )));
        }
    }
    let mut letters: Vec<(String, ComplexMatrix, ComplexMatrix)> = Vec::new();
    for g in &gens {
        let img = given
            .get(g.label.as_str())
            .ok_or_else(|| Error::InvalidInput(format!("missing image for generator {}", g.label)))?;
        letters.push((g.label.clone(), g.matrix.clone(), (*img).clone()));
        letters.push((format!("{}*", g.label), g.matrix.adjoint(), img.adjoint()));
    }
    let eps_dom = 1e-10;
    let eps_img = tol.eps_report;
    let mut ech = Echelon { rows: Vec::new() };
    let mut queue: Vec<(ComplexMatrix, ComplexMatrix, String)> = Vec::new();
    let witness = |word: &str, r: f64| Error::NotStarExtendible {
        relation: format!("word {word} is consistent with the linear span of shorter words"),
        residual: r,
    };
    for (w, d, m) in &letters {
        let (v, _) = cstar_coords(domain, d);
        match ech.insert(v, m.clone(), w.clone(), eps_dom, eps_img) {
            Insert::Added => queue.push((d.clone(), m.clone(), w.clone())),
            Insert::InSpan => {}
            Insert::Inconsistent(r) => return Err(witness(w, r)),
        }
    }
    let target = domain.shape().cstar_dim();
    let mut head = 0;
    while head < queue.len() {
        let (d, m, w) = queue[head].clone();
        head += 1;
        for (lw, ld, lm) in &letters {
            let pd = d.matmul(ld);
            let pm = m.matmul(lm);
            let word = format!("{w}·{lw}");
            let (v, _) = cstar_coords(domain, &pd);
            match ech.insert(v, pm.clone(), word.clone(), eps_dom, eps_img) {
                Insert::Added => queue.push((pd, pm, word)),
                Insert::InSpan => {}
                Insert::Inconsistent(r) => return Err(witness(&word, r)),
            }
        }
        if ech.rows.len() == target && head >= queue.len() {
            break;
        }
    }
    if ech.rows.len() != target {
        return Err(Error::InvalidInput(format!(
            "generators span a {}-dimensional *-algebra, expected {target}",
            ech.rows.len()
        )));
    }
    let by_pivot: BTreeMap<usize, &ComplexMatrix> = ech.rows.iter().map(|(_, m, p, _)| (*p, m)).collect();
    let shape = domain.shape();
    let mut cols = Vec::with_capacity(shape.blocks.len());
    let mut base = 0;
    for &s in &shape.blocks {
        cols.push((0..s).map(|i| by_pivot[&(base + i * s)].clone()).collect());
        base += s * s;
    }
    let map = StarMap::from_extension(domain.clone(), codomain.clone(), cols, tol)?;
    let r = map.image_residual(images);
    if r > tol.eps_report {
        return Err(Error::NotStarExtendible { relation: "extension restricts to the given images".into(), residual: r });
    }
    Ok(map)
}

/// `f ∘ g`. When `g` lands in `B ⊗ M_k` and `f` is defined on `B ⊗ M_j` with
/// `j | k`, `f` is ampliated by `k / j` first.
pub fn compose(f: &StarMap, g: &StarMap) -> Result<StarMap> {
    if !f.domain.same_template(&g.codomain) {
        return Err(Error::ShapeMismatch(format!(
            "cannot compose {} after a map into {}",
            f.domain.descriptor(),
            g.codomain.descriptor()
        )));
    }
    let (j, k) = (f.domain.ampl(), g.codomain.ampl());
    if k % j != 0 {
        return Err(Error::ShapeMismatch(format!("amplification {k} is not a multiple of {j}")));
    }
    let f = f.ampliate(k / j);
    let cols = g.cols.iter().map(|c| c.iter().map(|x| f.apply(x)).collect()).collect();
    Ok(StarMap { domain: g.domain.clone(), codomain: f.codomain.clone(), cols })
}

/// `f ⊕ g` into the codomain template amplified by the sum of the two amplifications.
pub fn direct_sum(f: &StarMap, g: &StarMap) -> Result<StarMap> {
    direct_sum_all(&[f.clone(), g.clone()])
}

pub fn direct_sum_all(maps: &[StarMap]) -> Result<StarMap> {
    let first = maps.first().ok_or_else(|| Error::InvalidInput("empty direct sum".into()))?;
    for m in maps {
        if m.domain != first.domain {
            return Err(Error::ShapeMismatch("direct sum needs a common domain".into()));
        }
        if !m.codomain.same_template(&first.codomain) {
            return Err(Error::ShapeMismatch("direct sum needs a common codomain template".into()));
        }
        if m.is_zero() {
            return Err(Error::InvalidInput("zero summand in a direct sum".into()));
        }
    }
    let total: usize = maps.iter().map(|m| m.codomain.ampl()).sum();
    let mut off = 0;
    let mut acc: Option<StarMap> = None;
    for m in maps {
        let e = m.embed_codomain(total, off)?;
        off += m.codomain.ampl();
        acc = Some(match acc {
            None => e,
            Some(mut a) => {
                for (ca, ce) in a.cols.iter_mut().zip(&e.cols) {
                    for (x, y) in ca.iter_mut().zip(ce) {
                        x.add_scaled(ONE, y);
                    }
                }
                a
            }
        });
    }
    Ok(acc.expect("nonempty"))
}

/// Orthonormal-column bases `A^b_i = F^b_i W_b` used to parametrize intertwiners.
fn unit_frames(m: &StarMap) -> Vec<Vec<ComplexMatrix>> {
    m.cols
        .iter()
        .map(|col| {
            let w = col[0].range_basis(0.5);
            col.iter().map(|f| f.matmul(&w)).collect()
        })
        .collect()
}

/// Solutions `z = (z_b)` with `Σ_b Σ_i A^b_i z_b (B^b_i)* ∈ D(codomain)`, where
/// `A` are frames of `f` and `B` of `g`. Returns the solution basis as
/// block lists together with the frames.
struct Intertwiners {
    fa: Vec<Vec<ComplexMatrix>>,
    gb: Vec<Vec<ComplexMatrix>>,
    /// Each solution is one `μ_f(b) × μ_g(b)` matrix per block.
    solutions: Vec<Vec<ComplexMatrix>>,
}

impl Intertwiners {
    fn assemble(&self, z: &[ComplexMatrix], n: usize) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(n, n);
        for (b, zb) in z.iter().enumerate() {
            if zb.rows() == 0 || zb.cols() == 0 {
                continue;
            }
            for (a, bm) in self.fa[b].iter().zip(&self.gb[b]) {
                out.add_scaled(ONE, &a.matmul(zb).matmul(&bm.adjoint()));
            }
        }
        out
    }

    fn random_combination(&self, rng: &mut ChaCha8Rng) -> Vec<ComplexMatrix> {
        let mut z: Vec<ComplexMatrix> = self
            .fa
            .iter()
            .zip(&self.gb)
            .map(|(a, b)| ComplexMatrix::zeros(a[0].cols(), b[0].cols()))
            .collect();
        for s in &self.solutions {
            let c = C64::new(rng.sample(rand_distr::StandardNormal), rng.sample(rand_distr::StandardNormal));
            for (zb, sb) in z.iter_mut().zip(s) {
                zb.add_scaled(c, sb);
            }
        }
        z
    }
}

fn intertwiner_space(f: &StarMap, g: &StarMap, cutoff: f64) -> Result<(Intertwiners, usize, usize)> {
    let fa = unit_frames(f);
    let gb = unit_frames(g);
    let cod = &f.codomain;
    let n = cod.size();
    let diag = cod.template_diagonal();
    let ampl = cod.ampl();
    let mut params: Vec<(usize, usize, usize)> = Vec::new();
    for b in 0..fa.len() {
        for p in 0..fa[b][0].cols() {
            for q in 0..gb[b][0].cols() {
                params.push((b, p, q));
            }
        }
    }
    let rows = n * n;
    let mut r = nalgebra::DMatrix::<C64>::zeros(rows.max(params.len()), params.len());
    for (c, &(b, p, q)) in params.iter().enumerate() {
        let mut x = ComplexMatrix::zeros(n, n);
        for (a, bm) in fa[b].iter().zip(&gb[b]) {
            for i in 0..n {
                let ai = a[(i, p)];
                if ai == ZERO {
                    continue;
                }
                for j in 0..n {
                    let bj = bm[(j, q)];
                    if bj != ZERO {
                        x[(i, j)] += ai * bj.conj();
                    }
                }
            }
        }
        let mut e = 0;
        for k in 0..ampl {
            for l in 0..ampl {
                let s = cod.template_slice(&x, k, l);
                let res = &s - &diag.project(&s);
                for z in res.as_slice() {
                    r[(e, c)] = *z;
                    e += 1;
                }
            }
        }
    }
    if params.is_empty() {
        let it = Intertwiners { fa, gb, solutions: Vec::new() };
        return Ok((it, 0, 0));
    }
    let svd = ComplexMatrix::from_na(&r).svd();
    let smax = svd.s.first().copied().unwrap_or(0.0);
    let thr = cutoff * (1.0 + smax);
    let count = |t: f64| svd.s.iter().filter(|&&s| s <= t).count();
    let lo = count(thr / 10.0);
    let hi = count(thr * 10.0);
    let mut solutions = Vec::new();
    for k in 0..svd.s.len() {
        if svd.s[k] > thr {
            continue;
        }
        let mut z: Vec<ComplexMatrix> =
            fa.iter().zip(&gb).map(|(a, b)| ComplexMatrix::zeros(a[0].cols(), b[0].cols())).collect();
        for (c, &(b, p, q)) in params.iter().enumerate() {
            z[b][(p, q)] = svd.v[(c, k)];
        }
        solutions.push(z);
    }
    Ok((Intertwiners { fa, gb, solutions }, lo, hi))
}

#[derive(Debug, Clone)]
pub struct DecompositionResult {
    pub summands: Vec<StarMap>,
    pub reducing_projections: Vec<ComplexMatrix>,
}

const KS_RETRIES: usize = 5;

/// Splits `m` into indecomposable summands cut out by the minimal projections
/// of the commutant of its extension inside the codomain's diagonal part.
pub fn krull_schmidt(m: &StarMap, tol: &ToleranceProfile) -> Result<DecompositionResult> {
    krull_schmidt_seeded(m, tol, 0x5eed)
}

pub fn krull_schmidt_seeded(m: &StarMap, tol: &ToleranceProfile, seed: u64) -> Result<DecompositionResult> {
    if m.is_zero() {
        return Ok(DecompositionResult { summands: Vec::new(), reducing_projections: Vec::new() });
    }
    let (it, lo, hi) = intertwiner_space(m, m, tol.eps_rank)?;
    if lo != hi {
        return Err(Error::ToleranceAmbiguity(format!(
            "commutant dimension is {lo} or {hi} under a tenfold change of the rank cutoff"
        )));
    }
    let n = m.codomain.size();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mus: Vec<usize> = it.fa.iter().map(|a| a[0].cols()).collect();
    let total: usize = mus.iter().sum();
    let offs: Vec<usize> = mus.iter().scan(0, |acc, &x| {
        let o = *acc;
        *acc += x;
        Some(o)
    }).collect();
    for _ in 0..KS_RETRIES {
        let z = it.random_combination(&mut rng);
        let mut y = ComplexMatrix::zeros(total, total);
        for (b, zb) in z.iter().enumerate() {
            let h = (zb + &zb.adjoint()).scale_real(0.5);
            y.set_block(offs[b], offs[b], &h);
        }
        let (vals, vecs) = y.eigh();
        let spread = vals.last().copied().unwrap_or(0.0) - vals.first().copied().unwrap_or(0.0);
        let mut clusters: Vec<Vec<usize>> = Vec::new();
        for (k, &v) in vals.iter().enumerate() {
            match clusters.last_mut() {
                Some(c) if v - vals[*c.last().unwrap()] <= tol.eps_spec * (1.0 + spread) => c.push(k),
                _ => clusters.push(vec![k]),
            }
        }
        let ambiguous = clusters.windows(2).any(|w| {
            let gap = vals[w[1][0]] - vals[*w[0].last().unwrap()];
            gap <= 1e3 * tol.eps_spec * (1.0 + spread)
        });
        if ambiguous {
            continue;
        }
        let mut summands = Vec::new();
        let mut projections = Vec::new();
        for c in &clusters {
            let q = vecs.columns(c);
            let qq = q.matmul(&q.adjoint());
            let zq: Vec<ComplexMatrix> = offs
                .iter()
                .zip(&mus)
                .map(|(&o, &mu)| qq.block(o, o, mu, mu))
                .collect();
            let p = it.assemble(&zq, n);
            let cols = m.cols.iter().map(|col| col.iter().map(|f| p.matmul(f)).collect()).collect();
            let s = StarMap { domain: m.domain.clone(), codomain: m.codomain.clone(), cols };
            summands.push(s);
            projections.push(p);
        }
        let key = |p: &ComplexMatrix| {
            let tr = p.trace().re.max(1e-300);
            (0..p.rows()).map(|i| i as f64 * p[(i, i)].re).sum::<f64>() / tr
        };
        let mut order: Vec<usize> = (0..summands.len()).collect();
        order.sort_by(|&a, &b| key(&projections[a]).partial_cmp(&key(&projections[b])).unwrap());
        let summands = order.iter().map(|&k| summands[k].clone()).collect();
        let reducing_projections = order.iter().map(|&k| projections[k].clone()).collect();
        return Ok(DecompositionResult { summands, reducing_projections });
    }
    Err(Error::ToleranceAmbiguity(format!(
        "no commutant element with separated spectrum after {KS_RETRIES} draws"
    )))
}

/// Every block entry of every generator image is a partial isometry.
pub fn is_locally_regular(m: &StarMap, tol: &ToleranceProfile) -> bool {
    let cod = &m.codomain;
    let t = cod.template_size();
    m.images().iter().all(|(_, img)| {
        (0..t).all(|i| (0..t).all(|j| is_partial_isometry(&cod.block_entry(img, i, j), tol)))
    })
}

pub fn is_regular_tr(m: &StarMap, tol: &ToleranceProfile) -> Result<bool> {
    let is_tr = |a: &OperatorAlgebra| matches!(a.base_kind(), AlgebraKind::Tr(_));
    if !is_tr(&m.domain) || !is_tr(&m.codomain) {
        return Err(Error::WrongAlgebraKind("is_regular_tr needs T_r domain and codomain".into()));
    }
    Ok(is_locally_regular(m, tol))
}

pub fn is_one_decomposable(m: &StarMap, tol: &ToleranceProfile) -> Result<bool> {
    let d = krull_schmidt(m, tol)?;
    Ok(d.summands.iter().all(|s| s.block_multiplicities().iter().all(|&k| k <= 1)))
}

fn require_t3_codomain(m: &StarMap) -> Result<()> {
    if !matches!(m.codomain.base_kind(), AlgebraKind::Tr(3)) || !matches!(m.domain.base_kind(), AlgebraKind::Tr(3)) {
        return Err(Error::WrongAlgebraKind("T₂-degeneracy is defined for maps between T₃-algebras".into()));
    }
    Ok(())
}

/// `φ(1)` is dominated by the sum of two of the three atomic interval projections.
pub fn is_t2_degenerate(m: &StarMap, tol: &ToleranceProfile) -> Result<bool> {
    require_t3_codomain(m)?;
    let one = m.unit_image();
    let used = (0..3).filter(|&i| !m.codomain.block_entry(&one, i, i).is_zero(tol.eps_report)).count();
    Ok(used <= 2)
}

pub fn is_t2_character(m: &StarMap, tol: &ToleranceProfile) -> Result<bool> {
    require_t3_codomain(m)?;
    let d = krull_schmidt(m, tol)?;
    for s in &d.summands {
        if !is_t2_degenerate(s, tol)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn block_diagonal_template(a: &OperatorAlgebra) -> bool {
    a.template_hermitian_diagonal().iter().all(|h| {
        (0..h.rows()).all(|i| (0..h.cols()).all(|j| i == j || h[(i, j)].norm() < 1e-12))
    })
}

/// Brings two maps to a common codomain amplification.
fn align(f: &StarMap, g: &StarMap) -> Result<(StarMap, StarMap)> {
    if f.domain != g.domain {
        return Err(Error::ShapeMismatch("maps have different domains".into()));
    }
    if !f.codomain.same_template(&g.codomain) {
        return Err(Error::ShapeMismatch("maps have different codomain templates".into()));
    }
    let a = f.codomain.ampl().max(g.codomain.ampl());
    Ok((f.pad_codomain(a)?, g.pad_codomain(a)?))
}

/// Lower bound on `inf_u max_x ‖f(x) − u g(x) u*‖`: 1 when multiplicities
/// differ, otherwise the largest sorted singular-value discrepancy between
/// corresponding block entries of generator images.
pub fn map_distance_lower(f: &StarMap, g: &StarMap) -> Result<f64> {
    let (f, g) = align(f, g)?;
    if f.block_multiplicities() != g.block_multiplicities() {
        return Ok(1.0);
    }
    let cod = &f.codomain;
    let t = cod.template_size();
    let blockwise = block_diagonal_template(cod);
    let mut worst: f64 = 0.0;
    for ((_, x), (_, y)) in f.images().iter().zip(g.images()) {
        let pairs: Vec<(ComplexMatrix, ComplexMatrix)> = if blockwise {
            let mut v = Vec::new();
            for i in 0..t {
                for j in 0..t {
                    v.push((cod.block_entry(x, i, j), cod.block_entry(&y, i, j)));
                }
            }
            v
        } else {
            vec![(x.clone(), y.clone())]
        };
        for (a, b) in pairs {
            let sa = a.singular_values();
            let sb = b.singular_values();
            for (p, q) in sa.iter().zip(&sb) {
                worst = worst.max((p - q).abs());
            }
        }
    }
    Ok(worst)
}

fn conj_objective(fx: &[ComplexMatrix], gx: &[ComplexMatrix], u: &ComplexMatrix) -> f64 {
    let ua = u.adjoint();
    fx.iter()
        .zip(gx)
        .map(|(f, g)| (f - &u.matmul(g).matmul(&ua)).op_norm())
        .fold(0.0, f64::max)
}

/// Unitary in the codomain's diagonal part with `u g̃ u* = f̃`, found from a
/// random element of the intertwiner space when one exists.
pub fn find_intertwining_unitary(
    f: &StarMap,
    g: &StarMap,
    tol: &ToleranceProfile,
    seed: u64,
) -> Result<Option<ComplexMatrix>> {
    let (f, g) = align(f, g)?;
    if f.block_multiplicities() != g.block_multiplicities() {
        return Ok(None);
    }
    let (it, _, _) = intertwiner_space(&f, &g, tol.eps_rank)?;
    if it.solutions.is_empty() {
        return Ok(None);
    }
    let n = f.codomain.size();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pf = f.unit_image();
    let pg = g.unit_image();
    let rank_g = pg.trace().re.round() as usize;
    let id = ComplexMatrix::identity(n);
    let cf = &id - &pf;
    let cg = &id - &pg;
    let herm_d = f.codomain.hermitian_diagonal();
    let fx: Vec<ComplexMatrix> = f.images().into_iter().map(|p| p.1).collect();
    let gx: Vec<ComplexMatrix> = g.images().into_iter().map(|p| p.1).collect();
    for _ in 0..3 {
        let z = it.random_combination(&mut rng);
        let w = it.assemble(&z, n);
        let Some(wp) = polar_part(&w, rank_g) else { continue };
        let mut u = wp;
        if n > rank_g {
            let mut y = ComplexMatrix::zeros(n, n);
            for h in &herm_d {
                let c = C64::new(rng.sample(rand_distr::StandardNormal), rng.sample(rand_distr::StandardNormal));
                y.add_scaled(c, h);
            }
            let v0 = cf.matmul(&y).matmul(&cg);
            let Some(vp) = polar_part(&v0, n - rank_g) else { continue };
            u = &u + &vp;
        }
        let unit_err = (&u.matmul(&u.adjoint()) - &id).max_abs();
        if unit_err > tol.eps_report {
            continue;
        }
        if conj_objective(&fx, &gx, &u) <= tol.eps_report {
            return Ok(Some(u));
        }
    }
    Ok(None)
}

/// `U V*` from the SVD of `w` when exactly `rank` singular values are nonzero.
fn polar_part(w: &ComplexMatrix, rank: usize) -> Option<ComplexMatrix> {
    let svd = w.svd();
    let smax = svd.s.first().copied().unwrap_or(0.0);
    let keep = svd.s.iter().filter(|&&x| x > 1e-6 * smax.max(1e-300)).count();
    if keep != rank || rank == 0 {
        return None;
    }
    Some(ComplexMatrix::from_fn(w.rows(), w.cols(), |i, j| (0..keep).map(|k| svd.u[(i, k)] * svd.v[(j, k)].conj()).sum()))
}

/// Random unitary `exp(iH)` with `H` a Gaussian Hermitian element of the
/// codomain's diagonal part.
pub fn random_inner_unitary<R: Rng + ?Sized>(codomain: &OperatorAlgebra, rng: &mut R) -> ComplexMatrix {
    let n = codomain.size();
    let mut h = ComplexMatrix::zeros(n, n);
    for b in codomain.hermitian_diagonal() {
        let c: f64 = rng.sample(rand_distr::StandardNormal);
        h.add_scaled(C64::new(2.0 * c, 0.0), &b);
    }
    h.exp_i_hermitian()
}

pub const DEFAULT_RESTARTS: usize = 8;
pub const DEFAULT_STEPS: usize = 500;

/// Upper bound on `inf_u max_x ‖f(x) − u g(x) u*‖` over unitaries `u` of the
/// codomain's diagonal part: the best objective seen along geodesic descent
/// runs (one from an intertwiner when available, one from the identity, the
/// rest random). Deterministic in `seed` and nonincreasing in `steps`.
pub fn map_distance_upper(f: &StarMap, g: &StarMap, restarts: usize, steps: usize, seed: u64) -> Result<f64> {
    let (f, g) = align(f, g)?;
    let n = f.codomain.size();
    let fx: Vec<ComplexMatrix> = f.images().into_iter().map(|p| p.1).collect();
    let gx: Vec<ComplexMatrix> = g.images().into_iter().map(|p| p.1).collect();
    let herm = f.codomain.hermitian_diagonal();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = Vec::new();
    if f.block_multiplicities() == g.block_multiplicities() {
        if let Ok(Some(u)) = find_intertwining_unitary(&f, &g, &ToleranceProfile::default(), seed) {
            starts.push(u);
        }
    }
    starts.push(ComplexMatrix::identity(n));
    while starts.len() < restarts.max(1) {
        starts.push(random_inner_unitary(&f.codomain, &mut rng));
    }
    let mut best = f64::INFINITY;
    for u0 in starts.into_iter().take(restarts.max(1)) {
        let mut u = u0;
        let mut j = conj_objective(&fx, &gx, &u);
        best = best.min(j);
        let surrogate = |u: &ComplexMatrix| -> f64 {
            let ua = u.adjoint();
            fx.iter().zip(&gx).map(|(a, b)| (a - &u.matmul(b).matmul(&ua)).frobenius().powi(2)).sum()
        };
        let mut s = surrogate(&u);
        let mut eta = 0.5;
        for _ in 0..steps {
            if best <= 1e-13 {
                break;
            }
            // dS/dt along u·exp(i t h) is 2 Im tr(K h) with K = Σ (G A* − A* G),
            // A = u* F u − G.
            let ua = u.adjoint();
            let mut k = ComplexMatrix::zeros(n, n);
            for (a, b) in fx.iter().zip(&gx) {
                let am = &ua.matmul(a).matmul(&u) - b;
                let ad = am.adjoint();
                k.add_scaled(ONE, &(&b.matmul(&ad) - &ad.matmul(b)));
            }
            let mut dir = ComplexMatrix::zeros(n, n);
            let kt = k.adjoint();
            for h in &herm {
                let gk = 2.0 * kt.inner(h).im;
                dir.add_scaled(C64::new(-gk, 0.0), h);
            }
            if dir.frobenius() < 1e-15 {
                break;
            }
            let mut accepted = false;
            for _ in 0..20 {
                let cand = u.matmul(&dir.scale_real(eta).exp_i_hermitian());
                let sc = surrogate(&cand);
                if sc < s {
                    u = cand;
                    s = sc;
                    eta *= 1.5;
                    accepted = true;
                    break;
                }
                eta *= 0.5;
            }
            if !accepted {
                break;
            }
            j = conj_objective(&fx, &gx, &u);
            best = best.min(j);
        }
    }
    Ok(best)
}

/// Invariant of a map between V-algebras: ranks of the `(1,2)` and `(1,3)`
/// block entries `v₁, v₂` of `φ(e₁₂)` and `w₁, w₂` of `φ(e₁₃)`, and the nonzero
/// spectrum of `w₁w₁* v₁v₁* w₁w₁*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VClassInvariant {
    pub ranks: [usize; 4],
    pub overlap: SpectralClass,
    /// Amplification of the domain; ranks and multiplicities scale with it.
    pub domain_ampl: usize,
}

impl VClassInvariant {
    pub fn matches(&self, other: &Self, tol: &ToleranceProfile) -> bool {
        self.ranks == other.ranks
            && self.domain_ampl == other.domain_ampl
            && crate::numkit::unitary_orbit_distance(&self.overlap, &other.overlap) <= tol.eps_report
    }
}

fn template_unit(a: &OperatorAlgebra, i: usize, j: usize) -> ComplexMatrix {
    let t = a.template_size();
    ComplexMatrix::unit(t, t, i, j).kron(&ComplexMatrix::identity(a.ampl()))
}

/// `(rank v₂, rank v₁, rank v₃)` for `φ(e₁₂) = [[v₁, v₂], [0, v₃]]`, divided by
/// the domain amplification.
pub fn classify_t2(m: &StarMap, tol: &ToleranceProfile) -> Result<(usize, usize, usize)> {
    let t2 = |a: &OperatorAlgebra| matches!(a.base_kind(), AlgebraKind::Tr(2));
    if !t2(&m.domain) || !t2(&m.codomain) {
        return Err(Error::WrongAlgebraKind("classify_t2 needs T₂ ⊗ M_k → T₂ ⊗ M_l".into()));
    }
    let x = m.apply(&template_unit(&m.domain, 0, 1));
    let cod = &m.codomain;
    let k = m.domain.ampl();
    let r = |i, j| rank_eps(&cod.block_entry(&x, i, j), tol);
    let (r0, r1, r2) = (r(0, 1), r(0, 0), r(1, 1));
    if r0 % k != 0 || r1 % k != 0 || r2 % k != 0 {
        return Err(Error::ToleranceAmbiguity("block ranks are not multiples of the domain amplification".into()));
    }
    Ok((r0 / k, r1 / k, r2 / k))
}

fn require_v(m: &StarMap) -> Result<()> {
    let v = |a: &OperatorAlgebra| matches!(a.base_kind(), AlgebraKind::VAlgebra);
    if !v(&m.domain) || !v(&m.codomain) {
        return Err(Error::WrongAlgebraKind("classify_valg needs A(V) ⊗ M_k → A(V) ⊗ M_l".into()));
    }
    Ok(())
}

pub fn classify_valg(m: &StarMap, tol: &ToleranceProfile) -> Result<VClassInvariant> {
    require_v(m)?;
    let cod = &m.codomain;
    let x = m.apply(&template_unit(&m.domain, 0, 1));
    let y = m.apply(&template_unit(&m.domain, 0, 2));
    let v1 = cod.block_entry(&x, 0, 1);
    let v2 = cod.block_entry(&x, 0, 2);
    let w1 = cod.block_entry(&y, 0, 1);
    let w2 = cod.block_entry(&y, 0, 2);
    let ranks = [rank_eps(&v1, tol), rank_eps(&v2, tol), rank_eps(&w1, tol), rank_eps(&w2, tol)];
    let pw = w1.matmul(&w1.adjoint());
    let pv = v1.matmul(&v1.adjoint());
    let op = pw.matmul(&pv).matmul(&pw);
    let overlap = hermitian_spectrum(&op, tol)?.nonzero_part(tol.eps_spec);
    Ok(VClassInvariant { ranks, overlap, domain_ampl: m.domain.ampl() })
}

/// Whether `m` preserves the strictly upper triangular ideal of `A(V)`:
/// `φ(e₁₂), φ(e₁₃)` only have `(1,2)` and `(1,3)` block entries.
pub fn preserves_upper_ideal(m: &StarMap, tol: &ToleranceProfile) -> Result<bool> {
    require_v(m)?;
    let cod = &m.codomain;
    for (i, j) in [(0, 1), (0, 2)] {
        let x = m.apply(&template_unit(&m.domain, i, j));
        for p in 0..3 {
            for q in 0..3 {
                if (p, q) == (0, 1) || (p, q) == (0, 2) {
                    continue;
                }
                if !cod.block_entry(&x, p, q).is_zero(tol.eps_report) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Equivalent,
    NotEquivalent(String),
    Unknown(String),
}

impl Verdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, Verdict::Equivalent)
    }

    pub fn is_not_equivalent(&self) -> bool {
        matches!(self, Verdict::NotEquivalent(_))
    }
}

/// Three-valued inner unitary equivalence test.
pub fn inner_equivalent(f: &StarMap, g: &StarMap, tol: &ToleranceProfile) -> Result<Verdict> {
    inner_equivalent_inner(f, g, tol, true)
}

fn inner_equivalent_inner(f: &StarMap, g: &StarMap, tol: &ToleranceProfile, recurse: bool) -> Result<Verdict> {
    let (f, g) = align(f, g)?;
    let (mf, mg) = (f.block_multiplicities(), g.block_multiplicities());
    if mf != mg {
        return Ok(Verdict::NotEquivalent(format!("multiplicities {mf:?} vs {mg:?}")));
    }
    let lower = map_distance_lower(&f, &g)?;
    if lower > tol.eps_report {
        return Ok(Verdict::NotEquivalent(format!("block singular values differ by {lower:.6e}")));
    }
    if matches!(f.domain.base_kind(), AlgebraKind::Tr(2)) && matches!(f.codomain.base_kind(), AlgebraKind::Tr(2)) {
        let (a, b) = (classify_t2(&f, tol)?, classify_t2(&g, tol)?);
        return Ok(if a == b {
            Verdict::Equivalent
        } else {
            Verdict::NotEquivalent(format!("T₂ triples {a:?} vs {b:?}"))
        });
    }
    if matches!(f.domain.base_kind(), AlgebraKind::VAlgebra)
        && matches!(f.codomain.base_kind(), AlgebraKind::VAlgebra)
        && preserves_upper_ideal(&f, tol)?
        && preserves_upper_ideal(&g, tol)?
    {
        let (a, b) = (classify_valg(&f, tol)?, classify_valg(&g, tol)?);
        return Ok(if a.matches(&b, tol) {
            Verdict::Equivalent
        } else {
            Verdict::NotEquivalent(format!("V invariants {:?}/{} vs {:?}/{}", a.ranks, a.overlap, b.ranks, b.overlap))
        });
    }
    if find_intertwining_unitary(&f, &g, tol, 0x1417)?.is_some() {
        return Ok(Verdict::Equivalent);
    }
    if recurse {
        let df = krull_schmidt(&f, tol)?;
        let dg = krull_schmidt(&g, tol)?;
        if df.summands.len() != dg.summands.len() {
            return Ok(Verdict::NotEquivalent(format!(
                "{} vs {} indecomposable summands",
                df.summands.len(),
                dg.summands.len()
            )));
        }
        let mut used = vec![false; dg.summands.len()];
        for s in &df.summands {
            let mut matched = false;
            let mut any_unknown = false;
            for (k, t) in dg.summands.iter().enumerate() {
                if used[k] {
                    continue;
                }
                match inner_equivalent_inner(s, t, tol, false)? {
                    Verdict::Equivalent => {
                        used[k] = true;
                        matched = true;
                        break;
                    }
                    Verdict::Unknown(_) => any_unknown = true,
                    Verdict::NotEquivalent(_) => {}
                }
            }
            if !matched && !any_unknown {
                return Ok(Verdict::NotEquivalent("a summand has no equivalent partner".into()));
            }
        }
    }
    let upper = map_distance_upper(&f, &g, 2, 60, 0x0b)?;
    if upper < tol.eps_report {
        return Ok(Verdict::Equivalent);
    }
    Ok(Verdict::Unknown(format!("invariants agree; best conjugation residual {upper:.3e}")))
}

/// Greedy matching of two multisets of maps under [`inner_equivalent`];
/// returns the index pairing when every map finds a partner.
pub fn match_classes(a: &[StarMap], b: &[StarMap], tol: &ToleranceProfile) -> Result<Option<Vec<usize>>> {
    if a.len() != b.len() {
        return Ok(None);
    }
    let mut used = vec![false; b.len()];
    let mut pairing = Vec::with_capacity(a.len());
    for x in a {
        let mut found = None;
        for (k, y) in b.iter().enumerate() {
            if used[k] || x.domain != y.domain || !x.codomain.same_template(&y.codomain) {
                continue;
            }
            if inner_equivalent(x, y, tol)?.is_equivalent() {
                found = Some(k);
                break;
            }
        }
        match found {
            Some(k) => {
                used[k] = true;
                pairing.push(k);
            }
            None => return Ok(None),
        }
    }
    Ok(Some(pairing))
}

/// Serializable map description: algebra descriptors and generator images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapDescription {
    pub domain: String,
    pub codomain: String,
    pub images: BTreeMap<String, Vec<Vec<C64>>>,
}

impl MapDescription {
    pub fn from_map(m: &StarMap) -> Self {
        Self {
            domain: m.domain.descriptor(),
            codomain: m.codomain.descriptor(),
            images: m.images().into_iter().map(|(l, x)| (l, x.to_rows())).collect(),
        }
    }

    pub fn to_map(&self, tol: &ToleranceProfile) -> Result<StarMap> {
        let domain = OperatorAlgebra::from_descriptor(&self.domain)?;
        let codomain = OperatorAlgebra::from_descriptor(&self.codomain)?;
        let images = self
            .images
            .iter()
            .map(|(l, rows)| Ok((l.clone(), ComplexMatrix::from_rows(rows)?)))
            .collect::<Result<Vec<_>>>()?;
        validate_star_extendible(&domain, &codomain, &images, tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{build_tr, build_valgebra, tensor_mn};

    fn tol() -> ToleranceProfile {
        ToleranceProfile::default()
    }

    fn identity_map(a: &OperatorAlgebra) -> StarMap {
        let images: Vec<_> = a.generators().into_iter().map(|g| (g.label, g.matrix)).collect();
        validate_star_extendible(a, a, &images, &tol()).unwrap()
    }

    #[test]
    fn identity_is_valid() {
        let t2 = build_tr(2).unwrap();
        let id = identity_map(&t2);
        assert_eq!(id.multiplicity().unwrap(), 1);
        assert!(id.homomorphism_residual() < 1e-12);
        assert_eq!(classify_t2(&id, &tol()).unwrap(), (1, 0, 0));
        let t3 = build_tr(3).unwrap();
        assert_eq!(identity_map(&t3).multiplicity().unwrap(), 1);
    }

    #[test]
    fn non_partial_isometry_is_rejected() {
        let t2 = build_tr(2).unwrap();
        let mut images: Vec<_> = t2.generators().into_iter().map(|g| (g.label, g.matrix)).collect();
        for (l, m) in images.iter_mut() {
            if l == "e(1,2)" {
                *m = m.scale_real(0.5);
            }
        }
        let err = validate_star_extendible(&t2, &t2, &images, &tol()).unwrap_err();
        assert!(matches!(err, Error::NotStarExtendible { .. }), "{err:?}");
    }

    #[test]
    fn missing_generator_is_rejected() {
        let t2 = build_tr(2).unwrap();
        let images = vec![("e(1,1)".to_string(), ComplexMatrix::unit(2, 2, 0, 0))];
        assert!(validate_star_extendible(&t2, &t2, &images, &tol()).is_err());
    }

    #[test]
    fn ampliation_and_composition_multiply_multiplicity() {
        let v = build_valgebra();
        let id = identity_map(&v);
        let two = direct_sum(&id, &id).unwrap();
        assert_eq!(two.multiplicity().unwrap(), 2);
        let four = compose(&two, &two).unwrap();
        assert_eq!(four.multiplicity().unwrap(), 4);
        assert!(four.homomorphism_residual() < 1e-10);
        assert_eq!(four.codomain().ampl(), 4);
        let back = compose(&id, &two).unwrap();
        assert_eq!(back, two);
    }

    #[test]
    fn direct_sum_rejects_zero() {
        let t2 = build_tr(2).unwrap();
        let id = identity_map(&t2);
        let zero = StarMap {
            domain: t2.clone(),
            codomain: t2.clone(),
            cols: vec![vec![ComplexMatrix::zeros(2, 2), ComplexMatrix::zeros(2, 2)]],
        };
        assert!(direct_sum(&id, &zero).is_err());
    }

    #[test]
    fn decomposition_of_identity_sums() {
        let t3 = build_tr(3).unwrap();
        let id = identity_map(&t3);
        let s = direct_sum_all(&[id.clone(), id.clone(), id.clone()]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_inner_unitary(s.codomain(), &mut rng);
        let sc = s.conjugate(&u);
        let d = krull_schmidt(&sc, &tol()).unwrap();
        assert_eq!(d.summands.len(), 3);
        let n = sc.codomain().size();
        let mut total = ComplexMatrix::zeros(n, n);
        for p in &d.reducing_projections {
            total = &total + p;
            assert!(sc.codomain().diagonal_residual(p) < 1e-8);
        }
        assert!((&total - &sc.unit_image()).max_abs() < 1e-8);
        for s in &d.summands {
            assert_eq!(s.multiplicity().unwrap(), 1);
            assert!(inner_equivalent(s, &id, &tol()).unwrap().is_equivalent());
        }
        // Reassembly reproduces the map exactly.
        for (b, col) in sc.extension_columns().iter().enumerate() {
            for (i, f) in col.iter().enumerate() {
                let mut acc = ComplexMatrix::zeros(n, n);
                for s in &d.summands {
                    acc = &acc + &s.extension_columns()[b][i];
                }
                assert!((&acc - f).max_abs() < 1e-8);
            }
        }
    }

    #[test]
    fn conjugation_recovered_by_upper_bound() {
        let t2 = tensor_mn(&build_tr(2).unwrap(), 1);
        let id = identity_map(&t2);
        let s = direct_sum(&id, &id).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = random_inner_unitary(s.codomain(), &mut rng);
        let sc = s.conjugate(&u);
        let up = map_distance_upper(&sc, &s, 3, 50, 1).unwrap();
        assert!(up <= 1e-6, "{up}");
        assert!(map_distance_upper(&s, &s, 1, 10, 1).unwrap() < 1e-12);
        let low = map_distance_lower(&sc, &s).unwrap();
        assert!(low <= up + 1e-12);
    }

    #[test]
    fn map_description_round_trip() {
        let v = build_valgebra();
        let id = identity_map(&v);
        let d = MapDescription::from_map(&id);
        let back = d.to_map(&tol()).unwrap();
        assert_eq!(back.image_residual(&id.images()), 0.0);
    }
}
