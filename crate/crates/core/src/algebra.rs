//! Finitely acting operator algebras as concrete subspaces of block-diagonal
//! matrix algebras.
//!
//! Every algebra is stored as a *template* (a subalgebra of `M_{n_T}` that is
//! block diagonal with respect to the summands of its generated C*-algebra)
//! together with an amplification `n`, meaning the algebra `template ⊗ M_n`
//! realised as `kron(a, x)` with the template index outermost. Membership and
//! the diagonal part of the amplified algebra reduce to the template slices
//! `S_{kl}[i][j] = X[i·n+k, j·n+l]`.

use std::collections::BTreeSet;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{real_null_space, ComplexMatrix, Subspace, ToleranceProfile, C64, ONE};

/// Directed multigraph with vertices `0..vertices`; loops allowed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quiver {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

/// Reflexive transitive digraph given by an adjacency list (`adj[u]` lists the
/// targets of edges out of `u`, including `u` itself).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Digraph {
    pub adj: Vec<Vec<usize>>,
}

impl Digraph {
    pub fn chain(r: usize) -> Self {
        Self { adj: (0..r).map(|i| (i..r).collect()).collect() }
    }

    pub fn vertices(&self) -> usize {
        self.adj.len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].contains(&v)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vertices();
        for (u, out) in self.adj.iter().enumerate() {
            if out.iter().any(|&v| v >= n) {
                return Err(Error::InvalidDigraph(format!("edge out of range at vertex {u}")));
            }
            if !out.contains(&u) {
                return Err(Error::InvalidDigraph(format!("vertex {} is not reflexive", u + 1)));
            }
        }
        for u in 0..n {
            for &v in &self.adj[u] {
                for &w in &self.adj[v] {
                    if !self.has_edge(u, w) {
                        return Err(Error::InvalidDigraph(format!(
                            "not transitive: {} -> {} -> {}",
                            u + 1,
                            v + 1,
                            w + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Connected components of the underlying undirected graph, each sorted,
    /// ordered by smallest vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.vertices();
        let mut comp = vec![usize::MAX; n];
        let mut out = Vec::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut stack = vec![s];
            let mut members = Vec::new();
            comp[s] = id;
            while let Some(u) = stack.pop() {
                members.push(u);
                for v in 0..n {
                    if comp[v] == usize::MAX && (self.has_edge(u, v) || self.has_edge(v, u)) {
                        comp[v] = id;
                        stack.push(v);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum AlgebraKind {
    Tr(usize),
    TrMax(usize),
    VAlgebra,
    L2,
    Bipartite(usize, usize),
    QuiverMin(Quiver),
    DigraphAlgebra(Digraph),
    MatrixOver(Box<AlgebraKind>, usize),
}

impl AlgebraKind {
    /// Kind tag ignoring any amplification.
    pub fn base(&self) -> &AlgebraKind {
        match self {
            AlgebraKind::MatrixOver(b, _) => b.base(),
            k => k,
        }
    }
}

impl fmt::Display for AlgebraKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgebraKind::Tr(r) => write!(f, "T:{r}"),
            AlgebraKind::TrMax(r) => write!(f, "Tmax:{r}"),
            AlgebraKind::VAlgebra => write!(f, "V"),
            AlgebraKind::L2 => write!(f, "L2"),
            AlgebraKind::Bipartite(n, m) => write!(f, "G:{n},{m}"),
            AlgebraKind::QuiverMin(q) => {
                write!(f, "Q:")?;
                let parts: Vec<String> =
                    q.edges.iter().map(|(u, v)| format!("{}-{}", u + 1, v + 1)).collect();
                write!(f, "{}", parts.join(","))
            }
            AlgebraKind::DigraphAlgebra(g) => {
                write!(f, "D:")?;
                let mut parts = Vec::new();
                for (u, out) in g.adj.iter().enumerate() {
                    for &v in out {
                        if u != v {
                            parts.push(format!("{}-{}", u + 1, v + 1));
                        }
                    }
                }
                write!(f, "{}/{}", g.vertices(), parts.join(","))
            }
            AlgebraKind::MatrixOver(b, n) => write!(f, "{b}@{n}"),
        }
    }
}

/// Summand sizes of a generated C*-algebra `⊕ M_{s_b}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockShape {
    pub blocks: Vec<usize>,
}

impl BlockShape {
    pub fn total(&self) -> usize {
        self.blocks.iter().sum()
    }

    pub fn offsets(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .scan(0, |acc, &s| {
                let o = *acc;
                *acc += s;
                Some(o)
            })
            .collect()
    }

    /// `dim ⊕ M_{s_b} = Σ s_b²`.
    pub fn cstar_dim(&self) -> usize {
        self.blocks.iter().map(|s| s * s).sum()
    }
}

/// Interval `[start, end]` of the `r`-chain (1-based, inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct IntervalProjection {
    pub start: usize,
    pub end: usize,
}

impl IntervalProjection {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, i: usize) -> bool {
        self.start <= i && i <= self.end
    }
}

/// All intervals of the `r`-chain, ordered by length descending then start.
pub fn semi_invariant_projections(r: usize) -> Vec<IntervalProjection> {
    let mut v = Vec::with_capacity(r * (r + 1) / 2);
    for len in (1..=r).rev() {
        for start in 1..=r + 1 - len {
            v.push(IntervalProjection { start, end: start + len - 1 });
        }
    }
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub label: String,
    pub matrix: ComplexMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorAlgebra {
    kind: AlgebraKind,
    template_shape: BlockShape,
    template_basis: Vec<ComplexMatrix>,
    template_generators: Vec<Generator>,
    ampl: usize,
}

impl OperatorAlgebra {
    fn from_template(
        kind: AlgebraKind,
        shape: Vec<usize>,
        basis: Vec<ComplexMatrix>,
        generators: Vec<Generator>,
    ) -> Self {
        Self {
            kind,
            template_shape: BlockShape { blocks: shape },
            template_basis: basis,
            template_generators: generators,
            ampl: 1,
        }
    }

    /// Kind tag; amplified algebras report `MatrixOver(base, n)`.
    pub fn kind(&self) -> AlgebraKind {
        if self.ampl == 1 {
            self.kind.clone()
        } else {
            AlgebraKind::MatrixOver(Box::new(self.kind.clone()), self.ampl)
        }
    }

    pub fn base_kind(&self) -> &AlgebraKind {
        &self.kind
    }

    pub fn ampl(&self) -> usize {
        self.ampl
    }

    /// Size `n_T` of the template matrices.
    pub fn template_size(&self) -> usize {
        self.template_shape.total()
    }

    pub fn template_shape(&self) -> &BlockShape {
        &self.template_shape
    }

    pub fn template_basis(&self) -> &[ComplexMatrix] {
        &self.template_basis
    }

    pub fn template_generators(&self) -> &[Generator] {
        &self.template_generators
    }

    /// Shape of the generated C*-algebra of `template ⊗ M_n`.
    pub fn shape(&self) -> BlockShape {
        BlockShape { blocks: self.template_shape.blocks.iter().map(|s| s * self.ampl).collect() }
    }

    /// Size `N` of the ambient matrices.
    pub fn size(&self) -> usize {
        self.template_size() * self.ampl
    }

    pub fn dim(&self) -> usize {
        self.template_basis.len() * self.ampl * self.ampl
    }

    /// Same template with amplification replaced by `n`.
    pub fn with_ampl(&self, n: usize) -> Self {
        let mut a = self.clone();
        a.ampl = n;
        a
    }

    /// Whether `self` and `other` have the same template (any amplification).
    pub fn same_template(&self, other: &Self) -> bool {
        self.kind == other.kind && self.template_basis == other.template_basis
    }

    /// Amplify a template-sized matrix: `kron(t, x)`.
    pub fn amplify(&self, t: &ComplexMatrix, x: &ComplexMatrix) -> ComplexMatrix {
        t.kron(x)
    }

    /// Spanning basis of the algebra (materialized; avoid for large `n`).
    pub fn basis(&self) -> Vec<ComplexMatrix> {
        let n = self.ampl;
        let mut out = Vec::with_capacity(self.dim());
        for b in &self.template_basis {
            for k in 0..n {
                for l in 0..n {
                    out.push(b.kron(&ComplexMatrix::unit(n, n, k, l)));
                }
            }
        }
        out
    }

    /// Generators of `template ⊗ M_n`: template generators tensored with
    /// `I_n`, together with `1 ⊗ e_{k,k+1}` and `1 ⊗ e_{k+1,k}`.
    pub fn generators(&self) -> Vec<Generator> {
        let n = self.ampl;
        if n == 1 {
            return self.template_generators.clone();
        }
        let id_n = ComplexMatrix::identity(n);
        let id_t = ComplexMatrix::identity(self.template_size());
        let mut out: Vec<Generator> = self
            .template_generators
            .iter()
            .map(|g| Generator { label: g.label.clone(), matrix: g.matrix.kron(&id_n) })
            .collect();
        for k in 0..n - 1 {
            out.push(Generator {
                label: format!("u({},{})", k + 1, k + 2),
                matrix: id_t.kron(&ComplexMatrix::unit(n, n, k, k + 1)),
            });
            out.push(Generator {
                label: format!("u({},{})", k + 2, k + 1),
                matrix: id_t.kron(&ComplexMatrix::unit(n, n, k + 1, k)),
            });
        }
        out
    }

    pub fn generator_labels(&self) -> Vec<String> {
        self.generators().into_iter().map(|g| g.label).collect()
    }

    /// Template slice `S_{kl}[i][j] = X[i·n+k, j·n+l]`.
    pub fn template_slice(&self, x: &ComplexMatrix, k: usize, l: usize) -> ComplexMatrix {
        let n = self.ampl;
        ComplexMatrix::from_fn(self.template_size(), self.template_size(), |i, j| x[(i * n + k, j * n + l)])
    }

    /// `n_T × n_T` grid entry `(i, j)` of `X`, an `n × n` block.
    pub fn block_entry(&self, x: &ComplexMatrix, i: usize, j: usize) -> ComplexMatrix {
        let n = self.ampl;
        x.block(i * n, j * n, n, n)
    }

    pub fn template_subspace(&self) -> Subspace {
        let t = self.template_size();
        Subspace::from_spanning(t, t, &self.template_basis, 1e-12)
    }

    /// Largest template-slice residual of `x` against the algebra.
    pub fn membership_residual(&self, x: &ComplexMatrix) -> f64 {
        let sub = self.template_subspace();
        self.slice_residual(&sub, x)
    }

    pub(crate) fn slice_residual(&self, sub: &Subspace, x: &ComplexMatrix) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..self.ampl {
            for l in 0..self.ampl {
                worst = worst.max(sub.residual(&self.template_slice(x, k, l)));
            }
        }
        worst
    }

    pub fn contains(&self, x: &ComplexMatrix, tol: &ToleranceProfile) -> bool {
        x.rows() == self.size() && x.cols() == self.size() && self.membership_residual(x) <= tol.eps_report
    }

    /// Hermitian elements of the template diagonal part, orthonormal over ℝ.
    pub fn template_hermitian_diagonal(&self) -> Vec<ComplexMatrix> {
        let sub = self.template_subspace();
        let q = sub.basis();
        let t = self.template_size();
        let d = q.len();
        // Real unknowns (Re c_k, Im c_k); constraint x − x* = 0 split into parts.
        let mut a = DMatrix::<f64>::zeros(2 * t * t, 2 * d);
        let mut cols: Vec<ComplexMatrix> = Vec::with_capacity(2 * d);
        for k in 0..d {
            cols.push(q[k].clone());
            cols.push(q[k].scale(C64::new(0.0, 1.0)));
        }
        for (c, x) in cols.iter().enumerate() {
            let skew = x - &x.adjoint();
            for (e, z) in skew.as_slice().iter().enumerate() {
                a[(2 * e, c)] = z.re;
                a[(2 * e + 1, c)] = z.im;
            }
        }
        let null = real_null_space(&a, 1e-10);
        let mut herm: Vec<ComplexMatrix> = Vec::new();
        for j in 0..null.ncols() {
            let mut h = ComplexMatrix::zeros(t, t);
            for (c, x) in cols.iter().enumerate() {
                h.add_scaled(C64::new(null[(c, j)], 0.0), x);
            }
            // Re-symmetrize and orthonormalize over ℝ (tr(h g) is real for Hermitian h, g).
            let mut h = (&h + &h.adjoint()).scale_real(0.5);
            for _ in 0..2 {
                for g in &herm {
                    let c = g.inner(&h).re;
                    h.add_scaled(C64::new(-c, 0.0), g);
                }
            }
            let nrm = h.frobenius();
            if nrm > 1e-10 {
                herm.push(h.scale_real(1.0 / nrm));
            }
        }
        herm
    }

    /// Orthonormal basis of the template diagonal part `A ∩ A*`.
    pub fn template_diagonal(&self) -> Subspace {
        let t = self.template_size();
        Subspace::from_spanning(t, t, &self.template_hermitian_diagonal(), 1e-10)
    }

    /// Hermitian elements of `(A ⊗ M_n) ∩ (A ⊗ M_n)*`, orthonormal over ℝ.
    pub fn hermitian_diagonal(&self) -> Vec<ComplexMatrix> {
        let n = self.ampl;
        let herm_n = hermitian_matrix_basis(n);
        let mut out = Vec::new();
        for h in self.template_hermitian_diagonal() {
            for s in &herm_n {
                out.push(h.kron(s));
            }
        }
        out
    }

    /// Residual of `x` against the diagonal part of the amplified algebra.
    pub fn diagonal_residual(&self, x: &ComplexMatrix) -> f64 {
        let d = self.template_diagonal();
        self.slice_residual(&d, x)
    }

    /// Matrix units `e^b_{ij}` of the generated C*-algebra, as `(block, i, j)` → matrix.
    pub fn cstar_unit(&self, block: usize, i: usize, j: usize) -> ComplexMatrix {
        let shape = self.shape();
        let off = shape.offsets()[block];
        ComplexMatrix::unit(self.size(), self.size(), off + i, off + j)
    }

    /// Dimension of the *-algebra generated by the generators, by closure under
    /// products (used to confirm the declared block shape).
    pub fn generated_cstar_dim(&self) -> usize {
        let n = self.size();
        let gens: Vec<ComplexMatrix> = self
            .generators()
            .into_iter()
            .flat_map(|g| [g.matrix.adjoint(), g.matrix])
            .collect();
        let mut span = Subspace::from_spanning(n, n, &[], 1e-10);
        let mut queue: Vec<ComplexMatrix> = Vec::new();
        for g in &gens {
            if span.push(g, 1e-9) {
                queue.push(g.clone());
            }
        }
        while let Some(w) = queue.pop() {
            for g in &gens {
                let p = w.matmul(g);
                if span.push(&p, 1e-9) {
                    queue.push(p);
                }
            }
        }
        span.dim()
    }

    /// Largest residual of products of template basis elements against the span.
    pub fn closure_residual(&self) -> f64 {
        let sub = self.template_subspace();
        let mut worst: f64 = 0.0;
        for a in &self.template_basis {
            for b in &self.template_basis {
                worst = worst.max(sub.residual(&a.matmul(b)));
            }
        }
        worst
    }

    /// Parses descriptors such as `"T:3"`, `"Tmax:2@2"`, `"V"`, `"L2"`,
    /// `"G:2,2"`, `"Q:1-1"`, `"D:3/1-2,2-3,1-3"`.
    pub fn from_descriptor(s: &str) -> Result<Self> {
        let s = s.trim();
        let (base, ampl) = match s.split_once('@') {
            Some((b, n)) => (
                b,
                n.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidInput(format!("bad amplification in {s:?}")))?,
            ),
            None => (s, 1),
        };
        if ampl == 0 {
            return Err(Error::InvalidInput("amplification must be >= 1".into()));
        }
        let num = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidInput(format!("bad number {t:?} in {s:?}")))
        };
        let a = match base.split_once(':') {
            None if base == "V" => build_valgebra(),
            None if base == "L2" => build_l2(),
            Some(("T", r)) => build_tr(num(r)?)?,
            Some(("Tmax", r)) => build_trmax(num(r)?)?,
            Some(("G", nm)) => {
                let (n, m) = nm
                    .split_once(',')
                    .ok_or_else(|| Error::InvalidInput(format!("expected G:n,m in {s:?}")))?;
                build_bipartite(num(n)?, num(m)?)?
            }
            Some(("Q", edges)) => {
                let edges = parse_edges(edges)?;
                let vertices = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
                build_quiver_min(&Quiver { vertices, edges })?
            }
            Some(("D", spec)) => {
                let (n, edges) = spec
                    .split_once('/')
                    .ok_or_else(|| Error::InvalidInput(format!("expected D:n/edges in {s:?}")))?;
                let n = num(n)?;
                let mut adj: Vec<Vec<usize>> = (0..n).map(|u| vec![u]).collect();
                for (u, v) in parse_edges(edges)? {
                    if u >= n || v >= n {
                        return Err(Error::InvalidInput(format!("edge out of range in {s:?}")));
                    }
                    if !adj[u].contains(&v) {
                        adj[u].push(v);
                    }
                }
                build_digraph_algebra(&Digraph { adj })?
            }
            _ => return Err(Error::InvalidInput(format!("unknown algebra descriptor {s:?}"))),
        };
        Ok(tensor_mn(&a, ampl))
    }

    pub fn descriptor(&self) -> String {
        self.kind().to_string()
    }
}

fn parse_edges(s: &str) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (u, v) = part
            .split_once('-')
            .ok_or_else(|| Error::InvalidInput(format!("bad edge {part:?}")))?;
        let u: usize = u.trim().parse().map_err(|_| Error::InvalidInput(format!("bad edge {part:?}")))?;
        let v: usize = v.trim().parse().map_err(|_| Error::InvalidInput(format!("bad edge {part:?}")))?;
        if u == 0 || v == 0 {
            return Err(Error::InvalidInput("vertices are 1-based".into()));
        }
        out.push((u - 1, v - 1));
    }
    Ok(out)
}

/// Hermitian basis of `M_n`, orthonormal over ℝ.
pub fn hermitian_matrix_basis(n: usize) -> Vec<ComplexMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        out.push(ComplexMatrix::unit(n, n, i, i));
        for j in i + 1..n {
            let mut re = ComplexMatrix::zeros(n, n);
            re[(i, j)] = C64::new(s, 0.0);
            re[(j, i)] = C64::new(s, 0.0);
            out.push(re);
            let mut im = ComplexMatrix::zeros(n, n);
            im[(i, j)] = C64::new(0.0, s);
            im[(j, i)] = C64::new(0.0, -s);
            out.push(im);
        }
    }
    out
}

pub fn unit_label(i: usize, j: usize) -> String {
    format!("e({},{})", i + 1, j + 1)
}

/// Algebra spanned by the matrix units of a reflexive transitive digraph.
/// Vertices are grouped by undirected component so that the generated
/// C*-algebra is block diagonal; the returned order maps block positions to
/// vertices.
fn digraph_template(g: &Digraph) -> (Vec<usize>, Vec<usize>, Vec<ComplexMatrix>, Vec<Generator>) {
    let comps = g.components();
    let order: Vec<usize> = comps.iter().flatten().copied().collect();
    let mut pos = vec![0; order.len()];
    for (p, &v) in order.iter().enumerate() {
        pos[v] = p;
    }
    let n = order.len();
    let mut basis = Vec::new();
    let mut gens = Vec::new();
    for u in 0..n {
        let mut targets = g.adj[u].clone();
        targets.sort_unstable();
        targets.dedup();
        for v in targets {
            let m = ComplexMatrix::unit(n, n, pos[u], pos[v]);
            gens.push(Generator { label: unit_label(u, v), matrix: m.clone() });
            basis.push(m);
        }
    }
    (comps.iter().map(Vec::len).collect(), order, basis, gens)
}

pub fn build_digraph_algebra(g: &Digraph) -> Result<OperatorAlgebra> {
    g.validate()?;
    if g.vertices() == 0 {
        return Err(Error::InvalidDigraph("empty digraph".into()));
    }
    let (shape, _, basis, gens) = digraph_template(g);
    Ok(OperatorAlgebra::from_template(AlgebraKind::DigraphAlgebra(g.clone()), shape, basis, gens))
}

pub fn build_tr(r: usize) -> Result<OperatorAlgebra> {
    if r == 0 {
        return Err(Error::InvalidInput("T_r needs r >= 1".into()));
    }
    let (shape, _, basis, gens) = digraph_template(&Digraph::chain(r));
    Ok(OperatorAlgebra::from_template(AlgebraKind::Tr(r), shape, basis, gens))
}

pub fn build_trmax(r: usize) -> Result<OperatorAlgebra> {
    if r == 0 {
        return Err(Error::InvalidInput("T_r^max needs r >= 1".into()));
    }
    let intervals = semi_invariant_projections(r);
    let shape: Vec<usize> = intervals.iter().map(IntervalProjection::len).collect();
    let n: usize = shape.iter().sum();
    let offsets = BlockShape { blocks: shape.clone() }.offsets();
    let mut basis = Vec::new();
    let mut gens = Vec::new();
    for i in 1..=r {
        for j in i..=r {
            let mut m = ComplexMatrix::zeros(n, n);
            for (iv, &off) in intervals.iter().zip(&offsets) {
                if iv.contains(i) && iv.contains(j) {
                    m[(off + i - iv.start, off + j - iv.start)] = ONE;
                }
            }
            gens.push(Generator { label: unit_label(i - 1, j - 1), matrix: m.clone() });
            basis.push(m);
        }
    }
    Ok(OperatorAlgebra::from_template(AlgebraKind::TrMax(r), shape, basis, gens))
}

/// `[[a, x, y], [0, b, 0], [0, 0, c]]`.
pub fn build_valgebra() -> OperatorAlgebra {
    let g = Digraph { adj: vec![vec![0, 1, 2], vec![1], vec![2]] };
    let (shape, _, basis, gens) = digraph_template(&g);
    OperatorAlgebra::from_template(AlgebraKind::VAlgebra, shape, basis, gens)
}

/// `[[a, b], [0, a]]`.
pub fn build_l2() -> OperatorAlgebra {
    let id = ComplexMatrix::identity(2);
    let e12 = ComplexMatrix::unit(2, 2, 0, 1);
    OperatorAlgebra::from_template(
        AlgebraKind::L2,
        vec![2],
        vec![id.clone(), e12.clone()],
        vec![Generator { label: "1".into(), matrix: id }, Generator { label: unit_label(0, 1), matrix: e12 }],
    )
}

/// `[[ℂⁿ, M_{n,m}], [0, ℂᵐ]]`: vertices `1..n` each joined to `n+1..n+m`.
pub fn build_bipartite(n: usize, m: usize) -> Result<OperatorAlgebra> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidInput("bipartite algebra needs n, m >= 1".into()));
    }
    let adj = (0..n + m)
        .map(|u| if u < n { std::iter::once(u).chain(n..n + m).collect() } else { vec![u] })
        .collect();
    let (shape, _, basis, gens) = digraph_template(&Digraph { adj });
    Ok(OperatorAlgebra::from_template(AlgebraKind::Bipartite(n, m), shape, basis, gens))
}

/// One `2×2` block `[[λ_u, λ_e], [0, λ_v]]` per edge `e = (u, v)`.
pub fn build_quiver_min(q: &Quiver) -> Result<OperatorAlgebra> {
    if q.edges.is_empty() || q.edges.iter().any(|&(u, v)| u >= q.vertices || v >= q.vertices) {
        return Err(Error::InvalidInput("quiver needs at least one in-range edge".into()));
    }
    let touched: BTreeSet<usize> = q.edges.iter().flat_map(|&(u, v)| [u, v]).collect();
    if touched.len() != q.vertices {
        return Err(Error::DisconnectedQuiver);
    }
    // Union-find over undirected edges.
    let mut parent: Vec<usize> = (0..q.vertices).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        if p[x] != x {
            let r = find(p, p[x]);
            p[x] = r;
        }
        p[x]
    }
    for &(u, v) in &q.edges {
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        parent[a] = b;
    }
    let root = find(&mut parent, 0);
    if (0..q.vertices).any(|v| find(&mut parent, v) != root) {
        return Err(Error::DisconnectedQuiver);
    }
    let e = q.edges.len();
    let n = 2 * e;
    let mut basis = Vec::new();
    let mut gens = Vec::new();
    for w in 0..q.vertices {
        let mut m = ComplexMatrix::zeros(n, n);
        for (k, &(u, v)) in q.edges.iter().enumerate() {
            if u == w {
                m[(2 * k, 2 * k)] = ONE;
            }
            if v == w {
                m[(2 * k + 1, 2 * k + 1)] = ONE;
            }
        }
        gens.push(Generator { label: format!("v{}", w + 1), matrix: m.clone() });
        basis.push(m);
    }
    for k in 0..e {
        let m = ComplexMatrix::unit(n, n, 2 * k, 2 * k + 1);
        gens.push(Generator { label: format!("a{}", k + 1), matrix: m.clone() });
        basis.push(m);
    }
    Ok(OperatorAlgebra::from_template(AlgebraKind::QuiverMin(q.clone()), vec![2; e], basis, gens))
}

/// `a ⊗ M_n`; amplifications compose multiplicatively.
pub fn tensor_mn(a: &OperatorAlgebra, n: usize) -> OperatorAlgebra {
    assert!(n >= 1, "tensor_mn needs n >= 1");
    a.with_ampl(a.ampl * n)
}

/// Orthonormal basis of `A ∩ A*` for the amplified algebra (materialized).
pub fn diagonal_part(a: &OperatorAlgebra) -> Vec<ComplexMatrix> {
    let n = a.size();
    Subspace::from_spanning(n, n, &a.hermitian_diagonal(), 1e-10).basis().to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> ToleranceProfile {
        ToleranceProfile::default()
    }

    #[test]
    fn tr_dimensions() {
        assert_eq!(build_tr(1).unwrap().dim(), 1);
        let t2 = build_tr(2).unwrap();
        assert_eq!(t2.dim(), 3);
        assert_eq!(t2.shape().blocks, vec![2]);
        assert_eq!(build_tr(3).unwrap().dim(), 6);
        assert!(build_tr(0).is_err());
    }

    #[test]
    fn semi_invariant_projection_counts() {
        assert_eq!(semi_invariant_projections(1), vec![IntervalProjection { start: 1, end: 1 }]);
        let r2 = semi_invariant_projections(2);
        let set: BTreeSet<_> = r2.iter().map(|p| (p.start, p.end)).collect();
        assert_eq!(set, BTreeSet::from([(1, 1), (2, 2), (1, 2)]));
        for r in 1..=7 {
            assert_eq!(semi_invariant_projections(r).len(), r * (r + 1) / 2);
        }
    }

    #[test]
    fn trmax_shapes() {
        assert_eq!(build_trmax(2).unwrap().shape().blocks, vec![2, 1, 1]);
        assert_eq!(build_trmax(3).unwrap().shape().blocks, vec![3, 2, 2, 1, 1, 1]);
        assert_eq!(build_trmax(1).unwrap().shape().blocks, vec![1]);
        for r in 1..=4 {
            let a = build_trmax(r).unwrap();
            assert_eq!(a.dim(), r * (r + 1) / 2);
            assert_eq!(a.template_subspace().dim(), r * (r + 1) / 2);
        }
    }

    #[test]
    fn valgebra_and_l2() {
        let v = build_valgebra();
        assert_eq!(v.dim(), 5);
        assert_eq!(v.generated_cstar_dim(), 9);
        let e12 = ComplexMatrix::unit(3, 3, 0, 1);
        let e22 = ComplexMatrix::unit(3, 3, 1, 1);
        assert!(v.contains(&e12.matmul(&e22), &tol()));
        assert!(!v.contains(&ComplexMatrix::unit(3, 3, 1, 2), &tol()));

        let l2 = build_l2();
        assert_eq!(l2.dim(), 2);
        assert_eq!(l2.generated_cstar_dim(), 4);
        let e = ComplexMatrix::unit(2, 2, 0, 1);
        assert!(l2.contains(&e.matmul(&e), &tol()));
        assert_eq!(l2.template_diagonal().dim(), 1);
    }

    #[test]
    fn bipartite_examples() {
        let g11 = build_bipartite(1, 1).unwrap();
        assert_eq!(g11.template_basis(), build_tr(2).unwrap().template_basis());
        assert_eq!(build_bipartite(2, 2).unwrap().dim(), 8);
        assert_eq!(build_bipartite(1, 2).unwrap().template_basis(), build_valgebra().template_basis());
        assert_eq!(build_bipartite(2, 2).unwrap().template_diagonal().dim(), 4);
    }

    #[test]
    fn quiver_examples() {
        let loop1 = build_quiver_min(&Quiver { vertices: 1, edges: vec![(0, 0)] }).unwrap();
        let l2 = build_l2();
        let s1 = loop1.template_subspace();
        assert!(l2.template_basis().iter().all(|b| s1.residual(b) < 1e-12));
        assert_eq!(loop1.dim(), 2);

        let edge = build_quiver_min(&Quiver { vertices: 2, edges: vec![(0, 1)] }).unwrap();
        let t2 = build_tr(2).unwrap();
        let s = edge.template_subspace();
        assert!(t2.template_basis().iter().all(|b| s.residual(b) < 1e-12));

        // a→c, a→d, b→d, b→c
        let q = Quiver { vertices: 4, edges: vec![(0, 2), (0, 3), (1, 3), (1, 2)] };
        let a = build_quiver_min(&q).unwrap();
        assert_eq!(a.shape().blocks, vec![2, 2, 2, 2]);
        assert_eq!(a.dim(), 8);
        assert_eq!(a.generated_cstar_dim(), 16);
        assert!(a.closure_residual() < 1e-12);

        let bad = Quiver { vertices: 4, edges: vec![(0, 1), (2, 3)] };
        assert_eq!(build_quiver_min(&bad).unwrap_err(), Error::DisconnectedQuiver);
    }

    #[test]
    fn tensor_dimensions() {
        let t2 = build_tr(2).unwrap();
        let t22 = tensor_mn(&t2, 2);
        assert_eq!(t22.shape().blocks, vec![4]);
        assert_eq!(t22.dim(), 12);
        assert_eq!(tensor_mn(&t2, 1), t2);
        assert_eq!(tensor_mn(&build_valgebra(), 2).dim(), 20);
        assert_eq!(tensor_mn(&tensor_mn(&t2, 2), 3).ampl(), 6);
    }

    #[test]
    fn diagonal_parts() {
        let t3 = build_tr(3).unwrap();
        let d = t3.template_diagonal();
        assert_eq!(d.dim(), 3);
        for i in 0..3 {
            assert!(d.residual(&ComplexMatrix::unit(3, 3, i, i)) < 1e-12);
        }
        let l2 = build_l2();
        let d = l2.template_diagonal();
        assert!(d.residual(&ComplexMatrix::identity(2)) < 1e-12);
        assert_eq!(diagonal_part(&tensor_mn(&t3, 2)).len(), 12);
    }

    #[test]
    fn closure_for_every_builder() {
        let algebras = vec![
            build_tr(4).unwrap(),
            build_trmax(3).unwrap(),
            build_valgebra(),
            build_l2(),
            build_bipartite(2, 3).unwrap(),
        ];
        for a in algebras {
            assert!(a.closure_residual() < tol().eps_report, "{}", a.descriptor());
            assert_eq!(a.generated_cstar_dim(), a.shape().cstar_dim(), "{}", a.descriptor());
        }
    }

    #[test]
    fn digraph_algebra_validation() {
        let not_transitive = Digraph { adj: vec![vec![0, 1], vec![1, 2], vec![2]] };
        assert!(build_digraph_algebra(&not_transitive).is_err());
        let not_reflexive = Digraph { adj: vec![vec![1], vec![1]] };
        assert!(build_digraph_algebra(&not_reflexive).is_err());
        // Two components: C*-algebra is M_2 ⊕ ℂ.
        let g = Digraph { adj: vec![vec![0, 2], vec![1], vec![2]] };
        let a = build_digraph_algebra(&g).unwrap();
        assert_eq!(a.shape().blocks, vec![2, 1]);
        assert_eq!(a.template_diagonal().dim(), 3);
        assert_eq!(a.generated_cstar_dim(), 5);
    }

    #[test]
    fn descriptor_round_trip() {
        for s in ["T:3", "Tmax:2@2", "V", "L2@3", "G:2,2", "Q:1-3,1-4,2-4,2-3", "D:3/1-2"] {
            let a = OperatorAlgebra::from_descriptor(s).unwrap();
            let b = OperatorAlgebra::from_descriptor(&a.descriptor()).unwrap();
            assert_eq!(a, b, "{s}");
        }
        assert!(OperatorAlgebra::from_descriptor("X:1").is_err());
        assert!(OperatorAlgebra::from_descriptor("T:2@0").is_err());
    }
}
