//! Dense complex matrices and the tolerance policy shared by every module.
//!
//! Decompositions (SVD, Hermitian eigensolver, QR) are delegated to
//! `nalgebra`; this module owns the row-major storage, the block/Kronecker
//! plumbing the rest of the crate needs, and every rank or spectrum decision
//! made against a [`ToleranceProfile`].

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceProfile {
    /// Singular values at or below this count as zero.
    pub eps_rank: f64,
    /// Bound on `‖m m* m − m‖` for a partial isometry.
    pub eps_pi: f64,
    /// Eigenvalues closer than this are merged.
    pub eps_spec: f64,
    /// Pass/fail margin for residuals in reports.
    pub eps_report: f64,
}

impl Default for ToleranceProfile {
    fn default() -> Self {
        Self { eps_rank: 1e-9, eps_pi: 1e-8, eps_spec: 1e-7, eps_report: 1e-6 }
    }
}

impl ToleranceProfile {
    pub fn new(eps_rank: f64, eps_pi: f64, eps_spec: f64, eps_report: f64) -> Result<Self> {
        let t = Self { eps_rank, eps_pi, eps_spec, eps_report };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eps_rank", self.eps_rank),
            ("eps_pi", self.eps_pi),
            ("eps_spec", self.eps_spec),
            ("eps_report", self.eps_report),
        ] {
            if !(v > 0.0 && v <= 1e-3) {
                return Err(Error::InvalidTolerance(format!("{name} = {v} outside (0, 1e-3]")));
            }
        }
        if !(self.eps_report >= self.eps_spec && self.eps_spec >= self.eps_rank) {
            return Err(Error::InvalidTolerance(
                "expected eps_report >= eps_spec >= eps_rank".into(),
            ));
        }
        Ok(())
    }

    /// Default profile with `eps_report` overridden, the other bounds clamped
    /// so the ordering invariant still holds.
    pub fn with_report(eps_report: f64) -> Result<Self> {
        let d = Self::default();
        Self::new(
            d.eps_rank.min(eps_report),
            d.eps_pi.min(eps_report),
            d.eps_spec.min(eps_report),
            eps_report,
        )
    }

    /// Every bound scaled by `f`, used to probe decisions for tolerance sensitivity.
    pub fn scaled(&self, f: f64) -> Self {
        Self {
            eps_rank: self.eps_rank * f,
            eps_pi: self.eps_pi * f,
            eps_spec: self.eps_spec * f,
            eps_report: self.eps_report * f,
        }
    }
}

#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:>8.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Matrix unit `e_ij` in `M_{rows×cols}` (0-based indices).
    pub fn unit(rows: usize, cols: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        m[(i, j)] = ONE;
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        Self::from_row_major(r, c, rows.concat())
    }

    pub fn from_real(rows: usize, cols: usize, vals: &[f64]) -> Self {
        assert_eq!(vals.len(), rows * cols);
        Self { rows, cols, data: vals.iter().map(|&v| C64::new(v, 0.0)).collect() }
    }

    pub fn diag_real(vals: &[f64]) -> Self {
        let mut m = Self::zeros(vals.len(), vals.len());
        for (i, &v) in vals.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<C64>> {
        self.data.chunks(self.cols.max(1)).map(<[C64]>::to_vec).take(self.rows).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self, eps: f64) -> bool {
        self.max_abs() <= eps
    }

    /// Frobenius inner product `tr(a* b)`.
    pub fn inner(&self, other: &Self) -> C64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn add_scaled(&mut self, s: C64, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (p, q) = (other.rows, other.cols);
        let mut m = Self::zeros(self.rows * p, self.cols * q);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a == ZERO {
                    continue;
                }
                for k in 0..p {
                    for l in 0..q {
                        m[(i * p + k, j * q + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        m
    }

    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        Self::from_fn(nr, nc, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Self) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)];
            }
        }
    }

    pub fn direct_sum(blocks: &[Self]) -> Self {
        let r: usize = blocks.iter().map(|b| b.rows).sum();
        let c: usize = blocks.iter().map(|b| b.cols).sum();
        let mut m = Self::zeros(r, c);
        let (mut i, mut j) = (0, 0);
        for b in blocks {
            m.set_block(i, j, b);
            i += b.rows;
            j += b.cols;
        }
        m
    }

    /// Rows and columns selected by `idx`.
    pub fn compress(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), idx.len(), |i, j| self[(idx[i], idx[j])])
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut m = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out = &mut m.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in out.iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        m
    }

    pub fn hermitian_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (self - &self.adjoint()).max_abs()
    }

    pub fn to_na(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)])
    }

    pub fn from_na(m: &DMatrix<C64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        self.svd().s
    }

    /// `A = U diag(s) V*` with `s` descending, `U` of size `m×k`, `V` of size
    /// `n×k`, `k = min(m, n)`. Columns of `U` paired with zero singular values
    /// are zero.
    ///
    /// Householder QR followed by one-sided Jacobi on the square factor;
    /// nalgebra's complex SVD can return NaN singular values on finite input.
    pub fn svd(&self) -> Svd {
        let (m, n) = (self.rows, self.cols);
        if m < n {
            let t = self.adjoint().svd();
            return Svd { u: t.v, s: t.s, v: t.u };
        }
        if n == 0 {
            return Svd { u: Self::zeros(m, 0), s: Vec::new(), v: Self::zeros(0, 0) };
        }
        let (q, r) = if m > n {
            let qr = self.to_na().qr();
            (Some(Self::from_na(&qr.q())), Self::from_na(&qr.r()))
        } else {
            (None, self.clone())
        };
        let (ur, s, v) = one_sided_jacobi(r);
        let u = match q {
            Some(q) => q.matmul(&ur),
            None => ur,
        };
        Svd { u, s, v }
    }

    /// Operator norm (largest singular value).
    pub fn op_norm(&self) -> f64 {
        self.singular_values().first().copied().unwrap_or(0.0)
    }

    /// Eigen-decomposition of the Hermitian part: eigenvalues ascending with
    /// orthonormal eigenvectors as the columns of the returned matrix.
    ///
    /// Cyclic Jacobi rotations; nalgebra's complex `SymmetricEigen` returns
    /// inaccurate eigenvectors for repeated eigenvalues, which commutant
    /// elements routinely have.
    pub fn eigh(&self) -> (Vec<f64>, Self) {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = (self + &self.adjoint()).scale_real(0.5);
        let mut v = Self::identity(n);
        let scale = a.frobenius().max(f64::MIN_POSITIVE);
        for _ in 0..100 {
            let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[(i, j)].norm_sqr()).sum();
            if off.sqrt() <= 1e-15 * scale {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    jacobi_rotate(&mut a, &mut v, p, q);
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| a[(x, x)].re.partial_cmp(&a[(y, y)].re).unwrap());
        let vals = order.iter().map(|&k| a[(k, k)].re).collect();
        let vecs = Self::from_fn(n, n, |i, j| v[(i, order[j])]);
        (vals, vecs)
    }

    /// Orthonormal basis (as columns) of the range, cut at `eps` relative to
    /// nothing: singular values `> eps` are kept.
    pub fn range_basis(&self, eps: f64) -> Self {
        let svd = self.svd();
        let keep = svd.s.iter().filter(|&&x| x > eps).count();
        svd.u.columns(&(0..keep).collect::<Vec<_>>())
    }

    /// Orthonormal basis (as columns) of the null space; singular values
    /// `<= eps` count as zero.
    pub fn null_space(&self, eps: f64) -> Self {
        let n = self.cols;
        if self.rows == 0 {
            return Self::identity(n);
        }
        // Pad to at least square so the SVD exposes every right singular vector.
        let a = if self.rows < n {
            let mut p = Self::zeros(n, n);
            p.set_block(0, 0, self);
            p
        } else {
            self.clone()
        };
        let svd = a.svd();
        let null: Vec<usize> = (0..svd.s.len()).filter(|&k| svd.s[k] <= eps).collect();
        svd.v.columns(&null)
    }

    /// `exp(i·h)` for Hermitian `h`.
    pub fn exp_i_hermitian(&self) -> Self {
        let (vals, v) = self.eigh();
        let d = Self::from_fn(vals.len(), vals.len(), |i, j| {
            if i == j {
                C64::from_polar(1.0, vals[i])
            } else {
                ZERO
            }
        });
        v.matmul(&d).matmul(&v.adjoint())
    }

    /// Positive square root of a positive semidefinite matrix.
    pub fn psd_sqrt(&self) -> Self {
        let (vals, v) = self.eigh();
        let d = Self::diag_real(&vals.iter().map(|x| x.max(0.0).sqrt()).collect::<Vec<_>>());
        v.matmul(&d).matmul(&v.adjoint())
    }

    /// Column `j` as an `n×1` matrix.
    pub fn column(&self, j: usize) -> Self {
        Self::from_fn(self.rows, 1, |i, _| self[(i, j)])
    }

    /// Columns selected by `idx`.
    pub fn columns(&self, idx: &[usize]) -> Self {
        Self::from_fn(self.rows, idx.len(), |i, j| self[(i, idx[j])])
    }

    pub fn hcat(parts: &[Self]) -> Self {
        let rows = parts.first().map_or(0, |p| p.rows);
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut m = Self::zeros(rows, cols);
        let mut c = 0;
        for p in parts {
            assert_eq!(p.rows, rows);
            m.set_block(0, c, p);
            c += p.cols;
        }
        m
    }
}

#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub s: Vec<f64>,
    pub v: ComplexMatrix,
}

/// Coefficients `(g_pp, g_qp, g_pq, g_qq)` and `t = tan θ` of the unitary
/// `G = diag(1, e^{−iφ}) J(θ)` diagonalizing `[[app, b], [b̄, aqq]]`.
fn jacobi_coefficients(app: f64, aqq: f64, b: C64) -> Option<([C64; 4], f64)> {
    let beta = b.norm();
    if beta == 0.0 {
        return None;
    }
    let phase = b / beta;
    let theta = (aqq - app) / (2.0 * beta);
    let t = if theta == 0.0 { 1.0 } else { theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt()) };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    Some(([C64::new(c, 0.0), -phase.conj() * s, C64::new(s, 0.0), phase.conj() * c], t))
}

/// `m ← m G` on columns `p, q`.
fn rotate_columns(m: &mut ComplexMatrix, p: usize, q: usize, g: &[C64; 4]) {
    for i in 0..m.rows() {
        let (xp, xq) = (m[(i, p)], m[(i, q)]);
        m[(i, p)] = xp * g[0] + xq * g[1];
        m[(i, q)] = xp * g[2] + xq * g[3];
    }
}

/// SVD of a square matrix by orthogonalizing its columns pairwise.
fn one_sided_jacobi(mut w: ComplexMatrix) -> (ComplexMatrix, Vec<f64>, ComplexMatrix) {
    let n = w.cols();
    let rows = w.rows();
    let mut v = ComplexMatrix::identity(n);
    let eps = f64::EPSILON * n.max(1) as f64;
    // Columns below ε‖A‖ carry only roundoff and are left alone.
    let negligible = f64::EPSILON * f64::EPSILON * w.frobenius().powi(2);
    for _ in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut a, mut b, mut g) = (0.0, 0.0, ZERO);
                for i in 0..rows {
                    let (x, y) = (w[(i, p)], w[(i, q)]);
                    a += x.norm_sqr();
                    b += y.norm_sqr();
                    g += x.conj() * y;
                }
                if g.norm() <= eps * (a * b).sqrt() || a.min(b) <= negligible {
                    continue;
                }
                if let Some((coef, _)) = jacobi_coefficients(a, b, g) {
                    rotate_columns(&mut w, p, q, &coef);
                    rotate_columns(&mut v, p, q, &coef);
                    rotated = true;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| (0..rows).map(|i| w[(i, j)].norm_sqr()).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap());
    let u = ComplexMatrix::from_fn(rows, n, |i, j| {
        let k = order[j];
        if norms[k] > 0.0 {
            w[(i, k)] / norms[k]
        } else {
            ZERO
        }
    });
    let s = order.iter().map(|&k| norms[k]).collect();
    let v = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    (u, s, v)
}

/// Zeroes `a[p][q]` by `a ← G* a G` with `G = diag(1, e^{−iφ}) J(θ)` on
/// coordinates `p, q`, accumulating `v ← v G`.
fn jacobi_rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let (app, aqq) = (a[(p, p)].re, a[(q, q)].re);
    let b = a[(p, q)];
    let Some((g, t)) = jacobi_coefficients(app, aqq, b) else { return };
    rotate_columns(a, p, q, &g);
    rotate_columns(v, p, q, &g);
    for j in 0..a.cols() {
        let (xp, xq) = (a[(p, j)], a[(q, j)]);
        a[(p, j)] = xp * g[0].conj() + xq * g[1].conj();
        a[(q, j)] = xp * g[2].conj() + xq * g[3].conj();
    }
    let beta = b.norm();
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = C64::new(app - t * beta, 0.0);
    a[(q, q)] = C64::new(aqq + t * beta, 0.0);
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "add shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "sub shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

/// Sorted eigenvalue multiset with clustered values.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SpectralClass {
    eigenvalues: Vec<(f64, usize)>,
}

impl SpectralClass {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a class from raw eigenvalues, merging sorted neighbours whose gap
    /// is at most `eps`. Each cluster is represented by its mean.
    pub fn from_values(values: &[f64], eps: f64) -> Self {
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut clusters: Vec<Vec<f64>> = Vec::new();
        for x in v {
            match clusters.last_mut() {
                Some(c) if x - c.last().unwrap() <= eps => c.push(x),
                _ => clusters.push(vec![x]),
            }
        }
        let eigenvalues = clusters
            .into_iter()
            .map(|c| (c.iter().sum::<f64>() / c.len() as f64, c.len()))
            .collect();
        Self { eigenvalues }
    }

    /// Builds a class from explicit `(value, multiplicity)` pairs.
    pub fn from_pairs(pairs: &[(f64, usize)]) -> Result<Self> {
        let mut p: Vec<(f64, usize)> = pairs.iter().copied().filter(|&(_, m)| m > 0).collect();
        p.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        if p.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidInput("spectral values must be distinct".into()));
        }
        if p.iter().any(|&(v, _)| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite spectral value".into()));
        }
        Ok(Self { eigenvalues: p })
    }

    pub fn pairs(&self) -> &[(f64, usize)] {
        &self.eigenvalues
    }

    pub fn total_rank(&self) -> usize {
        self.eigenvalues.iter().map(|&(_, m)| m).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Eigenvalues repeated by multiplicity, ascending.
    pub fn expanded(&self) -> Vec<f64> {
        self.eigenvalues.iter().flat_map(|&(v, m)| std::iter::repeat_n(v, m)).collect()
    }

    /// Drops clusters with `|value| <= eps`.
    pub fn nonzero_part(&self, eps: f64) -> Self {
        Self { eigenvalues: self.eigenvalues.iter().copied().filter(|&(v, _)| v.abs() > eps).collect() }
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64, eps: f64) -> Self {
        let vals: Vec<f64> = self.expanded().into_iter().map(f).collect();
        Self::from_values(&vals, eps)
    }

    pub fn min_value(&self) -> Option<f64> {
        self.eigenvalues.first().map(|p| p.0)
    }

    pub fn max_value(&self) -> Option<f64> {
        self.eigenvalues.last().map(|p| p.0)
    }
}

impl fmt::Display for SpectralClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, (v, m)) in self.eigenvalues.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "({v:.9}, {m})")?;
        }
        write!(f, "}}")
    }
}

pub fn is_partial_isometry(m: &ComplexMatrix, tol: &ToleranceProfile) -> bool {
    partial_isometry_residual(m) <= tol.eps_pi
}

/// `‖m m* m − m‖` in operator norm.
pub fn partial_isometry_residual(m: &ComplexMatrix) -> f64 {
    let r = &m.matmul(&m.adjoint()).matmul(m) - m;
    r.op_norm()
}

pub fn rank_eps(m: &ComplexMatrix, tol: &ToleranceProfile) -> usize {
    m.singular_values().iter().filter(|&&s| s > tol.eps_rank).count()
}

pub fn hermitian_spectrum(m: &ComplexMatrix, tol: &ToleranceProfile) -> Result<SpectralClass> {
    let res = m.hermitian_residual();
    if res > tol.eps_pi {
        return Err(Error::NotHermitian(res));
    }
    let (vals, _) = m.eigh();
    Ok(SpectralClass::from_values(&vals, tol.eps_spec))
}

/// Distance between the unitary orbits of two Hermitian matrices with the
/// given spectra; 1 when the ranks differ.
pub fn unitary_orbit_distance(a: &SpectralClass, b: &SpectralClass) -> f64 {
    if a.total_rank() != b.total_rank() {
        return 1.0;
    }
    a.expanded()
        .iter()
        .zip(b.expanded())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn random_gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    })
}

/// Haar-distributed unitary via QR of a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    if n == 0 {
        return ComplexMatrix::zeros(0, 0);
    }
    let g = random_gaussian_matrix(rng, n, n);
    let qr = g.to_na().qr();
    let q = ComplexMatrix::from_na(&qr.q());
    let r = qr.r();
    let phases = ComplexMatrix::from_fn(n, n, |i, j| {
        if i == j {
            let d = r[(i, i)];
            if d.norm() > 0.0 {
                d / d.norm()
            } else {
                ONE
            }
        } else {
            ZERO
        }
    });
    q.matmul(&phases)
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = random_gaussian_matrix(rng, n, n);
    (&g + &g.adjoint()).scale_real(0.5)
}

/// A complex subspace of `M_{rows×cols}` with an orthonormal basis under the
/// Frobenius inner product.
#[derive(Debug, Clone)]
pub struct Subspace {
    rows: usize,
    cols: usize,
    basis: Vec<ComplexMatrix>,
}

impl Subspace {
    /// Orthonormalizes `spanning` by twice-iterated Gram–Schmidt, dropping
    /// vectors whose residual norm is at most `eps`.
    pub fn from_spanning(rows: usize, cols: usize, spanning: &[ComplexMatrix], eps: f64) -> Self {
        let mut s = Self { rows, cols, basis: Vec::new() };
        for m in spanning {
            s.push(m, eps);
        }
        s
    }

    /// Adds `m` to the span; returns whether the dimension grew.
    pub fn push(&mut self, m: &ComplexMatrix, eps: f64) -> bool {
        assert_eq!((m.rows(), m.cols()), (self.rows, self.cols));
        let mut v = m.clone();
        for _ in 0..2 {
            for q in &self.basis {
                let c = q.inner(&v);
                v.add_scaled(-c, q);
            }
        }
        let n = v.frobenius();
        if n <= eps {
            return false;
        }
        self.basis.push(v.scale_real(1.0 / n));
        true
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[ComplexMatrix] {
        &self.basis
    }

    pub fn coords(&self, m: &ComplexMatrix) -> Vec<C64> {
        self.basis.iter().map(|q| q.inner(m)).collect()
    }

    pub fn project(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let mut p = ComplexMatrix::zeros(self.rows, self.cols);
        for q in &self.basis {
            p.add_scaled(q.inner(m), q);
        }
        p
    }

    /// Frobenius norm of the component of `m` orthogonal to the subspace.
    pub fn residual(&self, m: &ComplexMatrix) -> f64 {
        (m - &self.project(m)).frobenius()
    }
}

/// Real null space (columns) of a real matrix; singular values `<= eps` count as zero.
pub fn real_null_space(a: &nalgebra::DMatrix<f64>, eps: f64) -> nalgebra::DMatrix<f64> {
    let n = a.ncols();
    let padded = if a.nrows() < n {
        let mut p = nalgebra::DMatrix::<f64>::zeros(n, n);
        p.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let null: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] <= eps)
        .collect();
    nalgebra::DMatrix::from_fn(n, null.len(), |i, j| vt[(null[j], i)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tol() -> ToleranceProfile {
        ToleranceProfile::default()
    }

    #[test]
    fn svd_reconstructs_all_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for (m, n, rank) in [(5, 5, 5), (7, 3, 3), (3, 7, 3), (6, 6, 2), (9, 4, 1), (4, 4, 0), (1, 1, 1)] {
            let a = random_gaussian_matrix(&mut rng, m, rank).matmul(&random_gaussian_matrix(&mut rng, rank, n));
            let svd = a.svd();
            assert_eq!(svd.s.len(), m.min(n));
            assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
            let rec = &svd.u.matmul(&ComplexMatrix::diag_real(&svd.s)).matmul(&svd.v.adjoint()) - &a;
            assert!(rec.op_norm() <= 1e-12 * (1.0 + svd.s.first().copied().unwrap_or(0.0)), "{m}x{n}");
            let k = svd.s.iter().filter(|&&x| x > 1e-10).count();
            assert_eq!(k, rank);
            let vk = svd.v.adjoint().matmul(&svd.v);
            assert!((&vk - &ComplexMatrix::identity(vk.rows())).op_norm() < 1e-12);
            let uk = svd.u.columns(&(0..k).collect::<Vec<_>>());
            assert!((&uk.adjoint().matmul(&uk) - &ComplexMatrix::identity(k)).op_norm() < 1e-12);
        }
    }

    #[test]
    fn eigh_handles_repeated_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2, 3, 5, 8] {
            for pattern in 0..3 {
                let vals: Vec<f64> = (0..n).map(|k| if pattern == 0 { k as f64 } else { (k % pattern.max(1) + k / 3) as f64 * 0.5 }).collect();
                let u = random_unitary(&mut rng, n);
                let h = u.matmul(&ComplexMatrix::diag_real(&vals)).matmul(&u.adjoint());
                let (got, v) = h.eigh();
                let rec = &v.matmul(&ComplexMatrix::diag_real(&got)).matmul(&v.adjoint()) - &h;
                assert!(rec.op_norm() < 1e-12, "n={n} pattern={pattern}");
                assert!((&v.adjoint().matmul(&v) - &ComplexMatrix::identity(n)).op_norm() < 1e-12);
                let mut want = vals.clone();
                want.sort_by(|a, b| a.partial_cmp(b).unwrap());
                for (a, b) in got.iter().zip(&want) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn tolerance_profile_invariants() {
        assert!(ToleranceProfile::default().validate().is_ok());
        assert!(ToleranceProfile::new(1e-6, 1e-8, 1e-7, 1e-6).is_err());
        assert!(ToleranceProfile::new(1e-9, 1e-8, 1e-7, 1e-2).is_err());
        assert!(ToleranceProfile::new(0.0, 1e-8, 1e-7, 1e-6).is_err());
        let t = ToleranceProfile::with_report(1e-10).unwrap();
        assert!(t.validate().is_ok());
    }

    #[test]
    fn partial_isometry_examples() {
        assert!(is_partial_isometry(&ComplexMatrix::unit(2, 2, 0, 1), &tol()));
        assert!(!is_partial_isometry(&ComplexMatrix::from_real(1, 1, &[0.5]), &tol()));
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank_eps(&ComplexMatrix::zeros(3, 3), &tol()), 0);
        assert_eq!(rank_eps(&ComplexMatrix::identity(4), &tol()), 4);
        let p = ComplexMatrix::from_fn(5, 5, |_, _| C64::new(0.2, 0.0));
        assert_eq!(rank_eps(&p, &tol()), 1);
    }

    #[test]
    fn spectrum_examples() {
        let s = hermitian_spectrum(&ComplexMatrix::diag_real(&[0.5, 0.5, 0.2]), &tol()).unwrap();
        assert_eq!(s.total_rank(), 3);
        assert_eq!(s.pairs().len(), 2);
        assert!((s.pairs()[0].0 - 0.2).abs() < 1e-12 && s.pairs()[0].1 == 1);
        assert!((s.pairs()[1].0 - 0.5).abs() < 1e-12 && s.pairs()[1].1 == 2);

        let p = ComplexMatrix::diag_real(&[1.0, 0.0, 1.0, 0.0]);
        let s = hermitian_spectrum(&p, &tol()).unwrap();
        assert_eq!(s.pairs().iter().map(|p| p.1).collect::<Vec<_>>(), vec![2, 2]);
        assert_eq!(s.nonzero_part(1e-9).total_rank(), 2);

        let nh = ComplexMatrix::unit(2, 2, 0, 1);
        assert!(matches!(hermitian_spectrum(&nh, &tol()), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn orbit_distance_examples() {
        let a = SpectralClass::from_pairs(&[(0.2, 1), (0.8, 1)]).unwrap();
        assert_eq!(unitary_orbit_distance(&a, &a), 0.0);
        let x = SpectralClass::from_pairs(&[(0.3, 1)]).unwrap();
        let y = SpectralClass::from_pairs(&[(0.5, 1)]).unwrap();
        assert!((unitary_orbit_distance(&x, &y) - 0.2).abs() < 1e-12);
        let b = SpectralClass::from_pairs(&[(0.3, 1), (0.6, 1)]).unwrap();
        assert!((unitary_orbit_distance(&a, &b) - 0.2).abs() < 1e-12);
        assert_eq!(unitary_orbit_distance(&a, &x), 1.0);
    }

    #[test]
    fn null_space_and_range() {
        let m = ComplexMatrix::from_real(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let n = m.null_space(1e-9);
        assert_eq!(n.cols(), 1);
        assert!(m.matmul(&n).is_zero(1e-12));
        assert_eq!(m.range_basis(1e-9).cols(), 2);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u = random_unitary(&mut rng, 6);
        assert!((&u.matmul(&u.adjoint()) - &ComplexMatrix::identity(6)).max_abs() < 1e-12);
        let h = random_hermitian(&mut rng, 4);
        let e = h.exp_i_hermitian();
        assert!((&e.matmul(&e.adjoint()) - &ComplexMatrix::identity(4)).max_abs() < 1e-12);
    }

    #[test]
    fn kron_matches_index_convention() {
        let a = ComplexMatrix::unit(2, 2, 0, 1);
        let b = ComplexMatrix::unit(3, 3, 2, 0);
        let k = a.kron(&b);
        assert_eq!(k[(2, 3)], ONE);
        assert!((k.frobenius() - 1.0).abs() < 1e-15);
    }
}
