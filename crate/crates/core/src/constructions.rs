//! Concrete maps used as fixtures and oracles: the three regular classes of
//! `T₂`, the rotation family on `T₃`, the Toeplitz maps on `L₂`, the V-algebra
//! generators and contraction maps, and the DFT maps between bipartite
//! digraph algebras.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{build_bipartite, build_l2, build_tr, build_valgebra, unit_label, OperatorAlgebra};
use crate::error::{Error, Result};
use crate::homkit::{direct_sum_all, validate_star_extendible, StarMap};
use crate::numkit::{ComplexMatrix, SpectralClass, ToleranceProfile, C64, ONE};

fn exact() -> ToleranceProfile {
    ToleranceProfile::default()
}

fn unit(n: usize, i: usize, j: usize) -> ComplexMatrix {
    ComplexMatrix::unit(n, n, i, j)
}

fn from_images(domain: OperatorAlgebra, codomain: OperatorAlgebra, images: Vec<(usize, usize, ComplexMatrix)>) -> Result<StarMap> {
    let labelled: Vec<(String, ComplexMatrix)> = images.into_iter().map(|(i, j, m)| (unit_label(i, j), m)).collect();
    validate_star_extendible(&domain, &codomain, &labelled, &exact())
}

/// Regular classes `θ₀, θ₁, θ₂ : T₂ → T₂ ⊗ M₂`. With the codomain written
/// as 2×2 blocks of 2×2 matrices:
/// `θ₀` puts `x, y, z` at positions (2,2), (2,3), (3,3);
/// `θ₁` at (1,1), (1,2), (2,2); `θ₂` at (3,3), (3,4), (4,4).
pub fn theta_t2(i: usize) -> Result<StarMap> {
    let [x, y, z] = match i {
        0 => [(1, 1), (1, 2), (2, 2)],
        1 => [(0, 0), (0, 1), (1, 1)],
        2 => [(2, 2), (2, 3), (3, 3)],
        _ => return Err(Error::InvalidInput(format!("θ index {i} not in 0..=2"))),
    };
    let t2 = build_tr(2)?;
    from_images(
        t2.clone(),
        t2.with_ampl(2),
        vec![(0, 0, unit(4, x.0, x.1)), (0, 1, unit(4, y.0, y.1)), (1, 1, unit(4, z.0, z.1))],
    )
}

/// `φ_α : T₃ → T₃ ⊗ M₃` with `β = √(1−α²)`:
/// `[[x₁, x₂], [x₄, x₃]] = x [[α, β], [−β, α]]` and
/// `[[y₁, y₂], [y₄, y₃]] = y [[α, −β], [β, α]]`.
pub fn phi_alpha_t3(alpha: f64) -> Result<StarMap> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidInput(format!("α = {alpha} outside [0, 1]")));
    }
    let beta = (1.0 - alpha * alpha).max(0.0).sqrt();
    let t3 = build_tr(3)?;
    let e = |pairs: &[(usize, usize, f64)]| {
        let mut m = ComplexMatrix::zeros(9, 9);
        for &(i, j, v) in pairs {
            m[(i, j)] = C64::new(v, 0.0);
        }
        m
    };
    // 0-based rows/columns of the 9×9 display.
    let a = e(&[(2, 2, 1.0), (3, 3, 1.0)]);
    let b = e(&[(4, 4, 1.0), (6, 6, 1.0)]);
    let c = e(&[(7, 7, 1.0), (8, 8, 1.0)]);
    let x = e(&[(2, 4, alpha), (2, 6, beta), (3, 4, -beta), (3, 6, alpha)]);
    let y = e(&[(4, 7, alpha), (4, 8, -beta), (6, 7, beta), (6, 8, alpha)]);
    let z = e(&[(2, 7, 1.0), (3, 8, 1.0)]);
    from_images(
        t3.clone(),
        t3.with_ampl(3),
        vec![(0, 0, a), (0, 1, x), (0, 2, z), (1, 1, b), (1, 2, y), (2, 2, c)],
    )
}

/// `ρ_θ : [[a, b], [0, a]] ↦ [[a, e^{iθ} b], [0, a]]`, `θ` in radians.
pub fn rho_theta_l2(angle: f64) -> Result<StarMap> {
    let l2 = build_l2();
    let images = vec![
        ("1".to_string(), ComplexMatrix::identity(2)),
        (unit_label(0, 1), unit(2, 0, 1).scale(C64::from_polar(1.0, angle))),
    ];
    validate_star_extendible(&l2, &l2, &images, &exact())
}

/// Multiplicity-two map `x ↦ I₂ ⊗ x` into `L₂ ⊗ M₂`; its range lies in `ℂ ⊗ M₂`.
pub fn tau_l2() -> Result<StarMap> {
    let l2 = build_l2();
    let id = ComplexMatrix::identity(2);
    let images = vec![
        ("1".to_string(), ComplexMatrix::identity(4)),
        (unit_label(0, 1), id.kron(&unit(2, 0, 1))),
    ];
    validate_star_extendible(&l2, &l2.with_ampl(2), &images, &exact())
}

/// Regular generators `θ₀..θ₃ : A(V) → A(V) ⊗ M₂` with rank distributions
/// `(v₁, v₂, w₁, w₂)` = (1,0,0,1), (0,1,1,0), (0,1,0,1), (1,0,1,0).
/// Codomain indices 0–1, 2–3, 4–5 carry the three vertices.
pub fn theta_v(i: usize) -> Result<StarMap> {
    let (p, q) = match i {
        0 => (2, 4),
        1 => (4, 2),
        2 => (4, 5),
        3 => (2, 3),
        _ => return Err(Error::InvalidInput(format!("θ index {i} not in 0..=3"))),
    };
    let v = build_valgebra();
    from_images(
        v.clone(),
        v.with_ampl(2),
        vec![(0, 0, unit(6, 0, 0)), (0, 1, unit(6, 0, p)), (0, 2, unit(6, 0, q)), (1, 1, unit(6, p, p)), (2, 2, unit(6, q, q))],
    )
}

/// `φ_C : A(V) → A(V) ⊗ M_{2n}` for a positive contraction `C ∈ M_n` with
/// spectrum in `[0, 1]`. Each vertex block splits into halves `h₁, h₂` of size `n`:
/// `a ↦ a ⊗ I_{2n}` on vertex 1, `x ↦ [[√C, −√(I−C)], [√(I−C), √C]]` from the
/// halves of vertex 1 into `h₁` of vertices 2 and 3, `y ↦ I_n` from the halves of
/// vertex 1 into `h₂` of vertices 2 and 3.
pub fn phi_c_matrix(c: &ComplexMatrix) -> Result<StarMap> {
    let n = c.rows();
    if n == 0 || !c.is_square() {
        return Err(Error::ShapeMismatch("C must be a nonempty square matrix".into()));
    }
    let spec = crate::numkit::hermitian_spectrum(c, &exact())?;
    let (lo, hi) = (spec.min_value().unwrap_or(0.0), spec.max_value().unwrap_or(0.0));
    if lo < -1e-12 || hi > 1.0 + 1e-12 {
        return Err(Error::InvalidInput(format!("spectrum of C spans [{lo}, {hi}], not inside [0, 1]")));
    }
    let id = ComplexMatrix::identity(n);
    let sc = c.psd_sqrt();
    let sic = (&id - c).psd_sqrt();
    let big = 6 * n;
    let at = |t: usize, h: usize| t * 2 * n + h * n;
    let place = |pieces: &[(usize, usize, &ComplexMatrix)]| {
        let mut m = ComplexMatrix::zeros(big, big);
        for &(r, col, blk) in pieces {
            m.set_block(r, col, blk);
        }
        m
    };
    let neg_sic = sic.scale_real(-1.0);
    let a = place(&[(at(0, 0), at(0, 0), &id), (at(0, 1), at(0, 1), &id)]);
    let b = place(&[(at(1, 0), at(1, 0), &id), (at(2, 0), at(2, 0), &id)]);
    let cc = place(&[(at(1, 1), at(1, 1), &id), (at(2, 1), at(2, 1), &id)]);
    let x = place(&[
        (at(0, 0), at(1, 0), &sc),
        (at(0, 0), at(2, 0), &neg_sic),
        (at(0, 1), at(1, 0), &sic),
        (at(0, 1), at(2, 0), &sc),
    ]);
    let y = place(&[(at(0, 0), at(1, 1), &id), (at(0, 1), at(2, 1), &id)]);
    let v = build_valgebra();
    from_images(v.clone(), v.with_ampl(2 * n), vec![(0, 0, a), (0, 1, x), (0, 2, y), (1, 1, b), (2, 2, cc)])
}

/// `φ_C` for diagonal `C` with the given spectrum, required to lie in `(0, 1)`.
pub fn phi_c_v(c: &SpectralClass) -> Result<StarMap> {
    if c.is_empty() {
        return Err(Error::InvalidInput("C must have positive rank".into()));
    }
    if c.pairs().iter().any(|&(t, _)| t <= 0.0 || t >= 1.0) {
        return Err(Error::InvalidInput(format!("spectrum {c} not inside (0, 1)")));
    }
    phi_c_matrix(&ComplexMatrix::diag_real(&c.expanded()))
}

/// Rank-one `φ_t` for `t ∈ [0, 1]`; the endpoints decompose into regular generators.
pub fn phi_t_v(t: f64) -> Result<StarMap> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidInput(format!("t = {t} outside [0, 1]")));
    }
    phi_c_matrix(&ComplexMatrix::diag_real(&[t]))
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DftMatrix {
    pub n: usize,
    pub root_index: usize,
    matrix: ComplexMatrix,
}

impl DftMatrix {
    /// `u_{pq} = w^{pq}/√n` (0-based) with `w = exp(2πi·root_index/n)`.
    pub fn new(n: usize, root_index: usize) -> Result<Self> {
        if n < 2 || gcd(root_index % n, n) != 1 {
            return Err(Error::InvalidInput(format!("need n >= 2 and root index coprime to n, got ({n}, {root_index})")));
        }
        let s = 1.0 / (n as f64).sqrt();
        let matrix = ComplexMatrix::from_fn(n, n, |p, q| {
            C64::from_polar(s, 2.0 * PI * ((root_index * p * q) % n) as f64 / n as f64)
        });
        Ok(Self { n, root_index, matrix })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn conjugate_root(&self) -> usize {
        (self.n - self.root_index % self.n) % self.n
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftMatrix {
    pub n: usize,
    matrix: ComplexMatrix,
}

impl ShiftMatrix {
    /// Forward shift `S e_k = e_{k+1 mod n}`.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("shift needs n >= 1".into()));
        }
        Ok(Self { n, matrix: ComplexMatrix::from_fn(n, n, |i, j| if i == (j + 1) % n { ONE } else { C64::new(0.0, 0.0) }) })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn power(&self, k: usize) -> ComplexMatrix {
        let n = self.n;
        ComplexMatrix::from_fn(n, n, |i, j| if i == (j + k) % n { ONE } else { C64::new(0.0, 0.0) })
    }
}

/// `(S*)^i U S^j`, i.e. entries `U_{(k+i) mod n, (l+j) mod n}`.
pub fn shifted_dft(u: &DftMatrix, i: usize, j: usize) -> ComplexMatrix {
    let s = ShiftMatrix::new(u.n).expect("n >= 2");
    s.power(i).adjoint().matmul(u.matrix()).matmul(&s.power(j))
}

/// Map of `A(G_n)` into `A(G_n) ⊗ M_n` given by the images of the matrix
/// units `e_{p,0}` of the generated `M_{2n}` in terms of the images of `f_{ij}`.
fn bipartite_from_edges(n: usize, codomain: OperatorAlgebra, edge: impl Fn(usize, usize) -> ComplexMatrix) -> Result<StarMap> {
    let domain = build_bipartite(n, n)?;
    let f00 = edge(0, 0);
    let mut cols = Vec::with_capacity(2 * n);
    for p in 0..n {
        cols.push(edge(p, 0).matmul(&f00.adjoint()));
    }
    for j in 0..n {
        cols.push(edge(0, j).adjoint());
    }
    StarMap::from_extension(domain, codomain, vec![cols], &exact())
}

/// `φ : A(G_n) → A(G_n) ⊗ M_n`, `f_{ij} ↦ ((S*)^i U S^j) ⊗ e_{ij}` in the
/// `(1,2)` block, with `U` the DFT matrix for `root_index`.
pub fn bipartite_phi(n: usize, root_index: usize) -> Result<StarMap> {
    let u = DftMatrix::new(n, root_index)?;
    let cod = build_bipartite(n, n)?.with_ampl(n);
    bipartite_from_edges(n, cod, |i, j| {
        let m = shifted_dft(&u, i, j);
        let mut t = ComplexMatrix::zeros(2 * n, 2 * n);
        t.set_block(0, n, &m);
        t.kron(&unit(n, i, j))
    })
}

/// `ψ = φ̄ ⊗ id_n : A(G_n) ⊗ M_n → A(G_n) ⊗ M_n ⊗ M_n`, where `φ̄` uses the
/// conjugate DFT matrix of `root_index`, so that `ψ ∘ bipartite_phi(n, root_index)`
/// is regular.
pub fn bipartite_psi(n: usize, root_index: usize) -> Result<StarMap> {
    let u = DftMatrix::new(n, root_index)?;
    Ok(bipartite_phi(n, u.conjugate_root())?.ampliate(n))
}

/// Multiplicity-one map induced by shifting source vertices by `a` and
/// target vertices by `b`.
pub fn bipartite_automorphism(n: usize, a: usize, b: usize) -> Result<StarMap> {
    let alg = build_bipartite(n, n)?;
    let pi = |v: usize| if v < n { (v + a) % n } else { n + (v - n + b) % n };
    let cols = (0..2 * n).map(|p| unit(2 * n, pi(p), pi(0))).collect();
    StarMap::from_extension(alg.clone(), alg, vec![cols], &exact())
}

/// `θ = ⊕_{a,b} θ_{ab}` over the `n²` shift automorphisms, row-major in `(a, b)`.
pub fn bipartite_theta(n: usize) -> Result<StarMap> {
    let parts = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .map(|(a, b)| bipartite_automorphism(n, a, b))
        .collect::<Result<Vec<_>>>()?;
    direct_sum_all(&parts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub n: usize,
    /// `‖P_n − Z(P_n)‖` with `Z` zeroing the diagonal.
    pub delta: f64,
    pub diagonal_norm: f64,
    /// Second singular value of `P_n`; zero means any partial isometry within
    /// distance below 1 has rank at most one.
    pub second_singular_value: f64,
    /// `max_k √(k(n−k))/n`: bound on `|⟨ξ,x⟩⟨y,ξ⟩|` over unit `x, y` with
    /// disjoint supports and `ξ` the normalized all-ones vector.
    pub overlap_bound: f64,
    /// `1 − overlap_bound`, valid for every partial isometry with zero diagonal.
    pub certified_lower_bound: f64,
    /// Best distance found by local search over rank-one zero-diagonal partial isometries.
    pub searched_minimum: f64,
}

/// Distance data for the rank-one projection `P_n` with all entries `1/n`.
///
/// For a partial isometry `v` with `‖P_n − v‖ = d < 1`, Weyl's inequality gives
/// `σ₂(v) ≤ σ₂(P_n) + d < 1`, so `v = x y*` has rank one and zero diagonal forces
/// disjoint supports. Then `d ≥ |⟨(P_n − v)ξ, ξ⟩| ≥ 1 − overlap_bound`.
pub fn stability_counterexample(n: usize, seed: u64) -> Result<StabilityReport> {
    if n < 2 {
        return Err(Error::InvalidInput("need n >= 2".into()));
    }
    let p = ComplexMatrix::from_fn(n, n, |_, _| C64::new(1.0 / n as f64, 0.0));
    let z = ComplexMatrix::from_fn(n, n, |i, j| if i == j { C64::new(0.0, 0.0) } else { p[(i, j)] });
    let delta = (&p - &z).op_norm();
    let diagonal_norm = ComplexMatrix::diag_real(&vec![1.0 / n as f64; n]).op_norm();
    let sv = p.singular_values();
    let second_singular_value = sv.get(1).copied().unwrap_or(0.0);
    let overlap_bound = (1..n).map(|k| ((k * (n - k)) as f64).sqrt() / n as f64).fold(0.0, f64::max);
    let certified_lower_bound = if second_singular_value < 1e-12 { 1.0 - overlap_bound } else { 0.0 };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut searched_minimum = p.op_norm();
    let dist = |x: &[C64], y: &[C64]| {
        let v = ComplexMatrix::from_fn(n, n, |i, j| x[i] * y[j].conj());
        (&p - &v).op_norm()
    };
    let normalize = |v: &mut Vec<C64>| {
        let s = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in v.iter_mut() {
            *z /= s;
        }
    };
    for k in 1..n {
        let mut x: Vec<C64> = (0..n).map(|i| if i < k { ONE } else { C64::new(0.0, 0.0) }).collect();
        let mut y: Vec<C64> = (0..n).map(|i| if i >= k { ONE } else { C64::new(0.0, 0.0) }).collect();
        normalize(&mut x);
        normalize(&mut y);
        let mut best = dist(&x, &y);
        let mut step = 0.3;
        for _ in 0..150 {
            let mut cx = x.clone();
            let mut cy = y.clone();
            for i in 0..n {
                let d = C64::new(rng.gen_range(-step..step), rng.gen_range(-step..step));
                if i < k {
                    cx[i] += d;
                } else {
                    cy[i] += d;
                }
            }
            normalize(&mut cx);
            normalize(&mut cy);
            let v = dist(&cx, &cy);
            if v < best {
                best = v;
                x = cx;
                y = cy;
            } else {
                step *= 0.97;
            }
        }
        searched_minimum = searched_minimum.min(best);
    }
    Ok(StabilityReport {
        n,
        delta,
        diagonal_norm,
        second_singular_value,
        overlap_bound,
        certified_lower_bound,
        searched_minimum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homkit::{
        classify_t2, classify_valg, compose, inner_equivalent, is_locally_regular, krull_schmidt,
        map_distance_lower,
    };

    fn tol() -> ToleranceProfile {
        ToleranceProfile::default()
    }

    #[test]
    fn t2_generators_classify_to_unit_vectors() {
        let expected = [(1, 0, 0), (0, 1, 0), (0, 0, 1)];
        for (i, e) in expected.iter().enumerate() {
            let m = theta_t2(i).unwrap();
            assert_eq!(m.multiplicity().unwrap(), 1);
            assert_eq!(classify_t2(&m, &tol()).unwrap(), *e);
        }
        assert!(theta_t2(3).is_err());
    }

    #[test]
    fn phi_alpha_display_values() {
        let m = phi_alpha_t3(0.6).unwrap();
        assert_eq!(m.multiplicity().unwrap(), 2);
        assert!(m.homomorphism_residual() < 1e-12);
        let x = m.image("e(1,2)").unwrap();
        let cod = m.codomain();
        let norm = |i, j| cod.block_entry(&x, i, j).op_norm();
        assert!((norm(0, 1) - 0.6).abs() < 1e-12);
        assert!((norm(0, 2) - 0.8).abs() < 1e-12);
        assert!((norm(1, 1) - 0.8).abs() < 1e-12);
        assert!((norm(1, 2) - 0.6).abs() < 1e-12);
        assert_eq!(krull_schmidt(&m, &tol()).unwrap().summands.len(), 1);
        assert_eq!(krull_schmidt(&phi_alpha_t3(1.0).unwrap(), &tol()).unwrap().summands.len(), 2);
        assert!(phi_alpha_t3(1.5).is_err());
    }

    #[test]
    fn phi_alpha_distance_tracks_alpha() {
        for (a, g) in [(0.3, 0.7), (0.1, 0.2), (0.5, 0.55)] {
            let d = map_distance_lower(&phi_alpha_t3(a).unwrap(), &phi_alpha_t3(g).unwrap()).unwrap();
            assert!(d >= (a - g).abs() * (1.0 - 1e-6), "{a} {g} {d}");
        }
    }

    #[test]
    fn l2_rotations_compose() {
        let a = rho_theta_l2(0.4).unwrap();
        let b = rho_theta_l2(1.1).unwrap();
        let ab = compose(&a, &b).unwrap();
        let c = rho_theta_l2(1.5).unwrap();
        assert!(ab.image_residual(&c.images()) < 1e-12);
        let id = rho_theta_l2(0.0).unwrap();
        let l2 = build_l2();
        assert!(id.image_residual(&l2.generators().into_iter().map(|g| (g.label, g.matrix)).collect::<Vec<_>>()) < 1e-15);
    }

    #[test]
    fn tau_absorbs_rotations() {
        let t = tau_l2().unwrap();
        assert_eq!(t.multiplicity().unwrap(), 2);
        let r = rho_theta_l2(0.9).unwrap();
        let rt = compose(&r, &t).unwrap();
        let tr = compose(&t, &r).unwrap();
        assert!(inner_equivalent(&rt, &t, &tol()).unwrap().is_equivalent());
        assert!(inner_equivalent(&tr, &t, &tol()).unwrap().is_equivalent());
        // The range commutes with the copy of ℂ ⊗ M₂ made of template scalars.
        let x = t.image("e(1,2)").unwrap();
        let e12 = unit(2, 0, 1).kron(&ComplexMatrix::identity(2));
        assert!((&x.matmul(&e12) - &e12.matmul(&x)).max_abs() < 1e-15);
    }

    #[test]
    fn v_generators_have_rank_distributions() {
        let expected = [[1, 0, 0, 1], [0, 1, 1, 0], [0, 1, 0, 1], [1, 0, 1, 0]];
        let maps: Vec<_> = (0..4).map(|i| theta_v(i).unwrap()).collect();
        for (m, e) in maps.iter().zip(expected) {
            assert_eq!(m.multiplicity().unwrap(), 1);
            assert_eq!(classify_valg(m, &tol()).unwrap().ranks, e);
        }
        for i in 0..4 {
            for j in 0..4 {
                let v = inner_equivalent(&maps[i], &maps[j], &tol()).unwrap();
                assert_eq!(v.is_equivalent(), i == j);
            }
        }
    }

    #[test]
    fn phi_c_recovers_spectrum_and_endpoints() {
        let c = SpectralClass::from_pairs(&[(0.3, 1), (0.8, 2)]).unwrap();
        let m = phi_c_v(&c).unwrap();
        let inv = classify_valg(&m, &tol()).unwrap();
        assert_eq!(inv.ranks, [3, 3, 3, 3]);
        assert!(crate::numkit::unitary_orbit_distance(&inv.overlap, &c) < 1e-9);
        assert_eq!(krull_schmidt(&phi_t_v(0.4).unwrap(), &tol()).unwrap().summands.len(), 1);

        let sum = |a, b| direct_sum_all(&[theta_v(a).unwrap(), theta_v(b).unwrap()]).unwrap();
        assert!(inner_equivalent(&phi_t_v(1.0).unwrap(), &sum(2, 3), &tol()).unwrap().is_equivalent());
        assert!(inner_equivalent(&phi_t_v(0.0).unwrap(), &sum(0, 1), &tol()).unwrap().is_equivalent());
        assert!(phi_c_v(&SpectralClass::from_pairs(&[(1.0, 1)]).unwrap()).is_err());
    }

    #[test]
    fn dft_and_shift_are_unitary() {
        for n in 2..6 {
            for r in 1..n {
                match DftMatrix::new(n, r) {
                    Ok(u) => {
                        let m = u.matrix();
                        assert!((&m.matmul(&m.adjoint()) - &ComplexMatrix::identity(n)).max_abs() < 1e-12);
                    }
                    Err(_) => assert_ne!(gcd(r, n), 1),
                }
            }
            let s = ShiftMatrix::new(n).unwrap();
            assert!((&s.power(n) - &ComplexMatrix::identity(n)).max_abs() == 0.0);
            assert!((&s.power(1) - s.matrix()).max_abs() == 0.0);
        }
    }

    #[test]
    fn bipartite_phi_display_for_n3() {
        let m = bipartite_phi(3, 1).unwrap();
        assert_eq!(m.multiplicity().unwrap(), 3);
        assert!(!is_locally_regular(&m, &tol()));
        let f11 = m.image("e(1,4)").unwrap();
        // The (1,2) block of φ(f₁₁): row i, column j of U sits at (3i, 3j).
        let w = C64::from_polar(1.0, 2.0 * PI / 3.0);
        let s = 1.0 / 3f64.sqrt();
        for i in 0..3 {
            for j in 0..3 {
                let expect = w.powu((i * j) as u32) * s;
                assert!((f11[(3 * i, 9 + 3 * j)] - expect).norm() < 1e-12);
            }
        }
        let cod = m.codomain();
        for i in 0..3 {
            for j in 3..6 {
                assert!((cod.block_entry(&f11, i, j).op_norm() - s).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn stability_bounds() {
        for n in [2, 3, 7] {
            let r = stability_counterexample(n, 1).unwrap();
            assert!(r.delta <= 1.0 / n as f64 + 1e-12);
            assert!((r.diagonal_norm - 1.0 / n as f64).abs() < 1e-12);
            assert!(r.certified_lower_bound >= 0.5 - 1e-12);
            assert!(r.searched_minimum >= r.certified_lower_bound - 1e-9);
        }
    }
}
