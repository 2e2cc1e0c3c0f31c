//! The verification suite behind `verify-paper`: one check per acceptance
//! criterion, each deterministic in the seed and bounded in runtime.

use afalg::combinat::{binomial, count_order_preserving, embedding_rank_trmax, enumerate_order_preserving, verify_recurrence};
use afalg::constructions::*;
use afalg::dimmod::{asymptotically_equivalent, AsymptoticVerdict, ContractionSequence};
use afalg::homkit::*;
use afalg::numkit::{random_unitary, unitary_orbit_distance};
use afalg::semiring::*;
use afalg::{ComplexMatrix, Result, SpectralClass, ToleranceProfile};
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::report::{pass_if, CheckResult, Status};

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub seed: u64,
    pub tol: ToleranceProfile,
    /// Restricts the bipartite lifting check to one `n`.
    pub n: Option<usize>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { seed: 7, tol: ToleranceProfile::default(), n: None }
    }
}

type CheckFn = fn(&SuiteOptions) -> CheckResult;

/// `(id, topic keywords, check)` in report order.
pub const CHECKS: [(&str, &str, CheckFn); 11] = [
    ("01-pend-counts", "pend enumerate embedding-rank", check_pend_counts),
    ("02-order-preserving", "combinat lattice recurrence", check_order_preserving),
    ("03-product-law", "valg product compose", check_product_law),
    ("04-bipartite-lifting", "bipartite lifting regular", check_bipartite),
    ("05-decreasing-family", "t3 phi-alpha indecomposable", check_decreasing_family),
    ("06-t2-classes", "t2 classify completeness", check_t2_classes),
    ("07-valg-classes", "valg classify completeness", check_valg_classes),
    ("08-decomposition", "krull-schmidt roundtrip decompose", check_roundtrip),
    ("09-stationary-limits", "dimmod stationary asymptotic", check_stationary),
    ("10-stability", "stability partial-isometry", check_stability),
    ("11-properties", "properties axioms metric invariance", check_properties),
];

/// Selects checks by criterion number (`"4"`), id, or topic keyword.
pub fn select(filter: Option<&str>) -> Vec<(&'static str, CheckFn)> {
    CHECKS
        .iter()
        .filter(|(id, topics, _)| match filter {
            None => true,
            Some(f) => {
                let f = f.trim().to_lowercase();
                let num = id.split('-').next().unwrap_or("");
                f.parse::<u32>().ok() == num.parse::<u32>().ok() && f.parse::<u32>().is_ok()
                    || id.contains(&f)
                    || topics.split(' ').any(|t| t == f)
            }
        })
        .map(|(id, _, f)| (*id, *f))
        .collect()
}

pub fn run(filter: Option<&str>, opts: &SuiteOptions) -> Vec<CheckResult> {
    select(filter).into_iter().map(|(_, f)| f(opts)).collect()
}

fn rng(opts: &SuiteOptions, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(opts.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

const PEND_SEQUENCE: [u64; 8] = [1, 7, 31, 121, 456, 1709, 6427, 24301];

fn check_pend_counts(_: &SuiteOptions) -> CheckResult {
    CheckResult::timed("01-pend-counts", 0.0, || {
        let mut bad = 0;
        let mut counts = Vec::new();
        for r in 1..=8u64 {
            let n = pend_elements(r as usize)?.len() as u64;
            let formula = binomial(2 * r + 1, r + 1) - BigUint::from(r + 1);
            if BigUint::from(n) != formula || n != PEND_SEQUENCE[r as usize - 1] || embedding_rank_trmax(r)? != formula {
                bad += 1;
            }
            counts.push(n.to_string());
        }
        Ok((pass_if(bad == 0), bad as f64, format!("|Pend| = {}", counts.join(", "))))
    })
    .with_budget(10.0)
}

fn check_order_preserving(_: &SuiteOptions) -> CheckResult {
    CheckResult::timed("02-order-preserving", 0.0, || {
        let mut bad = 0;
        for r in 1..=7 {
            for t in 1..=7 {
                let brute = BigUint::from(enumerate_order_preserving(r, t).len());
                if count_order_preserving(r as u64, t as u64)? != brute || binomial((r + t - 1) as u64, t as u64) != brute {
                    bad += 1;
                }
            }
        }
        let rec = verify_recurrence(12, 12)?;
        let ok = bad == 0 && rec.passed();
        Ok((pass_if(ok), bad as f64, format!("7x7 brute-force grid mismatches {bad}; recurrences on 12x12 hold: {}", rec.passed())))
    })
    .with_budget(5.0)
}

fn random_spectrum(rng: &mut ChaCha8Rng, max_rank: usize) -> Vec<f64> {
    let k = rng.gen_range(1..=max_rank);
    (0..k).map(|_| rng.gen_range(0.05..0.95)).collect()
}

/// Positive contraction with the given spectrum in a random basis.
fn random_contraction(rng: &mut ChaCha8Rng, spec: &[f64]) -> ComplexMatrix {
    let u = random_unitary(rng, spec.len());
    u.matmul(&ComplexMatrix::diag_real(spec)).matmul(&u.adjoint())
}

fn check_product_law(opts: &SuiteOptions) -> CheckResult {
    CheckResult::timed("03-product-law", 1e-8, || {
        let mut rng = rng(opts, 3);
        let mut worst: f64 = 0.0;
        for _ in 0..50 {
            let (sc, sd) = (random_spectrum(&mut rng, 3), random_spectrum(&mut rng, 3));
            let fc = phi_c_matrix(&random_contraction(&mut rng, &sc))?;
            let fd = phi_c_matrix(&random_contraction(&mut rng, &sd))?;
            let got = classify_valg(&compose(&fd, &fc)?, &opts.tol)?.overlap;
            let mut expected = Vec::new();
            for &t in &sc {
                for &s in &sd {
                    expected.extend([t + (1.0 - t) * s; 2]);
                }
            }
            let expected = SpectralClass::from_values(&expected, 1e-12);
            worst = worst.max(unitary_orbit_distance(&got, &expected));
        }
        Ok((pass_if(worst <= 1e-8), worst, "50 compositions φ_D∘φ_C vs {t+(1−t)s} doubled".into()))
    })
    .with_budget(20.0)
}

fn bipartite_case(n: usize, tol: &ToleranceProfile) -> Result<(bool, f64, String)> {
    let phi = bipartite_phi(n, 1)?;
    let target = 1.0 / (n as f64).sqrt();
    let cod = phi.codomain();
    let mut worst: f64 = 0.0;
    let off_diagonal = |label: &str| {
        let inner = label.trim_start_matches("e(").trim_end_matches(')');
        inner.split_once(',').is_some_and(|(i, j)| i != j)
    };
    for (_, x) in phi.images().into_iter().filter(|(l, _)| off_diagonal(l)) {
        for p in 0..cod.template_size() {
            for q in 0..cod.template_size() {
                let b = cod.block_entry(&x, p, q);
                let norm = b.op_norm();
                if norm > tol.eps_rank {
                    worst = worst.max((norm - target).abs());
                }
            }
        }
    }
    let irregular = !is_locally_regular(&phi, tol);
    let comp = compose(&bipartite_psi(n, 1)?, &phi)?;
    let mult = comp.multiplicity()?;
    let dec = krull_schmidt(&comp, tol)?;
    let summands_ok = dec.summands.len() == n * n
        && dec.summands.iter().all(|s| s.multiplicity().ok() == Some(1) && is_locally_regular(s, tol));
    let autos = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).map(|(a, b)| bipartite_automorphism(n, a, b)).collect::<Result<Vec<_>>>()?;
    let matched = match_classes(&dec.summands, &autos, tol)?.is_some();
    let ok = worst <= 1e-9 && irregular && mult == n * n && summands_ok && matched;
    let detail = format!(
        "n={n}: block norm error {worst:.1e}, φ irregular {irregular}, μ(ψ∘φ)={mult}, {} summands regular {summands_ok}, matched {matched}",
        dec.summands.len()
    );
    Ok((ok, worst, detail))
}

fn check_bipartite(opts: &SuiteOptions) -> CheckResult {
    CheckResult::timed("04-bipartite-lifting", 1e-9, || {
        let ns = match opts.n {
            Some(n) => vec![n],
            None => vec![2, 3],
        };
        let mut ok = true;
        let mut worst: f64 = 0.0;
        let mut details = Vec::new();
        for n in ns {
            let (o, w, d) = bipartite_case(n, &opts.tol)?;
            ok &= o;
            worst = worst.max(w);
            details.push(d);
        }
        Ok((pass_if(ok), worst, details.join("; ")))
    })
    .with_budget(30.0)
}

fn check_decreasing_family(opts: &SuiteOptions) -> CheckResult {
    let tol = opts.tol;
    CheckResult::timed("05-decreasing-family", tol.eps_report, || {
        let p = phi_alpha_t3(0.6)?;
        let mu = p.multiplicity()?;
        let summands = krull_schmidt_seeded(&p, &tol, opts.seed)?.summands.len();
        let (a, b) = (phi_alpha_t3(0.3)?, phi_alpha_t3(0.7)?);
        let verdict = inner_equivalent(&a, &b, &tol)?;
        let lower = map_distance_lower(&a, &b)?;
        let mut norms = Vec::new();
        let mut cur = p.clone();
        for _ in 0..5 {
            let x = cur.image("e(1,2)").expect("T3 generator");
            norms.push(cur.codomain().block_entry(&x, 0, 1).op_norm());
            cur = compose(&cur, &p)?;
        }
        let decreasing = norms.windows(2).all(|w| w[1] < w[0]);
        let ok = mu == 2 && summands == 1 && verdict.is_not_equivalent() && lower >= 0.4 * (1.0 - tol.eps_report) && decreasing;
        let norms: Vec<String> = norms.iter().map(|x| format!("{x:.4}")).collect();
        Ok((
            pass_if(ok),
            lower,
            format!("μ={mu}, {summands} summand(s), φ_0.3 vs φ_0.7 {verdict:?}, lower bound {lower:.6}, block norms {}", norms.join(" > ")),
        ))
    })
    .with_budget(10.0)
}

fn check_t2_classes(opts: &SuiteOptions) -> CheckResult {
    CheckResult::timed("06-t2-classes", 0.0, || {
        let mut rng = rng(opts, 6);
        let thetas = (0..3).map(theta_t2).collect::<Result<Vec<_>>>()?;
        let mut misses = 0;
        for _ in 0..100 {
            let triple = loop {
                let t = [rng.gen_range(0..=4usize), rng.gen_range(0..=4), rng.gen_range(0..=4)];
                let s: usize = t.iter().sum();
                if (1..=4).contains(&s) {
                    break t;
                }
            };
            let parts: Vec<StarMap> = (0..3).flat_map(|i| std::iter::repeat_n(thetas[i].clone(), triple[i])).collect();
            let sum = direct_sum_all(&parts)?;
            let conj = sum.conjugate(&random_inner_unitary(sum.codomain(), &mut rng));
            let (a, b, c) = classify_t2(&conj, &opts.tol)?;
            if [a, b, c] != triple {
                misses += 1;
            }
        }
        Ok((pass_if(misses == 0), misses as f64, format!("{misses} of 100 triples misclassified")))
    })
    .with_budget(10.0)
}

fn check_valg_classes(opts: &SuiteOptions) -> CheckResult {
    CheckResult::timed("07-valg-classes", opts.tol.eps_report, || {
        let mut rng = rng(opts, 7);
        let (mut same_ok, mut diff_ok) = (0, 0);
        for _ in 0..50 {
            let spec = random_spectrum(&mut rng, 3);
            let f = phi_c_v(&SpectralClass::from_values(&spec, 1e-12))?;
            let g = f.conjugate(&random_inner_unitary(f.codomain(), &mut rng));
            if inner_equivalent(&f, &g, &opts.tol)?.is_equivalent() {
                same_ok += 1;
            }
            let other = loop {
                let mut s = spec.clone();
                let i = rng.gen_range(0..s.len());
                let shift = rng.gen_range(0.05..0.2) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                s[i] = (s[i] + shift).clamp(0.01, 0.99);
                let (a, b) = (SpectralClass::from_values(&spec, 1e-12), SpectralClass::from_values(&s, 1e-12));
                if unitary_orbit_distance(&a, &b) >= 0.05 {
                    break b;
                }
            };
            let h = phi_c_v(&other)?;
            if inner_equivalent(&f, &h, &opts.tol)?.is_not_equivalent() {
                diff_ok += 1;
            }
        }
        Ok((
            pass_if(same_ok == 50 && diff_ok == 50),
            (100 - same_ok - diff_ok) as f64,
            format!("conjugates equivalent {same_ok}/50, separated spectra inequivalent {diff_ok}/50"),
        ))
    })
    .with_budget(20.0)
}

fn planted_summand(rng: &mut ChaCha8Rng, family: usize) -> Result<StarMap> {
    match family {
        0 => theta_t2(rng.gen_range(0..3)),
        1 => {
            if rng.gen_bool(0.5) {
                theta_v(rng.gen_range(0..4))
            } else {
                phi_t_v(rng.gen_range(0.1..0.9))
            }
        }
        _ => phi_alpha_t3(rng.gen_range(0.2..0.9)),
    }
}

fn check_roundtrip(opts: &SuiteOptions) -> CheckResult {
    CheckResult::timed("08-decomposition", 0.0, || {
        let mut rng = rng(opts, 8);
        let mut misses = Vec::new();
        for trial in 0..100 {
            let family = rng.gen_range(0..3);
            let k = rng.gen_range(2..=5);
            let planted = (0..k).map(|_| planted_summand(&mut rng, family)).collect::<Result<Vec<_>>>()?;
            let sum = direct_sum_all(&planted)?;
            let conj = sum.conjugate(&random_inner_unitary(sum.codomain(), &mut rng));
            let dec = krull_schmidt_seeded(&conj, &opts.tol, opts.seed.wrapping_add(trial))?;
            let mu_in: usize = planted.iter().map(StarMap::total_multiplicity).sum();
            let mu_out: usize = dec.summands.iter().map(StarMap::total_multiplicity).sum();
            let matched = match_classes(&dec.summands, &planted, &opts.tol)?.is_some();
            if !matched || mu_in != mu_out {
                misses.push(trial);
            }
        }
        Ok((pass_if(misses.is_empty()), misses.len() as f64, format!("{} of 100 planted sums not recovered {misses:?}", misses.len())))
    })
    .with_budget(30.0)
}

fn check_stationary(opts: &SuiteOptions) -> CheckResult {
    CheckResult::timed("09-stationary-limits", opts.tol.eps_report, || {
        let rank_one = |t: f64| SpectralClass::from_pairs(&[(0.0, 1), (t, 1)]);
        let c = ContractionSequence::stationary(rank_one(0.4)?, 8)?;
        let d = ContractionSequence::stationary(rank_one(0.6)?, 8)?;
        let differ = asymptotically_equivalent(&c, &d, opts.tol.eps_report, 3);
        let same = asymptotically_equivalent(&c, &c, opts.tol.eps_report, 3);
        let ok = matches!(differ, AsymptoticVerdict::No { .. }) && matches!(same, AsymptoticVerdict::Yes(_));
        let name = |v: &AsymptoticVerdict| match v {
            AsymptoticVerdict::Yes(_) => "Yes",
            AsymptoticVerdict::No { .. } => "No",
            AsymptoticVerdict::Unknown(_) => "Unknown",
        };
        Ok((pass_if(ok), 0.2, format!("t=0.4 vs s=0.6: {}; t=s=0.4: {}", name(&differ), name(&same))))
    })
    .with_budget(5.0)
}

fn check_stability(opts: &SuiteOptions) -> CheckResult {
    CheckResult::timed("10-stability", 0.3, || {
        let mut worst_bound = f64::INFINITY;
        let mut ok = true;
        for n in 2..=20 {
            let r = stability_counterexample(n, opts.seed)?;
            ok &= r.delta <= 1.0 / n as f64 + 1e-12 && r.certified_lower_bound >= 0.3;
            worst_bound = worst_bound.min(r.certified_lower_bound);
        }
        Ok((pass_if(ok), worst_bound, format!("n = 2..20: δ_n <= 1/n, smallest certified bound {worst_bound:.4}")))
    })
    .with_budget(10.0)
}

fn random_vector(rng: &mut ChaCha8Rng, t: &SemigroupTable) -> SemiringVector {
    let coeffs = (0..t.len()).map(|_| if rng.gen_bool(0.3) { rng.gen_range(0..4) } else { 0 }).collect();
    SemiringVector::from_coeffs(t, coeffs).expect("length matches")
}

fn semiring_axioms(rng: &mut ChaCha8Rng) -> Result<usize> {
    let mut bad = 0;
    let tables = [t2_semigroup()?.clone(), pend_table(2)?, pend_table(3)?];
    for t in &tables {
        let graded = !t.has_zero;
        for _ in 0..100 {
            let (a, b, c) = (random_vector(rng, t), random_vector(rng, t), random_vector(rng, t));
            let ab_c = semiring_mul(t, &semiring_mul(t, &a, &b)?, &c)?;
            let a_bc = semiring_mul(t, &a, &semiring_mul(t, &b, &c)?)?;
            let left = semiring_mul(t, &a, &b.add(&c)?)?;
            let left2 = semiring_mul(t, &a, &b)?.add(&semiring_mul(t, &a, &c)?)?;
            let right = semiring_mul(t, &a.add(&b)?, &c)?;
            let right2 = semiring_mul(t, &a, &c)?.add(&semiring_mul(t, &b, &c)?)?;
            let zero = SemiringVector::zero(t);
            let mut ok = ab_c == a_bc && left == left2 && right == right2 && a.add(&b)? == b.add(&a)? && a.add(&zero)? == a;
            if let Some(id) = t.identity_element() {
                let e = SemiringVector::basis_element(t, id);
                ok &= semiring_mul(t, &e, &a)? == a && semiring_mul(t, &a, &e)? == a;
            }
            if graded {
                ok &= grading(t, &semiring_mul(t, &a, &b)?)? == grading(t, &a)? * grading(t, &b)?;
            }
            bad += usize::from(!ok);
        }
    }
    Ok(bad)
}

fn random_class(rng: &mut ChaCha8Rng, rank: usize) -> SpectralClass {
    let vals: Vec<f64> = (0..rank).map(|_| rng.gen_range(0.0..1.0)).collect();
    SpectralClass::from_values(&vals, 1e-12)
}

fn metric_axioms(rng: &mut ChaCha8Rng) -> usize {
    let mut bad = 0;
    for _ in 0..200 {
        let k = rng.gen_range(1..=5);
        let (a, b, c) = (random_class(rng, k), random_class(rng, k), random_class(rng, k));
        let d = unitary_orbit_distance;
        let ok = d(&a, &a) == 0.0 && (d(&a, &b) - d(&b, &a)).abs() < 1e-15 && d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-15 && d(&a, &b) >= 0.0;
        bad += usize::from(!ok);
    }
    bad
}

fn conjugation_invariance(rng: &mut ChaCha8Rng, tol: &ToleranceProfile) -> Result<usize> {
    let mut bad = 0;
    let thetas = (0..3).map(theta_t2).collect::<Result<Vec<_>>>()?;
    for _ in 0..100 {
        let parts: Vec<StarMap> = (0..rng.gen_range(1..=3)).map(|_| thetas[rng.gen_range(0..3)].clone()).collect();
        let m = direct_sum_all(&parts)?;
        let conj = m.conjugate(&random_inner_unitary(m.codomain(), rng));
        bad += usize::from(classify_t2(&m, tol)? != classify_t2(&conj, tol)?);
    }
    for _ in 0..100 {
        let m = phi_c_v(&SpectralClass::from_values(&random_spectrum(rng, 2), 1e-12))?;
        let conj = m.conjugate(&random_inner_unitary(m.codomain(), rng));
        bad += usize::from(vclass_distance(&classify_vclass(&m, tol)?, &classify_vclass(&conj, tol)?) > tol.eps_report);
        let lower = map_distance_lower(&m, &conj)?;
        bad += usize::from(lower > tol.eps_report);
    }
    for _ in 0..100 {
        let parts = (0..rng.gen_range(1..=3)).map(|_| planted_summand(rng, 1)).collect::<Result<Vec<_>>>()?;
        let m = direct_sum_all(&parts)?;
        let conj = m.conjugate(&random_inner_unitary(m.codomain(), rng));
        let seed = rng.gen();
        bad += usize::from(krull_schmidt_seeded(&conj, tol, seed)?.summands.len() != parts.len());
    }
    Ok(bad)
}

fn homomorphism_residuals() -> Result<f64> {
    let mut maps = vec![phi_alpha_t3(0.6)?, rho_theta_l2(0.7)?, tau_l2()?, phi_c_v(&SpectralClass::from_values(&[0.2, 0.7], 1e-12))?];
    maps.extend((0..3).map(theta_t2).collect::<Result<Vec<_>>>()?);
    maps.extend((0..4).map(theta_v).collect::<Result<Vec<_>>>()?);
    for n in 2..=3 {
        maps.push(bipartite_phi(n, 1)?);
        maps.push(bipartite_psi(n, 1)?);
        maps.push(bipartite_theta(n)?);
    }
    let extra = compose(&maps[0], &maps[0])?;
    maps.push(extra);
    Ok(maps.iter().map(StarMap::homomorphism_residual).fold(0.0, f64::max))
}

fn check_properties(opts: &SuiteOptions) -> CheckResult {
    CheckResult::timed("11-properties", opts.tol.eps_report, || {
        let mut rng = rng(opts, 11);
        let semiring = semiring_axioms(&mut rng)?;
        let metric = metric_axioms(&mut rng);
        let invariance = conjugation_invariance(&mut rng, &opts.tol)?;
        let residual = homomorphism_residuals()?;
        let ok = semiring == 0 && metric == 0 && invariance == 0 && residual <= opts.tol.eps_report;
        Ok((
            pass_if(ok),
            residual,
            format!("semiring violations {semiring}, metric violations {metric}, conjugation mismatches {invariance}, max homomorphism residual {residual:.1e}"),
        ))
    })
    .with_budget(60.0)
}

/// Whether every check in `results` passed.
pub fn all_pass(results: &[CheckResult]) -> bool {
    results.iter().all(|r| r.status == Status::Pass)
}
