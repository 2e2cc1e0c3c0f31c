use std::path::Path;
use std::time::Duration;

use afalg::algebra::AlgebraKind;
use afalg::combinat::{embedding_rank_trmax, verify_recurrence, CountTable};
use afalg::dimmod::{limit_invariants, module_isomorphic_stationary, DimensionSystem, ModuleVerdict, StationaryClass};
use afalg::homkit::*;
use afalg::semiring::{classify_vclass, pend_elements};
use afalg::{Error, Result, ToleranceProfile};
use serde_json::json;

use crate::checks::{self, SuiteOptions};
use crate::files::{load_map, read_json, write_json, SystemDescription};
use crate::report::{pass_if, CheckResult, Report, Status};

#[derive(Debug, Clone)]
pub struct Common {
    pub tol: ToleranceProfile,
    pub seed: u64,
    pub deadline: Duration,
}

impl Default for Common {
    fn default() -> Self {
        Self { tol: ToleranceProfile::default(), seed: 7, deadline: Duration::from_secs(10) }
    }
}

/// A failed setup step becomes a single failing check.
fn error_report(id: &str, e: Error) -> Report {
    Report::new(
        vec![CheckResult { id: id.into(), status: Status::Fail, measured: f64::NAN, tolerance: 0.0, runtime_s: 0.0, detail: format!("error: {e}") }],
        serde_json::Value::Null,
    )
}

fn guard(id: &str, f: impl FnOnce() -> Result<Report>) -> Report {
    f().unwrap_or_else(|e| error_report(id, e))
}

pub fn cmd_enumerate(r: usize, list: bool) -> Report {
    guard("enumerate", || {
        if r == 0 || r > 10 {
            return Err(Error::InvalidInput("r must lie in 1..=10".into()));
        }
        let mut rows = Vec::new();
        let mut verdicts = Vec::new();
        for k in 1..=r {
            let count = pend_elements(k)?.len();
            let formula = embedding_rank_trmax(k as u64)?;
            rows.push(json!({"r": k, "pend": count, "formula": formula.to_string()}));
            verdicts.push(CheckResult::timed(&format!("pend-count-r{k:02}"), 0.0, || {
                Ok((pass_if(formula == count.into()), count as f64, format!("binom(2r+1,r+1)-(r+1) = {formula}")))
            }));
        }
        let grid = CountTable::new(r as u64, r as u64)?;
        let rec = verify_recurrence(r as u64, r as u64)?;
        verdicts.push(CheckResult::timed("recurrences", 0.0, || Ok((pass_if(rec.passed()), rec.violations.len() as f64, format!("{r}x{r} grid")))));
        let mut data = json!({
            "sequence": rows,
            "order_preserving": grid.values.iter().map(|row| row.iter().map(|v| v.to_string()).collect::<Vec<_>>()).collect::<Vec<_>>(),
        });
        if list {
            data["elements"] = json!(pend_elements(r)?.iter().map(|e| e.to_string()).collect::<Vec<_>>());
        }
        Ok(Report::new(verdicts, data))
    })
}

fn class_of(m: &StarMap, tol: &ToleranceProfile) -> String {
    match (m.domain().base_kind(), m.codomain().base_kind()) {
        (AlgebraKind::Tr(2), AlgebraKind::Tr(2)) => match classify_t2(m, tol) {
            Ok((a, b, c)) => format!("{a}θ0+{b}θ1+{c}θ2"),
            Err(e) => format!("unclassified: {e}"),
        },
        (AlgebraKind::VAlgebra, AlgebraKind::VAlgebra) => match classify_vclass(m, tol) {
            Ok(c) => c.to_string(),
            Err(e) => format!("unclassified: {e}"),
        },
        _ => format!("μ={}", m.total_multiplicity()),
    }
}

fn decomposition_data(m: &StarMap, c: &Common) -> Result<(Vec<CheckResult>, serde_json::Value)> {
    let dec = match krull_schmidt_seeded(m, &c.tol, c.seed) {
        Ok(d) => d,
        Err(Error::ToleranceAmbiguity(msg)) => {
            let v = CheckResult::timed("decomposition", c.tol.eps_spec, || Ok((Status::Unknown, f64::NAN, msg)));
            return Ok((vec![v], serde_json::Value::Null));
        }
        Err(e) => return Err(e),
    };
    let summands: Vec<_> = dec
        .summands
        .iter()
        .map(|s| json!({"multiplicity": s.total_multiplicity(), "locally_regular": is_locally_regular(s, &c.tol), "class": class_of(s, &c.tol)}))
        .collect();
    let total: usize = dec.summands.iter().map(StarMap::total_multiplicity).sum();
    let v = CheckResult::timed("decomposition", 0.0, || {
        Ok((pass_if(total == m.total_multiplicity()), dec.summands.len() as f64, format!("{} summands, multiplicity {total} of {}", dec.summands.len(), m.total_multiplicity())))
    });
    Ok((vec![v], json!({"summands": summands, "class": class_of(m, &c.tol)})))
}

pub fn cmd_compose(first: &str, then: &str, out: Option<&Path>, c: &Common) -> Report {
    guard("compose", || {
        let (f, g) = (load_map(first, &c.tol)?, load_map(then, &c.tol)?);
        let comp = compose(&g, &f)?;
        if let Some(p) = out {
            write_json(p, &MapDescription::from_map(&comp))?;
        }
        let residual = comp.homomorphism_residual();
        let mut verdicts = vec![CheckResult::timed("homomorphism-residual", c.tol.eps_report, || {
            Ok((pass_if(residual <= c.tol.eps_report), residual, format!("{} → {}", comp.domain().descriptor(), comp.codomain().descriptor())))
        })];
        let (v, data) = decomposition_data(&comp, c)?;
        verdicts.extend(v);
        Ok(Report::new(verdicts, data))
    })
}

pub fn cmd_decompose(map: &str, c: &Common) -> Report {
    guard("decompose", || {
        let m = load_map(map, &c.tol)?;
        let (v, data) = decomposition_data(&m, c)?;
        Ok(Report::new(v, data))
    })
}

pub fn cmd_equiv(a: &str, b: &str, c: &Common) -> Report {
    guard("equiv", || {
        let (f, g) = (load_map(a, &c.tol)?, load_map(b, &c.tol)?);
        let lower = map_distance_lower(&f, &g)?;
        let verdict = inner_equivalent(&f, &g, &c.tol)?;
        let (status, detail) = match &verdict {
            Verdict::Equivalent => (Status::Pass, "Equivalent".to_string()),
            Verdict::NotEquivalent(w) => (Status::Fail, format!("NotEquivalent: {w}")),
            Verdict::Unknown(w) => (Status::Unknown, format!("Unknown: {w}")),
        };
        let v = CheckResult::timed("inner-equivalence", c.tol.eps_report, || Ok((status, lower, detail)));
        let data = json!({"first": class_of(&f, &c.tol), "second": class_of(&g, &c.tol), "distance_lower_bound": lower});
        Ok(Report::new(vec![v], data))
    })
}

fn system_data(s: &DimensionSystem) -> Result<serde_json::Value> {
    match &s.stationary {
        Some((_, StationaryClass::V(v))) => Ok(json!({"class": v.to_string(), "stage_sizes": s.stage_sizes})),
        Some(_) => Ok(json!({"invariants": limit_invariants(s)?, "stage_sizes": s.stage_sizes, "scales": s.scale_vectors})),
        None => Ok(json!({"stage_sizes": s.stage_sizes, "scales": s.scale_vectors, "action_matrices": s.action_matrices})),
    }
}

pub fn cmd_dimmod(file: &Path, against: Option<&Path>, c: &Common) -> Report {
    guard("dimmod", || {
        let s1 = read_json::<SystemDescription>(file)?.build(&c.tol)?;
        let mut data = json!({"system": system_data(&s1)?});
        let mut verdicts = vec![CheckResult::timed("system", 0.0, || Ok((Status::Pass, s1.stage_sizes.len() as f64, "stages built".into())))];
        if let Some(p) = against {
            let s2 = read_json::<SystemDescription>(p)?.build(&c.tol)?;
            data["against"] = system_data(&s2)?;
            let verdict = match (&s1.stationary, &s2.stationary) {
                (Some((_, StationaryClass::V(a))), Some((_, StationaryClass::V(b)))) => {
                    if a == b {
                        ModuleVerdict::Unknown("equal stationary classes; no general V-module comparison".into())
                    } else {
                        ModuleVerdict::Unknown("V-module comparison beyond equal classes is not implemented".into())
                    }
                }
                _ => module_isomorphic_stationary(&s1, &s2, 4, c.deadline)?,
            };
            let (status, detail) = match &verdict {
                ModuleVerdict::Iso(w) => (Status::Pass, format!("isomorphic, lag {}", w.lag)),
                ModuleVerdict::NotIso(why) => (Status::Fail, format!("not isomorphic: {why}")),
                ModuleVerdict::Unknown(why) => (Status::Unknown, why.clone()),
            };
            data["verdict"] = serde_json::to_value(&verdict).map_err(|e| Error::InvalidInput(e.to_string()))?;
            verdicts.push(CheckResult::timed("isomorphism", 0.0, || Ok((status, 0.0, detail))));
        }
        Ok(Report::new(verdicts, data))
    })
}

pub fn cmd_verify_paper(section: Option<&str>, n: Option<usize>, c: &Common) -> Report {
    let opts = SuiteOptions { seed: c.seed, tol: c.tol, n };
    let results = checks::run(section, &opts);
    if results.is_empty() {
        return error_report("verify", Error::InvalidInput(format!("no check matches {section:?}")));
    }
    Report::new(results, serde_json::Value::Null)
}
