use std::path::Path;

use afalg::constructions::*;
use afalg::dimmod::{build_stationary, build_stationary_v, DimensionSystem};
use afalg::homkit::{classify_t2, MapDescription, StarMap};
use afalg::semiring::{action_matrix, classify_vclass, pend_table, t2_semigroup, SemigroupTable, SemiringVector, VClass};
use afalg::{Error, Result, ToleranceProfile};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSpec {
    /// Number of copies of the template in this stage.
    pub summands: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClassPayload {
    Table(SemiringVector),
    V(VClass),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MapSpec {
    Class { class: ClassPayload },
    Matrices { map: MapDescription },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemDescription {
    pub template: String,
    pub stages: Vec<StageSpec>,
    pub maps: Vec<MapSpec>,
}

enum Basis {
    Table(SemigroupTable),
    V,
}

fn basis_for(template: &str) -> Result<Basis> {
    match template.trim() {
        "T:2" => Ok(Basis::Table(t2_semigroup()?.clone())),
        "V" => Ok(Basis::V),
        t => match t.strip_prefix("Tmax:") {
            Some(r) => {
                let r = r.parse().map_err(|_| Error::InvalidInput(format!("bad template {t:?}")))?;
                Ok(Basis::Table(pend_table(r)?))
            }
            None => Err(Error::InvalidInput(format!("no classifying basis for template {t:?}; use T:2, Tmax:r or V"))),
        },
    }
}

impl SystemDescription {
    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() || self.stages.len() != self.maps.len() + 1 {
            return Err(Error::InvalidInput(format!("{} stages need {} maps, found {}", self.stages.len(), self.stages.len().saturating_sub(1), self.maps.len())));
        }
        if self.stages.iter().any(|s| s.summands != 1) {
            return Err(Error::InvalidInput("only single-summand stages are supported".into()));
        }
        Ok(())
    }

    /// Builds the dimension system; every map must have the same class.
    pub fn build(&self, tol: &ToleranceProfile) -> Result<DimensionSystem> {
        self.validate()?;
        let stages = self.stages.len();
        match basis_for(&self.template)? {
            Basis::Table(table) => {
                let classes = self.maps.iter().map(|m| table_class(&table, m, tol)).collect::<Result<Vec<_>>>()?;
                match classes.first() {
                    Some(c) if classes.iter().all(|x| x == c) => build_stationary(&table, c, stages),
                    Some(_) => {
                        let mats = classes.iter().map(|c| action_matrix(&table, c)).collect::<Result<Vec<_>>>()?;
                        let id = table.identity_element().ok_or_else(|| Error::InvalidInput("table without identity".into()))?;
                        let mut scale0 = vec![0; table.len()];
                        scale0[id] = 1;
                        DimensionSystem::new(table.len(), vec![1; stages], mats, scale0, 1)
                    }
                    None => Err(Error::InvalidInput("a single stage has no action to study".into())),
                }
            }
            Basis::V => {
                let classes = self.maps.iter().map(|m| v_class(m, tol)).collect::<Result<Vec<_>>>()?;
                match classes.first() {
                    Some(c) if classes.iter().all(|x| x == c) => build_stationary_v(c, stages),
                    _ => Err(Error::InvalidInput("V-algebra systems must be stationary".into())),
                }
            }
        }
    }
}

fn table_class(table: &SemigroupTable, m: &MapSpec, tol: &ToleranceProfile) -> Result<SemiringVector> {
    match m {
        MapSpec::Class { class: ClassPayload::Table(v) } => {
            SemiringVector::from_coeffs(table, v.coeffs.clone()).and_then(|x| if v.basis == table.name { Ok(x) } else { Err(Error::ShapeMismatch(format!("class over {} in a {} system", v.basis, table.name))) })
        }
        MapSpec::Matrices { map } if table.name == "T2" => {
            let (a, b, c) = classify_t2(&map.to_map(tol)?, tol)?;
            SemiringVector::from_coeffs(table, vec![a as u64, b as u64, c as u64])
        }
        _ => Err(Error::InvalidInput(format!("maps in a {} system must be given by class", table.name))),
    }
}

fn v_class(m: &MapSpec, tol: &ToleranceProfile) -> Result<VClass> {
    match m {
        MapSpec::Class { class: ClassPayload::V(c) } => Ok(c.clone()),
        MapSpec::Matrices { map } => classify_vclass(&map.to_map(tol)?, tol),
        MapSpec::Class { .. } => Err(Error::InvalidInput("V-algebra systems take V classes".into())),
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidInput(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn params<T: std::str::FromStr>(s: &str, n: usize, name: &str) -> Result<Vec<T>> {
    let v: Vec<T> = s
        .split(',')
        .map(|p| p.trim().parse::<T>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::InvalidInput(format!("bad parameters {s:?} for {name}")))?;
    if v.len() != n {
        return Err(Error::InvalidInput(format!("{name} takes {n} parameter(s)")));
    }
    Ok(v)
}

pub const CONSTRUCTION_NAMES: &str = "theta_t2:i, phi_alpha:a, rho:angle, tau, theta_v:i, phi_t:t, phi_c:t1,t2,.., \
bipartite_phi:n,root, bipartite_psi:n,root, bipartite_aut:n,a,b, bipartite_theta:n";

/// Resolves `name:params` to a construction.
pub fn named_construction(spec: &str) -> Result<StarMap> {
    let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
    match name {
        "theta_t2" => theta_t2(params(args, 1, name)?[0]),
        "phi_alpha" => phi_alpha_t3(params(args, 1, name)?[0]),
        "rho" => rho_theta_l2(params(args, 1, name)?[0]),
        "tau" => tau_l2(),
        "theta_v" => theta_v(params(args, 1, name)?[0]),
        "phi_t" => phi_t_v(params(args, 1, name)?[0]),
        "phi_c" => {
            let vals: Vec<f64> = args.split(',').map(|p| p.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| Error::InvalidInput(format!("bad spectrum {args:?}")))?;
            phi_c_v(&afalg::SpectralClass::from_values(&vals, 1e-12))
        }
        "bipartite_phi" => {
            let p: Vec<usize> = params(args, 2, name)?;
            bipartite_phi(p[0], p[1])
        }
        "bipartite_psi" => {
            let p: Vec<usize> = params(args, 2, name)?;
            bipartite_psi(p[0], p[1])
        }
        "bipartite_aut" => {
            let p: Vec<usize> = params(args, 3, name)?;
            bipartite_automorphism(p[0], p[1], p[2])
        }
        "bipartite_theta" => bipartite_theta(params(args, 1, name)?[0]),
        _ => Err(Error::InvalidInput(format!("unknown construction {name:?}; known: {CONSTRUCTION_NAMES}"))),
    }
}

/// A map argument is a path to a map file when it exists, else a construction name.
pub fn load_map(arg: &str, tol: &ToleranceProfile) -> Result<StarMap> {
    let p = Path::new(arg);
    if p.is_file() {
        read_json::<MapDescription>(p)?.to_map(tol)
    } else {
        named_construction(arg)
    }
}
