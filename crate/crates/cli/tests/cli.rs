use std::path::Path;
use std::process::{Command, Output};

use afalg::homkit::MapDescription;
use afalg::ToleranceProfile;
use afalg_cli::files::{load_map, named_construction, read_json, write_json, ClassPayload, MapSpec, StageSpec, SystemDescription};
use afalg_cli::report::Report;
use afalg::semiring::SemiringVector;

fn afalg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_afalg")).args(args).output().expect("binary runs")
}

fn json_report(args: &[&str]) -> (Report, i32) {
    let mut full = vec!["--format", "json", "--no-timings"];
    full.extend_from_slice(args);
    let out = afalg(&full);
    let report: Report = serde_json::from_slice(&out.stdout).expect("json report");
    (report, out.status.code().unwrap())
}

fn t2_system(coeffs: [u64; 3], stages: usize) -> SystemDescription {
    SystemDescription {
        template: "T:2".into(),
        stages: vec![StageSpec { summands: 1 }; stages],
        maps: vec![MapSpec::Class { class: ClassPayload::Table(SemiringVector { basis: "T2".into(), coeffs: coeffs.to_vec() }) }; stages - 1],
    }
}

fn write_system(dir: &Path, name: &str, s: &SystemDescription) -> String {
    let p = dir.join(name);
    write_json(&p, s).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn system_description_roundtrips() {
    let dir = tempfile::tempdir().unwrap();
    let s = t2_system([1, 1, 0], 4);
    let p = dir.path().join("s.json");
    write_json(&p, &s).unwrap();
    assert_eq!(read_json::<SystemDescription>(&p).unwrap(), s);
}

#[test]
fn system_description_validation() {
    let mut s = t2_system([1, 0, 0], 3);
    s.maps.pop();
    assert!(s.validate().is_err());
    let mut s = t2_system([1, 0, 0], 3);
    s.stages[1].summands = 2;
    assert!(s.validate().is_err());
    let mut s = t2_system([1, 0, 0], 3);
    s.template = "M:3".into();
    assert!(s.build(&ToleranceProfile::default()).is_err());
}

#[test]
fn map_description_roundtrips_through_file() {
    let tol = ToleranceProfile::default();
    let dir = tempfile::tempdir().unwrap();
    let m = named_construction("phi_alpha:0.6").unwrap();
    let p = dir.path().join("m.json");
    write_json(&p, &MapDescription::from_map(&m)).unwrap();
    let back = load_map(p.to_str().unwrap(), &tol).unwrap();
    assert!(back.image_residual(&m.images()) < 1e-12);
}

#[test]
fn unknown_construction_is_rejected() {
    assert!(named_construction("nonsense:1").is_err());
    assert!(named_construction("phi_t:").is_err());
    assert!(named_construction("bipartite_phi:3").is_err());
}

#[test]
fn equiv_exit_codes() {
    let (r, code) = json_report(&["equiv", "phi_t:0.3", "phi_t:0.3"]);
    assert_eq!((code, r.exit_code), (0, 0));
    let (r, code) = json_report(&["equiv", "phi_t:0.3", "phi_t:0.6"]);
    assert_eq!((code, r.exit_code), (1, 1));
    let (r, code) = json_report(&["equiv", "nonsense", "tau"]);
    assert_eq!(code, 1);
    assert!(r.verdicts[0].detail.contains("unknown construction"));
}

#[test]
fn json_output_is_stable_without_timings() {
    let a = afalg(&["--format", "json", "--no-timings", "--seed", "3", "verify-paper", "--section", "6"]);
    let b = afalg(&["--format", "json", "--no-timings", "--seed", "3", "verify-paper", "--section", "6"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.status.code(), Some(0));
}

#[test]
fn verify_section_selection() {
    let (r, code) = json_report(&["verify-paper", "--section", "pend"]);
    assert_eq!(code, 0);
    assert_eq!(r.verdicts.len(), 1);
    assert_eq!(r.verdicts[0].id, "01-pend-counts");
    let (_, code) = json_report(&["verify-paper", "--section", "no-such-topic"]);
    assert_eq!(code, 1);
}

#[test]
fn enumerate_reports_counts() {
    let (r, code) = json_report(&["enumerate", "--r", "5"]);
    assert_eq!(code, 0);
    let text = serde_json::to_string(&r.data).unwrap();
    assert!(text.contains("456"), "{text}");
}

#[test]
fn compose_writes_map_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.json");
    let (_, code) = json_report(&["compose", "phi_t:0.3", "phi_t:0.5", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let m = load_map(out.to_str().unwrap(), &ToleranceProfile::default()).unwrap();
    assert!(m.homomorphism_residual() < 1e-9);
}

#[test]
fn dimmod_compares_stationary_systems() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_system(dir.path(), "a.json", &t2_system([2, 0, 0], 3));
    let b = write_system(dir.path(), "b.json", &t2_system([1, 1, 0], 3));
    let c = write_system(dir.path(), "c.json", &t2_system([3, 0, 0], 2));
    let (_, code) = json_report(&["dimmod", &a, "--against", &a]);
    assert_eq!(code, 0);
    let (r, code) = json_report(&["dimmod", &a, "--against", &c]);
    assert_eq!(code, 1);
    assert!(r.data["verdict"]["NotIso"].is_string());
    let (r, _) = json_report(&["dimmod", &b]);
    assert!(r.data["system"]["invariants"]["eventual_rank"].as_u64().is_some());
}

#[test]
fn dimmod_on_v_systems_is_unknown() {
    let dir = tempfile::tempdir().unwrap();
    let s = SystemDescription {
        template: "V".into(),
        stages: vec![StageSpec { summands: 1 }; 3],
        maps: vec![MapSpec::Matrices { map: MapDescription::from_map(&named_construction("phi_t:0.4").unwrap()) }; 2],
    };
    let p = write_system(dir.path(), "v.json", &s);
    let (r, code) = json_report(&["dimmod", &p, "--against", &p]);
    assert_eq!(code, 2);
    assert!(r.data["system"]["class"].is_string());
}

#[test]
fn bad_tolerance_is_rejected() {
    let out = afalg(&["--tol=-1", "enumerate"]);
    assert_eq!(out.status.code(), Some(1));
}
