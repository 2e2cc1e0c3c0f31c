//! Runs every acceptance criterion at its stated tolerance and prints one
//! line per criterion.

use afalg_cli::checks::{run, SuiteOptions, CHECKS};
use afalg_cli::report::Status;

#[test]
fn all_criteria() {
    let results = run(None, &SuiteOptions::default());
    assert_eq!(results.len(), CHECKS.len());
    for r in &results {
        let tag = match r.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Unknown => "UNKNOWN",
        };
        println!("{tag} {} measured={:e} tol={:e} {:.2}s {}", r.id, r.measured, r.tolerance, r.runtime_s, r.detail);
    }
    let total: f64 = results.iter().map(|r| r.runtime_s).sum();
    println!("suite runtime {total:.2}s (limit 60s)");
    assert!(total < 60.0, "suite took {total:.2}s");
    let failed: Vec<_> = results.iter().filter(|r| r.status != Status::Pass).map(|r| r.id.as_str()).collect();
    assert!(failed.is_empty(), "criteria not passing: {failed:?}");
}
