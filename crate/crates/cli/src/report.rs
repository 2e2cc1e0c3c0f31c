use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: String,
    pub status: Status,
    /// NaN when the check errored; serialized as `null`.
    #[serde(deserialize_with = "nan_from_null")]
    pub measured: f64,
    pub tolerance: f64,
    pub runtime_s: f64,
    pub detail: String,
}

fn nan_from_null<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

impl CheckResult {
    /// Runs `f`, timing it; errors become failures carrying the message.
    pub fn timed(id: &str, tolerance: f64, f: impl FnOnce() -> afalg::Result<(Status, f64, String)>) -> Self {
        let start = Instant::now();
        let (status, measured, detail) = match f() {
            Ok(x) => x,
            Err(e) => (Status::Fail, f64::NAN, format!("error: {e}")),
        };
        Self { id: id.to_string(), status, measured, tolerance, runtime_s: start.elapsed().as_secs_f64(), detail }
    }

    /// Downgrades a pass to a failure when the runtime exceeds `budget_s`.
    pub fn with_budget(mut self, budget_s: f64) -> Self {
        if self.status == Status::Pass && self.runtime_s > budget_s {
            self.status = Status::Fail;
            self.detail = format!("{}; runtime {:.2}s over budget {budget_s}s", self.detail, self.runtime_s);
        }
        self
    }
}

pub fn pass_if(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub verdicts: Vec<CheckResult>,
    pub exit_code: i32,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub data: serde_json::Value,
}

impl Report {
    pub fn new(mut verdicts: Vec<CheckResult>, data: serde_json::Value) -> Self {
        verdicts.sort_by(|a, b| a.id.cmp(&b.id));
        let exit_code = exit_code(&verdicts);
        Self { verdicts, exit_code, data }
    }

    /// Zeroes runtimes so that reports from equal seeds compare equal.
    pub fn without_timings(mut self) -> Self {
        for v in &mut self.verdicts {
            v.runtime_s = 0.0;
        }
        self
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in &self.verdicts {
            let tag = match v.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Unknown => "UNKNOWN",
            };
            let _ = writeln!(
                out,
                "{tag:<7} {:<28} measured={:<12.6e} tol={:<8.1e} {:>7.3}s  {}",
                v.id, v.measured, v.tolerance, v.runtime_s, v.detail
            );
        }
        if !self.data.is_null() {
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&self.data).unwrap_or_default());
        }
        let _ = writeln!(out, "exit code {}", self.exit_code);
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// 0 when everything passes, 2 when only unknowns remain, 1 on any failure.
pub fn exit_code(v: &[CheckResult]) -> i32 {
    if v.iter().any(|c| c.status == Status::Fail) {
        1
    } else if v.iter().any(|c| c.status == Status::Unknown) {
        2
    } else {
        0
    }
}
