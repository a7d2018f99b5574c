//! Suite reports: one record per check, serialized without timestamps so
//! identical runs produce identical bytes.

use std::path::Path;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    Indeterminate,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    pub name: String,
    /// Citation into the source text, or "plumbing" for artifact checks.
    pub anchor: String,
    pub value: f64,
    /// Bound or target the value is compared against.
    pub target: f64,
    /// Signed slack in the comparison (positive = comfortable pass).
    pub margin: f64,
    pub status: Status,
    pub details: String,
}

impl CheckRecord {
    /// A check that passes iff `value <= target`.
    pub fn le(name: &str, anchor: &str, value: f64, target: f64, details: String) -> Self {
        CheckRecord {
            name: name.to_string(),
            anchor: anchor.to_string(),
            value,
            target,
            margin: target - value,
            status: if value <= target { Status::Pass } else { Status::Fail },
            details,
        }
    }

    /// A check that passes iff `value >= target`.
    pub fn ge(name: &str, anchor: &str, value: f64, target: f64, details: String) -> Self {
        CheckRecord {
            name: name.to_string(),
            anchor: anchor.to_string(),
            value,
            target,
            margin: value - target,
            status: if value >= target { Status::Pass } else { Status::Fail },
            details,
        }
    }

    /// An error surfaced as a failed check instead of a crash.
    pub fn error(name: &str, anchor: &str, err: impl std::fmt::Display) -> Self {
        CheckRecord {
            name: name.to_string(),
            anchor: anchor.to_string(),
            value: f64::NAN,
            target: f64::NAN,
            margin: f64::NAN,
            status: Status::Fail,
            details: format!("error: {err}"),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Environment {
    pub package: &'static str,
    pub version: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub environment: Environment,
    pub checks: Vec<CheckRecord>,
    pub n_pass: usize,
    pub n_fail: usize,
    pub n_indeterminate: usize,
}

impl SuiteReport {
    pub fn new(suite: &str, seed: u64, checks: Vec<CheckRecord>) -> Self {
        let n_pass = checks.iter().filter(|c| c.status == Status::Pass).count();
        let n_fail = checks.iter().filter(|c| c.status == Status::Fail).count();
        let n_indeterminate = checks
            .iter()
            .filter(|c| c.status == Status::Indeterminate)
            .count();
        SuiteReport {
            suite: suite.to_string(),
            seed,
            environment: Environment {
                package: env!("CARGO_PKG_NAME"),
                version: env!("CARGO_PKG_VERSION"),
            },
            checks,
            n_pass,
            n_fail,
            n_indeterminate,
        }
    }

    /// 0 iff no check failed (indeterminate does not fail a run).
    pub fn exit_code(&self) -> i32 {
        if self.n_fail == 0 {
            0
        } else {
            1
        }
    }

    pub fn write(&self, out_dir: &Path) -> anyhow::Result<()> {
        std::fs::create_dir_all(out_dir)?;
        let path = out_dir.join("report.json");
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}
