//! Structured run reports.
//!
//! Everything that varies between otherwise identical runs lives in
//! [`Timing`], so two reports for the same config and seed are byte-identical
//! once that object is cleared.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::verify::CheckReport;

pub const REPORT_SCHEMA: &str = "cotlift-report/1";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub unix_time_seconds: u64,
    pub wall_time_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub library_version: String,
    /// Normalized config echo, without the output path.
    pub config: serde_json::Value,
    pub checks: Vec<CheckReport>,
    pub all_passed: bool,
    /// Set when the run stopped before its checks completed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub timing: Timing,
}

#[derive(Debug, thiserror::Error)]
#[error("cannot write report to {}: {source}", path.display())]
pub struct ReportError {
    pub path: PathBuf,
    #[source]
    pub source: std::io::Error,
}

impl Report {
    /// 0 when every check passed, 1 when one failed, 2 when the run errored.
    pub fn exit_code(&self) -> i32 {
        match (&self.error, self.all_passed) {
            (Some(_), _) => 2,
            (None, true) => 0,
            (None, false) => 1,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn without_timing(&self) -> Self {
        Self {
            timing: Timing::default(),
            ..self.clone()
        }
    }

    /// One line per check, then an overall line.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let tag = if c.passed() { "PASS" } else { "FAIL" };
            let _ = writeln!(
                out,
                "{tag} {:<17} max_residual={:.3e} tolerance={:.0e} points={} seed={}",
                c.check_name, c.max_residual, c.tolerance, c.points_sampled, c.seed
            );
            for part in &c.components {
                let _ = writeln!(
                    out,
                    "       {:<15} max_residual={:.3e}",
                    part.name, part.max_residual
                );
            }
            for note in &c.notes {
                let _ = writeln!(out, "     note: {note}");
            }
            if !c.passed() {
                if let Some(w) = c.witnesses.first() {
                    let _ = writeln!(out, "     worst at q={:?} p={:?}", w.q, w.p);
                }
            }
        }
        match &self.error {
            Some(e) => {
                let _ = writeln!(out, "error: {e}");
            }
            None => {
                let failed = self.checks.iter().filter(|c| !c.passed()).count();
                if failed == 0 {
                    let _ = writeln!(out, "all {} checks passed", self.checks.len());
                } else {
                    let _ = writeln!(out, "{failed} of {} checks failed", self.checks.len());
                }
            }
        }
        out
    }
}

pub fn emit_report(report: &Report, path: &Path) -> Result<(), ReportError> {
    std::fs::write(path, report.to_json()).map_err(|source| ReportError {
        path: path.to_path_buf(),
        source,
    })
}
