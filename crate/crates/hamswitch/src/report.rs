//! Machine-readable reports (JSON) and human-readable tables, with a fixed
//! 17-significant-digit float format for byte-stable CSV output.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io;
use std::path::Path;

/// How a check's threshold is meant: a statistical band, a one-sided bound,
/// or exact arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    TwoSidedThreeSigma,
    OneSidedThreeSigma,
    Exact,
    Structural,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckLine {
    pub label: String,
    pub estimate: f64,
    pub stderr: f64,
    pub threshold: f64,
    /// Slack left before the threshold; negative means the check failed.
    pub margin: f64,
    pub kind: CheckKind,
    pub pass: bool,
}

impl CheckLine {
    /// `|estimate - target| <= 3 stderr`.
    pub fn two_sided(label: impl Into<String>, estimate: f64, stderr: f64, target: f64) -> Self {
        let threshold = 3.0 * stderr;
        let gap = (estimate - target).abs();
        CheckLine {
            label: label.into(),
            estimate,
            stderr,
            threshold,
            margin: threshold - gap,
            kind: CheckKind::TwoSidedThreeSigma,
            pass: gap <= threshold,
        }
    }

    /// `estimate <= bound + 3 stderr`.
    pub fn one_sided(label: impl Into<String>, estimate: f64, stderr: f64, bound: f64) -> Self {
        let threshold = bound + 3.0 * stderr;
        CheckLine {
            label: label.into(),
            estimate,
            stderr,
            threshold,
            margin: threshold - estimate,
            kind: CheckKind::OneSidedThreeSigma,
            pass: estimate <= threshold,
        }
    }

    /// `|estimate - target| <= tolerance` with an exact oracle.
    pub fn exact(label: impl Into<String>, estimate: f64, target: f64, tolerance: f64) -> Self {
        let gap = (estimate - target).abs();
        CheckLine {
            label: label.into(),
            estimate,
            stderr: 0.0,
            threshold: tolerance,
            margin: tolerance - gap,
            kind: CheckKind::Exact,
            pass: gap <= tolerance,
        }
    }

    /// A yes/no structural property (monotonicity, bitwise equality).
    pub fn structural(label: impl Into<String>, pass: bool, margin: f64) -> Self {
        CheckLine {
            label: label.into(),
            estimate: if pass { 1.0 } else { 0.0 },
            stderr: 0.0,
            threshold: 1.0,
            margin,
            kind: CheckKind::Structural,
            pass,
        }
    }

    /// `|z| <= 3` between two estimates.
    pub fn z_test(label: impl Into<String>, z: f64) -> Self {
        CheckLine {
            label: label.into(),
            estimate: z,
            stderr: 1.0,
            threshold: 3.0,
            margin: 3.0 - z.abs(),
            kind: CheckKind::TwoSidedThreeSigma,
            pass: z.abs() <= 3.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    pub seed: u64,
    pub paths: u64,
    pub step: f64,
    pub checks: Vec<CheckLine>,
    pub pass: bool,
}

impl TestReport {
    pub fn new(name: impl Into<String>, seed: u64, paths: u64, step: f64) -> Self {
        TestReport {
            name: name.into(),
            seed,
            paths,
            step,
            checks: Vec::new(),
            pass: true,
        }
    }

    pub fn push(&mut self, check: CheckLine) {
        self.pass &= check.pass;
        self.checks.push(check);
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub suites: Vec<TestReport>,
    pub pass: bool,
    pub wall_secs: f64,
}

impl ValidationSummary {
    pub fn new(suites: Vec<TestReport>, wall_secs: f64) -> Self {
        let pass = suites.iter().all(|s| s.pass);
        ValidationSummary {
            suites,
            pass,
            wall_secs,
        }
    }
}

/// 17 significant digits; round-trips any f64.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn render_table(summary: &ValidationSummary) -> String {
    let mut out = String::new();
    for suite in &summary.suites {
        let _ = writeln!(
            out,
            "suite {:<14} [{}]  (seed {}, paths {}, step {})",
            suite.name,
            if suite.pass { "PASS" } else { "FAIL" },
            suite.seed,
            suite.paths,
            suite.step
        );
        for c in &suite.checks {
            let _ = writeln!(
                out,
                "  {:<52} {:>12.5e} +-{:>10.3e}  thr {:>10.3e}  margin {:>10.3e}  {}",
                c.label,
                c.estimate,
                c.stderr,
                c.threshold,
                c.margin,
                if c.pass { "ok" } else { "FAIL" }
            );
        }
    }
    let _ = writeln!(
        out,
        "overall: {} ({} suites, {:.1} s)",
        if summary.pass { "PASS" } else { "FAIL" },
        summary.suites.len(),
        summary.wall_secs
    );
    out
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    std::fs::write(path, text + "\n")
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut text = header.join(",");
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(path, text)
}
