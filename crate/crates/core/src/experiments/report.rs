use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ExperimentSpec;
use crate::stats::ScalingFitResult;

pub const REPORT_SCHEMA: &str = "shl-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Estimate {
    Real(f64),
    Complex { re: f64, im: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Interval {
    Real([f64; 2]),
    Complex { re: [f64; 2], im: [f64; 2] },
}

impl Interval {
    pub fn around(estimate: Estimate, stderr: Estimate) -> Self {
        let ci = |m: f64, s: f64| [m - 1.96 * s, m + 1.96 * s];
        match (estimate, stderr) {
            (Estimate::Complex { re, im }, Estimate::Complex { re: sr, im: si }) => Interval::Complex {
                re: ci(re, sr),
                im: ci(im, si),
            },
            (Estimate::Real(m), Estimate::Real(s)) => Interval::Real(ci(m, s)),
            _ => panic!("estimate and stderr shapes differ"),
        }
    }
}

/// Acceptance rule of one check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Rule {
    /// `|estimate - target| <= k · stderr`.
    WithinStderr { k: f64 },
    /// `|estimate - target| <= tolerance · |target|`.
    Relative { tolerance: f64 },
    Between { lo: f64, hi: f64 },
    Below { bound: f64 },
    Above { bound: f64 },
    /// Reported only.
    Diagnostic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub estimate: f64,
    pub stderr: f64,
    pub target: Option<f64>,
    pub rule: Rule,
    /// `None` for diagnostics.
    pub passed: Option<bool>,
}

impl Check {
    pub fn new(name: impl Into<String>, estimate: f64, stderr: f64, target: Option<f64>, rule: Rule) -> Self {
        let passed = match rule {
            Rule::WithinStderr { k } => Some((estimate - target.unwrap_or(0.0)).abs() <= k * stderr),
            Rule::Relative { tolerance } => {
                let t = target.unwrap_or(0.0);
                Some((estimate - t).abs() <= tolerance * t.abs())
            }
            Rule::Between { lo, hi } => Some(estimate >= lo && estimate <= hi),
            Rule::Below { bound } => Some(estimate < bound),
            Rule::Above { bound } => Some(estimate > bound),
            Rule::Diagnostic => None,
        };
        Self {
            name: name.into(),
            estimate,
            stderr,
            target,
            rule,
            passed,
        }
    }

    pub fn diagnostic(name: impl Into<String>, estimate: f64, stderr: f64, target: Option<f64>) -> Self {
        Self::new(name, estimate, stderr, target, Rule::Diagnostic)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Diagnostic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub version: String,
    pub name: String,
    pub estimate: Estimate,
    pub stderr: Estimate,
    pub replicas: usize,
    pub ci95: Interval,
    pub target: Option<Estimate>,
    pub verdict: Verdict,
    /// Wall time, kept out of the JSON so that reports are reproducible byte
    /// for byte; the CLI writes it to the manifest.
    #[serde(skip)]
    pub runtime_seconds: f64,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fit: Option<ScalingFitResult>,
    pub diagnostics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub spec: ExperimentSpec,
}

impl ExperimentReport {
    pub(crate) fn assemble(
        spec: &ExperimentSpec,
        estimate: Estimate,
        stderr: Estimate,
        target: Option<Estimate>,
        checks: Vec<Check>,
    ) -> Self {
        let graded: Vec<bool> = checks.iter().filter_map(|c| c.passed).collect();
        let verdict = if graded.is_empty() {
            Verdict::Diagnostic
        } else if graded.iter().all(|&p| p) {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Self {
            schema: REPORT_SCHEMA.to_string(),
            version: crate::VERSION.to_string(),
            name: spec.name.clone(),
            estimate,
            stderr,
            replicas: spec.replicas,
            ci95: Interval::around(estimate, stderr),
            target,
            verdict,
            runtime_seconds: 0.0,
            checks,
            fit: None,
            diagnostics: BTreeMap::new(),
            notes: Vec::new(),
            spec: spec.clone(),
        }
    }

    /// Report built around one headline check.
    pub(crate) fn from_checks(spec: &ExperimentSpec, checks: Vec<Check>) -> Self {
        let head = checks.first().expect("at least one check");
        let target = head.target.map(Estimate::Real);
        Self::assemble(
            spec,
            Estimate::Real(head.estimate),
            Estimate::Real(head.stderr),
            target,
            checks,
        )
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Canonical JSON: pretty printed, keys in declaration order.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules_grade_as_documented() {
        assert_eq!(Check::new("a", 1.1, 0.05, Some(1.0), Rule::WithinStderr { k: 3.0 }).passed, Some(true));
        assert_eq!(Check::new("a", 1.2, 0.05, Some(1.0), Rule::WithinStderr { k: 3.0 }).passed, Some(false));
        assert_eq!(Check::new("b", 13.0, 0.0, Some(40.0 / 3.0), Rule::Relative { tolerance: 0.05 }).passed, Some(true));
        assert_eq!(Check::new("c", 1.5, 0.0, None, Rule::Between { lo: 1.35, hi: 1.65 }).passed, Some(true));
        assert_eq!(Check::new("d", 2.0, 0.0, None, Rule::Below { bound: 2.0 }).passed, Some(false));
        assert_eq!(Check::new("e", 0.96, 0.0, None, Rule::Above { bound: 0.95 }).passed, Some(true));
        assert_eq!(Check::diagnostic("f", 1.0, 0.0, None).passed, None);
    }

    #[test]
    fn verdict_and_json_round_trip() {
        let spec = ExperimentSpec::default_for("height-lln").unwrap();
        let checks = vec![
            Check::new("a", 1.0, 0.1, Some(1.0), Rule::WithinStderr { k: 3.0 }),
            Check::diagnostic("b", 2.0, 0.0, None),
        ];
        let r = ExperimentReport::from_checks(&spec, checks);
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.ci95, Interval::Real([1.0 - 0.196, 1.0 + 0.196]));
        let json = r.to_json();
        assert!(json.contains("\"schema\": \"shl-report/1\""));
        assert!(!json.contains("runtime_seconds"));
        assert_eq!(ExperimentReport::from_json(&json).unwrap(), r);
        let only_diag = ExperimentReport::from_checks(&spec, vec![Check::diagnostic("b", 2.0, 0.0, None)]);
        assert_eq!(only_diag.verdict, Verdict::Diagnostic);
    }
}
