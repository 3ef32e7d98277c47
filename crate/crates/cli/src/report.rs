//! Machine-readable reports and their exit codes.

use effint::error::Verdict;
use effint::family::FamilyKind;
use effint::measure::Mass;
use effint::system::{Condition, EffectiveSystem};
use effint::{Error, ExtReal, Real};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::to_config;

/// Version of the report layout.
pub const REPORT_VERSION: u32 = 1;

/// Numerical settings echoed in every report.
#[derive(Serialize, Clone, Debug, PartialEq)]
pub struct FlagsEcho {
    pub tol: f64,
    pub depth: u32,
    pub prefix_depth: usize,
    pub rel_tol: f64,
    pub seed: u64,
}

#[derive(Serialize, Clone, Debug, PartialEq)]
pub struct ConditionOut {
    pub name: String,
    pub verdict: &'static str,
    pub detail: String,
}

/// One expected-versus-observed comparison.
#[derive(Serialize, Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub observed: String,
    pub pass: bool,
}

impl Check {
    pub fn new(name: &str, expected: impl ToString, observed: impl ToString) -> Check {
        let (expected, observed) = (expected.to_string(), observed.to_string());
        Check { name: name.to_string(), pass: expected == observed, expected, observed }
    }

    /// A check decided by `pass` rather than by string equality.
    pub fn judged(name: &str, expected: impl ToString, observed: impl ToString, pass: bool) -> Check {
        Check { name: name.to_string(), expected: expected.to_string(), observed: observed.to_string(), pass }
    }
}

/// Overall outcome, which alone fixes the exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    True,
    False,
    Undecidable,
    Error,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::True => "true",
            Outcome::False => "false",
            Outcome::Undecidable => "undecidable",
            Outcome::Error => "error",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::True => 0,
            Outcome::False => 1,
            Outcome::Undecidable => 2,
            Outcome::Error => 3,
        }
    }

    pub fn from_verdict(v: &Verdict) -> Outcome {
        match v {
            Verdict::True => Outcome::True,
            Verdict::False => Outcome::False,
            Verdict::Undecidable(_) => Outcome::Undecidable,
        }
    }

    /// Input errors are errors, undecidability stays undecidable, and any
    /// other library error is a negative answer.
    pub fn from_error(e: &Error) -> Outcome {
        match e {
            Error::InvalidInput(_) | Error::StateSpaceMismatch(..) | Error::SpeedMismatch => Outcome::Error,
            e if e.is_undecidable() => Outcome::Undecidable,
            _ => Outcome::False,
        }
    }

    /// All checks pass: true; otherwise false.
    pub fn from_checks(checks: &[Check]) -> Outcome {
        if checks.iter().all(|c| c.pass) {
            Outcome::True
        } else {
            Outcome::False
        }
    }
}

#[derive(Serialize, Clone, Debug)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub inputs: Vec<String>,
    pub flags: FlagsEcho,
    pub verdict: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub conditions: Vec<ConditionOut>,
    pub results: Value,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
    #[serde(skip)]
    pub outcome: Outcome,
}

impl Report {
    pub fn new(command: &str, inputs: Vec<String>, flags: FlagsEcho, outcome: Outcome) -> Report {
        Report {
            schema_version: REPORT_VERSION,
            command: command.to_string(),
            inputs,
            flags,
            verdict: outcome.name(),
            error: None,
            conditions: Vec::new(),
            results: json!({}),
            checks: Vec::new(),
            timing_ms: None,
            outcome,
        }
    }

    pub fn set_outcome(&mut self, outcome: Outcome) {
        self.outcome = outcome;
        self.verdict = outcome.name();
    }

    pub fn exit_code(&self) -> i32 {
        self.outcome.exit_code()
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

pub fn verdict_name(v: &Verdict) -> &'static str {
    Outcome::from_verdict(v).name()
}

pub fn conditions(conds: &[Condition]) -> Vec<ConditionOut> {
    conds
        .iter()
        .map(|c| {
            let detail = match &c.verdict {
                Verdict::Undecidable(why) if !why.is_empty() => format!("{} ({why})", c.detail),
                _ => c.detail.clone(),
            };
            ConditionOut { name: c.name.clone(), verdict: verdict_name(&c.verdict), detail }
        })
        .collect()
}

/// A system as a display line, a per-entry summary and a reusable config.
pub fn system_json(s: &EffectiveSystem) -> Value {
    let summary: Vec<Value> = (0..s.entries.len()).map(|e| json!({ "family": s.entries[e].to_string(), "scale": s.scale_label(e) })).collect();
    json!({
        "display": s.to_string(),
        "entries": summary,
        "config": to_config(s),
    })
}

/// The entries of a system as `(family, scale label)` pairs.
pub fn entry_summary(s: &EffectiveSystem) -> String {
    let parts: Vec<String> = (0..s.entries.len())
        .map(|e| match &s.entries[e].kind {
            FamilyKind::Explicit(m) if m.len() == 1 => format!("({}, {})", m[0], s.scale_label(e)),
            _ => format!("({}, {})", s.entries[e], s.scale_label(e)),
        })
        .collect();
    format!("{{{}}}", parts.join(", "))
}

pub fn real_json(r: &Real) -> Value {
    match r {
        Real::Exact(_) => Value::String(r.to_string()),
        Real::Float(x) => json!(x),
    }
}

pub fn ext_json(x: &ExtReal) -> Value {
    match x {
        ExtReal::Finite(r) => real_json(r),
        _ => Value::String(x.to_string()),
    }
}

pub fn mass_json(m: &Mass) -> Value {
    json!({ "value": ext_json(&m.value), "err": m.err })
}
