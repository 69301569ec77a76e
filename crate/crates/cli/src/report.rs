//! Report assembly and rendering.

use flatcert::report::{FlatnessReport, Verdict, Violation};
use flatcert::symexpr::Point;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Success,
    Fail,
    Undecided,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Success => 0,
            Status::Fail => 1,
            Status::Undecided => 2,
        }
    }

    pub fn of_verdict(v: Verdict) -> Status {
        match v {
            Verdict::FlatProven | Verdict::FlatNumeric => Status::Success,
            Verdict::NotFlat => Status::Fail,
            Verdict::Undecided => Status::Undecided,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConfigBlock {
    pub seed: u64,
    pub tolerance: f64,
    pub samples: usize,
}

/// What a command computed, before rendering.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub status: Status,
    pub result: Value,
    pub lines: Vec<String>,
    pub transcript: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

impl Outcome {
    pub fn new(status: Status, result: Value, lines: Vec<String>) -> Outcome {
        Outcome { status, result, lines, transcript: Vec::new(), warnings: Vec::new() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TranscriptEntry {
    pub name: String,
    pub value: String,
}

/// Structured report: one top-level object.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub input_digest: String,
    pub config: ConfigBlock,
    pub status: &'static str,
    pub result: Value,
    pub transcript: Vec<TranscriptEntry>,
    pub warnings: Vec<String>,
    pub timing_ms: f64,
}

pub fn digest(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

pub fn status_name(s: Status) -> &'static str {
    match s {
        Status::Success => "success",
        Status::Fail => "fail",
        Status::Undecided => "undecided",
    }
}

pub fn point_json(p: &Point) -> Value {
    Value::from(p.exact.iter().map(|q| q.to_string()).collect::<Vec<_>>())
}

pub fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::FlatProven => "FlatProven",
        Verdict::FlatNumeric => "FlatNumeric",
        Verdict::NotFlat => "NotFlat",
        Verdict::Undecided => "Undecided",
    }
}

fn violation_json(v: &Violation) -> Value {
    json!({
        "slot": v.slot,
        "expr": v.expr,
        "witness": point_json(&v.witness),
        "value": v.value,
        "magnitude": v.magnitude,
    })
}

/// Outcome of a flatness certifier.
pub fn flatness_outcome(rep: FlatnessReport) -> Outcome {
    let result = json!({
        "verdict": verdict_name(rep.verdict),
        "residuals_checked": rep.residuals_checked,
        "violations": rep.violations.iter().map(violation_json).collect::<Vec<_>>(),
    });
    let mut lines = vec![format!("verdict: {} ({} residuals checked)", rep.verdict, rep.residuals_checked)];
    for v in rep.violations.iter().take(5) {
        lines.push(format!("  {} = {} at {}", v.slot, v.value, v.witness));
    }
    if rep.violations.len() > 5 {
        lines.push(format!("  ... {} more", rep.violations.len() - 5));
    }
    Outcome {
        status: Status::of_verdict(rep.verdict),
        result,
        lines,
        transcript: rep.transcript,
        warnings: rep.warnings,
    }
}

pub fn render_text(report: &Report, lines: &[String]) -> String {
    let mut out = format!("{} [{}]\n", report.command, report.status);
    for l in lines {
        out.push_str(l);
        out.push('\n');
    }
    for t in &report.transcript {
        out.push_str(&format!("  {} := {}\n", t.name, t.value));
    }
    for w in &report.warnings {
        out.push_str(&format!("warning: {w}\n"));
    }
    out
}
