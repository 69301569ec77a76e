//! Verdicts and residual bookkeeping shared by the flatness certifiers.

use std::fmt;

use crate::scalar::rational_to_f64;
use crate::symexpr::{is_zero, Chart, Expr, ExprError, Point, SampleConfig, ZeroVerdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Every residual is canonically zero.
    FlatProven,
    /// Every residual vanishes, some only at the sample points.
    FlatNumeric,
    NotFlat,
    Undecided,
}

impl Verdict {
    pub fn is_flat(self) -> bool {
        matches!(self, Verdict::FlatProven | Verdict::FlatNumeric)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::FlatProven => "flat (proven)",
            Verdict::FlatNumeric => "flat (numeric)",
            Verdict::NotFlat => "not flat",
            Verdict::Undecided => "undecided",
        })
    }
}

/// A residual that failed to vanish.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub slot: String,
    pub expr: String,
    pub witness: Point,
    /// Exact value when available, else the float value.
    pub value: String,
    pub magnitude: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlatnessReport {
    pub verdict: Verdict,
    pub violations: Vec<Violation>,
    pub transcript: Vec<(String, String)>,
    pub warnings: Vec<String>,
    pub residuals_checked: usize,
}

impl FlatnessReport {
    pub fn undecided(reason: impl Into<String>) -> FlatnessReport {
        FlatnessReport {
            verdict: Verdict::Undecided,
            violations: Vec::new(),
            transcript: Vec::new(),
            warnings: vec![reason.into()],
            residuals_checked: 0,
        }
    }
}

/// Zero-tests named residuals and accumulates a verdict.
pub struct ResidualCheck<'a> {
    chart: &'a Chart,
    config: &'a SampleConfig,
    all_proven: bool,
    violations: Vec<Violation>,
    checked: usize,
}

impl<'a> ResidualCheck<'a> {
    pub fn new(chart: &'a Chart, config: &'a SampleConfig) -> Self {
        ResidualCheck { chart, config, all_proven: true, violations: Vec::new(), checked: 0 }
    }

    pub fn check(&mut self, slot: impl Into<String>, e: &Expr) -> Result<(), ExprError> {
        self.checked += 1;
        match is_zero(e, self.chart, self.config)? {
            ZeroVerdict::ProvenZero => {}
            ZeroVerdict::NumericallyZero { .. } => self.all_proven = false,
            ZeroVerdict::ProvenNonZero { witness, value } => self.violations.push(Violation {
                slot: slot.into(),
                expr: e.to_string(),
                witness,
                magnitude: rational_to_f64(&value).map_or(f64::INFINITY, f64::abs),
                value: value.to_string(),
            }),
            ZeroVerdict::NumericallyNonZero { witness, value } => {
                self.all_proven = false;
                self.violations.push(Violation {
                    slot: slot.into(),
                    expr: e.to_string(),
                    witness,
                    magnitude: value.abs(),
                    value: format!("{value:e}"),
                })
            }
        }
        Ok(())
    }

    pub fn verdict(&self) -> Verdict {
        if !self.violations.is_empty() {
            Verdict::NotFlat
        } else if self.all_proven {
            Verdict::FlatProven
        } else {
            Verdict::FlatNumeric
        }
    }

    /// Final report with violations sorted by decreasing magnitude.
    pub fn finish(mut self, transcript: Vec<(String, String)>, warnings: Vec<String>) -> FlatnessReport {
        let verdict = self.verdict();
        self.violations.sort_by(|a, b| b.magnitude.partial_cmp(&a.magnitude).unwrap_or(std::cmp::Ordering::Equal));
        FlatnessReport { verdict, violations: self.violations, transcript, warnings, residuals_checked: self.checked }
    }
}
