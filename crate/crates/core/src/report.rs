//! JSON reports written by the command-line front-end, and the exit codes
//! derived from them. Field order is fixed by declaration order, rationals
//! are `{"num","den"}` pairs, and floats are rounded to 6 decimals, so equal
//! inputs give byte-identical reports.

use serde::{Deserialize, Serialize};

use crate::adversary::{PolicyRow, ViolationWitness};
use crate::models::lehmann_rabin::{InvariantReport, RingEstimate, ScenarioOutcome};
use crate::rational::{serde_rational, Rational, RationalRepr};
use crate::verify::{ChainLink, RecurrenceSpec, TimeBoundStatement};

/// Every checked statement holds.
pub const EXIT_HOLDS: i32 = 0;
/// Some statement does not hold (or the run failed for another reason).
pub const EXIT_FAILS: i32 = 1;
/// A node or state budget was exhausted; the report is partial.
pub const EXIT_BUDGET: i32 = 2;
/// A simulated adversary broke the Unit-Time condition.
pub const EXIT_VIOLATION: i32 = 3;
/// The statements do not form a chain.
pub const EXIT_BROKEN_CHAIN: i32 = 4;
/// Invalid invocation or scenario file.
pub const EXIT_USAGE: i32 = 64;

/// How time is modelled when checking a statement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Semantics {
    /// Exact game solving over every round-based adversary.
    #[default]
    Round,
    /// Monte Carlo simulation of named adversaries with every run checked
    /// for Unit-Time violations.
    Deadline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
    /// The probability threshold is 0, so nothing needed checking.
    Vacuous,
}

impl Verdict {
    pub fn from_bool(holds: bool) -> Self {
        if holds {
            Verdict::Holds
        } else {
            Verdict::Fails
        }
    }

    pub fn is_ok(self) -> bool {
        self != Verdict::Fails
    }
}

/// Why a run stopped early.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    /// `budget`, `unit-time-violation`, `broken-chain` or `error`.
    pub kind: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Box<ViolationWitness>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub junction: Option<usize>,
}

impl ErrorReport {
    pub fn new(kind: &str, message: impl Into<String>) -> Self {
        ErrorReport {
            kind: kind.to_string(),
            message: message.into(),
            witness: None,
            junction: None,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind.as_str() {
            "budget" => EXIT_BUDGET,
            "unit-time-violation" => EXIT_VIOLATION,
            "broken-chain" => EXIT_BROKEN_CHAIN,
            _ => EXIT_FAILS,
        }
    }
}

/// Monte Carlo result for one adversary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdversaryEstimate {
    pub holds: bool,
    #[serde(flatten)]
    pub estimate: RingEstimate,
}

/// Result for one time-bound statement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatementReport {
    pub statement: TimeBoundStatement,
    pub semantics: Semantics,
    #[serde(with = "serde_rational")]
    pub horizon: Rational,
    pub verdict: Verdict,
    /// Number of start states quantified over.
    pub starts: usize,
    /// Exact minimum over adversaries and starts (round semantics).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<RationalRepr>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    /// Hex encoding of a start state attaining the minimum.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_start: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_policy: Option<Vec<PolicyRow>>,
    /// Per-adversary estimates (deadline semantics).
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub estimates: Vec<AdversaryEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub name: String,
    pub model: String,
    pub n: usize,
    pub semantics: Semantics,
    pub seed: u64,
    pub statements: Vec<StatementReport>,
    pub scenarios: Vec<ScenarioOutcome>,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorReport>,
}

impl VerifyReport {
    pub fn exit_code(&self) -> i32 {
        match &self.error {
            Some(e) => e.exit_code(),
            None if self.holds => EXIT_HOLDS,
            None => EXIT_FAILS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectedTime {
    pub recurrence: RecurrenceSpec,
    /// Expected time of the loop between entry and exit.
    pub internal: RationalRepr,
    /// Entry + loop + exit.
    pub total: RationalRepr,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainReport {
    pub name: String,
    pub links: Vec<ChainLink>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub composed: Option<TimeBoundStatement>,
    /// Present for chains of at least three statements whose loop can
    /// succeed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_time: Option<ExpectedTime>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorReport>,
}

impl ChainReport {
    pub fn exit_code(&self) -> i32 {
        self.error.as_ref().map_or(EXIT_HOLDS, ErrorReport::exit_code)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantsReport {
    #[serde(flatten)]
    pub report: InvariantReport,
    /// Hand-made states added to the explored set.
    pub injected: usize,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorReport>,
}

impl InvariantsReport {
    pub fn exit_code(&self) -> i32 {
        match &self.error {
            Some(e) => e.exit_code(),
            None if self.holds => EXIT_HOLDS,
            None => EXIT_FAILS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioEntry {
    pub id: String,
    pub summary: String,
    pub horizon: u32,
    #[serde(with = "serde_rational")]
    pub floor: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioListReport {
    pub n: usize,
    pub scenarios: Vec<ScenarioEntry>,
    /// Present when the scenarios were run.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub outcomes: Vec<ScenarioOutcome>,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorReport>,
}

impl ScenarioListReport {
    pub fn exit_code(&self) -> i32 {
        match &self.error {
            Some(e) => e.exit_code(),
            None if self.holds => EXIT_HOLDS,
            None => EXIT_FAILS,
        }
    }
}

/// Stable pretty-printed JSON with a trailing newline.
pub fn to_json<T: Serialize>(report: &T) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("reports always serialize");
    text.push('\n');
    text
}
