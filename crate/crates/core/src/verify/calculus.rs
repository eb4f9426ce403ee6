//! Time-bound statements `U →ᵗ_p U′` and the rules that combine them.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::schema;
use crate::predicate::PredSet;
use crate::rational::{serde_rational, Rational};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalculusError {
    #[error("schema {0} is not execution closed; composition is not sound for it")]
    CompositionForbidden(String),
    #[error("unknown adversary schema {0}")]
    UnknownSchema(String),
    #[error("statements use different schemas: {left} and {right}")]
    SchemaMismatch { left: String, right: String },
    #[error("broken chain at junction {junction}: {found} does not follow from {expected}")]
    ChainBroken {
        junction: usize,
        expected: String,
        found: String,
    },
    #[error("empty chain")]
    EmptyChain,
    #[error("recurrence diverges: retry probability is 1")]
    Divergent,
    #[error("invalid recurrence: {0}")]
    InvalidRecurrence(String),
}

impl CalculusError {
    /// Errors that mean the statements do not form a chain.
    pub fn is_chain_error(&self) -> bool {
        matches!(
            self,
            CalculusError::CompositionForbidden(_)
                | CalculusError::SchemaMismatch { .. }
                | CalculusError::ChainBroken { .. }
                | CalculusError::EmptyChain
                | CalculusError::UnknownSchema(_)
        )
    }
}

/// From every state of `source`, under every adversary of `schema`, a state
/// of `target` is reached within `time` with probability at least `prob`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeBoundStatement {
    pub source: PredSet,
    pub target: PredSet,
    #[serde(with = "serde_rational")]
    pub time: Rational,
    #[serde(with = "serde_rational")]
    pub prob: Rational,
    pub schema: String,
}

impl TimeBoundStatement {
    pub fn new(source: PredSet, target: PredSet, time: Rational, prob: Rational, schema: &str) -> Self {
        TimeBoundStatement {
            source,
            target,
            time,
            prob,
            schema: schema.to_string(),
        }
    }
}

impl fmt::Display for TimeBoundStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} -[{}]-> {} with p >= {} ({})",
            self.source, self.time, self.target, self.prob, self.schema
        )
    }
}

/// Sequential composition: `(U →ᵗ¹_p₁ U′) · (U′ →ᵗ²_p₂ U″) = U →ᵗ¹⁺ᵗ²_p₁p₂ U″`,
/// sound only for execution-closed schemas.
pub fn compose(
    s1: &TimeBoundStatement,
    s2: &TimeBoundStatement,
) -> Result<TimeBoundStatement, CalculusError> {
    if s1.schema != s2.schema {
        return Err(CalculusError::SchemaMismatch {
            left: s1.schema.clone(),
            right: s2.schema.clone(),
        });
    }
    let sch = schema(&s1.schema).ok_or_else(|| CalculusError::UnknownSchema(s1.schema.clone()))?;
    if !sch.execution_closed {
        return Err(CalculusError::CompositionForbidden(s1.schema.clone()));
    }
    if s1.target != s2.source {
        return Err(CalculusError::ChainBroken {
            junction: 1,
            expected: s1.target.to_string(),
            found: s2.source.to_string(),
        });
    }
    Ok(TimeBoundStatement {
        source: s1.source.clone(),
        target: s2.target.clone(),
        time: &s1.time + &s2.time,
        prob: &s1.prob * &s2.prob,
        schema: s1.schema.clone(),
    })
}

/// `(U ∪ U″) →ᵗ_p (U′ ∪ U″)`.
pub fn union_lift(s: &TimeBoundStatement, extra: &PredSet) -> TimeBoundStatement {
    TimeBoundStatement {
        source: s.source.union(extra),
        target: s.target.union(extra),
        time: s.time.clone(),
        prob: s.prob.clone(),
        schema: s.schema.clone(),
    }
}

/// One link of an assembled chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainLink {
    pub original: TimeBoundStatement,
    /// Set added on both sides to make the link fit; empty when none.
    pub lift: PredSet,
    pub lifted: TimeBoundStatement,
    /// Composition of all links up to and including this one.
    pub composed: TimeBoundStatement,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainResult {
    pub links: Vec<ChainLink>,
    pub composed: TimeBoundStatement,
}

/// Composes a list of statements, union-lifting each one by whatever the
/// previous target has beyond its source. A link whose source is not
/// contained in the previous target breaks the chain.
pub fn chain(stmts: &[TimeBoundStatement]) -> Result<ChainResult, CalculusError> {
    let first = stmts.first().ok_or(CalculusError::EmptyChain)?;
    let mut acc = first.clone();
    let mut links = vec![ChainLink {
        original: first.clone(),
        lift: PredSet::empty(),
        lifted: first.clone(),
        composed: first.clone(),
    }];
    for (k, s) in stmts.iter().enumerate().skip(1) {
        let broken = || CalculusError::ChainBroken {
            junction: k,
            expected: acc.target.to_string(),
            found: s.source.to_string(),
        };
        if !s.source.is_subset(&acc.target) {
            return Err(broken());
        }
        let lift = acc.target.difference(&s.source).ok_or_else(broken)?;
        let lifted = union_lift(s, &lift);
        acc = compose(&acc, &lifted).map_err(|e| match e {
            CalculusError::ChainBroken { .. } => broken(),
            other => other,
        })?;
        links.push(ChainLink {
            original: s.clone(),
            lift,
            lifted,
            composed: acc.clone(),
        });
    }
    Ok(ChainResult {
        links,
        composed: acc,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Success,
    Retry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    #[serde(with = "serde_rational")]
    pub prob: Rational,
    #[serde(with = "serde_rational")]
    pub cost: Rational,
    pub outcome: Outcome,
}

impl Branch {
    pub fn new(prob: Rational, cost: Rational, outcome: Outcome) -> Self {
        Branch { prob, cost, outcome }
    }
}

/// `V = Σ pₖ (tₖ + [retry] V)`, wrapped by fixed entry and exit costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceSpec {
    pub branches: Vec<Branch>,
    #[serde(with = "serde_rational")]
    pub entry: Rational,
    #[serde(with = "serde_rational")]
    pub exit: Rational,
}

/// `entry + (Σ pₖ tₖ) / (1 − Σ_retry pₖ) + exit`.
pub fn solve_recurrence(spec: &RecurrenceSpec) -> Result<Rational, CalculusError> {
    let mut total = Rational::zero();
    let mut retry = Rational::zero();
    let mut expected = Rational::zero();
    let mut success = false;
    for b in &spec.branches {
        if b.prob < Rational::zero() || b.prob > Rational::one() {
            return Err(CalculusError::InvalidRecurrence(format!(
                "branch probability {} outside [0,1]",
                b.prob
            )));
        }
        if b.cost < Rational::zero() {
            return Err(CalculusError::InvalidRecurrence("negative cost".into()));
        }
        total += &b.prob;
        expected += &b.prob * &b.cost;
        match b.outcome {
            Outcome::Retry => retry += &b.prob,
            Outcome::Success => success |= !b.prob.is_zero(),
        }
    }
    if !total.is_one() {
        return Err(CalculusError::InvalidRecurrence(format!(
            "branch probabilities sum to {total}"
        )));
    }
    if retry.is_one() {
        return Err(CalculusError::Divergent);
    }
    if !success {
        return Err(CalculusError::InvalidRecurrence("no success branch".into()));
    }
    Ok(&spec.entry + expected / (Rational::one() - retry) + &spec.exit)
}

/// Expected-time recurrence read off a chain: the first link is the entry
/// cost, the last link the exit cost, and the links in between form a loop
/// that succeeds with the product of their probabilities. When link `k`
/// fails (probability `p₁⋯pₖ₋₁(1 − pₖ)`) the time spent so far is lost and
/// the loop restarts.
pub fn recurrence_from_chain(stmts: &[TimeBoundStatement]) -> Result<RecurrenceSpec, CalculusError> {
    if stmts.len() < 3 {
        return Err(CalculusError::InvalidRecurrence(
            "a chain needs an entry, a loop and an exit".into(),
        ));
    }
    let (entry, rest) = stmts.split_first().unwrap();
    let (exit, body) = rest.split_last().unwrap();
    let mut branches = Vec::new();
    let mut reach = Rational::one();
    let mut spent = Rational::zero();
    for s in body {
        spent += &s.time;
        let fail = &reach * (Rational::one() - &s.prob);
        if !fail.is_zero() {
            branches.push(Branch::new(fail, spent.clone(), Outcome::Retry));
        }
        reach *= &s.prob;
    }
    branches.push(Branch::new(reach, spent, Outcome::Success));
    Ok(RecurrenceSpec {
        branches,
        entry: entry.time.clone(),
        exit: exit.time.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn st(u: &str, v: &str, t: i64, p: Rational) -> TimeBoundStatement {
        TimeBoundStatement::new(PredSet::parse(u), PredSet::parse(v), int(t), p, "unit-time")
    }

    #[test]
    fn compose_multiplies_and_adds() {
        let c = compose(&st("A", "B", 1, rat(1, 2)), &st("B", "C", 2, rat(1, 4))).unwrap();
        assert_eq!((c.time, c.prob), (int(3), rat(1, 8)));
        let c = compose(&st("A", "B", 1, int(1)), &st("B", "C", 5, int(1))).unwrap();
        assert_eq!((c.time, c.prob), (int(6), int(1)));
    }

    #[test]
    fn compose_checks_junction_and_schema() {
        assert!(matches!(
            compose(&st("A", "B", 1, int(1)), &st("C", "D", 1, int(1))),
            Err(CalculusError::ChainBroken { .. })
        ));
        let mut open = st("B", "C", 1, int(1));
        open.schema = "min-k-steps".into();
        let mut a = st("A", "B", 1, int(1));
        a.schema = "min-k-steps".into();
        assert!(matches!(compose(&a, &open), Err(CalculusError::CompositionForbidden(_))));
        assert!(matches!(
            compose(&st("A", "B", 1, int(1)), &open),
            Err(CalculusError::SchemaMismatch { .. })
        ));
    }

    #[test]
    fn union_lift_edge_cases() {
        let s = st("F", "G|P", 2, rat(1, 2));
        assert_eq!(union_lift(&s, &PredSet::empty()), s);
        let lifted = union_lift(&s, &PredSet::parse("G|P"));
        assert_eq!(lifted.source.to_string(), "F|G|P");
        assert_eq!(lifted.target.to_string(), "G|P");
        let all = union_lift(&s, &PredSet::All);
        assert_eq!((all.source, all.target, all.prob), (PredSet::All, PredSet::All, rat(1, 2)));
    }

    #[test]
    fn recurrence_examples() {
        let branches = vec![
            Branch::new(rat(1, 8), int(10), Outcome::Success),
            Branch::new(rat(1, 2), int(5), Outcome::Retry),
            Branch::new(rat(3, 8), int(10), Outcome::Retry),
        ];
        let mut spec = RecurrenceSpec {
            branches,
            entry: int(0),
            exit: int(0),
        };
        assert_eq!(solve_recurrence(&spec).unwrap(), int(60));
        spec.entry = int(2);
        spec.exit = int(1);
        assert_eq!(solve_recurrence(&spec).unwrap(), int(63));
        let single = RecurrenceSpec {
            branches: vec![Branch::new(int(1), rat(7, 2), Outcome::Success)],
            entry: int(0),
            exit: int(0),
        };
        assert_eq!(solve_recurrence(&single).unwrap(), rat(7, 2));
        let stuck = RecurrenceSpec {
            branches: vec![Branch::new(int(1), int(1), Outcome::Retry)],
            entry: int(0),
            exit: int(0),
        };
        assert_eq!(solve_recurrence(&stuck), Err(CalculusError::Divergent));
    }
}
