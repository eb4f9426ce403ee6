//! Named state predicates and finite unions of them.
//!
//! Statements refer to predicates by name so that chain junctions can be
//! checked syntactically; a [`PredicateRegistry`] turns names back into
//! executable tests.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PredicateError {
    #[error("unknown predicate {0}")]
    Unknown(String),
}

/// A named test on states.
pub struct StatePredicate<S> {
    name: String,
    test: Arc<dyn Fn(&S) -> bool + Send + Sync>,
}

impl<S> Clone for StatePredicate<S> {
    fn clone(&self) -> Self {
        StatePredicate {
            name: self.name.clone(),
            test: self.test.clone(),
        }
    }
}

impl<S> fmt::Debug for StatePredicate<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StatePredicate({})", self.name)
    }
}

impl<S> StatePredicate<S> {
    pub fn new(name: impl Into<String>, test: impl Fn(&S) -> bool + Send + Sync + 'static) -> Self {
        StatePredicate {
            name: name.into(),
            test: Arc::new(test),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, s: &S) -> bool {
        (self.test)(s)
    }
}

impl<S: 'static> StatePredicate<S> {
    pub fn always() -> Self {
        StatePredicate::new("all", |_| true)
    }

    pub fn never() -> Self {
        StatePredicate::new("none", |_| false)
    }

    pub fn or(&self, other: &StatePredicate<S>) -> Self {
        let (a, b) = (self.test.clone(), other.test.clone());
        StatePredicate {
            name: format!("{}|{}", self.name, other.name),
            test: Arc::new(move |s| a(s) || b(s)),
        }
    }

    pub fn and(&self, other: &StatePredicate<S>) -> Self {
        let (a, b) = (self.test.clone(), other.test.clone());
        StatePredicate {
            name: format!("{}&{}", self.name, other.name),
            test: Arc::new(move |s| a(s) && b(s)),
        }
    }

    pub fn not(&self) -> Self {
        let a = self.test.clone();
        StatePredicate {
            name: format!("!{}", self.name),
            test: Arc::new(move |s| !a(s)),
        }
    }
}

/// A finite union of named atoms, or the set of all states. Two sets are
/// equal exactly when their atom names are.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PredSet {
    All,
    Atoms(BTreeSet<String>),
}

impl PredSet {
    pub fn atom(name: &str) -> Self {
        PredSet::Atoms([name.to_string()].into_iter().collect())
    }

    pub fn of<I: IntoIterator<Item = S>, S: Into<String>>(names: I) -> Self {
        PredSet::Atoms(names.into_iter().map(Into::into).collect())
    }

    pub fn empty() -> Self {
        PredSet::Atoms(BTreeSet::new())
    }

    pub fn union(&self, other: &PredSet) -> PredSet {
        match (self, other) {
            (PredSet::All, _) | (_, PredSet::All) => PredSet::All,
            (PredSet::Atoms(a), PredSet::Atoms(b)) => PredSet::Atoms(a.union(b).cloned().collect()),
        }
    }

    /// Syntactic inclusion.
    pub fn is_subset(&self, other: &PredSet) -> bool {
        match (self, other) {
            (_, PredSet::All) => true,
            (PredSet::All, PredSet::Atoms(_)) => false,
            (PredSet::Atoms(a), PredSet::Atoms(b)) => a.is_subset(b),
        }
    }

    /// `self ∖ other` on atoms; `None` when `self` is everything and `other`
    /// is not.
    pub fn difference(&self, other: &PredSet) -> Option<PredSet> {
        match (self, other) {
            (_, PredSet::All) => Some(PredSet::empty()),
            (PredSet::All, _) => None,
            (PredSet::Atoms(a), PredSet::Atoms(b)) => {
                Some(PredSet::Atoms(a.difference(b).cloned().collect()))
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, PredSet::Atoms(a) if a.is_empty())
    }

    pub fn names(&self) -> Vec<String> {
        match self {
            PredSet::All => vec!["all".into()],
            PredSet::Atoms(a) => a.iter().cloned().collect(),
        }
    }

    /// Parses `"all"`, `"none"` or `"A|B|C"`.
    pub fn parse(text: &str) -> PredSet {
        match text.trim() {
            "all" => PredSet::All,
            "none" | "" => PredSet::empty(),
            t => PredSet::of(t.split(['|', ',']).map(|x| x.trim()).filter(|x| !x.is_empty())),
        }
    }
}

impl fmt::Display for PredSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredSet::All => f.write_str("all"),
            PredSet::Atoms(a) if a.is_empty() => f.write_str("none"),
            PredSet::Atoms(a) => {
                let names: Vec<&str> = a.iter().map(String::as_str).collect();
                f.write_str(&names.join("|"))
            }
        }
    }
}

impl Serialize for PredSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PredSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Ok(PredSet::parse(&text))
    }
}

/// Name → predicate lookup for one model family.
pub struct PredicateRegistry<S> {
    atoms: BTreeMap<String, StatePredicate<S>>,
}

impl<S> Clone for PredicateRegistry<S> {
    fn clone(&self) -> Self {
        PredicateRegistry {
            atoms: self.atoms.clone(),
        }
    }
}

impl<S> Default for PredicateRegistry<S> {
    fn default() -> Self {
        PredicateRegistry {
            atoms: BTreeMap::new(),
        }
    }
}

impl<S: 'static> PredicateRegistry<S> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, pred: StatePredicate<S>) {
        self.atoms.insert(pred.name().to_string(), pred);
    }

    pub fn get(&self, name: &str) -> Option<&StatePredicate<S>> {
        self.atoms.get(name)
    }

    pub fn names(&self) -> Vec<String> {
        self.atoms.keys().cloned().collect()
    }

    /// The predicate for a union of registered atoms.
    pub fn resolve(&self, set: &PredSet) -> Result<StatePredicate<S>, PredicateError> {
        match set {
            PredSet::All => Ok(StatePredicate::always()),
            PredSet::Atoms(names) => {
                let preds = names
                    .iter()
                    .map(|n| {
                        self.get(n)
                            .cloned()
                            .ok_or_else(|| PredicateError::Unknown(n.clone()))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let name = set.to_string();
                Ok(StatePredicate::new(name, move |s| preds.iter().any(|p| p.eval(s))))
            }
        }
    }
}
