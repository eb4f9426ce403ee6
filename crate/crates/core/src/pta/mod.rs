//! Probabilistic automata: actions, finite next-state distributions, steps,
//! and the [`Model`] trait every verified system implements.
//!
//! Nondeterminism is the choice among the steps returned by
//! [`enabled_steps`]; probability is the choice within one step's
//! [`Distribution`]. Time passage (the patient construction) is not listed
//! among enabled steps: any positive delay can be requested through
//! [`Step::time_passage`].

mod fragment;
mod sample;
mod tree;

use std::cmp::Ordering;
use std::collections::{HashSet, VecDeque};
use std::fmt;
use std::hash::Hash;
use std::sync::Arc;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::rational::Rational;

pub use fragment::{Entry, ExecutionFragment};
pub use sample::{sample_step, trial_rng};
pub use tree::{build_tree, ExecutionTree, ExploreBudget, LeafStatus, TreeNode};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("unknown state: {0}")]
    UnknownState(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("cannot decode state: {0}")]
    Decode(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("junction mismatch: {0}")]
    Junction(String),
    #[error("invalid execution fragment: {0}")]
    InvalidFragment(String),
    #[error("exploration budget of {budget} nodes exceeded")]
    Budget { budget: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActionKind {
    External,
    Internal,
    /// The time passage action ν.
    TimeAdvance,
}

/// A symbolic action label. Names are unique within a model and each name
/// has exactly one kind.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ActionId {
    name: Arc<str>,
    kind: ActionKind,
}

impl ActionId {
    pub fn new(name: impl Into<Arc<str>>, kind: ActionKind) -> Self {
        ActionId {
            name: name.into(),
            kind,
        }
    }

    pub fn time_passage() -> Self {
        ActionId::new("nu", ActionKind::TimeAdvance)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ActionKind {
        self.kind
    }

    pub fn is_time_passage(&self) -> bool {
        self.kind == ActionKind::TimeAdvance
    }
}

impl fmt::Debug for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// A finite probability distribution over states with exact weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution<S> {
    support: Vec<(S, Rational)>,
}

impl<S: Clone + PartialEq> Distribution<S> {
    /// Validates that every weight lies in (0, 1], the weights sum to exactly
    /// one, and support states are distinct.
    pub fn new(support: Vec<(S, Rational)>) -> Result<Self, ModelError> {
        if support.is_empty() {
            return Err(ModelError::InvalidDistribution("empty support".into()));
        }
        let mut total = Rational::zero();
        for (k, (s, w)) in support.iter().enumerate() {
            if !(w > &Rational::zero() && w <= &Rational::one()) {
                return Err(ModelError::InvalidDistribution(format!(
                    "weight {w} outside (0,1]"
                )));
            }
            if support[..k].iter().any(|(t, _)| t == s) {
                return Err(ModelError::InvalidDistribution(
                    "support states are not distinct".into(),
                ));
            }
            total += w;
        }
        if !total.is_one() {
            return Err(ModelError::InvalidDistribution(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(Distribution { support })
    }

    pub fn point(s: S) -> Self {
        Distribution {
            support: vec![(s, Rational::one())],
        }
    }

    /// Two outcomes with weight 1/2 each.
    pub fn fair(a: S, b: S) -> Self {
        let half = Rational::new(1.into(), 2.into());
        Distribution {
            support: vec![(a, half.clone()), (b, half)],
        }
    }
}

impl<S> Distribution<S> {
    pub fn support(&self) -> &[(S, Rational)] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn is_deterministic(&self) -> bool {
        self.support.len() == 1
    }

    pub fn states(&self) -> impl Iterator<Item = &S> {
        self.support.iter().map(|(s, _)| s)
    }

    /// Probability mass of the support states satisfying `pred`.
    pub fn mass_where(&self, mut pred: impl FnMut(&S) -> bool) -> Rational {
        self.support
            .iter()
            .filter(|(s, _)| pred(s))
            .fold(Rational::zero(), |acc, (_, w)| acc + w)
    }
}

/// One transition `(source, action, next)`. `elapse` is the amount of time
/// the step lets pass; it is non-zero only for time passage steps.
#[derive(Clone, Debug, PartialEq)]
pub struct Step<S> {
    pub source: S,
    pub action: ActionId,
    pub next: Distribution<S>,
    pub elapse: Rational,
}

impl<S: Clone + PartialEq> Step<S> {
    pub fn new(source: S, action: ActionId, next: Distribution<S>) -> Self {
        Step {
            source,
            action,
            next,
            elapse: Rational::zero(),
        }
    }

    pub fn deterministic(source: S, action: ActionId, target: S) -> Self {
        Step::new(source, action, Distribution::point(target))
    }

    /// The patient-construction step letting `delta > 0` time pass.
    pub fn time_passage<M>(model: &M, source: &S, delta: &Rational) -> Option<Self>
    where
        M: Model<State = S> + ?Sized,
    {
        if delta <= &Rational::zero() {
            return None;
        }
        let next = model.advance_time(source, delta)?;
        Some(Step {
            source: source.clone(),
            action: ActionId::time_passage(),
            next: Distribution::point(next),
            elapse: delta.clone(),
        })
    }
}

impl<S> Step<S> {
    pub fn is_time_passage(&self) -> bool {
        self.action.is_time_passage()
    }
}

/// Process structure of a multi-process model. Needed by the Unit-Time
/// monitor, the built-in schedulers and the round-semantics game solver.
pub trait ProcessInfo<S> {
    fn process_count(&self) -> usize;

    /// The process an action belongs to, if any.
    fn process_of(&self, action: &ActionId) -> Option<usize>;

    /// User-controlled actions (try/exit style) are scheduled at the
    /// adversary's discretion and do not count towards readiness.
    fn is_user_action(&self, action: &ActionId) -> bool;

    /// A process is ready when it enables some non-user action.
    fn is_ready(&self, s: &S, process: usize) -> bool;

    /// Key identifying a state up to time and up to variables that can no
    /// longer influence the future. Used for memoization.
    fn memo_key(&self, s: &S) -> Vec<u8>;

    /// Heuristic used by the greedy blocking scheduler: lower scores are
    /// scheduled first. Models without resources keep the default.
    fn blocking_score(&self, _s: &S, _step: &Step<S>) -> u32 {
        0
    }

    /// Part of the set of processes that already took a user action this
    /// round that can still influence which user actions are allowed. Models
    /// where a user action can never become enabled twice in one round may
    /// return 0, which shrinks the solver's state space.
    fn canonical_inserted(&self, _s: &S, inserted: u64) -> u64 {
        inserted
    }

    fn ready_mask(&self, s: &S) -> u64 {
        (0..self.process_count())
            .filter(|&i| self.is_ready(s, i))
            .fold(0, |m, i| m | (1 << i))
    }
}

/// A probabilistic automaton presented by its start states and a function
/// from states to enabled steps.
pub trait Model: Send + Sync {
    type State: Clone + Eq + Hash + fmt::Debug + Send + Sync;

    fn name(&self) -> String;

    fn start_states(&self) -> Vec<Self::State>;

    /// The action signature.
    fn actions(&self) -> Vec<ActionId>;

    /// Every discrete step enabled at `s`, in any order. Callers that need
    /// the canonical order use [`enabled_steps`].
    fn enabled(&self, s: &Self::State) -> Result<Vec<Step<Self::State>>, ModelError>;

    fn encode(&self, s: &Self::State) -> Vec<u8>;

    fn decode(&self, bytes: &[u8]) -> Result<Self::State, ModelError>;

    /// Time passage of `delta`. The default keeps the state untouched, which
    /// is the right thing for models whose time lives only in the fragment.
    fn advance_time(&self, s: &Self::State, _delta: &Rational) -> Option<Self::State> {
        Some(s.clone())
    }

    /// Time carried inside the state, for models that keep a clock. Checked
    /// against fragment times.
    fn state_time(&self, _s: &Self::State) -> Option<Rational> {
        None
    }

    fn processes(&self) -> Option<&dyn ProcessInfo<Self::State>> {
        None
    }
}

fn distribution_key<M: Model + ?Sized>(model: &M, d: &Distribution<M::State>) -> Vec<u8> {
    let mut out = Vec::new();
    for (s, w) in d.support() {
        out.extend(model.encode(s));
        out.extend(w.numer().to_signed_bytes_be());
        out.push(b'/');
        out.extend(w.denom().to_signed_bytes_be());
    }
    out
}

/// Sorts steps by action name, then by the canonical encoding of their
/// distributions.
pub fn canonical_order<M: Model + ?Sized>(model: &M, steps: &mut [Step<M::State>]) {
    if steps.len() < 2 {
        return;
    }
    steps.sort_by(|a, b| match a.action.name().cmp(b.action.name()) {
        Ordering::Equal => distribution_key(model, &a.next).cmp(&distribution_key(model, &b.next)),
        other => other,
    });
}

/// All steps enabled at `s` in canonical order.
pub fn enabled_steps<M: Model + ?Sized>(
    model: &M,
    s: &M::State,
) -> Result<Vec<Step<M::State>>, ModelError> {
    let mut steps = model.enabled(s)?;
    if let Some(bad) = steps.iter().find(|st| &st.source != s) {
        return Err(ModelError::Domain(format!(
            "step {} does not start at the queried state",
            bad.action
        )));
    }
    canonical_order(model, &mut steps);
    Ok(steps)
}

/// All states reachable from the start states through discrete steps.
/// Time passage is ignored, so clocks stay at their start value.
pub fn reachable_states<M: Model + ?Sized>(
    model: &M,
    budget: usize,
) -> Result<Vec<M::State>, ModelError> {
    let mut seen: HashSet<M::State> = HashSet::new();
    let mut order = Vec::new();
    let mut queue = VecDeque::new();
    for s in model.start_states() {
        if seen.insert(s.clone()) {
            queue.push_back(s.clone());
            order.push(s);
        }
    }
    while let Some(s) = queue.pop_front() {
        for step in model.enabled(&s)? {
            for t in step.next.states() {
                if !seen.contains(t) {
                    if seen.len() >= budget {
                        return Err(ModelError::Budget { budget });
                    }
                    seen.insert(t.clone());
                    order.push(t.clone());
                    queue.push_back(t.clone());
                }
            }
        }
    }
    Ok(order)
}

/// A unique start state and at most one enabled step in every reachable
/// state.
pub fn is_fully_probabilistic<M: Model + ?Sized>(
    model: &M,
    budget: usize,
) -> Result<bool, ModelError> {
    if model.start_states().len() != 1 {
        return Ok(false);
    }
    for s in reachable_states(model, budget)? {
        if model.enabled(&s)?.len() > 1 {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn distribution_validation() {
        assert!(Distribution::new(vec![(1u8, rat(1, 2)), (2, rat(1, 2))]).is_ok());
        assert!(Distribution::new(vec![(1u8, rat(1, 2)), (2, rat(1, 3))]).is_err());
        assert!(Distribution::new(vec![(1u8, rat(1, 2)), (1, rat(1, 2))]).is_err());
        assert!(Distribution::new(vec![(1u8, rat(3, 2)), (2, rat(-1, 2))]).is_err());
        assert!(Distribution::<u8>::new(vec![]).is_err());
    }

    #[test]
    fn mass_where_counts_matching_support() {
        let d = Distribution::new(vec![(1u8, rat(1, 4)), (2, rat(3, 4))]).unwrap();
        assert_eq!(d.mass_where(|s| *s == 2), rat(3, 4));
        assert_eq!(d.mass_where(|_| false), rat(0, 1));
    }
}
