//! Prefix-determined event schemas and their exact probabilities on
//! execution trees.
//!
//! Every schema carries a time horizon; its truth on an execution depends
//! only on the part of the execution up to that horizon. An action that has
//! not occurred by the horizon counts as never occurring.

use std::collections::{HashMap, HashSet};

use num_traits::{One, Zero};
use thiserror::Error;

use crate::adversary::{resolve, Adversary, AdversaryError, Choice, UnitTimeMonitor};
use crate::pta::{build_tree, ActionId, ExecutionFragment, ExploreBudget, LeafStatus, Model};
use crate::predicate::StatePredicate;
use crate::rational::Rational;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EventError {
    #[error("fragment ends before the horizon and is not maximal")]
    InsufficientPrefix,
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
}

/// How a fragment relates to the horizon of the schema evaluated on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrefixStatus {
    /// The execution ends here.
    Maximal,
    /// The execution continues past the horizon; everything up to the
    /// horizon is in the fragment.
    PastHorizon,
    /// The execution may continue within the horizon.
    Partial,
}

impl From<LeafStatus> for PrefixStatus {
    fn from(s: LeafStatus) -> Self {
        match s {
            LeafStatus::Maximal => PrefixStatus::Maximal,
            LeafStatus::PastHorizon => PrefixStatus::PastHorizon,
        }
    }
}

pub enum EventSchema<S> {
    /// Some state at time ≤ `time` (relative to the start) satisfies the
    /// predicate; the start state counts.
    ReachWithin {
        target: StatePredicate<S>,
        time: Rational,
    },
    /// The action never occurs within the horizon, or the state right after
    /// its first occurrence satisfies the predicate.
    First {
        action: String,
        pred: StatePredicate<S>,
        horizon: Rational,
    },
    /// None of the listed actions occurs within the horizon, or the state
    /// right after the first occurring one satisfies its predicate.
    Next {
        pairs: Vec<(String, StatePredicate<S>)>,
        horizon: Rational,
    },
    /// The action occurs within the horizon.
    Occurs { action: String, horizon: Rational },
    /// Pointwise conjunction.
    All(Vec<EventSchema<S>>),
    /// Complement.
    Not(Box<EventSchema<S>>),
}

impl<S> Clone for EventSchema<S> {
    fn clone(&self) -> Self {
        match self {
            EventSchema::ReachWithin { target, time } => EventSchema::ReachWithin {
                target: target.clone(),
                time: time.clone(),
            },
            EventSchema::First {
                action,
                pred,
                horizon,
            } => EventSchema::First {
                action: action.clone(),
                pred: pred.clone(),
                horizon: horizon.clone(),
            },
            EventSchema::Next { pairs, horizon } => EventSchema::Next {
                pairs: pairs.clone(),
                horizon: horizon.clone(),
            },
            EventSchema::Occurs { action, horizon } => EventSchema::Occurs {
                action: action.clone(),
                horizon: horizon.clone(),
            },
            EventSchema::All(v) => EventSchema::All(v.clone()),
            EventSchema::Not(b) => EventSchema::Not(b.clone()),
        }
    }
}

impl<S> std::fmt::Debug for EventSchema<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EventSchema::ReachWithin { target, time } => {
                write!(f, "reach({}, {time})", target.name())
            }
            EventSchema::First { action, pred, .. } => {
                write!(f, "first({action}, {})", pred.name())
            }
            EventSchema::Next { pairs, .. } => {
                let parts: Vec<String> = pairs
                    .iter()
                    .map(|(a, p)| format!("({a}, {})", p.name()))
                    .collect();
                write!(f, "next({})", parts.join(", "))
            }
            EventSchema::Occurs { action, .. } => write!(f, "occurs({action})"),
            EventSchema::All(v) => f.debug_list().entries(v).finish(),
            EventSchema::Not(b) => write!(f, "not({b:?})"),
        }
    }
}

impl<S> EventSchema<S> {
    pub fn reach_within(target: StatePredicate<S>, time: Rational) -> Self {
        EventSchema::ReachWithin { target, time }
    }

    pub fn first(action: &str, pred: StatePredicate<S>, horizon: Rational) -> Self {
        EventSchema::First {
            action: action.to_string(),
            pred,
            horizon,
        }
    }

    /// Rejects repeated actions.
    pub fn next(
        pairs: Vec<(String, StatePredicate<S>)>,
        horizon: Rational,
    ) -> Result<Self, EventError> {
        let mut seen = HashSet::new();
        for (a, _) in &pairs {
            if !seen.insert(a.clone()) {
                return Err(EventError::InvalidSchema(format!(
                    "action {a} listed twice in a next schema"
                )));
            }
        }
        Ok(EventSchema::Next { pairs, horizon })
    }

    /// Largest horizon of any part.
    pub fn horizon(&self) -> Rational {
        match self {
            EventSchema::ReachWithin { time, .. } => time.clone(),
            EventSchema::First { horizon, .. }
            | EventSchema::Next { horizon, .. }
            | EventSchema::Occurs { horizon, .. } => horizon.clone(),
            EventSchema::All(v) => v
                .iter()
                .map(|e| e.horizon())
                .max()
                .unwrap_or_else(Rational::zero),
            EventSchema::Not(b) => b.horizon(),
        }
    }
}

/// Incremental evaluation of a schema along a growing fragment.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EventMonitor {
    /// `None` while undecided.
    Leaf(Option<bool>),
    All(Vec<EventMonitor>),
    Not(Box<EventMonitor>),
}

impl EventMonitor {
    /// Monitor after seeing the first state of a fragment.
    pub fn start<S>(schema: &EventSchema<S>, s: &S) -> Self {
        match schema {
            EventSchema::ReachWithin { target, time } => {
                EventMonitor::Leaf((time >= &Rational::zero() && target.eval(s)).then_some(true))
            }
            EventSchema::All(v) => EventMonitor::All(v.iter().map(|e| Self::start(e, s)).collect()),
            EventSchema::Not(b) => EventMonitor::Not(Box::new(Self::start(b, s))),
            _ => EventMonitor::Leaf(None),
        }
    }

    /// Feeds `action` leading to `s` at `elapsed` time since the start.
    pub fn observe<S>(
        &mut self,
        schema: &EventSchema<S>,
        action: &ActionId,
        s: &S,
        elapsed: &Rational,
    ) {
        match (self, schema) {
            (EventMonitor::All(ms), EventSchema::All(v)) => {
                for (m, e) in ms.iter_mut().zip(v) {
                    m.observe(e, action, s, elapsed);
                }
            }
            (EventMonitor::Not(m), EventSchema::Not(b)) => m.observe(b, action, s, elapsed),
            (EventMonitor::Leaf(state @ None), schema) => match schema {
                EventSchema::ReachWithin { target, time } => {
                    if elapsed <= time && target.eval(s) {
                        *state = Some(true);
                    }
                }
                EventSchema::First {
                    action: a,
                    pred,
                    horizon,
                } => {
                    if elapsed <= horizon && action.name() == a {
                        *state = Some(pred.eval(s));
                    }
                }
                EventSchema::Next { pairs, horizon } => {
                    if elapsed <= horizon {
                        if let Some((_, pred)) = pairs.iter().find(|(a, _)| action.name() == a) {
                            *state = Some(pred.eval(s));
                        }
                    }
                }
                EventSchema::Occurs { action: a, horizon } if elapsed <= horizon && action.name() == a => {
                    *state = Some(true);
                }
                _ => {}
            },
            _ => {}
        }
    }

    /// The verdict if already determined by the prefix seen so far.
    pub fn decided(&self) -> Option<bool> {
        match self {
            EventMonitor::Leaf(v) => *v,
            EventMonitor::All(ms) => {
                let mut all = true;
                for m in ms {
                    match m.decided() {
                        Some(false) => return Some(false),
                        Some(true) => {}
                        None => all = false,
                    }
                }
                all.then_some(true)
            }
            EventMonitor::Not(m) => m.decided().map(|v| !v),
        }
    }

    /// Verdict once the prefix reaches the horizon or the execution ends.
    pub fn finish<S>(&self, schema: &EventSchema<S>) -> bool {
        match (self, schema) {
            (EventMonitor::Leaf(Some(v)), _) => *v,
            (EventMonitor::Leaf(None), EventSchema::ReachWithin { .. }) => false,
            (EventMonitor::Leaf(None), EventSchema::Occurs { .. }) => false,
            (EventMonitor::Leaf(None), _) => true,
            (EventMonitor::All(ms), EventSchema::All(v)) => {
                ms.iter().zip(v).all(|(m, e)| m.finish(e))
            }
            (EventMonitor::Not(m), EventSchema::Not(b)) => !m.finish(b),
            _ => false,
        }
    }

    pub fn key(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_key(&mut out);
        out
    }

    fn write_key(&self, out: &mut Vec<u8>) {
        match self {
            EventMonitor::Leaf(None) => out.push(0),
            EventMonitor::Leaf(Some(false)) => out.push(1),
            EventMonitor::Leaf(Some(true)) => out.push(2),
            EventMonitor::All(ms) => {
                out.push(b'[');
                for m in ms {
                    m.write_key(out);
                }
                out.push(b']');
            }
            EventMonitor::Not(m) => {
                out.push(b'!');
                m.write_key(out);
            }
        }
    }
}

/// Truth of `schema` on `frag`.
pub fn eval_event<S: Clone + PartialEq>(
    schema: &EventSchema<S>,
    frag: &ExecutionFragment<S>,
    status: PrefixStatus,
) -> Result<bool, EventError> {
    let entries = frag.entries();
    let t0 = frag.start_time();
    let mut monitor = EventMonitor::start(schema, &entries[0].state);
    for e in &entries[1..] {
        monitor.observe(
            schema,
            e.action.as_ref().expect("non-initial entry has an action"),
            &e.state,
            &(&e.time - t0),
        );
    }
    if let Some(v) = monitor.decided() {
        return Ok(v);
    }
    if status == PrefixStatus::Partial && frag.elapsed() <= schema.horizon() {
        return Err(EventError::InsufficientPrefix);
    }
    Ok(monitor.finish(schema))
}

/// An exact event probability on a finite execution tree.
#[derive(Debug, Clone, PartialEq)]
pub struct EventProbability {
    pub value: Rational,
    /// Tree positions visited (memo hits count once).
    pub nodes: usize,
    pub horizon: Rational,
}

/// Options for [`exact_probability_with`].
#[derive(Debug, Clone, Copy)]
pub struct ExactOptions {
    pub budget: ExploreBudget,
    /// Abort with a witness if the adversary violates Unit-Time.
    pub check_unit_time: bool,
    /// Reuse results for equal (state, adversary phase, elapsed time,
    /// monitor) positions when the adversary allows it.
    pub memoize: bool,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions {
            budget: ExploreBudget::default(),
            check_unit_time: false,
            memoize: true,
        }
    }
}

/// `P_H[schema]` for `H = H(model, adv, start)`, cut at the schema horizon.
pub fn exact_probability<M, A>(
    model: &M,
    adv: &A,
    start: &ExecutionFragment<M::State>,
    schema: &EventSchema<M::State>,
) -> Result<EventProbability, EventError>
where
    M: Model + ?Sized,
    A: Adversary<M> + ?Sized,
{
    exact_probability_with(model, adv, start, schema, ExactOptions::default())
}

pub fn exact_probability_with<M, A>(
    model: &M,
    adv: &A,
    start: &ExecutionFragment<M::State>,
    schema: &EventSchema<M::State>,
    options: ExactOptions,
) -> Result<EventProbability, EventError>
where
    M: Model + ?Sized,
    A: Adversary<M> + ?Sized,
{
    let horizon = schema.horizon();
    let mut walk = Walk {
        model,
        adv,
        schema,
        deadline: start.start_time() + &horizon,
        t0: start.start_time().clone(),
        options,
        memo: HashMap::new(),
        nodes: 0,
    };
    let unit = if options.check_unit_time {
        let info = model.processes().ok_or_else(|| {
            AdversaryError::Unsupported(format!("{} exposes no process structure", model.name()))
        })?;
        Some(UnitTimeMonitor::start(info, start.lstate(), start.end_time()))
    } else {
        None
    };
    // Replay the start fragment through the event monitor.
    let entries = start.entries();
    let mut monitor = EventMonitor::start(schema, &entries[0].state);
    for e in &entries[1..] {
        monitor.observe(schema, e.action.as_ref().unwrap(), &e.state, &(&e.time - &walk.t0));
    }
    let mut frag = start.clone();
    let value = walk.value(&mut frag, monitor, unit, 0)?;
    Ok(EventProbability {
        value,
        nodes: walk.nodes,
        horizon,
    })
}

struct Walk<'a, M: Model + ?Sized, A: ?Sized> {
    model: &'a M,
    adv: &'a A,
    schema: &'a EventSchema<M::State>,
    deadline: Rational,
    t0: Rational,
    options: ExactOptions,
    memo: HashMap<Vec<u8>, Rational>,
    nodes: usize,
}

impl<M, A> Walk<'_, M, A>
where
    M: Model + ?Sized,
    A: Adversary<M> + ?Sized,
{
    fn value(
        &mut self,
        frag: &mut ExecutionFragment<M::State>,
        monitor: EventMonitor,
        unit: Option<UnitTimeMonitor>,
        depth: usize,
    ) -> Result<Rational, EventError> {
        if let Some(v) = monitor.decided() {
            return Ok(if v { Rational::one() } else { Rational::zero() });
        }
        let key = if self.options.memoize {
            self.adv.memo_phase(self.model, frag).map(|phase| {
                let mut k = self.model.encode(frag.lstate());
                k.extend((phase.len() as u32).to_be_bytes());
                k.extend(phase);
                let e = frag.elapsed();
                k.extend(e.numer().to_signed_bytes_be());
                k.push(b'/');
                k.extend(e.denom().to_signed_bytes_be());
                k.push(b';');
                k.extend(monitor.key());
                if let Some(u) = &unit {
                    k.extend(u.key());
                }
                k
            })
        } else {
            None
        };
        if let Some(k) = &key {
            if let Some(v) = self.memo.get(k) {
                return Ok(v.clone());
            }
        }
        self.nodes += 1;
        if self.nodes > self.options.budget.nodes {
            return Err(AdversaryError::Model(crate::pta::ModelError::Budget {
                budget: self.options.budget.nodes,
            })
            .into());
        }
        let value = match resolve(self.model, self.adv, frag)? {
            Choice::Halt => bool_value(monitor.finish(self.schema)),
            Choice::Step(step) => {
                let time = frag.end_time() + &step.elapse;
                if time > self.deadline {
                    bool_value(monitor.finish(self.schema))
                } else {
                    if depth >= self.options.budget.depth {
                        return Err(AdversaryError::Model(crate::pta::ModelError::Budget {
                            budget: self.options.budget.depth,
                        })
                        .into());
                    }
                    let elapsed = &time - &self.t0;
                    let mut total = Rational::zero();
                    for (s, w) in step.next.support() {
                        let mut m = monitor.clone();
                        m.observe(self.schema, &step.action, s, &elapsed);
                        let mut u = unit.clone();
                        if let (Some(u), Some(info)) = (u.as_mut(), self.model.processes()) {
                            if let Err((process, since)) = u.observe(info, &step.action, s, &time) {
                                let mut witness = frag.clone();
                                witness.push(step.action.clone(), s.clone(), &step.elapse)
                                    .map_err(AdversaryError::from)?;
                                let w = crate::adversary::check_unit_time(&witness, self.model)?
                                    .unwrap_or_else(|| crate::adversary::ViolationWitness {
                                        prefix_len: witness.len(),
                                        prefix_actions: witness
                                            .actions()
                                            .map(|a| a.to_string())
                                            .collect(),
                                        state: hex::encode(self.model.encode(frag.lstate())),
                                        process,
                                        gap: &time - &since,
                                        ready_since: since,
                                        at: time.clone(),
                                    });
                                return Err(AdversaryError::Violation(Box::new(w)).into());
                            }
                        }
                        frag.push(step.action.clone(), s.clone(), &step.elapse)
                            .map_err(AdversaryError::from)?;
                        let v = self.value(frag, m, u, depth + 1);
                        frag.pop();
                        total += w * v?;
                    }
                    total
                }
            }
        };
        if let Some(k) = key {
            self.memo.insert(k, value.clone());
        }
        Ok(value)
    }
}

fn bool_value(b: bool) -> Rational {
    if b {
        Rational::one()
    } else {
        Rational::zero()
    }
}

/// The same probability computed on a fully materialized tree. Slower, used
/// to cross-check the memoized walk.
pub fn tree_probability<M, A>(
    model: &M,
    adv: &A,
    start: &ExecutionFragment<M::State>,
    schema: &EventSchema<M::State>,
    budget: ExploreBudget,
) -> Result<EventProbability, EventError>
where
    M: Model + ?Sized,
    A: Adversary<M> + ?Sized,
{
    let horizon = schema.horizon();
    let tree = build_tree(model, adv, start, &horizon, budget)?;
    let mut failure = None;
    let value = tree.probability_where(|frag, status| {
        match eval_event(schema, frag, status.into()) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                false
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(EventProbability {
        value,
        nodes: tree.nodes().len(),
        horizon,
    })
}

/// `P[event | condition]`, or `None` when the condition has probability 0.
pub fn conditional_probability<M, A>(
    model: &M,
    adv: &A,
    start: &ExecutionFragment<M::State>,
    event: &EventSchema<M::State>,
    condition: &EventSchema<M::State>,
) -> Result<Option<Rational>, EventError>
where
    M: Model + ?Sized,
    A: Adversary<M> + ?Sized,
{
    let both = EventSchema::All(vec![event.clone(), condition.clone()]);
    let joint = exact_probability(model, adv, start, &both)?.value;
    let cond = exact_probability(model, adv, start, condition)?.value;
    Ok((!cond.is_zero()).then(|| joint / cond))
}
