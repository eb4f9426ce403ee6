//! Exact worst-case probabilities under round semantics.
//!
//! The adversary's choices form a finite turn-based stochastic game: at
//! each position it picks a pending process's program step, a user-action
//! insertion, or (once nobody is pending) the end of the round; flips are
//! chance nodes. Backward induction over positions `(state, round phase,
//! rounds remaining)` yields the minimum over all round-semantics
//! adversaries, and a memoryless policy attaining it.

use std::collections::HashMap;

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::adversary::{
    round_options, PolicyKey, PolicyTable, RoundOption, RoundPhase,
};
use crate::pta::{Model, ModelError, ProcessInfo, Step};
use crate::predicate::StatePredicate;
use crate::rational::Rational;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("game exceeded the budget of {budget} positions")]
    Budget { budget: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// What the minimizing adversary plays against.
pub enum Objective<S> {
    /// Reach a state satisfying the predicate within the horizon; the start
    /// state counts.
    Reach(StatePredicate<S>),
    /// The first occurring listed action must land in its predicate. If
    /// none occurs within the horizon the objective holds.
    Next(Vec<(String, StatePredicate<S>)>),
}

impl<S> Clone for Objective<S> {
    fn clone(&self) -> Self {
        match self {
            Objective::Reach(p) => Objective::Reach(p.clone()),
            Objective::Next(v) => Objective::Next(v.clone()),
        }
    }
}

/// Restricts the first occurrence of `action` to outcomes satisfying `pred`
/// (renormalized). Solving the restricted game with floor 1 checks that
/// every execution conforming to the condition satisfies the objective.
pub struct Conditioning<S> {
    pub action: String,
    pub pred: StatePredicate<S>,
}

impl<S> Clone for Conditioning<S> {
    fn clone(&self) -> Self {
        Conditioning {
            action: self.action.clone(),
            pred: self.pred.clone(),
        }
    }
}

pub struct GameQuery<S> {
    pub objective: Objective<S>,
    /// Rounds.
    pub horizon: u32,
    pub conditions: Vec<Conditioning<S>>,
}

impl<S> Clone for GameQuery<S> {
    fn clone(&self) -> Self {
        GameQuery {
            objective: self.objective.clone(),
            horizon: self.horizon,
            conditions: self.conditions.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GameOptions {
    pub budget_nodes: usize,
    pub memoize: bool,
    pub record_policy: bool,
}

impl Default for GameOptions {
    fn default() -> Self {
        GameOptions {
            budget_nodes: 50_000_000,
            memoize: true,
            record_policy: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameResult {
    /// Minimum over adversaries and start states.
    #[serde(with = "crate::rational::serde_rational")]
    pub value: Rational,
    /// Index (into the start list) of the first start attaining the minimum.
    pub worst_start: Option<usize>,
    pub starts: usize,
    /// Positions expanded (memo hits not counted).
    pub nodes: usize,
    #[serde(skip)]
    pub policy: Option<PolicyTable>,
}

/// Solves the game once for many start states, sharing the memo table.
pub struct GameSolver<'a, M: Model + ?Sized> {
    model: &'a M,
    info: &'a dyn ProcessInfo<M::State>,
    query: GameQuery<M::State>,
    options: GameOptions,
    memo: HashMap<Vec<u8>, Rational>,
    nodes: usize,
    policy: PolicyTable,
}

impl<'a, M: Model + ?Sized> GameSolver<'a, M> {
    pub fn new(model: &'a M, query: GameQuery<M::State>, options: GameOptions) -> Result<Self, GameError> {
        let info = model.processes().ok_or_else(|| {
            GameError::Unsupported(format!("{} exposes no process structure", model.name()))
        })?;
        if query.conditions.len() > 32 {
            return Err(GameError::Unsupported("at most 32 conditions".into()));
        }
        Ok(GameSolver {
            model,
            info,
            query,
            options,
            memo: HashMap::new(),
            nodes: 0,
            policy: PolicyTable::new(),
        })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn into_policy(self) -> PolicyTable {
        self.policy
    }

    /// Minimum probability from `s` at the start of a run (time 0, nobody
    /// pending yet).
    pub fn value_from(&mut self, s: &M::State) -> Result<Rational, GameError> {
        self.node(s, RoundPhase::default(), self.query.horizon, 0)
    }

    fn horizon_value(&self) -> Rational {
        match self.query.objective {
            Objective::Reach(_) => Rational::zero(),
            Objective::Next(_) => Rational::one(),
        }
    }

    fn node(
        &mut self,
        s: &M::State,
        phase: RoundPhase,
        remaining: u32,
        fired: u32,
    ) -> Result<Rational, GameError> {
        if let Objective::Reach(target) = &self.query.objective {
            if target.eval(s) {
                return Ok(Rational::one());
            }
        }
        let phase = phase.normalized(self.info, s);
        let state_key = self.info.memo_key(s);
        let key = self.options.memoize.then(|| {
            let mut k = state_key.clone();
            k.extend(phase.key());
            k.extend(remaining.to_be_bytes());
            k.extend(fired.to_be_bytes());
            k
        });
        if let Some(k) = &key {
            if let Some(v) = self.memo.get(k) {
                return Ok(v.clone());
            }
        }
        self.nodes += 1;
        if self.nodes > self.options.budget_nodes {
            return Err(GameError::Budget {
                budget: self.options.budget_nodes,
            });
        }
        let options = round_options(self.model, self.info, s, phase)?;
        let mut best: Option<(usize, Rational)> = None;
        for (k, option) in options.into_iter().enumerate() {
            let v = match option {
                RoundOption::EndRound => {
                    if remaining == 0 {
                        self.horizon_value()
                    } else {
                        let step = Step::time_passage(self.model, s, &Rational::one())
                            .ok_or_else(|| {
                                GameError::Unsupported("model refuses time passage".into())
                            })?;
                        let next = &step.next.support()[0].0;
                        self.node(next, RoundPhase::fresh(self.info, next), remaining - 1, fired)?
                    }
                }
                RoundOption::Program { process, step } => {
                    let mut p = phase;
                    p.pending &= !(1u64 << process);
                    self.chance(&step, p, remaining, fired)?
                }
                RoundOption::Insert { process, step } => {
                    let mut p = phase;
                    p.inserted |= 1u64 << process;
                    self.chance(&step, p, remaining, fired)?
                }
            };
            let better = match &best {
                None => true,
                Some((_, b)) => &v < b,
            };
            if better {
                let zero = v.is_zero();
                best = Some((k, v));
                if zero {
                    break;
                }
            }
        }
        let (choice, value) = best.expect("the end of a round or a pending step is always available");
        if self.options.record_policy {
            self.policy
                .insert(PolicyKey::new(state_key, phase, remaining), choice as u32);
        }
        if let Some(k) = key {
            self.memo.insert(k, value.clone());
        }
        Ok(value)
    }

    fn chance(
        &mut self,
        step: &Step<M::State>,
        phase: RoundPhase,
        remaining: u32,
        fired: u32,
    ) -> Result<Rational, GameError> {
        let name = step.action.name();
        let mut fired = fired;
        let mut support: Vec<(&M::State, Rational)> =
            step.next.support().iter().map(|(s, w)| (s, w.clone())).collect();
        if let Some(c) = self
            .query
            .conditions
            .iter()
            .position(|c| c.action == name)
            .filter(|&c| fired & (1 << c) == 0)
        {
            fired |= 1 << c;
            let pred = &self.query.conditions[c].pred;
            support.retain(|(s, _)| pred.eval(s));
            let mass = support.iter().fold(Rational::zero(), |acc, (_, w)| acc + w);
            if mass.is_zero() {
                // No execution conforms to the condition here.
                return Ok(Rational::one());
            }
            for (_, w) in support.iter_mut() {
                *w = &*w / &mass;
            }
        }
        let decisive = match &self.query.objective {
            Objective::Next(pairs) => pairs.iter().position(|(a, _)| a == name),
            Objective::Reach(_) => None,
        };
        let mut total = Rational::zero();
        for (s, w) in support {
            let v = match (decisive, &self.query.objective) {
                (Some(j), Objective::Next(pairs)) => {
                    if pairs[j].1.eval(s) {
                        Rational::one()
                    } else {
                        Rational::zero()
                    }
                }
                _ => self.node(s, phase, remaining, fired)?,
            };
            total += w * v;
        }
        Ok(total)
    }
}

/// Minimum over round-semantics adversaries and over `starts` of the
/// objective's probability.
pub fn verify_exact<M: Model + ?Sized>(
    model: &M,
    starts: &[M::State],
    query: GameQuery<M::State>,
    options: GameOptions,
) -> Result<GameResult, GameError> {
    let mut solver = GameSolver::new(model, query, options)?;
    let mut value = Rational::one();
    let mut worst = None;
    for (k, s) in starts.iter().enumerate() {
        let v = solver.value_from(s)?;
        if worst.is_none() || v < value {
            value = v;
            worst = Some(k);
        }
    }
    let nodes = solver.nodes();
    let policy = options.record_policy.then(|| solver.into_policy());
    Ok(GameResult {
        value,
        worst_start: worst,
        starts: starts.len(),
        nodes,
        policy,
    })
}
