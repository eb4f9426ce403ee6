use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, ToPrimitive};
use serde::Serialize;

use super::round::{round_options, round_phase, RoundOption, RoundPhase};
use super::{Adversary, Choice};
use crate::pta::{enabled_steps, ExecutionFragment, Model, Step};
use crate::rational::{int, Rational};

/// Halts when nothing is enabled, otherwise takes the first enabled step in
/// canonical order. Works on any model.
#[derive(Debug, Clone, Default)]
pub struct FirstEnabled;

impl<M: Model + ?Sized> Adversary<M> for FirstEnabled {
    fn name(&self) -> &str {
        "first-enabled"
    }

    fn schemas(&self) -> Vec<String> {
        vec!["all".into()]
    }

    fn decide(&self, model: &M, frag: &ExecutionFragment<M::State>) -> Choice<M::State> {
        match enabled_steps(model, frag.lstate()) {
            Ok(steps) if !steps.is_empty() => Choice::Step(steps[0].clone()),
            _ => Choice::Halt,
        }
    }

    fn memo_phase(&self, _model: &M, _frag: &ExecutionFragment<M::State>) -> Option<Vec<u8>> {
        Some(Vec::new())
    }
}

/// How a round scheduler orders the pending processes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundPolicy {
    /// Lowest pending process first, first step in canonical order.
    RoundRobin,
    /// Highest pending process first.
    Reverse,
    /// Lowest blocking score first (see `ProcessInfo::blocking_score`); ties
    /// go to the lowest process. Without resources every score is equal and
    /// this is round-robin.
    GreedyBlocker,
}

/// A scheduler under round semantics. User actions are fired as soon as they
/// are enabled when `eager_user` is set, and rounds end with a time passage
/// of `round_length` (1 for Unit-Time; larger values deliberately violate
/// it).
#[derive(Debug, Clone)]
pub struct RoundAdversary {
    name: String,
    policy: RoundPolicy,
    eager_user: bool,
    round_length: Rational,
}

impl RoundAdversary {
    pub fn new(name: impl Into<String>, policy: RoundPolicy, eager_user: bool) -> Self {
        RoundAdversary {
            name: name.into(),
            policy,
            eager_user,
            round_length: Rational::one(),
        }
    }

    pub fn round_robin() -> Self {
        Self::new("round-robin", RoundPolicy::RoundRobin, true)
    }

    pub fn reverse() -> Self {
        Self::new("reverse-robin", RoundPolicy::Reverse, true)
    }

    pub fn greedy_blocker() -> Self {
        Self::new("greedy-blocker", RoundPolicy::GreedyBlocker, true)
    }

    /// Round-robin that lets two time units pass per round.
    pub fn stall() -> Self {
        let mut adv = Self::new("stall", RoundPolicy::RoundRobin, true);
        adv.round_length = int(2);
        adv
    }

    pub fn policy(&self) -> RoundPolicy {
        self.policy
    }

    fn pick<M: Model + ?Sized>(
        &self,
        model: &M,
        s: &M::State,
        options: Vec<RoundOption<M::State>>,
    ) -> Choice<M::State> {
        if self.eager_user {
            if let Some(k) = options
                .iter()
                .position(|o| matches!(o, RoundOption::Insert { .. }))
            {
                return options[k].clone().into_choice(model, s);
            }
        }
        let program: Vec<&RoundOption<M::State>> = options
            .iter()
            .filter(|o| matches!(o, RoundOption::Program { .. }))
            .collect();
        let chosen = match self.policy {
            RoundPolicy::RoundRobin => program.first().copied(),
            RoundPolicy::Reverse => {
                let last = program.iter().filter_map(|o| o.process()).max();
                program.iter().copied().find(|o| o.process() == last)
            }
            RoundPolicy::GreedyBlocker => {
                let info = model.processes();
                program
                    .iter()
                    .enumerate()
                    .min_by_key(|(k, o)| {
                        let score = match (info, o) {
                            (Some(info), RoundOption::Program { step, .. }) => {
                                info.blocking_score(s, step)
                            }
                            _ => 0,
                        };
                        (score, *k)
                    })
                    .map(|(_, o)| *o)
            }
        };
        if let Some(o) = chosen {
            return o.clone().into_choice(model, s);
        }
        if options.iter().any(|o| matches!(o, RoundOption::EndRound)) {
            return match Step::time_passage(model, s, &self.round_length) {
                Some(step) => Choice::Step(step),
                None => Choice::Halt,
            };
        }
        // Only lazily deferred insertions remain while processes are pending:
        // cannot happen, since pending processes always have program steps.
        Choice::Halt
    }
}

impl<M: Model + ?Sized> Adversary<M> for RoundAdversary {
    fn name(&self) -> &str {
        &self.name
    }

    fn schemas(&self) -> Vec<String> {
        if self.round_length.is_one() {
            vec!["unit-time".into(), "all".into()]
        } else {
            vec!["all".into()]
        }
    }

    fn decide(&self, model: &M, frag: &ExecutionFragment<M::State>) -> Choice<M::State> {
        let Some(info) = model.processes() else {
            return FirstEnabled.decide(model, frag);
        };
        let s = frag.lstate();
        let phase = round_phase(info, frag);
        match round_options(model, info, s, phase) {
            Ok(options) => self.pick(model, s, options),
            Err(_) => Choice::Halt,
        }
    }

    fn memo_phase(&self, model: &M, frag: &ExecutionFragment<M::State>) -> Option<Vec<u8>> {
        let info = model.processes()?;
        Some(round_phase(info, frag).key())
    }
}

/// Row key of a solved policy: canonical state key, round phase, rounds
/// remaining.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PolicyKey {
    pub state: Vec<u8>,
    pub pending: u64,
    pub inserted: u64,
    pub remaining: u32,
}

impl PolicyKey {
    pub fn new(state: Vec<u8>, phase: RoundPhase, remaining: u32) -> Self {
        PolicyKey {
            state,
            pending: phase.pending,
            inserted: phase.inserted,
            remaining,
        }
    }
}

/// A memoryless round-semantics policy: index into `round_options` for each
/// key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolicyTable {
    rows: BTreeMap<PolicyKey, u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PolicyRow {
    pub state: String,
    pub phase: String,
    pub remaining: u32,
    pub choice: u32,
}

impl PolicyTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: PolicyKey, choice: u32) {
        self.rows.insert(key, choice);
    }

    pub fn get(&self, key: &PolicyKey) -> Option<u32> {
        self.rows.get(key).copied()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Report form, sorted by key.
    pub fn rows(&self) -> Vec<PolicyRow> {
        self.rows
            .iter()
            .map(|(k, &choice)| PolicyRow {
                state: hex::encode(&k.state),
                phase: format!("{:x}/{:x}", k.pending, k.inserted),
                remaining: k.remaining,
                choice,
            })
            .collect()
    }
}

/// Replays a solved policy table for a run that started `horizon` rounds
/// before the deadline. Unknown keys fall back to round-robin.
#[derive(Debug, Clone)]
pub struct PolicyTableAdversary {
    name: String,
    table: Arc<PolicyTable>,
    horizon: u32,
    fallback: RoundAdversary,
}

impl PolicyTableAdversary {
    pub fn new(table: Arc<PolicyTable>, horizon: u32) -> Self {
        PolicyTableAdversary {
            name: "policy-table".into(),
            table,
            horizon,
            fallback: RoundAdversary::round_robin(),
        }
    }

    pub fn table(&self) -> &PolicyTable {
        &self.table
    }
}

impl<M: Model + ?Sized> Adversary<M> for PolicyTableAdversary {
    fn name(&self) -> &str {
        &self.name
    }

    fn schemas(&self) -> Vec<String> {
        vec!["unit-time".into(), "all".into()]
    }

    fn decide(&self, model: &M, frag: &ExecutionFragment<M::State>) -> Choice<M::State> {
        let Some(info) = model.processes() else {
            return FirstEnabled.decide(model, frag);
        };
        let elapsed = frag.elapsed().to_integer().to_u32();
        let remaining = match elapsed {
            Some(e) if e <= self.horizon => self.horizon - e,
            _ => return self.fallback.decide(model, frag),
        };
        let s = frag.lstate();
        let phase = round_phase(info, frag);
        let key = PolicyKey::new(info.memo_key(s), phase, remaining);
        if let Some(k) = self.table.get(&key) {
            if let Ok(mut options) = round_options(model, info, s, phase) {
                if (k as usize) < options.len() {
                    return options.swap_remove(k as usize).into_choice(model, s);
                }
            }
        }
        self.fallback.decide(model, frag)
    }

    fn memo_phase(&self, model: &M, frag: &ExecutionFragment<M::State>) -> Option<Vec<u8>> {
        let info = model.processes()?;
        Some(round_phase(info, frag).key())
    }
}

/// The named built-in schedulers. All of them satisfy Unit-Time under round
/// semantics. The policy-table entry carries an empty table and therefore
/// behaves as round-robin until a solved table is supplied.
pub fn builtin_adversaries<M: Model + ?Sized>(_model: &M) -> Vec<Arc<dyn Adversary<M>>> {
    vec![
        Arc::new(RoundAdversary::round_robin()),
        Arc::new(RoundAdversary::reverse()),
        Arc::new(RoundAdversary::greedy_blocker()),
        Arc::new(PolicyTableAdversary::new(Arc::new(PolicyTable::new()), 0)),
    ]
}

/// Looks up a scheduler by name; `stall` is included for Unit-Time
/// violation tests.
pub fn adversary_by_name<M: Model + ?Sized>(
    model: &M,
    name: &str,
) -> Option<Arc<dyn Adversary<M>>> {
    match name {
        "stall" => Some(Arc::new(RoundAdversary::stall())),
        "first-enabled" => Some(Arc::new(FirstEnabled)),
        _ => builtin_adversaries(model)
            .into_iter()
            .find(|a| a.name() == name),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::lehmann_rabin::{LehmannRabin, LrState, Pc, ProcState, Side};
    use crate::rational::int;

    fn flipping(n: usize) -> ExecutionFragment<LrState> {
        let mut s = LrState::initial(n);
        for p in s.procs.iter_mut() {
            *p = ProcState::new(Pc::W, Side::Left);
        }
        ExecutionFragment::new(s, int(0))
    }

    fn first_process(adv: &dyn Adversary<LehmannRabin>, m: &LehmannRabin, frag: &ExecutionFragment<LrState>) -> usize {
        let Choice::Step(step) = adv.decide(m, frag) else {
            panic!("expected a step")
        };
        crate::pta::ProcessInfo::process_of(m, &step.action).unwrap()
    }

    #[test]
    fn names_resolve_and_stall_is_not_unit_time() {
        let m = LehmannRabin::new(3).unwrap();
        for name in ["round-robin", "reverse-robin", "greedy-blocker", "policy-table", "stall", "first-enabled"] {
            let adv = adversary_by_name(&m, name).unwrap_or_else(|| panic!("{name}"));
            assert_eq!(adv.name(), name);
        }
        assert!(adversary_by_name(&m, "nobody").is_none());
        let stall = adversary_by_name(&m, "stall").unwrap();
        assert!(!stall.schemas().contains(&"unit-time".to_string()));
    }

    #[test]
    fn orders_differ_between_policies() {
        let m = LehmannRabin::new(3).unwrap();
        let mut frag = flipping(3);
        let nu = Step::time_passage(&m, frag.lstate(), &int(1)).unwrap();
        let next = nu.next.support()[0].0.clone();
        frag.extend_with(&nu, next).unwrap();
        assert_eq!(first_process(&RoundAdversary::round_robin(), &m, &frag), 0);
        assert_eq!(first_process(&RoundAdversary::reverse(), &m, &frag), 2);
    }

    #[test]
    fn empty_policy_table_falls_back_to_round_robin() {
        let m = LehmannRabin::new(3).unwrap();
        let frag = flipping(3);
        let table = PolicyTableAdversary::new(Arc::new(PolicyTable::new()), 4);
        assert_eq!(table.decide(&m, &frag), RoundAdversary::round_robin().decide(&m, &frag));
        assert!(table.table().is_empty());
    }
}
