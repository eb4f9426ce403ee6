//! Exhaustive enumeration of deterministic adversaries on small models.
//!
//! Only the choices made along fragments that can actually occur before the
//! horizon matter, so an adversary is represented by a table from reachable
//! fragments to an option index. Every distinct table is generated once.

use std::collections::HashMap;
use std::sync::Arc;

use num_traits::One;

use super::{Adversary, Choice};
use crate::pta::{enabled_steps, ExecutionFragment, Model, ModelError, Step};
use crate::rational::Rational;

/// The option list an enumerated adversary picks from at each fragment.
pub trait ChoiceRule<M: Model + ?Sized>: Send + Sync {
    fn name(&self) -> &str;

    /// Schema names the generated adversaries belong to.
    fn schemas(&self) -> Vec<String>;

    fn options(
        &self,
        model: &M,
        frag: &ExecutionFragment<M::State>,
    ) -> Result<Vec<Choice<M::State>>, ModelError>;
}

/// Untimed adversaries: halt or take any enabled step.
#[derive(Debug, Clone, Copy, Default)]
pub struct FreeRule;

impl<M: Model + ?Sized> ChoiceRule<M> for FreeRule {
    fn name(&self) -> &str {
        "free"
    }

    fn schemas(&self) -> Vec<String> {
        vec!["all".into()]
    }

    fn options(
        &self,
        model: &M,
        frag: &ExecutionFragment<M::State>,
    ) -> Result<Vec<Choice<M::State>>, ModelError> {
        let mut out = vec![Choice::Halt];
        out.extend(
            enabled_steps(model, frag.lstate())?
                .into_iter()
                .map(Choice::Step),
        );
        Ok(out)
    }
}

/// Lockstep adversaries: one unit of time passes before every discrete
/// step, then any enabled step is taken; when nothing is enabled only time
/// passes. They never halt.
#[derive(Debug, Clone, Copy, Default)]
pub struct LockstepRule;

impl<M: Model + ?Sized> ChoiceRule<M> for LockstepRule {
    fn name(&self) -> &str {
        "lockstep"
    }

    fn schemas(&self) -> Vec<String> {
        vec!["lockstep".into(), "all".into()]
    }

    fn options(
        &self,
        model: &M,
        frag: &ExecutionFragment<M::State>,
    ) -> Result<Vec<Choice<M::State>>, ModelError> {
        let s = frag.lstate();
        let after_nu = frag
            .entries()
            .last()
            .and_then(|e| e.action.as_ref())
            .is_some_and(|a| a.is_time_passage());
        if after_nu {
            let steps = enabled_steps(model, s)?;
            if !steps.is_empty() {
                return Ok(steps.into_iter().map(Choice::Step).collect());
            }
        }
        Ok(Step::time_passage(model, s, &Rational::one())
            .map(Choice::Step)
            .into_iter()
            .collect())
    }
}

/// Canonical bytes of a whole fragment: actions, states and times.
pub fn fragment_key<M: Model + ?Sized>(model: &M, frag: &ExecutionFragment<M::State>) -> Vec<u8> {
    let mut out = Vec::new();
    for e in frag.entries() {
        if let Some(a) = &e.action {
            out.extend(a.name().as_bytes());
        }
        out.push(0xff);
        let enc = model.encode(&e.state);
        out.extend((enc.len() as u32).to_be_bytes());
        out.extend(enc);
        out.extend(e.time.numer().to_signed_bytes_be());
        out.push(b'/');
        out.extend(e.time.denom().to_signed_bytes_be());
        out.push(0xfe);
    }
    out
}

/// One enumerated adversary. Fragments missing from the table (beyond the
/// enumeration horizon) halt.
pub struct TableAdversary<M: Model + ?Sized> {
    name: String,
    rule: Arc<dyn ChoiceRule<M>>,
    table: Arc<HashMap<Vec<u8>, usize>>,
}

impl<M: Model + ?Sized> Clone for TableAdversary<M> {
    fn clone(&self) -> Self {
        TableAdversary {
            name: self.name.clone(),
            rule: self.rule.clone(),
            table: self.table.clone(),
        }
    }
}

impl<M: Model + ?Sized> TableAdversary<M> {
    pub fn table_len(&self) -> usize {
        self.table.len()
    }
}

impl<M: Model + ?Sized> Adversary<M> for TableAdversary<M> {
    fn name(&self) -> &str {
        &self.name
    }

    fn schemas(&self) -> Vec<String> {
        self.rule.schemas()
    }

    fn decide(&self, model: &M, frag: &ExecutionFragment<M::State>) -> Choice<M::State> {
        let Some(&k) = self.table.get(&fragment_key(model, frag)) else {
            return Choice::Halt;
        };
        match self.rule.options(model, frag) {
            Ok(mut options) if k < options.len() => options.swap_remove(k),
            _ => Choice::Halt,
        }
    }
}

type Table = Vec<(Vec<u8>, usize)>;

/// All adversaries following `rule` from `start`, distinguished only by
/// their choices on fragments reachable before `horizon` time units and
/// `max_actions` actions. Fails with a budget error beyond `limit`
/// adversaries.
pub fn enumerate_adversaries<M: Model + ?Sized>(
    model: &M,
    rule: Arc<dyn ChoiceRule<M>>,
    start: &ExecutionFragment<M::State>,
    horizon: &Rational,
    max_actions: usize,
    limit: usize,
) -> Result<Vec<TableAdversary<M>>, ModelError> {
    let deadline = start.start_time() + horizon;
    let mut frag = start.clone();
    let tables = strategies(
        model,
        rule.as_ref(),
        &mut frag,
        &deadline,
        max_actions,
        limit,
    )?;
    Ok(tables
        .into_iter()
        .enumerate()
        .map(|(k, t)| TableAdversary {
            name: format!("{}#{k}", rule.name()),
            rule: rule.clone(),
            table: Arc::new(t.into_iter().collect()),
        })
        .collect())
}

fn strategies<M: Model + ?Sized>(
    model: &M,
    rule: &dyn ChoiceRule<M>,
    frag: &mut ExecutionFragment<M::State>,
    deadline: &Rational,
    max_actions: usize,
    limit: usize,
) -> Result<Vec<Table>, ModelError> {
    if frag.len() >= max_actions {
        return Ok(vec![Vec::new()]);
    }
    let options = rule.options(model, frag)?;
    if options.is_empty() {
        return Ok(vec![Vec::new()]);
    }
    let key = fragment_key(model, frag);
    let mut result: Vec<Table> = Vec::new();
    let mut leaf_seen = false;
    for (idx, option) in options.iter().enumerate() {
        let step = match option {
            Choice::Halt => {
                result.push(vec![(key.clone(), idx)]);
                continue;
            }
            Choice::Step(step) => step,
        };
        if &(frag.end_time() + &step.elapse) > deadline {
            // Every step past the horizon ends the tree the same way.
            if !leaf_seen {
                leaf_seen = true;
                result.push(vec![(key.clone(), idx)]);
            }
            continue;
        }
        let mut combos: Vec<Table> = vec![vec![(key.clone(), idx)]];
        for (s, _) in step.next.support() {
            frag.push(step.action.clone(), s.clone(), &step.elapse)?;
            let sub = strategies(model, rule, frag, deadline, max_actions, limit);
            frag.pop();
            let sub = sub?;
            if combos.len().saturating_mul(sub.len()) > limit {
                return Err(ModelError::Budget { budget: limit });
            }
            let mut next = Vec::with_capacity(combos.len() * sub.len());
            for c in &combos {
                for t in &sub {
                    let mut joined = c.clone();
                    joined.extend(t.iter().cloned());
                    next.push(joined);
                }
            }
            combos = next;
        }
        result.extend(combos);
        if result.len() > limit {
            return Err(ModelError::Budget { budget: limit });
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::resolve;
    use crate::models::coin::TwoCoins;
    use crate::rational::int;

    #[test]
    fn free_adversaries_on_two_coins() {
        let start = ExecutionFragment::singleton(TwoCoins::start());
        // Halt, or flip one coin and then halt or flip the other: 1 + 2·(1 + 2·2).
        let advs = enumerate_adversaries(&TwoCoins, Arc::new(FreeRule), &start, &int(2), 1, 1000).unwrap();
        assert_eq!(advs.len(), 3);
        let advs = enumerate_adversaries(&TwoCoins, Arc::new(FreeRule), &start, &int(2), 2, 1000).unwrap();
        assert_eq!(advs.len(), 9);
        for a in &advs {
            resolve(&TwoCoins, a, &start).unwrap();
        }
    }

    #[test]
    fn enumeration_respects_its_limit() {
        let start = ExecutionFragment::singleton(TwoCoins::start());
        let result = enumerate_adversaries(&TwoCoins, Arc::new(FreeRule), &start, &int(2), 2, 4);
        assert!(matches!(result, Err(ModelError::Budget { .. })));
    }

    #[test]
    fn lockstep_adversaries_start_with_time_passage() {
        let start = ExecutionFragment::singleton(TwoCoins::start());
        let advs = enumerate_adversaries(&TwoCoins, Arc::new(LockstepRule), &start, &int(3), 7, 1000).unwrap();
        assert!(!advs.is_empty());
        for a in &advs {
            let Choice::Step(step) = a.decide(&TwoCoins, &start) else {
                panic!("lockstep adversaries never halt")
            };
            assert!(step.is_time_passage());
        }
    }
}
