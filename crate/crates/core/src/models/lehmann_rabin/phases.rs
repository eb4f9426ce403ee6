//! The five progress statements for the ring, their predicates, and the
//! start-state families they quantify over.

use std::collections::HashSet;

use super::{LehmannRabin, LrState, Region};
use crate::predicate::{PredSet, PredicateRegistry, StatePredicate};
use rand::Rng;

use crate::pta::{enabled_steps, reachable_states, sample_step, trial_rng, ModelError, ProcessInfo};
use crate::rational::{int, rat};
use crate::verify::{chain, CalculusError, ChainResult, TimeBoundStatement};

/// Name of the schema every progress statement is stated for.
pub const UNIT_TIME: &str = "unit-time";

/// Registry holding one predicate per region, named `T`, `RT`, `F`, `G`,
/// `P` and `C`.
pub fn lr_registry() -> PredicateRegistry<LrState> {
    let mut reg = PredicateRegistry::new();
    for r in Region::ALL {
        reg.register(StatePredicate::new(r.name(), move |s: &LrState| r.contains(s)));
    }
    reg
}

/// The five progress statements, in chain order:
/// `T →²₁ RT∪C`, `RT →³₁ F∪G∪P`, `F →²_{1/2} G∪P`, `G →⁵_{1/4} P`,
/// `P →¹₁ C`.
pub fn phase_statements() -> Vec<TimeBoundStatement> {
    let st = |src: &[&str], dst: &[&str], t: i64, p: (i64, i64)| {
        TimeBoundStatement::new(
            PredSet::of(src.iter().copied()),
            PredSet::of(dst.iter().copied()),
            int(t),
            rat(p.0, p.1),
            UNIT_TIME,
        )
    };
    vec![
        st(&["T"], &["RT", "C"], 2, (1, 1)),
        st(&["RT"], &["F", "G", "P"], 3, (1, 1)),
        st(&["F"], &["G", "P"], 2, (1, 2)),
        st(&["G"], &["P"], 5, (1, 4)),
        st(&["P"], &["C"], 1, (1, 1)),
    ]
}

/// The progress statements chained with the union-lifts they need; the
/// composed statement is `T →¹³_{1/8} C`.
pub fn phase_chain() -> Result<ChainResult, CalculusError> {
    chain(&phase_statements())
}

/// Every state reachable through any interleaving of discrete steps that
/// satisfies `pred`, one representative per memo key (states that differ
/// only in variables that can no longer matter behave identically).
pub fn reachable_in(
    model: &LehmannRabin,
    pred: &StatePredicate<LrState>,
    budget: usize,
) -> Result<Vec<LrState>, ModelError> {
    let mut seen = HashSet::new();
    Ok(reachable_states(model, budget)?
        .into_iter()
        .filter(|s| pred.eval(s) && seen.insert(model.memo_key(s)))
        .collect())
}

/// Up to `count` distinct states satisfying `pred`, collected along random
/// walks from the start state (for rings too large to enumerate). The
/// result is deterministic in `seed`.
pub fn sample_states(
    model: &LehmannRabin,
    pred: &StatePredicate<LrState>,
    count: usize,
    walk_len: usize,
    seed: u64,
) -> Result<Vec<LrState>, ModelError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut walk = 0;
    while out.len() < count && walk < 64 * count as u64 + 64 {
        let mut rng = trial_rng(seed, walk);
        walk += 1;
        let mut s = LrState::initial(model.n());
        let len = rng.random_range(1..=walk_len);
        for _ in 0..len {
            let steps = enabled_steps(model, &s)?;
            let k = rng.random_range(0..steps.len());
            s = sample_step(&steps[k], &mut rng);
        }
        if pred.eval(&s) && seen.insert(model.memo_key(&s)) {
            out.push(s);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn registry_knows_every_region() {
        let reg = lr_registry();
        assert_eq!(reg.names(), vec!["C", "F", "G", "P", "RT", "T"]);
        let s = LrState::initial(3);
        assert!(!reg.resolve(&PredSet::parse("T|C")).unwrap().eval(&s));
    }

    #[test]
    fn chain_composes_to_thirteen_and_an_eighth() {
        let c = phase_chain().unwrap();
        assert_eq!(c.composed.time, int(13));
        assert_eq!(c.composed.prob, rat(1, 8));
        assert_eq!(c.composed.source, PredSet::atom("T"));
        assert_eq!(c.composed.target, PredSet::atom("C"));
    }

    #[test]
    fn source_families_are_nonempty_and_deduplicated() {
        let m = LehmannRabin::new(3).unwrap();
        let reg = lr_registry();
        let g = reachable_in(&m, reg.get("G").unwrap(), 1_000_000).unwrap();
        assert!(!g.is_empty());
        let keys: HashSet<_> = g.iter().map(|s| m.memo_key(s)).collect();
        assert_eq!(keys.len(), g.len());
    }
}
