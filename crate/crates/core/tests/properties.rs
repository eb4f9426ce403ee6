//! Randomized invariants of the model layer, the event evaluator and the
//! calculus.

use std::sync::Arc;

use proptest::prelude::*;
use rand::Rng;

use timebound::adversary::{enumerate_adversaries, LockstepRule};
use timebound::events::{exact_probability, EventSchema};
use timebound::models::lehmann_rabin::{check_resource_invariant, LehmannRabin, LrState, Pc};
use timebound::models::random::{set_predicate, worst_reach, RandomModel};
use timebound::predicate::PredSet;
use timebound::pta::{enabled_steps, sample_step, trial_rng, ExecutionFragment, Model};
use timebound::rational::{int, one, rat, serde_rational, Rational};
use timebound::verify::{compose, recurrence_from_chain, solve_recurrence, TimeBoundStatement};

/// States met along one random walk from the start state.
fn walk(model: &LehmannRabin, seed: u64, len: usize) -> Vec<LrState> {
    let mut rng = trial_rng(seed, 0);
    let mut s = model.start_states().remove(0);
    let mut out = vec![s.clone()];
    for _ in 0..len {
        let steps = enabled_steps(model, &s).unwrap();
        let k = rng.random_range(0..steps.len());
        s = sample_step(&steps[k], &mut rng);
        out.push(s.clone());
    }
    out
}

fn statement(t: i64, p: Rational) -> TimeBoundStatement {
    TimeBoundStatement::new(PredSet::atom("A"), PredSet::atom("B"), int(t), p, "unit-time")
}

fn prob() -> impl Strategy<Value = Rational> {
    (0i64..=8, 1i64..=8).prop_map(|(a, b)| rat(a.min(b), b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn only_flips_are_random(n in 3usize..=7, seed in any::<u64>()) {
        let m = LehmannRabin::new(n).unwrap();
        for s in walk(&m, seed, 80) {
            for step in enabled_steps(&m, &s).unwrap() {
                let total: Rational = step.next.support().iter().map(|(_, w)| w.clone()).sum();
                prop_assert_eq!(total, one());
                if step.next.len() > 1 {
                    prop_assert!(step.action.name().starts_with("flip_"));
                    prop_assert_eq!(step.next.len(), 2);
                    prop_assert!(step.next.support().iter().all(|(_, w)| *w == rat(1, 2)));
                }
            }
        }
    }

    #[test]
    fn resource_invariant_and_mutual_exclusion_hold_on_walks(n in 3usize..=10, seed in any::<u64>()) {
        let m = LehmannRabin::new(n).unwrap();
        for s in walk(&m, seed, 120) {
            prop_assert!(check_resource_invariant(&s), "invariant fails at {:?}", s);
            for i in 0..n {
                let j = (i + 1) % n;
                let eating = |k: usize| matches!(s.procs[k].pc, Pc::P | Pc::C);
                prop_assert!(!(eating(i) && eating(j)), "neighbours {} and {} both eat in {:?}", i, j, s);
            }
        }
    }

    #[test]
    fn state_encoding_round_trips(n in 3usize..=8, seed in any::<u64>()) {
        let m = LehmannRabin::new(n).unwrap();
        for s in walk(&m, seed, 40) {
            prop_assert_eq!(m.decode(&m.encode(&s)).unwrap(), s);
        }
    }

    #[test]
    fn complement_event_has_complementary_probability(
        seed in 0u64..500,
        mask in 1u32..64,
        horizon in 0u32..=2,
    ) {
        let model = RandomModel::generate(seed, 5);
        let target = set_predicate(mask);
        let reach = EventSchema::reach_within(target, int(horizon as i64));
        let not_reach = EventSchema::Not(Box::new(reach.clone()));
        let start = ExecutionFragment::singleton(model.states()[0]);
        let advs = enumerate_adversaries(
            &model,
            Arc::new(LockstepRule),
            &start,
            &int(horizon as i64),
            2 * horizon as usize + 1,
            10_000,
        )
        .unwrap();
        for adv in advs.iter().take(4) {
            let p = exact_probability(&model, adv, &start, &reach).unwrap().value;
            let q = exact_probability(&model, adv, &start, &not_reach).unwrap().value;
            prop_assert_eq!(p + q, one());
        }
    }

    #[test]
    fn worst_reach_grows_with_horizon(seed in 0u64..500, mask in 1u32..64) {
        let model = RandomModel::generate(seed, 5);
        let target = set_predicate(mask);
        let starts = model.states();
        let mut prev = int(0);
        for h in 0..=2 {
            let v = worst_reach(&model, &starts, &target, h, 100_000).unwrap();
            prop_assert!(v >= prev, "horizon {}: {} < {}", h, v, prev);
            prev = v;
        }
    }

    #[test]
    fn composition_adds_times_and_multiplies_probabilities(
        t1 in 0i64..20, t2 in 0i64..20, p1 in prob(), p2 in prob(),
    ) {
        let a = statement(t1, p1.clone());
        let b = TimeBoundStatement::new(PredSet::atom("B"), PredSet::atom("C"), int(t2), p2.clone(), "unit-time");
        let c = compose(&a, &b).unwrap();
        prop_assert_eq!(c.time, int(t1 + t2));
        prop_assert_eq!(c.prob, p1 * p2);
        prop_assert_eq!(c.source, PredSet::atom("A"));
        prop_assert_eq!(c.target, PredSet::atom("C"));
    }

    #[test]
    fn recurrence_solution_is_at_least_one_pass(
        times in proptest::collection::vec(1i64..6, 3..6),
        probs in proptest::collection::vec(1i64..=4, 3..6),
    ) {
        let k = times.len().min(probs.len());
        let stmts: Vec<_> = (0..k).map(|i| statement(times[i], rat(probs[i], 4))).collect();
        let spec = recurrence_from_chain(&stmts).unwrap();
        let total = solve_recurrence(&spec).unwrap();
        let one_pass: i64 = times[..k].iter().sum();
        prop_assert!(total >= int(one_pass));
        if probs[..k].iter().all(|&p| p == 4) {
            prop_assert_eq!(total, int(one_pass));
        }
    }

    #[test]
    fn rationals_survive_json(num in -1_000_000i64..1_000_000, den in 1i64..1_000_000) {
        #[derive(serde::Serialize, serde::Deserialize)]
        struct W(#[serde(with = "serde_rational")] Rational);
        let r = rat(num, den);
        let text = serde_json::to_string(&W(r.clone())).unwrap();
        let back: W = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.0, r);
    }
}
