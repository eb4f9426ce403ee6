//! Small random probabilistic automata for checking the statement calculus
//! against exact computation over every adversary.

use std::sync::Arc;

use num_traits::One;
use rand::Rng;

use crate::adversary::{enumerate_adversaries, LockstepRule};
use crate::events::{exact_probability, EventError, EventSchema};
use crate::predicate::StatePredicate;
use crate::pta::{trial_rng, ActionId, ActionKind, Distribution, ExecutionFragment, Model, ModelError, Step};
use crate::rational::{int, rat, Rational};

/// One step of a random model: an action label and its outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomStep {
    pub action: String,
    pub outcomes: Vec<(u8, Rational)>,
}

/// States are `0..size`, all of them start states.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomModel {
    pub seed: u64,
    pub size: u8,
    pub steps: Vec<Vec<RandomStep>>,
}

const WEIGHTS: [(i64, i64); 4] = [(1, 2), (1, 3), (1, 4), (2, 5)];

impl RandomModel {
    /// A model with 2 to `max_states` states (at most 6), each enabling up
    /// to two steps with up to two outcomes. Deterministic in `seed`.
    pub fn generate(seed: u64, max_states: u8) -> Self {
        let max_states = max_states.clamp(2, 6);
        let mut rng = trial_rng(seed, 0);
        let size = rng.random_range(2..=max_states);
        let steps = (0..size)
            .map(|_| {
                let k = rng.random_range(0..=2);
                (0..k)
                    .map(|j| {
                        let a = rng.random_range(0..size);
                        let outcomes = if rng.random_bool(0.5) {
                            vec![(a, Rational::one())]
                        } else {
                            let mut b = rng.random_range(0..size);
                            if b == a {
                                b = (a + 1) % size;
                            }
                            let (num, den) = WEIGHTS[rng.random_range(0..WEIGHTS.len())];
                            let w = rat(num, den);
                            vec![(a, w.clone()), (b, Rational::one() - w)]
                        };
                        RandomStep {
                            action: ["a", "b"][j].to_string(),
                            outcomes,
                        }
                    })
                    .collect()
            })
            .collect();
        RandomModel { seed, size, steps }
    }

    /// A random nonempty set of states as a predicate named after its
    /// members.
    pub fn random_set(&self, rng: &mut impl Rng) -> StatePredicate<u8> {
        let mask = loop {
            let m = rng.random_range(1u32..(1 << self.size));
            if m != 0 {
                break m;
            }
        };
        set_predicate(mask)
    }

    pub fn states(&self) -> Vec<u8> {
        (0..self.size).collect()
    }
}

/// The set of states whose bits are set in `mask`.
pub fn set_predicate(mask: u32) -> StatePredicate<u8> {
    StatePredicate::new(format!("{{{mask:b}}}"), move |s: &u8| mask & (1 << s) != 0)
}

impl Model for RandomModel {
    type State = u8;

    fn name(&self) -> String {
        format!("random(seed={}, states={})", self.seed, self.size)
    }

    fn start_states(&self) -> Vec<u8> {
        self.states()
    }

    fn actions(&self) -> Vec<ActionId> {
        vec![
            ActionId::new("a", ActionKind::Internal),
            ActionId::new("b", ActionKind::Internal),
        ]
    }

    fn enabled(&self, s: &u8) -> Result<Vec<Step<u8>>, ModelError> {
        let list = self
            .steps
            .get(*s as usize)
            .ok_or_else(|| ModelError::UnknownState(format!("state {s}")))?;
        list.iter()
            .map(|st| {
                Ok(Step::new(
                    *s,
                    ActionId::new(st.action.clone(), ActionKind::Internal),
                    Distribution::new(st.outcomes.clone())?,
                ))
            })
            .collect()
    }

    fn encode(&self, s: &u8) -> Vec<u8> {
        vec![0, 0, 0, 1, *s]
    }

    fn decode(&self, bytes: &[u8]) -> Result<u8, ModelError> {
        match bytes {
            [0, 0, 0, 1, s] if *s < self.size => Ok(*s),
            _ => Err(ModelError::Decode("expected one state byte".into())),
        }
    }
}

/// Minimum, over `starts` and over every lockstep adversary, of the
/// probability of reaching `target` within `horizon` time units. Starts are
/// skipped when empty (the minimum of nothing is 1).
pub fn worst_reach<M: Model>(
    model: &M,
    starts: &[M::State],
    target: &StatePredicate<M::State>,
    horizon: u32,
    limit: usize,
) -> Result<Rational, EventError> {
    let h = int(horizon as i64);
    let schema = EventSchema::reach_within(target.clone(), h.clone());
    let mut worst = Rational::one();
    for s in starts {
        let start = ExecutionFragment::singleton(s.clone());
        let advs = enumerate_adversaries(
            model,
            Arc::new(LockstepRule),
            &start,
            &h,
            2 * horizon as usize + 1,
            limit,
        )
        .map_err(crate::adversary::AdversaryError::from)?;
        for adv in &advs {
            let v = exact_probability(model, adv, &start, &schema)?.value;
            if v < worst {
                worst = v;
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pta::{enabled_steps, reachable_states};

    #[test]
    fn generation_is_deterministic_and_small() {
        for seed in 0..50 {
            let m = RandomModel::generate(seed, 6);
            assert_eq!(m, RandomModel::generate(seed, 6));
            assert!((2..=6).contains(&m.size));
            for s in m.states() {
                // Distributions are validated on construction.
                assert!(enabled_steps(&m, &s).unwrap().len() <= 2);
            }
            assert!(reachable_states(&m, 100).unwrap().len() <= 6);
        }
    }

    #[test]
    fn reach_is_certain_from_inside_the_target() {
        let m = RandomModel::generate(7, 4);
        let all = set_predicate((1 << m.size) - 1);
        assert_eq!(worst_reach(&m, &m.states(), &all, 2, 100_000).unwrap(), Rational::one());
    }

    #[test]
    fn deterministic_chain_needs_its_length() {
        let m = RandomModel {
            seed: 0,
            size: 3,
            steps: vec![
                vec![RandomStep { action: "a".into(), outcomes: vec![(1, Rational::one())] }],
                vec![RandomStep { action: "a".into(), outcomes: vec![(2, Rational::one())] }],
                vec![],
            ],
        };
        let target = set_predicate(0b100);
        assert_eq!(worst_reach(&m, &[0], &target, 1, 1000).unwrap(), int(0));
        assert_eq!(worst_reach(&m, &[0], &target, 2, 1000).unwrap(), int(1));
    }
}
