//! Deterministic schedulers resolving all nondeterminism of a model.
//!
//! An adversary sees the whole execution fragment so far and either halts or
//! returns one step enabled at its last state (or a time passage step).
//! [`resolve`] re-validates every answer against the model.

mod builtin;
mod enumerate;
mod round;
mod schema;
mod unit_time;

use std::sync::Arc;

use thiserror::Error;

use crate::pta::{enabled_steps, ExecutionFragment, Model, ModelError, Step};

pub use builtin::{
    adversary_by_name, builtin_adversaries, FirstEnabled, PolicyKey, PolicyRow, PolicyTable,
    PolicyTableAdversary, RoundAdversary, RoundPolicy,
};
pub use enumerate::{
    enumerate_adversaries, fragment_key, ChoiceRule, FreeRule, LockstepRule, TableAdversary,
};
pub use round::{round_options, round_phase, RoundOption, RoundPhase};
pub use schema::{schema, AdversarySchema, SCHEMAS};
pub use unit_time::{check_unit_time, UnitTimeMonitor, ViolationWitness};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdversaryError {
    #[error("adversary {adversary} chose {action}, which is not enabled at the last state")]
    NotEnabled { adversary: String, action: String },
    #[error("unsupported model: {0}")]
    Unsupported(String),
    #[error("Unit-Time violation: {0}")]
    Violation(Box<ViolationWitness>),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// What an adversary does next: halt (δ) or take one step.
#[derive(Debug, Clone, PartialEq)]
pub enum Choice<S> {
    Halt,
    Step(Step<S>),
}

impl<S> Choice<S> {
    pub fn step(&self) -> Option<&Step<S>> {
        match self {
            Choice::Halt => None,
            Choice::Step(s) => Some(s),
        }
    }
}

pub trait Adversary<M: Model + ?Sized>: Send + Sync {
    fn name(&self) -> &str;

    /// Names of the adversary schemas this policy belongs to.
    fn schemas(&self) -> Vec<String> {
        Vec::new()
    }

    /// Must be a pure function of the fragment.
    fn decide(&self, model: &M, frag: &ExecutionFragment<M::State>) -> Choice<M::State>;

    /// If the decision at `frag` depends only on the last state, the
    /// returned phase bytes and the elapsed time, returns those phase bytes.
    /// Enables memoized tree walks.
    fn memo_phase(&self, _model: &M, _frag: &ExecutionFragment<M::State>) -> Option<Vec<u8>> {
        None
    }
}

/// Asks `adv` for its choice at `frag` and checks it against the model.
pub fn resolve<M, A>(
    model: &M,
    adv: &A,
    frag: &ExecutionFragment<M::State>,
) -> Result<Choice<M::State>, AdversaryError>
where
    M: Model + ?Sized,
    A: Adversary<M> + ?Sized,
{
    let choice = adv.decide(model, frag);
    if let Choice::Step(step) = &choice {
        let last = frag.lstate();
        let valid = if step.is_time_passage() {
            Step::time_passage(model, last, &step.elapse).as_ref() == Some(step)
        } else {
            &step.source == last && enabled_steps(model, last)?.iter().any(|s| s == step)
        };
        if !valid {
            return Err(AdversaryError::NotEnabled {
                adversary: adv.name().to_string(),
                action: step.action.to_string(),
            });
        }
    }
    Ok(choice)
}

/// `A′(α′) = A(α ⌢ α′)`: the adversary that behaves as `inner` would after
/// having seen `prefix`.
pub struct Shifted<M: Model + ?Sized> {
    inner: Arc<dyn Adversary<M>>,
    prefix: ExecutionFragment<M::State>,
    name: String,
}

impl<M: Model + ?Sized> Shifted<M> {
    pub fn prefix(&self) -> &ExecutionFragment<M::State> {
        &self.prefix
    }
}

pub fn shift<M: Model + ?Sized>(
    adv: Arc<dyn Adversary<M>>,
    prefix: ExecutionFragment<M::State>,
) -> Shifted<M> {
    let name = format!("{}@{}", adv.name(), prefix.len());
    Shifted {
        inner: adv,
        prefix,
        name,
    }
}

impl<M: Model + ?Sized> Shifted<M> {
    /// The decision, or a junction error when `frag` does not continue the
    /// stored prefix.
    pub fn try_decide(
        &self,
        model: &M,
        frag: &ExecutionFragment<M::State>,
    ) -> Result<Choice<M::State>, ModelError> {
        let whole = self.prefix.concat(frag)?;
        Ok(self.inner.decide(model, &whole))
    }
}

impl<M: Model + ?Sized> Adversary<M> for Shifted<M> {
    fn name(&self) -> &str {
        &self.name
    }

    fn schemas(&self) -> Vec<String> {
        self.inner.schemas()
    }

    /// Halts on a junction mismatch; use [`Shifted::try_decide`] to observe
    /// the error.
    fn decide(&self, model: &M, frag: &ExecutionFragment<M::State>) -> Choice<M::State> {
        self.try_decide(model, frag).unwrap_or(Choice::Halt)
    }

    fn memo_phase(&self, model: &M, frag: &ExecutionFragment<M::State>) -> Option<Vec<u8>> {
        let whole = self.prefix.concat(frag).ok()?;
        self.inner.memo_phase(model, &whole)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::coin::{Coin, CoinState, HeadThenQ, TwoCoins, FLIP_P, FLIP_Q};
    use crate::pta::{ActionId, ActionKind, Distribution};
    use crate::rational::zero;

    fn after(frag: &ExecutionFragment<CoinState>, action: &str, s: CoinState) -> ExecutionFragment<CoinState> {
        let mut f = frag.clone();
        f.push(ActionId::new(action, ActionKind::Internal), s, &zero()).unwrap();
        f
    }

    fn head() -> CoinState {
        CoinState { p: Coin::Head, q: Coin::Unflipped }
    }

    /// Claims to flip `P` even when it is already flipped.
    struct Cheater;

    impl Adversary<TwoCoins> for Cheater {
        fn name(&self) -> &str {
            "cheater"
        }

        fn decide(&self, _model: &TwoCoins, frag: &ExecutionFragment<CoinState>) -> Choice<CoinState> {
            let s = *frag.lstate();
            Choice::Step(Step::new(
                s,
                ActionId::new(FLIP_P, ActionKind::Internal),
                Distribution::fair(CoinState { p: Coin::Head, ..s }, CoinState { p: Coin::Tail, ..s }),
            ))
        }
    }

    #[test]
    fn resolve_rejects_steps_that_are_not_enabled() {
        let start = ExecutionFragment::singleton(TwoCoins::start());
        assert!(resolve(&TwoCoins, &Cheater, &start).is_ok());
        let err = resolve(&TwoCoins, &Cheater, &after(&start, FLIP_P, head())).unwrap_err();
        assert!(matches!(err, AdversaryError::NotEnabled { .. }), "{err}");
    }

    #[test]
    fn shift_by_a_singleton_is_the_identity() {
        let start = ExecutionFragment::singleton(TwoCoins::start());
        let adv: Arc<dyn Adversary<TwoCoins>> = Arc::new(HeadThenQ);
        let shifted = shift(adv.clone(), start.clone());
        for frag in [start.clone(), after(&start, FLIP_P, head())] {
            assert_eq!(shifted.decide(&TwoCoins, &frag), adv.decide(&TwoCoins, &frag));
        }
    }

    #[test]
    fn shift_of_shift_is_shift_by_the_concatenation() {
        let start = ExecutionFragment::singleton(TwoCoins::start());
        let alpha = after(&start, FLIP_P, head());
        let beta = ExecutionFragment::singleton(head());
        let adv: Arc<dyn Adversary<TwoCoins>> = Arc::new(HeadThenQ);
        let twice = shift(Arc::new(shift(adv.clone(), alpha.clone())), beta.clone());
        let once = shift(adv, alpha.concat(&beta).unwrap());
        let probe = ExecutionFragment::singleton(head());
        assert_eq!(twice.decide(&TwoCoins, &probe), once.decide(&TwoCoins, &probe));
        assert_eq!(once.decide(&TwoCoins, &probe).step().unwrap().action.name(), FLIP_Q);
    }

    #[test]
    fn shifted_adversary_reports_junction_mismatch() {
        let start = ExecutionFragment::singleton(TwoCoins::start());
        let shifted = shift(Arc::new(HeadThenQ) as Arc<dyn Adversary<TwoCoins>>, after(&start, FLIP_P, head()));
        let elsewhere = ExecutionFragment::singleton(TwoCoins::start());
        assert!(shifted.try_decide(&TwoCoins, &elsewhere).is_err());
        assert_eq!(shifted.decide(&TwoCoins, &elsewhere), Choice::Halt);
    }
}
