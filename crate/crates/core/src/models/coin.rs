//! Two processes, `P` and `Q`, each able to flip one fair coin once. The
//! smallest model on which first-occurrence events and their independence
//! bounds can be checked by brute force.

use std::fmt;

use crate::adversary::{Adversary, Choice};
use crate::pta::{
    enabled_steps, ActionId, ActionKind, Distribution, ExecutionFragment, Model, ModelError,
    ProcessInfo, Step,
};
use crate::predicate::StatePredicate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Coin {
    Unflipped = 0,
    Head = 1,
    Tail = 2,
}

impl Coin {
    fn from_u8(b: u8) -> Option<Coin> {
        match b {
            0 => Some(Coin::Unflipped),
            1 => Some(Coin::Head),
            2 => Some(Coin::Tail),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoinState {
    pub p: Coin,
    pub q: Coin,
}

impl fmt::Display for CoinState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {:?})", self.p, self.q)
    }
}

pub const FLIP_P: &str = "flip_P";
pub const FLIP_Q: &str = "flip_Q";

#[derive(Debug, Clone, Copy, Default)]
pub struct TwoCoins;

impl TwoCoins {
    pub fn start() -> CoinState {
        CoinState {
            p: Coin::Unflipped,
            q: Coin::Unflipped,
        }
    }

    /// `P` shows `coin`.
    pub fn p_is(coin: Coin) -> StatePredicate<CoinState> {
        StatePredicate::new(format!("P={coin:?}"), move |s: &CoinState| s.p == coin)
    }

    /// `Q` shows `coin`.
    pub fn q_is(coin: Coin) -> StatePredicate<CoinState> {
        StatePredicate::new(format!("Q={coin:?}"), move |s: &CoinState| s.q == coin)
    }
}

impl Model for TwoCoins {
    type State = CoinState;

    fn name(&self) -> String {
        "two-coins".into()
    }

    fn start_states(&self) -> Vec<CoinState> {
        vec![TwoCoins::start()]
    }

    fn actions(&self) -> Vec<ActionId> {
        vec![
            ActionId::new(FLIP_P, ActionKind::Internal),
            ActionId::new(FLIP_Q, ActionKind::Internal),
        ]
    }

    fn enabled(&self, s: &CoinState) -> Result<Vec<Step<CoinState>>, ModelError> {
        let mut out = Vec::new();
        if s.p == Coin::Unflipped {
            let head = CoinState { p: Coin::Head, ..*s };
            let tail = CoinState { p: Coin::Tail, ..*s };
            out.push(Step::new(
                *s,
                ActionId::new(FLIP_P, ActionKind::Internal),
                Distribution::fair(head, tail),
            ));
        }
        if s.q == Coin::Unflipped {
            let head = CoinState { q: Coin::Head, ..*s };
            let tail = CoinState { q: Coin::Tail, ..*s };
            out.push(Step::new(
                *s,
                ActionId::new(FLIP_Q, ActionKind::Internal),
                Distribution::fair(head, tail),
            ));
        }
        Ok(out)
    }

    /// Length prefix, then one byte per coin.
    fn encode(&self, s: &CoinState) -> Vec<u8> {
        vec![0, 0, 0, 2, s.p as u8, s.q as u8]
    }

    fn decode(&self, bytes: &[u8]) -> Result<CoinState, ModelError> {
        match bytes {
            [0, 0, 0, 2, p, q] => Ok(CoinState {
                p: Coin::from_u8(*p).ok_or_else(|| ModelError::Decode("bad coin".into()))?,
                q: Coin::from_u8(*q).ok_or_else(|| ModelError::Decode("bad coin".into()))?,
            }),
            _ => Err(ModelError::Decode("expected 6 bytes".into())),
        }
    }

    fn processes(&self) -> Option<&dyn ProcessInfo<CoinState>> {
        Some(self)
    }
}

impl ProcessInfo<CoinState> for TwoCoins {
    fn process_count(&self) -> usize {
        2
    }

    fn process_of(&self, action: &ActionId) -> Option<usize> {
        match action.name() {
            FLIP_P => Some(0),
            FLIP_Q => Some(1),
            _ => None,
        }
    }

    fn is_user_action(&self, _action: &ActionId) -> bool {
        false
    }

    fn is_ready(&self, s: &CoinState, process: usize) -> bool {
        match process {
            0 => s.p == Coin::Unflipped,
            _ => s.q == Coin::Unflipped,
        }
    }

    fn memo_key(&self, s: &CoinState) -> Vec<u8> {
        vec![s.p as u8, s.q as u8]
    }
}

/// Flips `P` first, then flips `Q` only if `P` showed head.
#[derive(Debug, Clone, Copy, Default)]
pub struct HeadThenQ;

impl Adversary<TwoCoins> for HeadThenQ {
    fn name(&self) -> &str {
        "head-then-q"
    }

    fn schemas(&self) -> Vec<String> {
        vec!["all".into()]
    }

    fn decide(&self, model: &TwoCoins, frag: &ExecutionFragment<CoinState>) -> Choice<CoinState> {
        let s = frag.lstate();
        let want = match (s.p, s.q) {
            (Coin::Unflipped, _) => FLIP_P,
            (Coin::Head, Coin::Unflipped) => FLIP_Q,
            _ => return Choice::Halt,
        };
        enabled_steps(model, s)
            .ok()
            .and_then(|steps| steps.into_iter().find(|st| st.action.name() == want))
            .map_or(Choice::Halt, Choice::Step)
    }

    fn memo_phase(&self, _model: &TwoCoins, _frag: &ExecutionFragment<CoinState>) -> Option<Vec<u8>> {
        Some(Vec::new())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::resolve;
    use crate::pta::{is_fully_probabilistic, reachable_states};

    #[test]
    fn four_final_states() {
        let states = reachable_states(&TwoCoins, 100).unwrap();
        assert_eq!(states.len(), 9);
        assert!(!is_fully_probabilistic(&TwoCoins, 100).unwrap());
    }

    #[test]
    fn codec_round_trips() {
        for s in reachable_states(&TwoCoins, 100).unwrap() {
            assert_eq!(TwoCoins.decode(&TwoCoins.encode(&s)).unwrap(), s);
        }
    }

    #[test]
    fn head_then_q_schedules_q_only_after_head() {
        let start = ExecutionFragment::singleton(TwoCoins::start());
        let first = resolve(&TwoCoins, &HeadThenQ, &start).unwrap();
        assert_eq!(first.step().unwrap().action.name(), FLIP_P);
        let mut head = start.clone();
        head.push(
            ActionId::new(FLIP_P, ActionKind::Internal),
            CoinState { p: Coin::Head, q: Coin::Unflipped },
            &crate::rational::zero(),
        )
        .unwrap();
        let second = resolve(&TwoCoins, &HeadThenQ, &head).unwrap();
        assert_eq!(second.step().unwrap().action.name(), FLIP_Q);
        let mut tail = start;
        tail.push(
            ActionId::new(FLIP_P, ActionKind::Internal),
            CoinState { p: Coin::Tail, q: Coin::Unflipped },
            &crate::rational::zero(),
        )
        .unwrap();
        assert!(matches!(resolve(&TwoCoins, &HeadThenQ, &tail).unwrap(), Choice::Halt));
    }
}
