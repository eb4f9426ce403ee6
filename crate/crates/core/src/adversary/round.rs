//! Round semantics shared by the built-in schedulers and the game solver.
//!
//! A round starts with a unit time passage. The processes ready right after
//! it are *pending*; each pending process takes exactly one program step, in
//! an order the adversary picks. User actions (try/exit style) may be
//! inserted anywhere, at most once per process per round. The round ends
//! with the next time passage, which is only allowed once nobody is pending.
//! Before the first time passage nothing is pending ("round 0"), so only
//! insertions happen at time 0.

use num_traits::One;

use super::Choice;
use crate::pta::{enabled_steps, ExecutionFragment, Model, ModelError, ProcessInfo, Step};
use crate::rational::Rational;

/// Position inside the current round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RoundPhase {
    /// Processes still owing their program step this round.
    pub pending: u64,
    /// Processes that took a user action this round.
    pub inserted: u64,
}

impl RoundPhase {
    /// Phase right after a time passage landing in `s`.
    pub fn fresh<S>(info: &dyn ProcessInfo<S>, s: &S) -> Self {
        RoundPhase {
            pending: info.ready_mask(s),
            inserted: 0,
        }
    }

    /// Drops pending processes that are no longer ready and inserted
    /// processes that no longer matter.
    pub fn normalized<S>(self, info: &dyn ProcessInfo<S>, s: &S) -> Self {
        RoundPhase {
            pending: self.pending & info.ready_mask(s),
            inserted: info.canonical_inserted(s, self.inserted),
        }
    }

    pub fn key(&self) -> Vec<u8> {
        let mut out = self.pending.to_be_bytes().to_vec();
        out.extend(self.inserted.to_be_bytes());
        out
    }
}

/// Reconstructs the round phase at the end of `frag` by scanning back to the
/// most recent time passage.
pub fn round_phase<S: Clone + PartialEq>(
    info: &dyn ProcessInfo<S>,
    frag: &ExecutionFragment<S>,
) -> RoundPhase {
    let entries = frag.entries();
    let last_nu = entries
        .iter()
        .rposition(|e| e.action.as_ref().is_some_and(|a| a.is_time_passage()));
    let (mut phase, from) = match last_nu {
        Some(k) => (RoundPhase::fresh(info, &entries[k].state), k + 1),
        None => (RoundPhase::default(), 1),
    };
    for e in &entries[from..] {
        let action = e.action.as_ref().expect("non-initial entry has an action");
        if let Some(p) = info.process_of(action) {
            if info.is_user_action(action) {
                phase.inserted |= 1 << p;
            } else {
                phase.pending &= !(1 << p);
            }
        }
    }
    phase.normalized(info, frag.lstate())
}

/// One adversary move under round semantics.
#[derive(Debug, Clone, PartialEq)]
pub enum RoundOption<S> {
    /// A pending process takes one of its program steps.
    Program { process: usize, step: Step<S> },
    /// A user action is inserted for a process.
    Insert { process: usize, step: Step<S> },
    /// Unit time passes; only offered once nobody is pending.
    EndRound,
}

impl<S: Clone + PartialEq> RoundOption<S> {
    pub fn process(&self) -> Option<usize> {
        match self {
            RoundOption::Program { process, .. } | RoundOption::Insert { process, .. } => {
                Some(*process)
            }
            RoundOption::EndRound => None,
        }
    }

    pub fn into_choice<M: Model<State = S> + ?Sized>(self, model: &M, s: &S) -> Choice<S> {
        match self {
            RoundOption::Program { step, .. } | RoundOption::Insert { step, .. } => {
                Choice::Step(step)
            }
            RoundOption::EndRound => match Step::time_passage(model, s, &Rational::one()) {
                Some(step) => Choice::Step(step),
                None => Choice::Halt,
            },
        }
    }
}

/// Every move available in `s` at `phase`, ordered by (process index, step
/// order) with the end of the round last.
pub fn round_options<M: Model + ?Sized>(
    model: &M,
    info: &dyn ProcessInfo<M::State>,
    s: &M::State,
    phase: RoundPhase,
) -> Result<Vec<RoundOption<M::State>>, ModelError> {
    let phase = phase.normalized(info, s);
    let steps = enabled_steps(model, s)?;
    let mut out = Vec::new();
    for i in 0..info.process_count() {
        for step in &steps {
            if info.process_of(&step.action) != Some(i) {
                continue;
            }
            if info.is_user_action(&step.action) {
                if phase.inserted & (1 << i) == 0 {
                    out.push(RoundOption::Insert {
                        process: i,
                        step: step.clone(),
                    });
                }
            } else if phase.pending & (1 << i) != 0 {
                out.push(RoundOption::Program {
                    process: i,
                    step: step.clone(),
                });
            }
        }
    }
    if phase.pending == 0 {
        out.push(RoundOption::EndRound);
    }
    Ok(out)
}
