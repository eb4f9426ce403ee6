use std::fmt;

use num_traits::Zero;

use super::{enabled_steps, ActionId, Model, ModelError, Step};
use crate::rational::Rational;

/// One position of a fragment: the action that led here (absent for the
/// first state), the state, and the absolute time.
#[derive(Clone, PartialEq)]
pub struct Entry<S> {
    pub action: Option<ActionId>,
    pub state: S,
    pub time: Rational,
}

impl<S: fmt::Debug> fmt::Debug for Entry<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.action {
            Some(a) => write!(f, "-{a}-> {:?}@{}", self.state, self.time),
            None => write!(f, "{:?}@{}", self.state, self.time),
        }
    }
}

/// A finite alternating sequence `s0 a1 s1 a2 s2 ...` with a timestamp on
/// every state. Times never decrease, and only time passage actions move
/// them.
#[derive(Clone, PartialEq)]
pub struct ExecutionFragment<S> {
    entries: Vec<Entry<S>>,
}

impl<S: fmt::Debug> fmt::Debug for ExecutionFragment<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.entries.iter()).finish()
    }
}

impl<S: Clone + PartialEq> ExecutionFragment<S> {
    pub fn new(start: S, time: Rational) -> Self {
        ExecutionFragment {
            entries: vec![Entry {
                action: None,
                state: start,
                time,
            }],
        }
    }

    /// `⟨s⟩` at time zero.
    pub fn singleton(start: S) -> Self {
        Self::new(start, Rational::zero())
    }

    pub fn entries(&self) -> &[Entry<S>] {
        &self.entries
    }

    pub fn fstate(&self) -> &S {
        &self.entries[0].state
    }

    pub fn lstate(&self) -> &S {
        &self.entries[self.entries.len() - 1].state
    }

    pub fn start_time(&self) -> &Rational {
        &self.entries[0].time
    }

    pub fn end_time(&self) -> &Rational {
        &self.entries[self.entries.len() - 1].time
    }

    /// Time elapsed since the first state.
    pub fn elapsed(&self) -> Rational {
        self.end_time() - self.start_time()
    }

    /// Number of actions.
    pub fn len(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.entries.len() == 1
    }

    pub fn states(&self) -> impl Iterator<Item = &S> {
        self.entries.iter().map(|e| &e.state)
    }

    pub fn actions(&self) -> impl Iterator<Item = &ActionId> {
        self.entries.iter().filter_map(|e| e.action.as_ref())
    }

    /// Appends `action` leading to `state` after `elapse` time. Time may only
    /// advance across time passage actions.
    pub fn push(
        &mut self,
        action: ActionId,
        state: S,
        elapse: &Rational,
    ) -> Result<(), ModelError> {
        if elapse < &Rational::zero() {
            return Err(ModelError::InvalidFragment("negative elapse".into()));
        }
        if !elapse.is_zero() && !action.is_time_passage() {
            return Err(ModelError::InvalidFragment(format!(
                "time advanced across non-time action {action}"
            )));
        }
        let time = self.end_time() + elapse;
        self.entries.push(Entry {
            action: Some(action),
            state,
            time,
        });
        Ok(())
    }

    /// Appends one outcome of `step`, which must start at the last state.
    pub fn extend_with(&mut self, step: &Step<S>, outcome: S) -> Result<(), ModelError> {
        if &step.source != self.lstate() {
            return Err(ModelError::Junction(
                "step source differs from the last state".into(),
            ));
        }
        if !step.next.states().any(|s| s == &outcome) {
            return Err(ModelError::InvalidFragment(
                "outcome outside the step's support".into(),
            ));
        }
        self.push(step.action.clone(), outcome, &step.elapse)
    }

    /// Removes the last action and state. The first state stays.
    pub fn pop(&mut self) -> Option<Entry<S>> {
        if self.entries.len() > 1 {
            self.entries.pop()
        } else {
            None
        }
    }

    /// `α1 ⌢ α2`. The junction states and their times must agree.
    pub fn concat(&self, suffix: &ExecutionFragment<S>) -> Result<Self, ModelError> {
        if self.lstate() != suffix.fstate() {
            return Err(ModelError::Junction("last and first states differ".into()));
        }
        if self.end_time() != suffix.start_time() {
            return Err(ModelError::Junction(format!(
                "times differ at the junction: {} vs {}",
                self.end_time(),
                suffix.start_time()
            )));
        }
        let mut entries = self.entries.clone();
        entries.extend(suffix.entries[1..].iter().cloned());
        Ok(ExecutionFragment { entries })
    }

    /// The prefix order `self ≤ other`.
    pub fn is_prefix_of(&self, other: &ExecutionFragment<S>) -> bool {
        self.entries.len() <= other.entries.len()
            && self.entries[..] == other.entries[..self.entries.len()]
    }

    /// The prefix with the first `actions` actions.
    pub fn prefix(&self, actions: usize) -> Self {
        ExecutionFragment {
            entries: self.entries[..=actions.min(self.len())].to_vec(),
        }
    }

    /// The suffix starting at the state after `actions` actions.
    pub fn suffix(&self, actions: usize) -> Self {
        let k = actions.min(self.len());
        let mut entries = self.entries[k..].to_vec();
        entries[0].action = None;
        ExecutionFragment { entries }
    }

    /// Checks every triple against the model's steps, and the model's own
    /// clock (if any) against the fragment times.
    pub fn validate<M>(&self, model: &M) -> Result<(), ModelError>
    where
        M: Model<State = S> + ?Sized,
    {
        for e in &self.entries {
            if let Some(t) = model.state_time(&e.state) {
                if t != e.time {
                    return Err(ModelError::InvalidFragment(format!(
                        "state clock {t} disagrees with fragment time {}",
                        e.time
                    )));
                }
            }
        }
        for w in self.entries.windows(2) {
            let (prev, cur) = (&w[0], &w[1]);
            let action = cur.action.as_ref().expect("non-initial entry has an action");
            if cur.time < prev.time {
                return Err(ModelError::InvalidFragment("time decreases".into()));
            }
            if action.is_time_passage() {
                let delta = &cur.time - &prev.time;
                let expected = model.advance_time(&prev.state, &delta);
                if delta.is_zero() || expected.as_ref() != Some(&cur.state) {
                    return Err(ModelError::InvalidFragment(
                        "time passage step does not match the model".into(),
                    ));
                }
                continue;
            }
            if cur.time != prev.time {
                return Err(ModelError::InvalidFragment(format!(
                    "time advanced across {action}"
                )));
            }
            let witnessed = enabled_steps(model, &prev.state)?
                .iter()
                .any(|st| &st.action == action && st.next.states().any(|s| s == &cur.state));
            if !witnessed {
                return Err(ModelError::InvalidFragment(format!(
                    "no enabled step {action} reaches the next state"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pta::ActionKind;
    use crate::rational::int;

    fn act(name: &str) -> ActionId {
        ActionId::new(name, ActionKind::Internal)
    }

    fn frag(states: &[u8]) -> ExecutionFragment<u8> {
        let mut f = ExecutionFragment::singleton(states[0]);
        for (k, s) in states[1..].iter().enumerate() {
            f.push(act(&format!("a{k}")), *s, &Rational::zero()).unwrap();
        }
        f
    }

    #[test]
    fn concat_identities() {
        let a = frag(&[0, 1, 2]);
        let unit = ExecutionFragment::singleton(*a.lstate());
        assert_eq!(a.concat(&unit).unwrap(), a);
        let start = ExecutionFragment::singleton(0u8);
        assert_eq!(start.concat(&a).unwrap(), a);
    }

    #[test]
    fn concat_unfolds() {
        let mut a = ExecutionFragment::singleton(0u8);
        a.push(act("a"), 1, &Rational::zero()).unwrap();
        let mut b = ExecutionFragment::singleton(1u8);
        b.push(act("b"), 2, &Rational::zero()).unwrap();
        let ab = a.concat(&b).unwrap();
        assert_eq!(ab.len(), 2);
        assert_eq!(
            ab.actions().map(|x| x.name().to_string()).collect::<Vec<_>>(),
            vec!["a", "b"]
        );
        assert_eq!(*ab.lstate(), 2);
        assert!(a.is_prefix_of(&ab));
        assert!(!b.is_prefix_of(&ab));
    }

    #[test]
    fn junction_errors() {
        let a = frag(&[0, 1]);
        let b = frag(&[2, 3]);
        assert!(matches!(a.concat(&b), Err(ModelError::Junction(_))));
        let late = ExecutionFragment::new(1u8, int(5));
        assert!(matches!(a.concat(&late), Err(ModelError::Junction(_))));
    }

    #[test]
    fn time_only_moves_with_nu() {
        let mut f = ExecutionFragment::singleton(0u8);
        assert!(f.push(act("a"), 1, &int(1)).is_err());
        f.push(ActionId::time_passage(), 0, &int(2)).unwrap();
        assert_eq!(f.end_time(), &int(2));
        assert_eq!(f.elapsed(), int(2));
    }

    #[test]
    fn prefix_and_suffix_rebuild() {
        let a = frag(&[0, 1, 2, 3]);
        let joined = a.prefix(1).concat(&a.suffix(1)).unwrap();
        assert_eq!(joined, a);
    }
}
