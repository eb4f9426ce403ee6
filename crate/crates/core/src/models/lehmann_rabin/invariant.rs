//! The resource invariant: a resource is taken exactly when one of its two
//! neighbours holds it, and never both.

use rand::Rng;
use serde::Serialize;

use super::{LehmannRabin, LrState, Pc, ProcState, Side};
use crate::pta::{enabled_steps, reachable_states, sample_step, trial_rng, Model, ModelError};

/// Process in local state `x` holds its right resource.
pub fn holds_right(x: ProcState) -> bool {
    match x.pc {
        Pc::P | Pc::C | Pc::EF => true,
        Pc::S | Pc::D | Pc::ES => x.u == Side::Right,
        _ => false,
    }
}

/// Process in local state `x` holds its left resource.
pub fn holds_left(x: ProcState) -> bool {
    match x.pc {
        Pc::P | Pc::C | Pc::EF => true,
        Pc::S | Pc::D | Pc::ES => x.u == Side::Left,
        _ => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InvariantClause {
    /// Taken flag disagrees with the holders.
    TakenIffHeld,
    /// Both neighbours claim the resource.
    SingleHolder,
}

/// Every `(resource, clause)` that fails in `s`.
pub fn invariant_violations(s: &LrState) -> Vec<(usize, InvariantClause)> {
    let n = s.n();
    let mut out = Vec::new();
    for i in 0..n {
        let a = holds_right(s.procs[i]);
        let b = holds_left(s.procs[(i + 1) % n]);
        if s.res[i] != (a || b) {
            out.push((i, InvariantClause::TakenIffHeld));
        }
        if a && b {
            out.push((i, InvariantClause::SingleHolder));
        }
    }
    out
}

pub fn check_resource_invariant(s: &LrState) -> bool {
    invariant_violations(s).is_empty()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantReport {
    pub n: usize,
    pub exhaustive: bool,
    pub states: usize,
    pub taken_iff_held_violations: usize,
    pub single_holder_violations: usize,
    /// Hex encoding of the first violating state.
    pub counterexample: Option<String>,
}

impl InvariantReport {
    pub fn holds(&self) -> bool {
        self.taken_iff_held_violations == 0 && self.single_holder_violations == 0
    }

    pub(crate) fn record(&mut self, model: &LehmannRabin, s: &LrState) {
        self.states += 1;
        let v = invariant_violations(s);
        for (_, c) in &v {
            match c {
                InvariantClause::TakenIffHeld => self.taken_iff_held_violations += 1,
                InvariantClause::SingleHolder => self.single_holder_violations += 1,
            }
        }
        if !v.is_empty() && self.counterexample.is_none() {
            self.counterexample = Some(hex::encode(model.encode(s)));
        }
    }
}

/// Checks the invariant on every state reachable through any interleaving
/// of discrete steps (a superset of what any scheduler can produce), plus
/// any `extra` states supplied by the caller.
pub fn explore_invariant(
    model: &LehmannRabin,
    budget: usize,
    extra: &[LrState],
) -> Result<InvariantReport, ModelError> {
    let states = reachable_states(model, budget)?;
    let mut report = InvariantReport {
        n: model.n(),
        exhaustive: true,
        states: 0,
        taken_iff_held_violations: 0,
        single_holder_violations: 0,
        counterexample: None,
    };
    for s in states.iter().chain(extra) {
        report.record(model, s);
    }
    Ok(report)
}

/// Checks the invariant along random walks, for rings too large to explore.
pub fn sample_invariant(
    model: &LehmannRabin,
    walks: u64,
    length: usize,
    seed: u64,
) -> Result<InvariantReport, ModelError> {
    let mut report = InvariantReport {
        n: model.n(),
        exhaustive: false,
        states: 0,
        taken_iff_held_violations: 0,
        single_holder_violations: 0,
        counterexample: None,
    };
    for w in 0..walks {
        let mut rng = trial_rng(seed, w);
        let mut s = model.start_states().remove(0);
        report.record(model, &s);
        for _ in 0..length {
            let steps = enabled_steps(model, &s)?;
            if steps.is_empty() {
                break;
            }
            let k = rng.random_range(0..steps.len());
            s = sample_step(&steps[k], &mut rng);
            report.record(model, &s);
        }
    }
    Ok(report)
}
