//! The Lehmann–Rabin randomized dining philosophers on a ring of `n`
//! processes and `n` resources.
//!
//! Processes and resources are numbered from 0. Resource `i` sits between
//! processes `i` and `i + 1`, so the right resource of process `i` is
//! resource `i` and its left resource is resource `i − 1` (mod `n`).

mod estimate;
mod invariant;
mod phases;
mod regions;
mod scenarios;

use std::fmt;

use num_bigint::BigInt;
use num_rational::Rational64;
use num_traits::{CheckedAdd, ToPrimitive, Zero};
use smallvec::{smallvec, SmallVec};

use crate::pta::{ActionId, ActionKind, Distribution, Model, ModelError, ProcessInfo, Step};
use crate::rational::Rational;

pub use estimate::{estimate_ring, EstimatePlan, RingEstimate};
pub use invariant::{
    check_resource_invariant, explore_invariant, holds_left, holds_right, invariant_violations, sample_invariant,
    InvariantReport, InvariantClause,
};
pub use phases::{
    lr_registry, phase_chain, phase_statements, reachable_in, sample_states, UNIT_TIME,
};
pub use regions::{classify, good, pot_controls, Region, RegionReport};
pub use scenarios::{
    scenario, scenario_at, scenario_ids, ProgressScenario, ScenarioError, ScenarioObjective, ScenarioOutcome,
    SCENARIO_RING,
};

/// Program counter values, numbered as in the action table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pc {
    /// Remainder region; `try` leads to F.
    R = 0,
    /// Ready to flip.
    F = 1,
    /// Waiting for the first resource.
    W = 2,
    /// Checking the second resource.
    S = 3,
    /// Dropping the first resource.
    D = 4,
    /// Pre-critical.
    P = 5,
    /// Critical region.
    C = 6,
    /// Exit: drop the first resource.
    EF = 7,
    /// Exit: drop the second resource.
    ES = 8,
    /// Exit: return to the remainder region.
    ER = 9,
}

impl Pc {
    pub const ALL: [Pc; 10] = [
        Pc::R,
        Pc::F,
        Pc::W,
        Pc::S,
        Pc::D,
        Pc::P,
        Pc::C,
        Pc::EF,
        Pc::ES,
        Pc::ER,
    ];

    pub fn from_u8(v: u8) -> Option<Pc> {
        Pc::ALL.get(v as usize).copied()
    }

    pub fn label(self) -> &'static str {
        match self {
            Pc::R => "R",
            Pc::F => "F",
            Pc::W => "W",
            Pc::S => "S",
            Pc::D => "D",
            Pc::P => "P",
            Pc::C => "C",
            Pc::EF => "EF",
            Pc::ES => "ES",
            Pc::ER => "ER",
        }
    }

    /// Whether `u` can still influence the future: only between the flip
    /// and the release of the first resource, and in `ES`.
    pub fn u_matters(self) -> bool {
        matches!(self, Pc::W | Pc::S | Pc::D | Pc::ES)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left = 0,
    Right = 1,
}

impl Side {
    pub fn opp(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProcState {
    pub pc: Pc,
    pub u: Side,
}

impl ProcState {
    pub fn new(pc: Pc, u: Side) -> Self {
        ProcState { pc, u }
    }
}

impl fmt::Display for ProcState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let u = match self.u {
            Side::Left => "l",
            Side::Right => "r",
        };
        write!(f, "{}{}", self.pc.label(), u)
    }
}

/// Per-process local states, stored inline for small rings.
pub type Procs = SmallVec<[ProcState; 8]>;
/// Resource flags (`true` = taken), stored inline for small rings.
pub type Resources = SmallVec<[bool; 8]>;

/// Local states of all processes, resource flags (`true` = taken) and the
/// clock.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LrState {
    pub procs: Procs,
    pub res: Resources,
    /// Elapsed time; kept as a machine rational so states stay cheap to
    /// copy.
    pub clock: Rational64,
}

impl fmt::Debug for LrState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let procs: Vec<String> = self.procs.iter().map(|p| p.to_string()).collect();
        let res: String = self
            .res
            .iter()
            .map(|&t| if t { '1' } else { '0' })
            .collect();
        write!(f, "[{}|{}@{}]", procs.join(" "), res, self.clock)
    }
}

impl LrState {
    /// All processes in R, all resources free, every `u` left, time 0.
    pub fn initial(n: usize) -> Self {
        LrState {
            procs: smallvec![ProcState::new(Pc::R, Side::Left); n],
            res: smallvec![false; n],
            clock: Rational64::zero(),
        }
    }

    /// A state with the given local states whose resource flags are derived
    /// from what the processes hold (so the resource invariant holds by
    /// construction).
    pub fn consistent(procs: Vec<ProcState>) -> Self {
        let n = procs.len();
        let mut s = LrState {
            procs: procs.into(),
            res: smallvec![false; n],
            clock: Rational64::zero(),
        };
        for i in 0..n {
            s.res[i] = invariant::holds_right(s.procs[i]) || invariant::holds_left(s.procs[(i + 1) % n]);
        }
        s
    }

    pub fn n(&self) -> usize {
        self.procs.len()
    }

    pub fn pc(&self, i: usize) -> Pc {
        self.procs[i].pc
    }
}

/// Index of the resource on `side` of process `i`.
pub fn res_index(n: usize, i: usize, side: Side) -> usize {
    match side {
        Side::Right => i,
        Side::Left => (i + n - 1) % n,
    }
}

/// The ring model for a fixed `n ≥ 2`.
#[derive(Debug, Clone)]
pub struct LehmannRabin {
    n: usize,
    /// Action of process `i` at program counter `pc`, at `10 * i + pc`.
    action_table: Vec<ActionId>,
}

const NAMES: [&str; 10] = [
    "try", "flip", "wait", "second", "drop", "crit", "exit", "dropf", "drops", "rem",
];

impl LehmannRabin {
    pub fn new(n: usize) -> Result<Self, ModelError> {
        if !(2..=64).contains(&n) {
            return Err(ModelError::Domain(format!(
                "ring size must be between 2 and 64, got {n}"
            )));
        }
        let action_table = (0..n)
            .flat_map(|i| {
                Pc::ALL.into_iter().map(move |pc| {
                    let kind = match pc {
                        Pc::R | Pc::P | Pc::C | Pc::ER => ActionKind::External,
                        _ => ActionKind::Internal,
                    };
                    ActionId::new(format!("{}_{i}", NAMES[pc as usize]), kind)
                })
            })
            .collect();
        Ok(LehmannRabin { n, action_table })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn action(&self, pc: Pc, i: usize) -> ActionId {
        self.action_table[10 * i + pc as usize].clone()
    }

    /// The steps of process `i` alone, in canonical order.
    pub fn process_steps(&self, s: &LrState, i: usize) -> Vec<Step<LrState>> {
        let n = self.n;
        let me = s.procs[i];
        let a = self.action(me.pc, i);
        let with = |f: &dyn Fn(&mut LrState)| {
            let mut t = s.clone();
            f(&mut t);
            t
        };
        match me.pc {
            Pc::R => vec![Step::deterministic(
                s.clone(),
                a,
                with(&|t| t.procs[i].pc = Pc::F),
            )],
            Pc::F => {
                let left = with(&|t| t.procs[i] = ProcState::new(Pc::W, Side::Left));
                let right = with(&|t| t.procs[i] = ProcState::new(Pc::W, Side::Right));
                vec![Step::new(s.clone(), a, Distribution::fair(left, right))]
            }
            Pc::W => {
                let r = res_index(n, i, me.u);
                let next = if s.res[r] {
                    s.clone()
                } else {
                    with(&|t| {
                        t.res[r] = true;
                        t.procs[i].pc = Pc::S;
                    })
                };
                vec![Step::deterministic(s.clone(), a, next)]
            }
            Pc::S => {
                let r = res_index(n, i, me.u.opp());
                let next = if s.res[r] {
                    with(&|t| t.procs[i].pc = Pc::D)
                } else {
                    with(&|t| {
                        t.res[r] = true;
                        t.procs[i].pc = Pc::P;
                    })
                };
                vec![Step::deterministic(s.clone(), a, next)]
            }
            Pc::D => {
                let r = res_index(n, i, me.u);
                vec![Step::deterministic(
                    s.clone(),
                    a,
                    with(&|t| {
                        t.res[r] = false;
                        t.procs[i].pc = Pc::F;
                    }),
                )]
            }
            Pc::P => vec![Step::deterministic(
                s.clone(),
                a,
                with(&|t| t.procs[i].pc = Pc::C),
            )],
            Pc::C => vec![Step::deterministic(
                s.clone(),
                a,
                with(&|t| t.procs[i].pc = Pc::EF),
            )],
            Pc::EF => {
                // Keep the right resource (u := right) or keep the left one.
                let keep_right = with(&|t| {
                    t.res[res_index(n, i, Side::Left)] = false;
                    t.procs[i] = ProcState::new(Pc::ES, Side::Right);
                });
                let keep_left = with(&|t| {
                    t.res[res_index(n, i, Side::Right)] = false;
                    t.procs[i] = ProcState::new(Pc::ES, Side::Left);
                });
                vec![
                    Step::deterministic(s.clone(), a.clone(), keep_left),
                    Step::deterministic(s.clone(), a, keep_right),
                ]
            }
            Pc::ES => {
                let r = res_index(n, i, me.u);
                vec![Step::deterministic(
                    s.clone(),
                    a,
                    with(&|t| {
                        t.res[r] = false;
                        t.procs[i].pc = Pc::ER;
                    }),
                )]
            }
            Pc::ER => vec![Step::deterministic(
                s.clone(),
                a,
                with(&|t| t.procs[i].pc = Pc::R),
            )],
        }
    }

    fn check(&self, s: &LrState) -> Result<(), ModelError> {
        if s.procs.len() != self.n || s.res.len() != self.n {
            return Err(ModelError::UnknownState(format!(
                "state of ring size {} in a model of size {}",
                s.procs.len(),
                self.n
            )));
        }
        Ok(())
    }
}

fn write_bytes(out: &mut Vec<u8>, bytes: &[u8]) {
    out.extend((bytes.len() as u16).to_be_bytes());
    out.extend(bytes);
}

impl Model for LehmannRabin {
    type State = LrState;

    fn name(&self) -> String {
        format!("lehmann-rabin(n={})", self.n)
    }

    fn start_states(&self) -> Vec<LrState> {
        vec![LrState::initial(self.n)]
    }

    fn actions(&self) -> Vec<ActionId> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for pc in Pc::ALL {
                out.push(self.action(pc, i));
            }
        }
        out
    }

    fn enabled(&self, s: &LrState) -> Result<Vec<Step<LrState>>, ModelError> {
        self.check(s)?;
        Ok((0..self.n).flat_map(|i| self.process_steps(s, i)).collect())
    }

    /// Length prefix, `n`, `(pc, u)` per process, resource flags, then the
    /// clock as length-prefixed numerator and denominator bytes.
    fn encode(&self, s: &LrState) -> Vec<u8> {
        let mut body = Vec::with_capacity(4 + 3 * s.procs.len() + 8);
        body.extend((s.procs.len() as u16).to_be_bytes());
        for p in &s.procs {
            body.push(p.pc as u8);
            body.push(p.u as u8);
        }
        body.extend(s.res.iter().map(|&t| t as u8));
        write_bytes(&mut body, &BigInt::from(*s.clock.numer()).to_signed_bytes_be());
        write_bytes(&mut body, &BigInt::from(*s.clock.denom()).to_signed_bytes_be());
        let mut out = (body.len() as u32).to_be_bytes().to_vec();
        out.extend(body);
        out
    }

    fn decode(&self, bytes: &[u8]) -> Result<LrState, ModelError> {
        let bad = |m: &str| ModelError::Decode(m.to_string());
        let mut rd = Reader { bytes, at: 0 };
        let len = u32::from_be_bytes(rd.take(4).ok_or_else(|| bad("short length"))?.try_into().unwrap());
        if len as usize != bytes.len() - 4 {
            return Err(bad("length prefix mismatch"));
        }
        let n = u16::from_be_bytes(rd.take(2).ok_or_else(|| bad("short size"))?.try_into().unwrap()) as usize;
        if n != self.n {
            return Err(bad("ring size mismatch"));
        }
        let mut procs = Procs::with_capacity(n);
        for _ in 0..n {
            let b = rd.take(2).ok_or_else(|| bad("short process"))?;
            let pc = Pc::from_u8(b[0]).ok_or_else(|| bad("bad pc"))?;
            let u = match b[1] {
                0 => Side::Left,
                1 => Side::Right,
                _ => return Err(bad("bad side")),
            };
            procs.push(ProcState::new(pc, u));
        }
        let mut res = Resources::with_capacity(n);
        for &b in rd.take(n).ok_or_else(|| bad("short resources"))? {
            res.push(match b {
                0 => false,
                1 => true,
                _ => return Err(bad("bad resource")),
            });
        }
        let mut int = || -> Result<i64, ModelError> {
            let l = u16::from_be_bytes(rd.take(2).ok_or_else(|| bad("short clock"))?.try_into().unwrap());
            let b = rd.take(l as usize).ok_or_else(|| bad("short clock"))?;
            BigInt::from_signed_bytes_be(b)
                .to_i64()
                .ok_or_else(|| bad("clock out of range"))
        };
        let num = int()?;
        let den = int()?;
        if den.is_zero() {
            return Err(bad("zero denominator"));
        }
        if rd.at != bytes.len() {
            return Err(bad("trailing bytes"));
        }
        Ok(LrState {
            procs,
            res,
            clock: Rational64::new(num, den),
        })
    }

    fn advance_time(&self, s: &LrState, delta: &Rational) -> Option<LrState> {
        let delta = Rational64::new(delta.numer().to_i64()?, delta.denom().to_i64()?);
        let mut t = s.clone();
        t.clock = t.clock.checked_add(&delta)?;
        Some(t)
    }

    fn state_time(&self, s: &LrState) -> Option<Rational> {
        Some(Rational::new(
            BigInt::from(*s.clock.numer()),
            BigInt::from(*s.clock.denom()),
        ))
    }

    fn processes(&self) -> Option<&dyn ProcessInfo<LrState>> {
        Some(self)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Option<&'a [u8]> {
        let out = self.bytes.get(self.at..self.at + k)?;
        self.at += k;
        Some(out)
    }
}

/// Process index encoded in an action name `name_i`.
fn action_process(a: &ActionId) -> Option<usize> {
    a.name().rsplit_once('_')?.1.parse().ok()
}

impl ProcessInfo<LrState> for LehmannRabin {
    fn process_count(&self) -> usize {
        self.n
    }

    fn process_of(&self, action: &ActionId) -> Option<usize> {
        if action.is_time_passage() {
            return None;
        }
        action_process(action).filter(|&i| i < self.n)
    }

    fn is_user_action(&self, action: &ActionId) -> bool {
        let name = action.name();
        name.starts_with("try_") || name.starts_with("exit_")
    }

    fn is_ready(&self, s: &LrState, process: usize) -> bool {
        !matches!(s.procs[process].pc, Pc::R | Pc::C)
    }

    /// Drops the clock and every `u` that can no longer matter.
    fn memo_key(&self, s: &LrState) -> Vec<u8> {
        let mut out = Vec::with_capacity(3 * s.procs.len());
        for p in &s.procs {
            out.push(p.pc as u8);
            out.push(if p.pc.u_matters() { p.u as u8 } else { 0 });
        }
        out.extend(s.res.iter().map(|&t| t as u8));
        out
    }

    /// Scores used by the greedy blocking scheduler (lower runs first): a
    /// second-resource test that is going to fail, then waits that block,
    /// then other moves, and last the steps that make progress.
    fn blocking_score(&self, s: &LrState, step: &Step<LrState>) -> u32 {
        let Some(i) = self.process_of(&step.action) else {
            return 0;
        };
        let me = s.procs[i];
        let n = self.n;
        match me.pc {
            Pc::S if s.res[res_index(n, i, me.u.opp())] => 0,
            Pc::W if s.res[res_index(n, i, me.u)] => 1,
            Pc::D | Pc::F | Pc::EF | Pc::ES | Pc::ER => 2,
            Pc::W => 3,
            Pc::S => 4,
            _ => 5,
        }
    }

    /// A user action of a process can only be re-enabled by that process's
    /// own program step, which comes before the insertion within a round, so
    /// the once-per-round limit never binds.
    fn canonical_inserted(&self, _s: &LrState, _inserted: u64) -> u64 {
        0
    }

    fn ready_mask(&self, s: &LrState) -> u64 {
        s.procs
            .iter()
            .enumerate()
            .filter(|(_, p)| !matches!(p.pc, Pc::R | Pc::C))
            .fold(0, |m, (i, _)| m | (1 << i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pta::enabled_steps;

    fn names(model: &LehmannRabin, s: &LrState) -> Vec<String> {
        enabled_steps(model, s)
            .unwrap()
            .iter()
            .map(|st| st.action.to_string())
            .collect()
    }

    #[test]
    fn start_enables_only_try() {
        let m = LehmannRabin::new(3).unwrap();
        let s = &m.start_states()[0];
        assert_eq!(names(&m, s), vec!["try_0", "try_1", "try_2"]);
    }

    #[test]
    fn small_rings_rejected() {
        assert!(LehmannRabin::new(1).is_err());
    }

    #[test]
    fn wait_takes_free_first_resource() {
        let m = LehmannRabin::new(3).unwrap();
        let mut s = LrState::initial(3);
        s.procs[1] = ProcState::new(Pc::W, Side::Right);
        let steps = m.process_steps(&s, 1);
        let (t, _) = &steps[0].next.support()[0];
        assert_eq!(t.procs[1].pc, Pc::S);
        assert!(t.res[1]);
        assert!(steps[0].next.is_deterministic());
    }

    #[test]
    fn wait_blocks_on_taken_resource() {
        let m = LehmannRabin::new(3).unwrap();
        let mut s = LrState::initial(3);
        s.procs[1] = ProcState::new(Pc::W, Side::Left);
        s.res[0] = true;
        let steps = m.process_steps(&s, 1);
        assert_eq!(steps[0].next.support()[0].0, s);
    }

    #[test]
    fn second_fails_into_drop() {
        let m = LehmannRabin::new(3).unwrap();
        let mut s = LrState::initial(3);
        s.procs[1] = ProcState::new(Pc::S, Side::Right);
        s.res[1] = true;
        s.res[0] = true;
        let steps = m.process_steps(&s, 1);
        let (t, _) = &steps[0].next.support()[0];
        assert_eq!(t.procs[1].pc, Pc::D);
        assert_eq!(t.res, s.res);
    }

    #[test]
    fn dropf_has_two_variants() {
        let m = LehmannRabin::new(3).unwrap();
        let s = LrState::consistent(vec![
            ProcState::new(Pc::EF, Side::Left),
            ProcState::new(Pc::R, Side::Left),
            ProcState::new(Pc::R, Side::Left),
        ]);
        assert_eq!(s.res.as_slice(), &[true, false, true]);
        let steps = m.process_steps(&s, 0);
        assert_eq!(steps.len(), 2);
        let outcomes: Vec<&LrState> = steps.iter().map(|st| &st.next.support()[0].0).collect();
        assert!(outcomes
            .iter()
            .any(|t| t.procs[0] == ProcState::new(Pc::ES, Side::Right) && t.res.as_slice() == [true, false, false]));
        assert!(outcomes
            .iter()
            .any(|t| t.procs[0] == ProcState::new(Pc::ES, Side::Left) && t.res.as_slice() == [false, false, true]));
    }

    #[test]
    fn encoding_round_trips() {
        let m = LehmannRabin::new(4).unwrap();
        let mut s = LrState::consistent(vec![
            ProcState::new(Pc::P, Side::Right),
            ProcState::new(Pc::W, Side::Left),
            ProcState::new(Pc::ES, Side::Left),
            ProcState::new(Pc::R, Side::Left),
        ]);
        s.clock = Rational64::new(7, 3);
        let bytes = m.encode(&s);
        assert_eq!(u32::from_be_bytes(bytes[..4].try_into().unwrap()) as usize, bytes.len() - 4);
        assert_eq!(m.decode(&bytes).unwrap(), s);
        assert!(m.decode(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn readiness_excludes_r_and_c() {
        let m = LehmannRabin::new(3).unwrap();
        let s = LrState::consistent(vec![
            ProcState::new(Pc::C, Side::Left),
            ProcState::new(Pc::R, Side::Left),
            ProcState::new(Pc::F, Side::Left),
        ]);
        assert_eq!(m.ready_mask(&s), 0b100);
    }
}
