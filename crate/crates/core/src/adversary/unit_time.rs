use std::fmt;

use num_traits::One;
use serde::Serialize;

use super::AdversaryError;
use crate::pta::{ActionId, ExecutionFragment, Model, ProcessInfo};
use crate::rational::{serde_rational, Rational};

/// A ready process that went without a step for more than one time unit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationWitness {
    /// Number of actions in the offending prefix (the last one is the time
    /// passage that exceeded the deadline).
    pub prefix_len: usize,
    /// Action names of the offending prefix.
    pub prefix_actions: Vec<String>,
    /// Hex encoding of the state where the deadline was exceeded.
    pub state: String,
    pub process: usize,
    #[serde(with = "serde_rational")]
    pub ready_since: Rational,
    #[serde(with = "serde_rational")]
    pub at: Rational,
    #[serde(with = "serde_rational")]
    pub gap: Rational,
}

impl fmt::Display for ViolationWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "process {} ready since {} took no step until {} (gap {}) after {} actions",
            self.process, self.ready_since, self.at, self.gap, self.prefix_len
        )
    }
}

/// Incremental Unit-Time check: remembers, for every process, since when it
/// has been continuously ready without taking a step.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitTimeMonitor {
    ready_since: Vec<Option<Rational>>,
    now: Rational,
}

impl UnitTimeMonitor {
    pub fn start<S>(info: &dyn ProcessInfo<S>, s: &S, time: &Rational) -> Self {
        let ready_since = (0..info.process_count())
            .map(|i| info.is_ready(s, i).then(|| time.clone()))
            .collect();
        UnitTimeMonitor {
            ready_since,
            now: time.clone(),
        }
    }

    /// Feeds the action leading to `after` at `time`. Returns the offending
    /// process and its ready-since time when a time passage overshoots a
    /// deadline.
    pub fn observe<S>(
        &mut self,
        info: &dyn ProcessInfo<S>,
        action: &ActionId,
        after: &S,
        time: &Rational,
    ) -> Result<(), (usize, Rational)> {
        if action.is_time_passage() {
            for (i, since) in self.ready_since.iter().enumerate() {
                if let Some(since) = since {
                    if time - since > Rational::one() {
                        return Err((i, since.clone()));
                    }
                }
            }
        } else if let Some(p) = info.process_of(action) {
            if p < self.ready_since.len() {
                self.ready_since[p] = None;
            }
        }
        self.now = time.clone();
        for (i, since) in self.ready_since.iter_mut().enumerate() {
            if info.is_ready(after, i) {
                if since.is_none() {
                    *since = Some(time.clone());
                }
            } else {
                *since = None;
            }
        }
        Ok(())
    }

    /// Monitor state relative to the current time, for memo keys.
    pub fn key(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for since in &self.ready_since {
            match since {
                None => out.push(0),
                Some(t) => {
                    let gap = &self.now - t;
                    out.push(1);
                    out.extend(gap.numer().to_signed_bytes_be());
                    out.push(b'/');
                    out.extend(gap.denom().to_signed_bytes_be());
                    out.push(b';');
                }
            }
        }
        out
    }
}

/// The first Unit-Time violation in `frag`, if any. Only the within-time-1
/// condition is checked; unbounded time growth is not observable on a finite
/// prefix.
pub fn check_unit_time<M: Model + ?Sized>(
    frag: &ExecutionFragment<M::State>,
    model: &M,
) -> Result<Option<ViolationWitness>, AdversaryError> {
    let info = model.processes().ok_or_else(|| {
        AdversaryError::Unsupported(format!("{} exposes no process structure", model.name()))
    })?;
    let entries = frag.entries();
    let mut monitor = UnitTimeMonitor::start(info, &entries[0].state, &entries[0].time);
    for (k, e) in entries.iter().enumerate().skip(1) {
        let action = e.action.as_ref().expect("non-initial entry has an action");
        if let Err((process, since)) = monitor.observe(info, action, &e.state, &e.time) {
            return Ok(Some(ViolationWitness {
                prefix_len: k,
                prefix_actions: entries[1..=k]
                    .iter()
                    .map(|x| x.action.as_ref().unwrap().to_string())
                    .collect(),
                state: hex::encode(model.encode(&entries[k - 1].state)),
                process,
                gap: &e.time - &since,
                ready_since: since,
                at: e.time.clone(),
            }));
        }
    }
    Ok(None)
}
