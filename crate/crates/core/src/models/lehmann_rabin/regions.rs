//! The state regions used by the progress argument.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::{LrState, Pc, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Region {
    /// Some process is in its trying region.
    T,
    /// Trying, and nobody holds resources in the exit region or is critical.
    RT,
    /// In RT with some process ready to flip.
    F,
    /// In RT with some good process.
    G,
    /// Some process is pre-critical.
    P,
    /// Some process is critical.
    C,
}

impl Region {
    pub const ALL: [Region; 6] = [Region::T, Region::RT, Region::F, Region::G, Region::P, Region::C];

    pub fn name(self) -> &'static str {
        match self {
            Region::T => "T",
            Region::RT => "RT",
            Region::F => "F",
            Region::G => "G",
            Region::P => "P",
            Region::C => "C",
        }
    }

    pub fn from_name(name: &str) -> Option<Region> {
        Region::ALL.into_iter().find(|r| r.name() == name)
    }

    pub fn contains(self, s: &LrState) -> bool {
        match self {
            Region::T => in_t(s),
            Region::RT => in_rt(s),
            Region::F => in_rt(s) && s.procs.iter().any(|p| p.pc == Pc::F),
            Region::G => in_rt(s) && (0..s.n()).any(|i| good(s, i)),
            Region::P => s.procs.iter().any(|p| p.pc == Pc::P),
            Region::C => s.procs.iter().any(|p| p.pc == Pc::C),
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn in_t(s: &LrState) -> bool {
    s.procs
        .iter()
        .any(|p| matches!(p.pc, Pc::F | Pc::W | Pc::S | Pc::D | Pc::P))
}

fn in_rt(s: &LrState) -> bool {
    in_t(s)
        && s.procs.iter().all(|p| {
            matches!(
                p.pc,
                Pc::ER | Pc::R | Pc::F | Pc::W | Pc::S | Pc::D | Pc::P
            )
        })
}

/// Process `j` potentially controls the resource on its `side`: it is in
/// W, S or D with `u` pointing there (it holds or will seek that resource
/// first).
pub fn pot_controls(s: &LrState, j: usize, side: Side) -> bool {
    let p = s.procs[j];
    matches!(p.pc, Pc::W | Pc::S | Pc::D) && p.u == side
}

/// Process `i` is committed (W or S) and its second resource is not
/// potentially controlled by the neighbour sharing it.
pub fn good(s: &LrState, i: usize) -> bool {
    let n = s.n();
    let p = s.procs[i];
    if !matches!(p.pc, Pc::W | Pc::S) {
        return false;
    }
    match p.u {
        // Second resource is resource i, shared with i+1 (its left side).
        Side::Left => !pot_controls(s, (i + 1) % n, Side::Left),
        // Second resource is resource i−1, shared with i−1 (its right side).
        Side::Right => !pot_controls(s, (i + n - 1) % n, Side::Right),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegionReport {
    pub memberships: BTreeSet<Region>,
    /// Good processes, reported whenever the state is in RT.
    pub good: Vec<usize>,
}

impl RegionReport {
    pub fn contains(&self, r: Region) -> bool {
        self.memberships.contains(&r)
    }
}

pub fn classify(s: &LrState) -> RegionReport {
    let memberships = Region::ALL.into_iter().filter(|r| r.contains(s)).collect();
    let good = if in_rt(s) {
        (0..s.n()).filter(|&i| good(s, i)).collect()
    } else {
        Vec::new()
    };
    RegionReport { memberships, good }
}
