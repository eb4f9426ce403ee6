//! Machine-checkable progress cases: the local situations the progress
//! statements are argued from, on a ring of three.
//!
//! Each scenario fixes the focus process `i` (rotational symmetry makes the
//! choice immaterial), takes as start family every reachable state meeting
//! the case's precondition, and states its conclusion as a game objective
//! with a time bound and a probability floor. Cases that assume the outcome
//! of a first coin flip are checked with floor 1 on the branches where that
//! flip lands as assumed.

use num_traits::One;
use serde::Serialize;
use thiserror::Error;

use super::phases::reachable_in;
use super::{LehmannRabin, LrState, Pc, Region, Side};
use crate::predicate::StatePredicate;
use crate::pta::ModelError;
use crate::rational::{rat, Rational};
use crate::verify::{verify_exact, Conditioning, GameError, GameOptions, GameQuery, Objective};

/// Ring size the scenarios are instantiated at.
pub const SCENARIO_RING: usize = 3;

const IDS: [&str; 14] = [
    "exit-to-remainder", "first-resource-after-idle", "first-resource-after-drop", "first-resource-after-second", "first-resource-after-wait", "first-resource-after-trying", "shared-second-resource", "second-test-against-committed", "second-test-against-uncommitted", "wait-left-between-neighbours", "wait-right-between-neighbours", "flip-not-hemmed-in",
    "flip-hemmed-in", "trying-reaches-flip-or-better",
];

/// What a scenario's conclusion asks for.
pub type ScenarioObjective = Objective<LrState>;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown scenario id {0:?}")]
    Unknown(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub struct ProgressScenario {
    pub id: &'static str,
    pub summary: &'static str,
    pub n: usize,
    /// The process the case is about.
    pub focus: usize,
    pub starts: Vec<LrState>,
    pub objective: ScenarioObjective,
    pub conditions: Vec<Conditioning<LrState>>,
    /// Rounds.
    pub horizon: u32,
    pub floor: Rational,
}

impl ProgressScenario {
    pub fn query(&self) -> GameQuery<LrState> {
        GameQuery {
            objective: self.objective.clone(),
            horizon: self.horizon,
            conditions: self.conditions.clone(),
        }
    }

    pub fn model(&self) -> LehmannRabin {
        LehmannRabin::new(self.n).expect("scenario ring size is valid")
    }

    /// Solves the scenario's game over its whole start family.
    pub fn run(&self, options: GameOptions) -> Result<ScenarioOutcome, GameError> {
        let model = self.model();
        let result = verify_exact(&model, &self.starts, self.query(), options)?;
        Ok(ScenarioOutcome {
            id: self.id.to_string(),
            summary: self.summary.to_string(),
            n: self.n,
            starts: self.starts.len(),
            horizon: self.horizon,
            floor: self.floor.clone(),
            holds: result.value >= self.floor,
            worst_start: result
                .worst_start
                .map(|k| hex::encode(crate::pta::Model::encode(&model, &self.starts[k]))),
            value: result.value,
            nodes: result.nodes,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioOutcome {
    pub id: String,
    pub summary: String,
    pub n: usize,
    pub starts: usize,
    pub horizon: u32,
    #[serde(with = "crate::rational::serde_rational")]
    pub floor: Rational,
    #[serde(with = "crate::rational::serde_rational")]
    pub value: Rational,
    pub holds: bool,
    /// Hex encoding of a start state attaining the minimum.
    pub worst_start: Option<String>,
    pub nodes: usize,
}

/// Registered scenario ids, in presentation order.
pub fn scenario_ids() -> Vec<&'static str> {
    IDS.to_vec()
}

const TRYING: [Pc; 5] = [Pc::F, Pc::W, Pc::S, Pc::D, Pc::P];

fn at(n: usize, i: usize, offset: isize) -> usize {
    (i as isize + offset).rem_euclid(n as isize) as usize
}

/// Process `j` is in one of `pcs`, with any side.
fn is(s: &LrState, j: usize, pcs: &[Pc]) -> bool {
    pcs.contains(&s.procs[j].pc)
}

/// Process `j` is in one of `pcs` with `u = side`.
fn is_u(s: &LrState, j: usize, pcs: &[Pc], side: Side) -> bool {
    is(s, j, pcs) && s.procs[j].u == side
}

fn flips_to(j: usize, side: Side) -> Conditioning<LrState> {
    let name = match side {
        Side::Left => "left",
        Side::Right => "right",
    };
    Conditioning {
        action: format!("flip_{j}"),
        pred: StatePredicate::new(format!("u_{j}={name}"), move |s: &LrState| {
            s.procs[j].u == side
        }),
    }
}

fn some_enters_p(procs: Vec<usize>) -> StatePredicate<LrState> {
    let name = format!(
        "P among {}",
        procs.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",")
    );
    StatePredicate::new(name, move |s: &LrState| procs.iter().any(|&j| s.procs[j].pc == Pc::P))
}

fn region_union(regions: Vec<Region>) -> StatePredicate<LrState> {
    let name = regions.iter().map(|r| r.name()).collect::<Vec<_>>().join("|");
    StatePredicate::new(name, move |s: &LrState| regions.iter().any(|r| r.contains(s)))
}

/// "Either `X_{i−1} = P` or `X_i = S`", the conclusion shared by the
/// first-resource cases.
fn left_neighbour_p_or_s(n: usize, i: usize) -> StatePredicate<LrState> {
    let l = at(n, i, -1);
    StatePredicate::new("X_{i-1}=P or X_i=S", move |s: &LrState| {
        s.procs[l].pc == Pc::P || s.procs[i].pc == Pc::S
    })
}

/// Builds the scenario registered under `id` at ring size three.
pub fn scenario(id: &str) -> Result<ProgressScenario, ScenarioError> {
    scenario_at(id, SCENARIO_RING)
}

/// Builds the scenario registered under `id` on a ring of `n ≥ 3`
/// processes (the cases talk about three distinct neighbours).
pub fn scenario_at(id: &str, n: usize) -> Result<ProgressScenario, ScenarioError> {
    if n < 3 {
        return Err(ScenarioError::Model(ModelError::Domain(format!(
            "scenarios need at least three processes, got {n}"
        ))));
    }
    let model = LehmannRabin::new(n)?;
    let budget = 10_000_000;
    let family = |f: Box<dyn Fn(&LrState) -> bool + Send + Sync>| -> Result<Vec<LrState>, ModelError> {
        reachable_in(&model, &StatePredicate::new("precondition", f), budget)
    };
    let one = Rational::one();
    // Focus process; neighbours are at offsets −1 and +1.
    let i = 1;
    let (im1, ip1) = (at(n, i, -1), at(n, i, 1));
    let first_resource = |summary, prev: Vec<Pc>, time| {
        let starts = family(Box::new(move |s| {
            is(s, im1, &prev) && is_u(s, i, &[Pc::W], Side::Left)
        }))?;
        Ok::<_, ScenarioError>(ProgressScenario {
            id: "",
            summary,
            n,
            focus: i,
            starts,
            objective: Objective::Reach(left_neighbour_p_or_s(n, i)),
            conditions: vec![flips_to(im1, Side::Left)],
            horizon: time,
            floor: Rational::one(),
        })
    };
    let sc = match id {
        "exit-to-remainder" => ProgressScenario {
            id: "exit-to-remainder",
            summary: "a process in its exit region reaches R within 3 rounds",
            n,
            focus: i,
            starts: family(Box::new(move |s| is(s, i, &[Pc::EF, Pc::ES, Pc::ER])))?,
            objective: Objective::Reach(StatePredicate::new("X_i=R", move |s: &LrState| {
                s.procs[i].pc == Pc::R
            })),
            conditions: vec![],
            horizon: 3,
            floor: one,
        },
        "first-resource-after-idle" => ProgressScenario {
            id: "first-resource-after-idle",
            ..first_resource(
                "X_{i-1} in {ER,R,F}, X_i = W pointing left, first flip of i-1 left: within 1 round X_{i-1}=P or X_i=S",
                vec![Pc::ER, Pc::R, Pc::F],
                1,
            )?
        },
        "first-resource-after-drop" => ProgressScenario {
            id: "first-resource-after-drop",
            ..first_resource(
                "X_{i-1} = D, X_i = W pointing left, first flip of i-1 left: within 2 rounds X_{i-1}=P or X_i=S",
                vec![Pc::D],
                2,
            )?
        },
        "first-resource-after-second" => ProgressScenario {
            id: "first-resource-after-second",
            ..first_resource(
                "X_{i-1} = S, X_i = W pointing left, first flip of i-1 left: within 3 rounds X_{i-1}=P or X_i=S",
                vec![Pc::S],
                3,
            )?
        },
        "first-resource-after-wait" => ProgressScenario {
            id: "first-resource-after-wait",
            ..first_resource(
                "X_{i-1} = W, X_i = W pointing left, first flip of i-1 left: within 4 rounds X_{i-1}=P or X_i=S",
                vec![Pc::W],
                4,
            )?
        },
        "first-resource-after-trying" => ProgressScenario {
            id: "first-resource-after-trying",
            ..first_resource(
                "X_{i-1} in {ER,R} or trying, X_i = W pointing left, first flip of i-1 left: within 4 rounds X_{i-1}=P or X_i=S",
                [&[Pc::ER, Pc::R][..], &TRYING[..]].concat(),
                4,
            )?
        },
        "shared-second-resource" => {
            // i points left and i+1 points right, so resource i is the
            // second resource of both; whoever tests it first gets it.
            let starts = family(Box::new(move |s| {
                let left_ok = is_u(s, i, &[Pc::W, Pc::S, Pc::D], Side::Left)
                    || is(s, i, &[Pc::ER, Pc::R, Pc::F]);
                let right_ok = is_u(s, ip1, &[Pc::W, Pc::S, Pc::D], Side::Right)
                    || is(s, ip1, &[Pc::ER, Pc::R, Pc::F]);
                left_ok && right_ok
            }))?;
            let enters = |j: usize| {
                StatePredicate::new(format!("X_{j}=P"), move |s: &LrState| s.procs[j].pc == Pc::P)
            };
            ProgressScenario {
                id: "shared-second-resource",
                summary: "i pointing left, i+1 pointing right (or about to flip that way): the first of them to test its second resource enters P",
                n,
                focus: i,
                starts,
                objective: Objective::Next(vec![
                    (format!("second_{i}"), enters(i)),
                    (format!("second_{ip1}"), enters(ip1)),
                ]),
                conditions: vec![flips_to(i, Side::Left), flips_to(ip1, Side::Right)],
                horizon: 8,
                floor: one,
            }
        }
        "second-test-against-committed" => ProgressScenario {
            id: "second-test-against-committed",
            summary: "X_i = S pointing left and X_{i+1} committed pointing right, or the mirror: within 1 round i or i+1 enters P",
            n,
            focus: i,
            starts: family(Box::new(move |s| {
                let a = is_u(s, i, &[Pc::S], Side::Left)
                    && is_u(s, ip1, &[Pc::W, Pc::S], Side::Right);
                let b = is_u(s, i, &[Pc::W, Pc::S], Side::Left)
                    && is_u(s, ip1, &[Pc::S], Side::Right);
                a || b
            }))?,
            objective: Objective::Reach(some_enters_p(vec![i, ip1])),
            conditions: vec![],
            horizon: 1,
            floor: one,
        },
        "second-test-against-uncommitted" => ProgressScenario {
            id: "second-test-against-uncommitted",
            summary: "X_i = S pointing left, X_{i+1} not yet committed with its first flip right, or the mirror: within 1 round i or i+1 enters P",
            n,
            focus: i,
            starts: family(Box::new(move |s| {
                let a = is_u(s, i, &[Pc::S], Side::Left)
                    && (is(s, ip1, &[Pc::ER, Pc::R, Pc::F])
                        || is_u(s, ip1, &[Pc::D], Side::Right));
                let b = is_u(s, ip1, &[Pc::S], Side::Right)
                    && (is(s, i, &[Pc::ER, Pc::R, Pc::F]) || is_u(s, i, &[Pc::D], Side::Left));
                a || b
            }))?,
            objective: Objective::Reach(some_enters_p(vec![i, ip1])),
            conditions: vec![flips_to(i, Side::Left), flips_to(ip1, Side::Right)],
            horizon: 1,
            floor: one,
        },
        "wait-left-between-neighbours" => ProgressScenario {
            id: "wait-left-between-neighbours",
            summary: "X_{i-1} in {ER,R} or trying, X_i = W pointing left, X_{i+1} in {ER,R,F} or W/D pointing right, first flips of i-1 left and i+1 right: within 5 rounds i-1, i or i+1 enters P",
            n,
            focus: i,
            starts: family(Box::new(move |s| {
                (is(s, im1, &[Pc::ER, Pc::R]) || is(s, im1, &TRYING))
                    && is_u(s, i, &[Pc::W], Side::Left)
                    && (is(s, ip1, &[Pc::ER, Pc::R, Pc::F])
                        || is_u(s, ip1, &[Pc::W, Pc::D], Side::Right))
            }))?,
            objective: Objective::Reach(some_enters_p(vec![im1, i, ip1])),
            conditions: vec![flips_to(im1, Side::Left), flips_to(ip1, Side::Right)],
            horizon: 5,
            floor: one,
        },
        "wait-right-between-neighbours" => {
            let (j, j1, j2) = (i, at(n, i, 1), at(n, i, 2));
            ProgressScenario {
                id: "wait-right-between-neighbours",
                summary: "X_i in {ER,R,F} or W/D pointing left, X_{i+1} = W pointing right, X_{i+2} in {ER,R} or trying, first flips of i left and i+2 right: within 5 rounds i, i+1 or i+2 enters P",
                n,
                focus: i,
                starts: family(Box::new(move |s| {
                    (is(s, j, &[Pc::ER, Pc::R, Pc::F]) || is_u(s, j, &[Pc::W, Pc::D], Side::Left))
                        && is_u(s, j1, &[Pc::W], Side::Right)
                        && (is(s, j2, &[Pc::ER, Pc::R]) || is(s, j2, &TRYING))
                }))?,
                objective: Objective::Reach(some_enters_p(vec![j, j1, j2])),
                conditions: vec![flips_to(j, Side::Left), flips_to(j2, Side::Right)],
                horizon: 5,
                floor: one,
            }
        }
        "flip-not-hemmed-in" => ProgressScenario {
            id: "flip-not-hemmed-in",
            summary: "in F with a flipping process whose neighbours do not both point at it: G or P within 1 round with probability 1/2",
            n,
            focus: i,
            starts: family(Box::new(move |s| {
                Region::F.contains(s) && (0..n).any(|k| is(s, k, &[Pc::F]) && !hemmed_in(s, k))
            }))?,
            objective: Objective::Reach(region_union(vec![Region::G, Region::P])),
            conditions: vec![],
            horizon: 1,
            floor: rat(1, 2),
        },
        "flip-hemmed-in" => ProgressScenario {
            id: "flip-hemmed-in",
            summary: "in F with a flipping process whose neighbours both point at it: G or P within 2 rounds with probability 1/2",
            n,
            focus: i,
            starts: family(Box::new(move |s| {
                Region::F.contains(s) && (0..n).any(|k| is(s, k, &[Pc::F]) && hemmed_in(s, k))
            }))?,
            objective: Objective::Reach(region_union(vec![Region::G, Region::P])),
            conditions: vec![],
            horizon: 2,
            floor: rat(1, 2),
        },
        "trying-reaches-flip-or-better" => ProgressScenario {
            id: "trying-reaches-flip-or-better",
            summary: "from RT, F, G or P is reached within 3 rounds",
            n,
            focus: i,
            starts: family(Box::new(|s| Region::RT.contains(s)))?,
            objective: Objective::Reach(region_union(vec![Region::F, Region::G, Region::P])),
            conditions: vec![],
            horizon: 3,
            floor: one,
        },
        other => return Err(ScenarioError::Unknown(other.to_string())),
    };
    Ok(sc)
}

/// The left neighbour of `k` points right and the right neighbour points
/// left, both in W, S or D: each of them potentially controls a resource
/// of `k`.
fn hemmed_in(s: &LrState, k: usize) -> bool {
    let n = s.n();
    let committed = [Pc::W, Pc::S, Pc::D];
    is_u(s, at(n, k, -1), &committed, Side::Right) && is_u(s, at(n, k, 1), &committed, Side::Left)
}
