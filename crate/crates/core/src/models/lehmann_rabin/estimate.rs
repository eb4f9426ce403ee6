//! Statistical estimates for rings too large to solve exactly: a cheap pilot
//! over many sampled start states picks the hardest ones, which then get the
//! full trial budget.

use serde::Serialize;

use super::{LehmannRabin, LrState};
use crate::adversary::{Adversary, AdversaryError};
use crate::predicate::StatePredicate;
use crate::rational::int;
use crate::verify::{verify_with_mean_time, MeanTimeReport, MonteCarloReport};

/// Budget of a pilot-then-focus estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EstimatePlan {
    /// Reach horizon of the probability estimate, in rounds.
    pub horizon: u32,
    /// Runs are cut off (and counted at this value) after this many rounds.
    pub cap_rounds: u64,
    pub pilot_trials: u64,
    /// How many of the hardest pilot starts, by success fraction and
    /// separately by mean time, get the full budget.
    pub keep: usize,
    pub trials: u64,
    pub max_steps: usize,
}

impl Default for EstimatePlan {
    fn default() -> Self {
        EstimatePlan {
            horizon: 13,
            cap_rounds: 1000,
            pilot_trials: 500,
            keep: 1,
            trials: 100_000,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RingEstimate {
    pub adversary: String,
    pub n: usize,
    pub sampled_starts: usize,
    pub plan: EstimatePlan,
    /// Estimates over the kept starts only.
    pub reach: MonteCarloReport,
    pub time: MeanTimeReport,
}

/// Runs the pilot over `starts`, ranks them once by success fraction and
/// once by mean time (hardest first), and reruns the `plan.keep` hardest of
/// each ranking with `plan.trials` runs each on fresh random streams.
pub fn estimate_ring<A>(
    model: &LehmannRabin,
    adv: &A,
    starts: &[LrState],
    target: &StatePredicate<LrState>,
    plan: EstimatePlan,
    seed: u64,
) -> Result<RingEstimate, AdversaryError>
where
    A: Adversary<LehmannRabin> + ?Sized,
{
    let horizon = int(plan.horizon as i64);
    let (pilot, pilot_time) = verify_with_mean_time(
        model,
        adv,
        starts,
        target,
        &horizon,
        plan.pilot_trials.max(1),
        seed,
        plan.cap_rounds,
        plan.max_steps,
    )?;
    let keep = plan.keep.max(1);
    let mut by_fraction: Vec<usize> = (0..starts.len()).collect();
    by_fraction.sort_by(|&a, &b| {
        pilot.per_start[a]
            .fraction
            .total_cmp(&pilot.per_start[b].fraction)
            .then(pilot_time.per_start[b].mean.total_cmp(&pilot_time.per_start[a].mean))
    });
    let mut by_mean: Vec<usize> = (0..starts.len()).collect();
    by_mean.sort_by(|&a, &b| pilot_time.per_start[b].mean.total_cmp(&pilot_time.per_start[a].mean));
    let mut chosen: Vec<usize> = Vec::new();
    for &k in by_fraction.iter().take(keep).chain(by_mean.iter().take(keep)) {
        if !chosen.contains(&k) {
            chosen.push(k);
        }
    }
    let hardest: Vec<LrState> = chosen.iter().map(|&k| starts[k].clone()).collect();
    let (reach, time) = verify_with_mean_time(
        model,
        adv,
        &hardest,
        target,
        &horizon,
        plan.trials.max(1),
        seed.wrapping_add(1),
        plan.cap_rounds,
        plan.max_steps,
    )?;
    Ok(RingEstimate {
        adversary: adv.name().to_string(),
        n: model.n(),
        sampled_starts: starts.len(),
        plan,
        reach,
        time,
    })
}
