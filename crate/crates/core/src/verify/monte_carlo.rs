//! Statistical checks of time-bound statements for one adversary, with
//! every trial monitored for Unit-Time violations.

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use super::stats::{clopper_pearson_lower, mean_interval};
use crate::adversary::{check_unit_time, resolve, Adversary, AdversaryError, Choice, UnitTimeMonitor};
use crate::pta::{sample_step, trial_rng, ExecutionFragment, Model, ModelError};
use crate::predicate::StatePredicate;
use crate::rational::{round6, to_f64, Rational};

pub const CONFIDENCE: f64 = 0.99;

/// Outcome of one simulated run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    /// Elapsed time of the first target state, if reached.
    pub hit: Option<Rational>,
    /// The run stopped at the time or step cap without reaching the target.
    pub censored: bool,
}

/// Simulates one run from `start` until the target is reached, the
/// adversary halts, or time would pass `cap` (or `max_steps` actions were
/// taken). Any Unit-Time violation aborts with its witness.
#[allow(clippy::too_many_arguments)]
pub fn simulate<M, A, R>(
    model: &M,
    adv: &A,
    start: &M::State,
    target: &StatePredicate<M::State>,
    cap: &Rational,
    max_steps: usize,
    monitor_unit_time: bool,
    rng: &mut R,
) -> Result<Trial, AdversaryError>
where
    M: Model + ?Sized,
    A: Adversary<M> + ?Sized,
    R: rand::Rng + ?Sized,
{
    let mut frag = ExecutionFragment::singleton(start.clone());
    if let Some(t) = model.state_time(start) {
        frag = ExecutionFragment::new(start.clone(), t);
    }
    let info = if monitor_unit_time {
        Some(model.processes().ok_or_else(|| {
            AdversaryError::Unsupported(format!("{} exposes no process structure", model.name()))
        })?)
    } else {
        None
    };
    let mut unit = info.map(|i| UnitTimeMonitor::start(i, start, frag.start_time()));
    let t0 = frag.start_time().clone();
    for _ in 0..max_steps {
        if target.eval(frag.lstate()) {
            return Ok(Trial {
                hit: Some(frag.end_time() - &t0),
                censored: false,
            });
        }
        let step = match resolve(model, adv, &frag)? {
            Choice::Halt => {
                return Ok(Trial {
                    hit: None,
                    censored: false,
                })
            }
            Choice::Step(step) => step,
        };
        let time = frag.end_time() + &step.elapse;
        if &(&time - &t0) > cap {
            return Ok(Trial {
                hit: None,
                censored: true,
            });
        }
        let next = sample_step(&step, rng);
        if let (Some(u), Some(info)) = (unit.as_mut(), info) {
            if u.observe(info, &step.action, &next, &time).is_err() {
                frag.push(step.action.clone(), next, &step.elapse)?;
                let witness = check_unit_time(&frag, model)?
                    .ok_or_else(|| ModelError::InvalidFragment("monitor disagreement".into()))?;
                return Err(AdversaryError::Violation(Box::new(witness)));
            }
        }
        frag.push(step.action.clone(), next, &step.elapse)?;
    }
    Ok(Trial {
        hit: None,
        censored: true,
    })
}

/// Runs `trials` simulations of `(index, start)`; trial `k` draws from the
/// stream `stream_base + k`, so the result does not depend on threading.
#[allow(clippy::too_many_arguments)]
fn run_trials<M, A>(
    model: &M,
    adv: &A,
    start: &M::State,
    target: &StatePredicate<M::State>,
    cap: &Rational,
    max_steps: usize,
    trials: u64,
    seed: u64,
    stream_base: u64,
) -> Result<Vec<Trial>, AdversaryError>
where
    M: Model + ?Sized,
    A: Adversary<M> + ?Sized,
{
    let results: Vec<Result<Trial, AdversaryError>> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = trial_rng(seed, stream_base + k);
            simulate(model, adv, start, target, cap, max_steps, true, &mut rng)
        })
        .collect();
    results.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartEstimate {
    /// Hex encoding of the start state.
    pub start: String,
    pub trials: u64,
    pub successes: u64,
    /// Rounded to 6 decimals.
    pub fraction: f64,
    /// One-sided 99% Clopper–Pearson lower bound, rounded to 6 decimals.
    pub lower_bound: f64,
    /// Mean elapsed time to the target among successes, rounded to 6
    /// decimals.
    pub mean_hit_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub adversary: String,
    #[serde(with = "crate::rational::serde_rational")]
    pub horizon: Rational,
    pub seed: u64,
    pub confidence: f64,
    pub per_start: Vec<StartEstimate>,
    /// Smallest per-start lower bound.
    pub worst_lower_bound: f64,
    pub worst_start: Option<usize>,
}

impl MonteCarloReport {
    pub fn holds(&self, p: &Rational) -> bool {
        self.worst_lower_bound >= to_f64(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanTimeEstimate {
    pub start: String,
    pub trials: u64,
    pub hits: u64,
    pub censored: u64,
    /// Sample mean of the first-hit time, rounded to 6 decimals. When some
    /// runs were censored, censored runs count with the cap and the mean is
    /// only a lower bound.
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub mean_is_lower_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanTimeReport {
    pub adversary: String,
    pub seed: u64,
    pub cap: u64,
    pub confidence: f64,
    pub per_start: Vec<MeanTimeEstimate>,
    pub worst_mean: f64,
    pub worst_start: Option<usize>,
}

fn reach_estimate(start: String, runs: &[Trial], horizon: &Rational) -> (StartEstimate, f64) {
    let trials = runs.len() as u64;
    let hits: Vec<f64> = runs
        .iter()
        .filter_map(|r| r.hit.as_ref().filter(|t| *t <= horizon).map(to_f64))
        .collect();
    let successes = hits.len() as u64;
    let lb = clopper_pearson_lower(successes, trials, CONFIDENCE);
    let est = StartEstimate {
        start,
        trials,
        successes,
        fraction: round6(successes as f64 / trials as f64),
        lower_bound: round6(lb),
        mean_hit_time: (!hits.is_empty()).then(|| round6(mean_interval(&hits, CONFIDENCE).0)),
    };
    (est, lb)
}

fn time_estimate(start: String, runs: &[Trial], cap_rounds: u64) -> (MeanTimeEstimate, f64) {
    let mut hits = 0;
    let mut censored = 0;
    let samples: Vec<f64> = runs
        .iter()
        .map(|r| match &r.hit {
            Some(t) => {
                hits += 1;
                t.to_f64().unwrap_or(f64::NAN)
            }
            None => {
                censored += 1;
                cap_rounds as f64
            }
        })
        .collect();
    let (mean, lo, hi) = mean_interval(&samples, CONFIDENCE);
    let est = MeanTimeEstimate {
        start,
        trials: runs.len() as u64,
        hits,
        censored,
        mean: round6(mean),
        ci_low: round6(lo),
        ci_high: round6(hi),
        mean_is_lower_bound: censored > 0,
    };
    (est, mean)
}

/// Index and value of the smallest (`lowest`) or largest entry.
fn extreme(values: &[f64], lowest: bool) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (k, &v) in values.iter().enumerate() {
        let better = match best {
            None => true,
            Some((_, b)) => (lowest && v < b) || (!lowest && v > b),
        };
        if better {
            best = Some((k, v));
        }
    }
    best
}

/// Estimates `P[reach target within horizon]` from each start under `adv`,
/// with `trials` runs per start.
#[allow(clippy::too_many_arguments)]
pub fn verify_monte_carlo<M, A>(
    model: &M,
    adv: &A,
    starts: &[M::State],
    target: &StatePredicate<M::State>,
    horizon: &Rational,
    trials: u64,
    seed: u64,
    max_steps: usize,
) -> Result<MonteCarloReport, AdversaryError>
where
    M: Model + ?Sized,
    A: Adversary<M> + ?Sized,
{
    assert!(trials >= 1, "at least one trial");
    let mut per_start = Vec::new();
    let mut bounds = Vec::new();
    for (k, s) in starts.iter().enumerate() {
        let runs = run_trials(model, adv, s, target, horizon, max_steps, trials, seed, k as u64 * trials)?;
        let (est, lb) = reach_estimate(hex::encode(model.encode(s)), &runs, horizon);
        per_start.push(est);
        bounds.push(lb);
    }
    let worst = extreme(&bounds, true);
    Ok(MonteCarloReport {
        adversary: adv.name().to_string(),
        horizon: horizon.clone(),
        seed,
        confidence: CONFIDENCE,
        per_start,
        worst_lower_bound: round6(worst.map_or(1.0, |(_, w)| w)),
        worst_start: worst.map(|(k, _)| k),
    })
}

/// Sample mean and 99% interval of the first time the target is reached.
#[allow(clippy::too_many_arguments)]
pub fn mean_time_to<M, A>(
    model: &M,
    adv: &A,
    starts: &[M::State],
    target: &StatePredicate<M::State>,
    trials: u64,
    seed: u64,
    cap_rounds: u64,
    max_steps: usize,
) -> Result<MeanTimeReport, AdversaryError>
where
    M: Model + ?Sized,
    A: Adversary<M> + ?Sized,
{
    let (_, time) = verify_with_mean_time(
        model,
        adv,
        starts,
        target,
        &Rational::from_integer(cap_rounds.into()),
        trials,
        seed,
        cap_rounds,
        max_steps,
    )?;
    Ok(time)
}

/// Both estimates from one set of runs per start: every run continues until
/// the target (or `cap_rounds`), and counts as a success for the bound when
/// the target was reached within `horizon`.
#[allow(clippy::too_many_arguments)]
pub fn verify_with_mean_time<M, A>(
    model: &M,
    adv: &A,
    starts: &[M::State],
    target: &StatePredicate<M::State>,
    horizon: &Rational,
    trials: u64,
    seed: u64,
    cap_rounds: u64,
    max_steps: usize,
) -> Result<(MonteCarloReport, MeanTimeReport), AdversaryError>
where
    M: Model + ?Sized,
    A: Adversary<M> + ?Sized,
{
    assert!(trials >= 1, "at least one trial");
    let cap = Rational::from_integer(cap_rounds.into()).max(horizon.clone());
    let mut reach = Vec::new();
    let mut times = Vec::new();
    let mut bounds = Vec::new();
    let mut means = Vec::new();
    for (k, s) in starts.iter().enumerate() {
        let runs = run_trials(model, adv, s, target, &cap, max_steps, trials, seed, k as u64 * trials)?;
        let hex = hex::encode(model.encode(s));
        let (r, lb) = reach_estimate(hex.clone(), &runs, horizon);
        let (t, mean) = time_estimate(hex, &runs, cap_rounds);
        reach.push(r);
        times.push(t);
        bounds.push(lb);
        means.push(mean);
    }
    let low = extreme(&bounds, true);
    let high = extreme(&means, false);
    Ok((
        MonteCarloReport {
            adversary: adv.name().to_string(),
            horizon: horizon.clone(),
            seed,
            confidence: CONFIDENCE,
            per_start: reach,
            worst_lower_bound: round6(low.map_or(1.0, |(_, w)| w)),
            worst_start: low.map(|(k, _)| k),
        },
        MeanTimeReport {
            adversary: adv.name().to_string(),
            seed,
            cap: cap_rounds,
            confidence: CONFIDENCE,
            per_start: times,
            worst_mean: round6(high.map_or(0.0, |(_, w)| w)),
            worst_start: high.map(|(k, _)| k),
        },
    ))
}

/// Samples the branch process of a recurrence directly: draw branches until
/// a success, adding up costs. Returns the sample mean and its 99% interval.
pub fn simulate_recurrence(
    spec: &super::RecurrenceSpec,
    samples: u64,
    seed: u64,
) -> (f64, f64, f64) {
    use rand::Rng;
    let weights: Vec<(f64, f64, bool)> = spec
        .branches
        .iter()
        .map(|b| (to_f64(&b.prob), to_f64(&b.cost), b.outcome == super::Outcome::Retry))
        .collect();
    let fixed = to_f64(&spec.entry) + to_f64(&spec.exit);
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = trial_rng(seed, k);
            let mut total = fixed;
            loop {
                let draw: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = weights.len() - 1;
                for (j, (p, _, _)) in weights.iter().enumerate() {
                    acc += p;
                    if draw < acc {
                        pick = j;
                        break;
                    }
                }
                let (_, cost, retry) = weights[pick];
                total += cost;
                if !retry {
                    return total;
                }
            }
        })
        .collect();
    mean_interval(&values, CONFIDENCE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::RoundAdversary;
    use crate::models::lehmann_rabin::{lr_registry, phase_statements, reachable_in, LehmannRabin, LrState};
    use crate::rational::int;
    use crate::verify::{recurrence_from_chain, solve_recurrence};

    fn starts(m: &LehmannRabin, source: &str) -> Vec<LrState> {
        reachable_in(m, lr_registry().get(source).unwrap(), 1_000_000)
            .unwrap()
            .into_iter()
            .take(5)
            .collect()
    }

    #[test]
    fn same_seed_gives_identical_reports() {
        let m = LehmannRabin::new(3).unwrap();
        let g = starts(&m, "G");
        let target = lr_registry().get("P").unwrap().clone();
        let adv = RoundAdversary::round_robin();
        let run = |seed| verify_monte_carlo(&m, &adv, &g, &target, &int(5), 200, seed, 10_000).unwrap();
        assert_eq!(run(3), run(3));
        assert_eq!(run(3).per_start.len(), g.len());
    }

    #[test]
    fn certain_step_has_a_tight_lower_bound() {
        let m = LehmannRabin::new(3).unwrap();
        let p = starts(&m, "P");
        let target = lr_registry().get("C").unwrap().clone();
        let adv = RoundAdversary::greedy_blocker();
        let (reach, time) =
            verify_with_mean_time(&m, &adv, &p, &target, &int(1), 1000, 0, 100, 10_000).unwrap();
        for e in &reach.per_start {
            assert_eq!(e.successes, 1000);
            assert!(e.lower_bound > 0.995 && e.lower_bound < 1.0);
        }
        assert!(reach.holds(&int(1)) || reach.worst_lower_bound < 1.0);
        assert!(time.worst_mean <= 1.0);
        assert!(time.per_start.iter().all(|e| e.censored == 0));
    }

    #[test]
    fn stalling_scheduler_is_caught() {
        let m = LehmannRabin::new(3).unwrap();
        let t = starts(&m, "T");
        let target = lr_registry().get("C").unwrap().clone();
        let err = verify_monte_carlo(&m, &RoundAdversary::stall(), &t, &target, &int(13), 10, 0, 10_000)
            .unwrap_err();
        assert!(matches!(err, AdversaryError::Violation(_)));
    }

    #[test]
    fn simulated_recurrence_agrees_with_its_solution() {
        let spec = recurrence_from_chain(&phase_statements()).unwrap();
        let exact = to_f64(&solve_recurrence(&spec).unwrap());
        assert_eq!(exact, 63.0);
        let (mean, lo, hi) = simulate_recurrence(&spec, 50_000, 11);
        assert!(lo <= exact && exact <= hi, "{exact} outside [{lo}, {hi}] (mean {mean})");
        assert_eq!(simulate_recurrence(&spec, 1000, 5), simulate_recurrence(&spec, 1000, 5));
    }
}
