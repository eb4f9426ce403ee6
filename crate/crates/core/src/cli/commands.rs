//! The four commands. Each returns its JSON report, a summary, and the
//! exit code; only unusable input is an error.

use std::fmt::Write as _;

use num_traits::{ToPrimitive, Zero};

use super::file::{FileError, ScenarioFile, StartFamily};
use super::Output;
use crate::adversary::{adversary_by_name, AdversaryError};
use crate::models::lehmann_rabin::{
    estimate_ring, explore_invariant, reachable_in, sample_invariant, sample_states, scenario, scenario_at,
    scenario_ids, EstimatePlan, InvariantReport, LehmannRabin, LrState, RingEstimate, ScenarioError,
};
use crate::predicate::{PredicateRegistry, StatePredicate};
use crate::pta::ModelError;
use crate::rational::{to_f64, Rational, RationalRepr};
use crate::report::{
    to_json, AdversaryEstimate, ChainReport, ErrorReport, ExpectedTime, InvariantsReport, ScenarioEntry,
    ScenarioListReport, Semantics, StatementReport, Verdict, VerifyReport,
};
use crate::verify::{
    chain, recurrence_from_chain, solve_recurrence, verify_exact, verify_with_mean_time, CalculusError,
    GameError, GameOptions, GameQuery, Objective, TimeBoundStatement, CONFIDENCE,
};

/// Command-line values that replace those of the scenario file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub semantics: Option<Semantics>,
    pub budget_nodes: Option<usize>,
}

impl Overrides {
    fn apply(&self, file: &ScenarioFile) -> ScenarioFile {
        let mut f = file.clone();
        if let Some(s) = self.seed {
            f.seed = s;
        }
        if let Some(t) = self.trials {
            f.trials = t;
        }
        if let Some(s) = self.semantics {
            f.semantics = s;
        }
        if let Some(b) = self.budget_nodes {
            f.budget.nodes = b;
        }
        f
    }
}

fn model_error(e: ModelError) -> ErrorReport {
    match e {
        ModelError::Budget { .. } => ErrorReport::new("budget", e.to_string()),
        other => ErrorReport::new("error", other.to_string()),
    }
}

fn game_error(e: GameError) -> ErrorReport {
    match e {
        GameError::Budget { .. } | GameError::Model(ModelError::Budget { .. }) => {
            ErrorReport::new("budget", e.to_string())
        }
        other => ErrorReport::new("error", other.to_string()),
    }
}

fn adversary_error(e: AdversaryError) -> ErrorReport {
    match e {
        AdversaryError::Violation(w) => ErrorReport {
            witness: Some(w.clone()),
            ..ErrorReport::new("unit-time-violation", format!("Unit-Time violation: {w}"))
        },
        AdversaryError::Model(m) => model_error(m),
        other => ErrorReport::new("error", other.to_string()),
    }
}

fn starts_for(
    file: &ScenarioFile,
    model: &LehmannRabin,
    pred: &StatePredicate<LrState>,
) -> Result<Vec<LrState>, ErrorReport> {
    match file.start_family() {
        StartFamily::Reachable => reachable_in(model, pred, file.budget.states),
        StartFamily::Sampled { count, walk } => sample_states(model, pred, count, walk, file.seed),
    }
    .map_err(model_error)
}

fn check_statement(
    file: &ScenarioFile,
    model: &LehmannRabin,
    reg: &PredicateRegistry<LrState>,
    st: &TimeBoundStatement,
) -> Result<StatementReport, ErrorReport> {
    let resolve = |set| reg.resolve(set).map_err(|e| ErrorReport::new("error", e.to_string()));
    let source = resolve(&st.source)?;
    let target = resolve(&st.target)?;
    let horizon = st.time.to_integer().to_u32().ok_or_else(|| {
        ErrorReport::new("error", format!("time bound {} is too large", st.time))
    })?;
    let mut report = StatementReport {
        statement: st.clone(),
        semantics: file.semantics,
        horizon: st.time.clone(),
        verdict: Verdict::Vacuous,
        starts: 0,
        value: None,
        nodes: None,
        worst_start: None,
        witness_policy: None,
        estimates: Vec::new(),
        confidence: None,
        seed: file.seed,
    };
    if st.prob <= Rational::zero() {
        return Ok(report);
    }
    let starts = starts_for(file, model, &source)?;
    report.starts = starts.len();
    match file.semantics {
        Semantics::Round => {
            let query = GameQuery {
                objective: Objective::Reach(target),
                horizon,
                conditions: Vec::new(),
            };
            let options = GameOptions {
                budget_nodes: file.budget.nodes,
                memoize: true,
                record_policy: file.record_policy,
            };
            let result = verify_exact(model, &starts, query, options).map_err(game_error)?;
            report.verdict = Verdict::from_bool(result.value >= st.prob);
            report.value = Some(RationalRepr::from(&result.value));
            report.nodes = Some(result.nodes);
            report.worst_start = result
                .worst_start
                .map(|k| hex::encode(crate::pta::Model::encode(model, &starts[k])));
            report.witness_policy = result.policy.map(|p| p.rows());
        }
        Semantics::Deadline => {
            let mut all = true;
            for name in &file.adversaries {
                let adv = adversary_by_name(model, name)
                    .ok_or_else(|| ErrorReport::new("error", format!("unknown adversary {name}")))?;
                let plan = EstimatePlan {
                    horizon,
                    cap_rounds: file.budget.round_cap,
                    pilot_trials: file.pilot.map_or(0, |p| p.trials),
                    keep: file.pilot.map_or(starts.len(), |p| p.keep),
                    trials: file.trials,
                    max_steps: file.budget.max_steps,
                };
                let estimate = match file.pilot {
                    Some(_) => estimate_ring(model, adv.as_ref(), &starts, &target, plan, file.seed),
                    None => verify_with_mean_time(
                        model,
                        adv.as_ref(),
                        &starts,
                        &target,
                        &st.time,
                        file.trials,
                        file.seed,
                        file.budget.round_cap,
                        file.budget.max_steps,
                    )
                    .map(|(reach, time)| RingEstimate {
                        adversary: adv.name().to_string(),
                        n: model.n(),
                        sampled_starts: starts.len(),
                        plan,
                        reach,
                        time,
                    }),
                }
                .map_err(adversary_error)?;
                let mut holds = estimate.reach.worst_lower_bound >= to_f64(&st.prob);
                if let Some(bound) = &file.expected_time_bound {
                    let censored = estimate.time.per_start.iter().any(|e| e.censored > 0);
                    holds &= !censored && estimate.time.worst_mean <= to_f64(bound);
                }
                all &= holds;
                report.estimates.push(AdversaryEstimate { holds, estimate });
            }
            report.verdict = Verdict::from_bool(all);
            report.confidence = Some(CONFIDENCE);
        }
    }
    Ok(report)
}

fn verdict_word(ok: bool) -> &'static str {
    if ok {
        "holds"
    } else {
        "FAILS"
    }
}

/// Runs every statement and scenario of `file`. Stops at the first budget
/// overrun or Unit-Time violation and reports what was finished.
pub fn cmd_verify(file: &ScenarioFile, ov: &Overrides) -> Result<Output, FileError> {
    let file = ov.apply(file);
    let (model, reg) = file.validate()?;
    let mut report = VerifyReport {
        name: file.name.clone(),
        model: file.model.family.clone(),
        n: file.model.n,
        semantics: file.semantics,
        seed: file.seed,
        statements: Vec::new(),
        scenarios: Vec::new(),
        holds: false,
        error: None,
    };
    let mut summary = String::new();
    let mut statements = file.statements.clone();
    if file.check_composed {
        match chain(&file.statements) {
            Ok(c) => statements.push(c.composed),
            Err(e) => {
                return Err(FileError::Invalid(format!("statements do not chain: {e}")));
            }
        }
    }
    for st in &statements {
        match check_statement(&file, &model, &reg, st) {
            Ok(r) => {
                let detail = match (&r.value, r.estimates.is_empty()) {
                    (Some(v), _) => format!("value {}/{} over {} starts", v.num, v.den, r.starts),
                    (None, false) => r
                        .estimates
                        .iter()
                        .map(|e| {
                            format!(
                                "{}: lower bound {} mean time {}",
                                e.estimate.adversary, e.estimate.reach.worst_lower_bound, e.estimate.time.worst_mean
                            )
                        })
                        .collect::<Vec<_>>()
                        .join("; "),
                    (None, true) => "threshold 0".to_string(),
                };
                let _ = writeln!(summary, "{:<6} {}: {}", verdict_word(r.verdict.is_ok()), st, detail);
                report.statements.push(r);
            }
            Err(e) => {
                let _ = writeln!(summary, "STOP   {}: {}", st, e.message);
                report.error = Some(e);
                break;
            }
        }
    }
    if report.error.is_none() {
        let options = GameOptions {
            budget_nodes: file.budget.nodes,
            ..GameOptions::default()
        };
        for id in &file.scenarios {
            let outcome = scenario_at(id, file.model.n)
                .map_err(|e| match e {
                    ScenarioError::Model(m) => model_error(m),
                    other => ErrorReport::new("error", other.to_string()),
                })
                .and_then(|sc| sc.run(options).map_err(game_error));
            match outcome {
                Ok(o) => {
                    let _ = writeln!(
                        summary,
                        "{:<6} scenario {}: value {} (floor {}) over {} starts",
                        verdict_word(o.holds),
                        o.id,
                        o.value,
                        o.floor,
                        o.starts
                    );
                    report.scenarios.push(o);
                }
                Err(e) => {
                    let _ = writeln!(summary, "STOP   scenario {id}: {}", e.message);
                    report.error = Some(e);
                    break;
                }
            }
        }
    }
    report.holds = report.error.is_none()
        && report.statements.iter().all(|s| s.verdict.is_ok())
        && report.scenarios.iter().all(|s| s.holds);
    let _ = writeln!(summary, "{}: {}", file.name, verdict_word(report.holds));
    Ok(Output {
        json: to_json(&report),
        summary,
        code: report.exit_code(),
    })
}

/// Composes the statements of `file` in order, union-lifting as needed, and
/// solves the expected-time recurrence of the chain.
pub fn cmd_chain(file: &ScenarioFile) -> Result<Output, FileError> {
    file.validate()?;
    let mut report = ChainReport {
        name: file.name.clone(),
        links: Vec::new(),
        composed: None,
        expected_time: None,
        error: None,
    };
    let mut summary = String::new();
    match chain(&file.statements) {
        Ok(c) => {
            for link in &c.links {
                if link.lift.is_empty() {
                    let _ = writeln!(summary, "  {}", link.original);
                } else {
                    let _ = writeln!(summary, "  {}  (lifted by {}: {})", link.original, link.lift, link.lifted);
                }
            }
            let _ = writeln!(summary, "composed: {}", c.composed);
            report.links = c.links;
            report.composed = Some(c.composed);
            if let Ok(spec) = recurrence_from_chain(&file.statements) {
                if let Ok(total) = solve_recurrence(&spec) {
                    let internal = &total - &spec.entry - &spec.exit;
                    let _ = writeln!(summary, "expected time: {internal} inside the loop, {total} in total");
                    report.expected_time = Some(ExpectedTime {
                        recurrence: spec,
                        internal: RationalRepr::from(&internal),
                        total: RationalRepr::from(&total),
                    });
                }
            }
        }
        Err(e) if e.is_chain_error() => {
            let junction = match &e {
                CalculusError::ChainBroken { junction, .. } => Some(*junction),
                // The first statement whose schema differs from the first one.
                CalculusError::SchemaMismatch { .. } => file
                    .statements
                    .iter()
                    .position(|s| s.schema != file.statements[0].schema),
                _ => None,
            };
            let _ = writeln!(summary, "broken chain: {e}");
            report.error = Some(ErrorReport {
                junction,
                ..ErrorReport::new("broken-chain", e.to_string())
            });
        }
        Err(e) => {
            let _ = writeln!(summary, "error: {e}");
            report.error = Some(ErrorReport::new("error", e.to_string()));
        }
    }
    Ok(Output {
        json: to_json(&report),
        summary,
        code: report.exit_code(),
    })
}

/// A state no execution reaches: resource 0 is taken but nobody holds it.
pub fn forged_illegal_state(n: usize) -> LrState {
    let mut s = LrState::initial(n);
    s.res[0] = true;
    s
}

/// Checks the resource invariant on every reachable state (`depth = None`
/// and `n ≤ 4`) or along `walks` random walks of `depth` steps.
pub fn cmd_invariants(
    n: usize,
    depth: Option<usize>,
    walks: u64,
    budget_states: usize,
    seed: u64,
    inject_illegal: bool,
) -> Result<Output, FileError> {
    let model = LehmannRabin::new(n).map_err(|e| FileError::Invalid(e.to_string()))?;
    let extra: Vec<LrState> = if inject_illegal {
        vec![forged_illegal_state(n)]
    } else {
        Vec::new()
    };
    let exhaustive = depth.is_none() && n <= 4;
    let result = if exhaustive {
        explore_invariant(&model, budget_states, &extra)
    } else {
        sample_invariant(&model, walks, depth.unwrap_or(100), seed).map(|mut r| {
            for s in &extra {
                r.record(&model, s);
            }
            r
        })
    };
    let report = match result {
        Ok(r) => InvariantsReport {
            holds: r.holds(),
            report: r,
            injected: extra.len(),
            error: None,
        },
        Err(e) => InvariantsReport {
            report: InvariantReport {
                n,
                exhaustive,
                states: 0,
                taken_iff_held_violations: 0,
                single_holder_violations: 0,
                counterexample: None,
            },
            injected: extra.len(),
            holds: false,
            error: Some(model_error(e)),
        },
    };
    let r = &report.report;
    let mut summary = format!(
        "n={} {} states ({}): {} taken-iff-held and {} single-holder violations\n",
        r.n,
        r.states,
        if r.exhaustive { "exhaustive" } else { "sampled" },
        r.taken_iff_held_violations,
        r.single_holder_violations
    );
    if let Some(c) = &r.counterexample {
        let _ = writeln!(summary, "counterexample: {c}");
    }
    if let Some(e) = &report.error {
        let _ = writeln!(summary, "stopped: {}", e.message);
    }
    Ok(Output {
        json: to_json(&report),
        summary,
        code: report.exit_code(),
    })
}

/// Lists the registered progress scenarios; with `run`, solves each on a
/// ring of `n` processes.
pub fn cmd_scenarios(n: usize, run: bool, ov: &Overrides) -> Result<Output, FileError> {
    if n < 3 {
        return Err(FileError::Invalid(format!("scenarios need at least three processes, got {n}")));
    }
    let mut report = ScenarioListReport {
        n,
        scenarios: Vec::new(),
        outcomes: Vec::new(),
        holds: true,
        error: None,
    };
    let mut summary = String::new();
    for id in scenario_ids() {
        let sc = scenario(id).map_err(|e| FileError::Invalid(e.to_string()))?;
        let _ = writeln!(summary, "{:<32} {} rounds, floor {}: {}", id, sc.horizon, sc.floor, sc.summary);
        report.scenarios.push(ScenarioEntry {
            id: id.to_string(),
            summary: sc.summary.to_string(),
            horizon: sc.horizon,
            floor: sc.floor.clone(),
        });
    }
    if run {
        let options = GameOptions {
            budget_nodes: ov.budget_nodes.unwrap_or(GameOptions::default().budget_nodes),
            ..GameOptions::default()
        };
        for id in scenario_ids() {
            let outcome = scenario_at(id, n)
                .map_err(|e| match e {
                    ScenarioError::Model(m) => model_error(m),
                    other => ErrorReport::new("error", other.to_string()),
                })
                .and_then(|sc| sc.run(options).map_err(game_error));
            match outcome {
                Ok(o) => {
                    let _ = writeln!(summary, "{:<6} {}: value {}", verdict_word(o.holds), o.id, o.value);
                    report.holds &= o.holds;
                    report.outcomes.push(o);
                }
                Err(e) => {
                    report.holds = false;
                    report.error = Some(e);
                    break;
                }
            }
        }
    }
    Ok(Output {
        json: to_json(&report),
        summary,
        code: report.exit_code(),
    })
}
