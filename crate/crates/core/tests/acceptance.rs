//! Acceptance checks: one PASS/FAIL line per criterion, then a non-zero exit
//! if any failed.

use std::path::PathBuf;
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use timebound::adversary::{enumerate_adversaries, FreeRule};
use timebound::cli::{cmd_chain, cmd_verify, Overrides, ScenarioFile};
use timebound::events::{conditional_probability, exact_probability, EventSchema};
use timebound::models::coin::{Coin, HeadThenQ, TwoCoins, FLIP_P, FLIP_Q};
use timebound::models::lehmann_rabin::{
    explore_invariant, lr_registry, phase_chain, phase_statements, reachable_in, scenario, scenario_ids,
    LehmannRabin,
};
use timebound::models::random::{set_predicate, worst_reach, RandomModel};
use timebound::predicate::PredSet;
use timebound::pta::ExecutionFragment;
use timebound::rational::{int, rat, Rational};
use timebound::verify::{
    compose, recurrence_from_chain, solve_recurrence, union_lift, verify_exact, GameOptions, GameQuery, Objective,
    TimeBoundStatement,
};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn chain_arithmetic() -> Check {
    let c = phase_chain().map_err(|e| e.to_string())?;
    ensure(
        c.composed.time == int(13) && c.composed.prob == rat(1, 8),
        format!("composed {}", c.composed),
    )
}

fn expected_time() -> Check {
    let spec = recurrence_from_chain(&phase_statements()).map_err(|e| e.to_string())?;
    let total = solve_recurrence(&spec).map_err(|e| e.to_string())?;
    let internal = &total - &spec.entry - &spec.exit;
    ensure(
        internal == int(60) && total == int(63) && spec.entry == int(2) && spec.exit == int(1),
        format!("loop {internal}, with entry {} and exit {}: {total}", spec.entry, spec.exit),
    )
}

fn phase_values() -> Check {
    let model = LehmannRabin::new(3).map_err(|e| e.to_string())?;
    let reg = lr_registry();
    let floors = [int(1), int(1), rat(1, 2), rat(1, 4), int(1)];
    let mut parts = Vec::new();
    let mut ok = true;
    for (st, floor) in phase_statements().iter().zip(floors) {
        let source = reg.resolve(&st.source).map_err(|e| e.to_string())?;
        let target = reg.resolve(&st.target).map_err(|e| e.to_string())?;
        let starts = reachable_in(&model, &source, 10_000_000).map_err(|e| e.to_string())?;
        let query = GameQuery {
            objective: Objective::Reach(target),
            horizon: st.time.to_integer().try_into().map_err(|_| "horizon")?,
            conditions: Vec::new(),
        };
        let r = verify_exact(&model, &starts, query, GameOptions::default()).map_err(|e| e.to_string())?;
        ok &= r.value >= floor && !starts.is_empty();
        parts.push(format!("{}->{} = {} ({} starts)", st.source, st.target, r.value, starts.len()));
    }
    ensure(ok, parts.join(", "))
}

fn end_to_end() -> Check {
    let model = LehmannRabin::new(3).map_err(|e| e.to_string())?;
    let reg = lr_registry();
    let starts = reachable_in(&model, reg.get("T").unwrap(), 10_000_000).map_err(|e| e.to_string())?;
    let query = GameQuery {
        objective: Objective::Reach(reg.get("C").unwrap().clone()),
        horizon: 13,
        conditions: Vec::new(),
    };
    let r = verify_exact(&model, &starts, query, GameOptions::default()).map_err(|e| e.to_string())?;
    ensure(
        r.value >= rat(1, 8),
        format!("min P[T reaches C within 13 rounds] = {} over {} starts", r.value, starts.len()),
    )
}

fn coin_brute_force() -> Check {
    let start = ExecutionFragment::singleton(TwoCoins::start());
    let h = int(2);
    let advs = enumerate_adversaries(&TwoCoins, Arc::new(FreeRule), &start, &h, 2, 100_000)
        .map_err(|e| e.to_string())?;
    let first_both = EventSchema::All(vec![
        EventSchema::first(FLIP_P, TwoCoins::p_is(Coin::Head), h.clone()),
        EventSchema::first(FLIP_Q, TwoCoins::q_is(Coin::Tail), h.clone()),
    ]);
    let next = EventSchema::next(
        vec![
            (FLIP_P.to_string(), TwoCoins::p_is(Coin::Head)),
            (FLIP_Q.to_string(), TwoCoins::q_is(Coin::Tail)),
        ],
        h.clone(),
    )
    .map_err(|e| e.to_string())?;
    let mut min_first = int(1);
    let mut min_next = int(1);
    for adv in &advs {
        let f = exact_probability(&TwoCoins, adv, &start, &first_both).map_err(|e| e.to_string())?.value;
        let n = exact_probability(&TwoCoins, adv, &start, &next).map_err(|e| e.to_string())?.value;
        min_first = min_first.min(f);
        min_next = min_next.min(n);
    }
    let both_flip = EventSchema::All(vec![
        EventSchema::Occurs { action: FLIP_P.into(), horizon: h.clone() },
        EventSchema::Occurs { action: FLIP_Q.into(), horizon: h.clone() },
    ]);
    let head_tail = EventSchema::reach_within(
        TwoCoins::p_is(Coin::Head).and(&TwoCoins::q_is(Coin::Tail)),
        h.clone(),
    );
    let cond = conditional_probability(&TwoCoins, &HeadThenQ, &start, &head_tail, &both_flip)
        .map_err(|e| e.to_string())?;
    let uncond = exact_probability(&TwoCoins, &HeadThenQ, &start, &first_both)
        .map_err(|e| e.to_string())?
        .value;
    ensure(
        min_first >= rat(1, 4) && min_next >= rat(1, 2) && cond == Some(rat(1, 2)) && uncond == rat(1, 4),
        format!(
            "{} adversaries: min first-first {min_first}, min next {min_next}; head-then-q: conditional {}, first-first {uncond}",
            advs.len(),
            cond.map_or("undefined".into(), |c| c.to_string())
        ),
    )
}

fn resource_invariant() -> Check {
    let mut parts = Vec::new();
    let mut ok = true;
    for n in [3, 4] {
        let model = LehmannRabin::new(n).map_err(|e| e.to_string())?;
        let r = explore_invariant(&model, 50_000_000, &[]).map_err(|e| e.to_string())?;
        ok &= r.holds() && r.exhaustive && r.states > 0;
        parts.push(format!(
            "n={n}: {} states, {} + {} violations",
            r.states, r.taken_iff_held_violations, r.single_holder_violations
        ));
    }
    ensure(ok, parts.join("; "))
}

fn scenario_suite() -> Check {
    let mut failed = Vec::new();
    let ids = scenario_ids();
    for id in &ids {
        let out = scenario(id)
            .map_err(|e| e.to_string())?
            .run(GameOptions::default())
            .map_err(|e| e.to_string())?;
        if !out.holds {
            failed.push(format!("{id} = {}", out.value));
        }
    }
    ensure(
        failed.is_empty(),
        if failed.is_empty() {
            format!("all {} scenarios hold at n=3", ids.len())
        } else {
            format!("failing: {}", failed.join(", "))
        },
    )
}

/// Report of the full Monte Carlo run, kept so the determinism check can
/// compare against it without simulating three times.
static MONTE_CARLO_REPORT: OnceLock<String> = OnceLock::new();

fn monte_carlo() -> Check {
    let file = ScenarioFile::load(&scenario_path("monte-carlo-n5.json")).map_err(|e| e.to_string())?;
    let out = cmd_verify(&file, &Overrides::default()).map_err(|e| e.to_string())?;
    let _ = MONTE_CARLO_REPORT.set(out.json.clone());
    let detail = out.summary.lines().next().unwrap_or_default().trim().to_string();
    ensure(out.code == 0, format!("{} trials per kept start: {detail}", file.trials))
}

fn determinism() -> Check {
    let names = [
        "ring-chain-n3.json",
        "certain-chain.json",
        "mismatched-schemas.json",
        "zero-threshold.json",
        "stall-violation.json",
        "progress-scenarios-n3.json",
        "monte-carlo-smoke-n5.json",
    ];
    let mut differing = Vec::new();
    for name in names {
        let file = ScenarioFile::load(&scenario_path(name)).map_err(|e| e.to_string())?;
        let a = cmd_verify(&file, &Overrides::default()).map_err(|e| e.to_string())?;
        let b = cmd_verify(&file, &Overrides::default()).map_err(|e| e.to_string())?;
        let c1 = cmd_chain(&file).map_err(|e| e.to_string())?;
        let c2 = cmd_chain(&file).map_err(|e| e.to_string())?;
        if a.json != b.json || c1.json != c2.json {
            differing.push(name);
        }
    }
    let name = "monte-carlo-n5.json";
    let file = ScenarioFile::load(&scenario_path(name)).map_err(|e| e.to_string())?;
    let first = match MONTE_CARLO_REPORT.get() {
        Some(json) => json.clone(),
        None => cmd_verify(&file, &Overrides::default()).map_err(|e| e.to_string())?.json,
    };
    let again = cmd_verify(&file, &Overrides::default()).map_err(|e| e.to_string())?;
    if first != again.json {
        differing.push(name);
    }
    ensure(
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} bundled scenarios gave identical reports twice", names.len() + 1)
        } else {
            format!("reports differ for {}", differing.join(", "))
        },
    )
}

fn calculus_soundness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checks = 0;
    let mut strict = 0;
    let mut violations = Vec::new();
    for seed in 0..20 {
        let model = RandomModel::generate(seed, 6);
        let full = (1u32 << model.size) - 1;
        let pick = |rng: &mut ChaCha8Rng| {
            use rand::Rng;
            rng.random_range(1..=full)
        };
        let members = |mask: u32| (0..model.size).filter(|s| mask & (1 << s) != 0).collect::<Vec<u8>>();
        let reach = |src: u32, dst: u32, t: u32| {
            worst_reach(&model, &members(src), &set_predicate(dst), t, 1_000_000).map_err(|e| e.to_string())
        };
        let (t1, t2) = (1 + (seed % 2) as u32, 2);
        let name = |m: u32| PredSet::atom(&format!("S{m}"));
        let st = |a: u32, b: u32, t: u32, p: &Rational| {
            TimeBoundStatement::new(name(a), name(b), int(t as i64), p.clone(), "lockstep")
        };
        for _ in 0..10 {
            let (u, v, w, x) = (pick(&mut rng), pick(&mut rng), pick(&mut rng), pick(&mut rng));
            let p1 = reach(u, v, t1)?;
            let p2 = reach(v, w, t2)?;
            let composed = compose(&st(u, v, t1, &p1), &st(v, w, t2, &p2)).map_err(|e| e.to_string())?;
            let actual = reach(u, w, t1 + t2)?;
            checks += 1;
            strict += usize::from(composed.prob > int(0) && composed.prob < int(1));
            if actual < composed.prob {
                violations.push(format!("seed {seed}: composed {} > actual {actual}", composed.prob));
            }
            let lifted = union_lift(&st(u, v, t1, &p1), &name(x));
            let actual = reach(u | x, v | x, t1)?;
            checks += 1;
            strict += usize::from(lifted.prob > int(0) && lifted.prob < int(1));
            if actual < lifted.prob {
                violations.push(format!("seed {seed}: lifted {} > actual {actual}", lifted.prob));
            }
        }
    }
    ensure(
        violations.is_empty(),
        if violations.is_empty() {
            format!("{checks} composed and lifted bounds respected on 20 random models, 10 set triples each ({strict} strictly between 0 and 1)")
        } else {
            violations.join("; ")
        },
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("chain arithmetic gives 13 and 1/8", chain_arithmetic),
        ("expected time is 60 inside the loop and 63 overall", expected_time),
        ("exact phase values at n=3", phase_values),
        ("end-to-end bound at n=3 is at least 1/8", end_to_end),
        ("first/next bounds on the two-coin model", coin_brute_force),
        ("resource invariant on all reachable states, n=3 and n=4", resource_invariant),
        ("progress scenario suite at n=3", scenario_suite),
        ("Monte Carlo at n=5", monte_carlo),
        ("bundled scenarios are deterministic", determinism),
        ("calculus soundness on random models", calculus_soundness),
    ];
    let mut failures = 0;
    for (k, (title, check)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let result = check();
        let took = t0.elapsed();
        let (word, detail) = match result {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2}: {word} {title} [{}] ({})", k + 1, detail, secs(took));
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}
