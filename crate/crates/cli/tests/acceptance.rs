//! Acceptance runner: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Random instances come from a fixed seed; set `ACCEPTANCE_SEED` to
//! explore others.

mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use iscore::encoding::encode_score;
use iscore::fixtures;
use iscore::score::{compile_hierarchy, score_constraints, PointRef};
use iscore::DurationSet;
use iscore_oracles::checks;
use iscore_oracles::gen::{random_score, subset_sum_instance, ScoreParams};

type Outcome = Result<String, String>;

struct Criterion {
    name: &'static str,
    budget: Duration,
    run: fn(&mut ChaCha8Rng) -> Outcome,
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn main() {
    let seed: u64 = std::env::var("ACCEPTANCE_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(20_240_611);
    let criteria = [
        Criterion { name: "overlaps encoding", budget: secs(1), run: overlaps_encoding },
        Criterion { name: "lights constraints", budget: secs(1), run: lights_constraints },
        Criterion { name: "encoding equivalence", budget: secs(60), run: encoding_equivalence },
        Criterion { name: "subset-sum reduction", budget: secs(120), run: subset_sum_reduction },
        Criterion { name: "stp correctness", budget: secs(60), run: stp_correctness },
        Criterion { name: "dispatchability", budget: secs(60), run: dispatchability },
        Criterion { name: "normal form", budget: secs(60), run: normal_form },
        Criterion { name: "analysis oracles", budget: secs(60), run: analysis_oracles },
        Criterion { name: "cli golden", budget: secs(10), run: cli_golden },
    ];
    println!("acceptance seed {seed}");
    let mut failed = 0;
    for (i, c) in criteria.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        let start = Instant::now();
        let outcome = (c.run)(&mut rng);
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if took > c.budget => Err(format!("{detail}; took {took:.1?}, budget {:?}", c.budget)),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {} ({detail}; {took:.2?})", c.name),
            Err(reason) => {
                failed += 1;
                println!("FAIL {}: {reason}", c.name);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn overlaps_encoding(_: &mut ChaCha8Rng) -> Outcome {
    let (es, _) = encode_score(&fixtures::overlaps()).map_err(|e| e.to_string())?;
    let events: BTreeSet<&str> = es.events.iter().map(|e| e.id.as_str()).collect();
    let want_events: BTreeSet<&str> = ["sp(r)", "ep(r)", "sp(g)", "ep(g)"].into();
    if events != want_events {
        return Err(format!("events {events:?}"));
    }
    let durations: BTreeSet<(&str, &str)> = [("sp(r)", "ep(r)"), ("sp(g)", "ep(g)")].into();
    let relations: BTreeSet<(String, String, DurationSet)> = es
        .delays
        .iter()
        .filter(|d| !durations.contains(&(d.from.as_str(), d.to.as_str())))
        .map(|d| (d.from.to_string(), d.to.to_string(), d.delta.clone()))
        .collect();
    let expected: BTreeSet<(String, String, DurationSet)> =
        [("sp(r)", "sp(g)"), ("ep(r)", "ep(g)"), ("sp(g)", "ep(r)")]
            .into_iter()
            .map(|(a, b)| (a.to_owned(), b.to_owned(), DurationSet::at_least(1)))
            .collect();
    if relations != expected || es.delays.len() != 5 {
        return Err(format!("relation delays {relations:?}"));
    }
    Ok("3 relation delays, each [1, ∞)".into())
}

fn lights_constraints(_: &mut ChaCha8Rng) -> Outcome {
    let score = fixtures::lights();
    let compiled = compile_hierarchy(&score).map_err(|e| e.to_string())?;
    let cs = score_constraints(&compiled);
    let d = |id: &str| score.object(&id.into()).unwrap().duration.clone();
    let (sp, ep) = (PointRef::start, PointRef::end);
    let zero = DurationSet::zero;
    let after = || DurationSet::at_least(1);
    // left column: durations; right column: explicit relations, "<"/">" as [1, ∞)
    let table = vec![
        (sp("r"), ep("r"), d("r")),
        (sp("g"), ep("g"), d("g")),
        (sp("a"), ep("a"), zero()),
        (sp("b"), ep("b"), zero()),
        (sp("d"), ep("d"), zero()),
        (sp("u"), ep("u"), d("u")),
        (sp("u"), sp("g"), zero()),
        (ep("r"), ep("a"), zero()),
        (sp("r"), sp("g"), after()),
        (ep("r"), ep("g"), after()),
        (sp("g"), ep("r"), after()),
        (ep("u"), sp("d"), zero()),
        (sp("r"), sp("b"), zero()),
    ];
    // equalities are symmetric, so compare them as unordered pairs
    let key = |from: &PointRef, to: &PointRef, delta: &DurationSet| {
        if delta.is_singleton_zero() && to < from {
            (to.clone(), from.clone(), delta.clone())
        } else {
            (from.clone(), to.clone(), delta.clone())
        }
    };
    let got: Vec<_> = cs.constraints.iter().map(|c| key(&c.from, &c.to, &c.delta)).collect();
    let want: Vec<_> = table.iter().map(|(f, t, d)| key(f, t, d)).collect();
    if got.len() != 13 {
        return Err(format!("{} constraints", got.len()));
    }
    let (g, w): (BTreeSet<_>, BTreeSet<_>) = (got.into_iter().collect(), want.into_iter().collect());
    if g != w {
        return Err(format!(
            "missing {:?}, unexpected {:?}",
            w.difference(&g).collect::<Vec<_>>(),
            g.difference(&w).collect::<Vec<_>>()
        ));
    }
    Ok("13 constraints (6 duration, 7 explicit)".into())
}

fn encoding_equivalence(rng: &mut ChaCha8Rng) -> Outcome {
    let params = ScoreParams { max_objects: 5, max_bound: 6, bounded: true, ..Default::default() };
    let mut traces = 0;
    let mut horizons = 0;
    for i in 0..200 {
        let score = random_score(rng, &params);
        let h = checks::affordable_horizon(&score, rng.gen_range(0..=20), 20_000);
        horizons += h;
        traces += checks::encoding_equivalence(&score, h).map_err(|e| format!("score {i}: {e}\n{score:?}"))?;
    }
    Ok(format!("200 scores, {traces} traces, mean horizon {:.1}", horizons as f64 / 200.0))
}

fn subset_sum_reduction(rng: &mut ChaCha8Rng) -> Outcome {
    let mut playable = 0;
    for _ in 0..500 {
        let (values, target) = subset_sum_instance(rng, 12, 20);
        playable += checks::subset_sum(&values, target)? as usize;
    }
    Ok(format!("500 instances, {playable} playable"))
}

fn stp_correctness(rng: &mut ChaCha8Rng) -> Outcome {
    let params =
        ScoreParams { max_objects: 8, contiguous: true, bounded: false, max_relations: 6, ..Default::default() };
    let (mut consistent, mut min_checked) = (0, 0);
    for i in 0..500 {
        let score = random_score(rng, &params);
        let small = score.objects.len() <= 6;
        let ok = checks::stp_against_csp(&score, small).map_err(|e| format!("score {i}: {e}\n{score:?}"))?;
        consistent += ok as usize;
        min_checked += (ok && small) as usize;
    }
    Ok(format!("500 scores, {consistent} consistent, {min_checked} min durations brute-forced"))
}

fn dispatchability(rng: &mut ChaCha8Rng) -> Outcome {
    let params = ScoreParams {
        max_objects: 4,
        contiguous: true,
        bounded: false,
        interactive_prob: 0.35,
        max_relations: 5,
        ..Default::default()
    };
    let (mut networks, mut fires, mut triggers, mut attempts) = (0, 0, 0, 0);
    while networks < 100 {
        attempts += 1;
        if attempts > 10_000 {
            return Err(format!("only {networks} consistent networks in {attempts} attempts"));
        }
        let score = random_score(rng, &params);
        if let Some(s) = checks::dispatch(&score, rng, 8).map_err(|e| format!("{e}\n{score:?}"))? {
            networks += 1;
            fires += s.fires;
            triggers += s.triggers;
        }
    }
    Ok(format!("100 networks, {fires} fires ({triggers} triggered), all finished"))
}

fn normal_form(rng: &mut ChaCha8Rng) -> Outcome {
    let params = ScoreParams { max_objects: 5, zero_prob: 0.4, ..Default::default() };
    let mut traces = 0;
    for i in 0..200 {
        let score = random_score(rng, &params);
        let h = checks::affordable_horizon(&score, rng.gen_range(0..=12), 20_000);
        traces += checks::normal_form(&score, h).map_err(|e| format!("score {i}: {e}\n{score:?}"))?;
    }
    Ok(format!("200 scores, {traces} traces"))
}

fn analysis_oracles(rng: &mut ChaCha8Rng) -> Outcome {
    let params = ScoreParams { max_objects: 4, ..Default::default() };
    let mut traces = 0;
    for i in 0..100 {
        let score = random_score(rng, &params);
        let h = checks::affordable_horizon(&score, rng.gen_range(0..=10), 5_000);
        let words: Vec<_> = (0..4).map(|_| checks::random_word(&score, rng)).collect();
        traces += checks::analysis_against_enumeration(&score, h, &words)
            .map_err(|e| format!("score {i}: {e}\n{score:?}"))?;
    }
    Ok(format!("100 scores, 400 words, {traces} traces"))
}

fn cli_golden(_: &mut ChaCha8Rng) -> Outcome {
    let bin = Path::new(env!("CARGO_BIN_EXE_iscore"));
    let failures: Vec<String> = common::CASES.iter().filter_map(|c| common::check_case(bin, c).err()).collect();
    if !failures.is_empty() {
        return Err(failures.join("; "));
    }
    Ok(format!("{} cases, each run twice", common::CASES.len()))
}
