//! Library-versus-oracle comparisons shared by the property tests and the
//! acceptance runner. Each check returns a short description of the first
//! disagreement it finds.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use iscore::analysis::{self, Quantifier, Verdict, Word, WordMode};
use iscore::csp::{count_traces, gen_subset_sum_score, FiniteDomainProblem, SubsetSumInstance, DEFAULT_NODE_LIMIT};
use iscore::encoding::{encode_score, normalize, validate_trace, EncodingError};
use iscore::engine::{compile, init_execution, EngineError, ExecutionState, Status, TriggerPolicy};
use iscore::score::{compile_hierarchy, score_constraints, PointRef};
use iscore::stp::{apsp, to_stp, StpError};
use iscore::{EventId, Exec, Score, Time, TimedEventStructure, Trace};

use crate::enumerate::{enumerate, first, point_constraints, OracleConstraint};
use crate::metrics;

pub type CheckResult<T = ()> = Result<T, String>;

/// The structure's delays as oracle constraints over its event ids.
pub fn structure_problem(es: &TimedEventStructure) -> (Vec<EventId>, Vec<OracleConstraint<EventId>>) {
    let vars = es.events.iter().map(|e| e.id.clone()).collect();
    let cs = es.delays.iter().map(|d| OracleConstraint::new(d.from.clone(), d.to.clone(), d.delta.clone())).collect();
    (vars, cs)
}

fn to_traces(sols: Vec<BTreeMap<EventId, Time>>) -> BTreeSet<Trace> {
    sols.into_iter().map(Trace::new).collect()
}

/// Number of traces of the score's normal form within `horizon`, used only
/// to keep oracle enumeration affordable. `None` when over `cap`.
pub fn trace_count_within(score: &Score, horizon: Time, cap: u64) -> Option<u64> {
    let compiled = compile_hierarchy(score).ok()?;
    let (raw, _) = encode_score(&compiled).ok()?;
    let nf = match normalize(&raw) {
        Ok((nf, _)) => nf,
        Err(EncodingError::ZeroCycleContradiction { .. }) => return Some(0),
        Err(_) => return None,
    };
    let p = FiniteDomainProblem::from_structure(&nf, horizon).ok()?;
    count_traces(&p, Exec::default(), DEFAULT_NODE_LIMIT).ok().filter(|&n| n <= cap)
}

/// Largest horizon `<= start` whose trace count is at most `cap`.
pub fn affordable_horizon(score: &Score, start: Time, cap: u64) -> Time {
    // counts only grow with the horizon, so search upwards and stop early
    let mut h = 0;
    while h < start && trace_count_within(score, h + 1, cap).is_some() {
        h += 1;
    }
    h
}

/// Brute-force traces of the encoding equal the brute-force solutions of the
/// score's point constraints pushed through the point → event map. Returns
/// the number of traces.
pub fn encoding_equivalence(score: &Score, horizon: Time) -> CheckResult<usize> {
    let compiled = compile_hierarchy(score).map_err(|e| e.to_string())?;
    let (raw, map) = encode_score(&compiled).map_err(|e| e.to_string())?;

    let (evars, ecs) = structure_problem(&raw);
    let event_traces = to_traces(enumerate(&evars, &ecs, horizon));

    let (pvars, pcs) = point_constraints(score);
    let mut pushed = BTreeSet::new();
    for sol in enumerate(&pvars, &pcs, horizon) {
        let mut t: BTreeMap<EventId, Time> = BTreeMap::new();
        for (p, v) in &sol {
            let e = map.event_of(p).ok_or_else(|| format!("{p} has no event"))?;
            if let Some(prev) = t.insert(e.clone(), *v) {
                if prev != *v {
                    return Err(format!("points mapped to {e} disagree in a score solution: {prev} vs {v}"));
                }
            }
        }
        pushed.insert(Trace::new(t));
    }
    if pushed != event_traces {
        let only_score = pushed.difference(&event_traces).next();
        let only_enc = event_traces.difference(&pushed).next();
        return Err(format!(
            "trace sets differ ({} score vs {} encoding); score-only {:?}, encoding-only {:?}",
            pushed.len(),
            event_traces.len(),
            only_score,
            only_enc
        ));
    }
    Ok(event_traces.len())
}

/// Normal form has no `{0}` delays and its traces, pulled back, are exactly
/// the raw traces, one for one.
pub fn normal_form(score: &Score, horizon: Time) -> CheckResult<usize> {
    let compiled = compile_hierarchy(score).map_err(|e| e.to_string())?;
    let (raw, _) = encode_score(&compiled).map_err(|e| e.to_string())?;
    let (rvars, rcs) = structure_problem(&raw);
    let raw_traces = to_traces(enumerate(&rvars, &rcs, horizon));

    let (nf, merge) = match normalize(&raw) {
        Ok(x) => x,
        Err(EncodingError::ZeroCycleContradiction { .. }) => {
            return if raw_traces.is_empty() {
                Ok(0)
            } else {
                Err(format!("normalize reported a contradiction but {} raw traces exist", raw_traces.len()))
            };
        }
        Err(e) => return Err(e.to_string()),
    };
    if let Some(d) = nf.delays.iter().find(|d| d.delta.is_singleton_zero()) {
        return Err(format!("normal form keeps a zero delay {} -> {}", d.from, d.to));
    }
    if merge.len() != raw.events.len() {
        return Err("merge map does not cover every raw event".into());
    }
    let (nvars, ncs) = structure_problem(&nf);
    let normal_traces = enumerate(&nvars, &ncs, horizon);
    let pulled: BTreeSet<Trace> = normal_traces
        .iter()
        .map(|t| Trace::new(raw.events.iter().map(|e| (e.id.clone(), t[&merge[&e.id]])).collect()))
        .collect();
    if pulled.len() != normal_traces.len() {
        return Err("pull-back is not injective".into());
    }
    if pulled != raw_traces {
        return Err(format!("pulled-back traces ({}) differ from raw traces ({})", pulled.len(), raw_traces.len()));
    }
    Ok(pulled.len())
}

/// Floyd–Warshall consistency equals finite-domain playability; when
/// `check_min` is set, the earliest-schedule makespan equals the smallest
/// horizon at which brute force finds a trace.
pub fn stp_against_csp(score: &Score, check_min: bool) -> CheckResult<bool> {
    let compiled = compile_hierarchy(score).map_err(|e| e.to_string())?;
    let (raw, _) = encode_score(&compiled).map_err(|e| e.to_string())?;
    let horizon = score_constraints(&compiled).default_horizon(iscore::constraint::DEFAULT_HORIZON_SLACK);
    let nf = match normalize(&raw) {
        Ok((nf, _)) => Some(nf),
        Err(EncodingError::ZeroCycleContradiction { .. }) => None,
        Err(e) => return Err(e.to_string()),
    };
    let matrix = match &nf {
        None => None,
        Some(nf) => match apsp(&to_stp(nf).map_err(|e| e.to_string())?) {
            Ok(m) => Some(m),
            Err(StpError::Inconsistent { .. }) => None,
            Err(e) => return Err(e.to_string()),
        },
    };
    let csp = match &nf {
        None => false,
        Some(nf) => {
            let p = FiniteDomainProblem::from_structure(nf, horizon).map_err(|e| e.to_string())?;
            iscore::csp::solve(&p).map_err(|e| e.to_string())?.is_satisfiable()
        }
    };
    if matrix.is_some() != csp {
        return Err(format!("Floyd–Warshall says {}, CSP says {csp} at horizon {horizon}", matrix.is_some()));
    }
    if let (Some(m), true) = (&matrix, check_min) {
        let (vars, cs) = structure_problem(&raw);
        let brute = (0..=horizon).find(|&h| first(&vars, &cs, h).is_some());
        if brute != Some(m.min_makespan()) {
            return Err(format!("min makespan {} but brute force finds {:?}", m.min_makespan(), brute));
        }
    }
    Ok(matrix.is_some())
}

/// Playability of the generated score equals the subset oracle.
pub fn subset_sum(values: &[Time], target: Time) -> CheckResult<bool> {
    let inst = SubsetSumInstance::new(values.to_vec(), target).map_err(|e| e.to_string())?;
    let score = gen_subset_sum_score(&inst).map_err(|e| e.to_string())?;
    let report = analysis::playability(&score, None).map_err(|e| e.to_string())?;
    let lib = report.verdict == Verdict::Bool(true);
    let oracle = crate::subset_sum(values, target);
    if lib != oracle {
        return Err(format!("{values:?} target {target}: library {lib}, oracle {oracle}"));
    }
    if let Some(w) = &report.witness {
        let (raw, _) = encode_score(&score).map_err(|e| e.to_string())?;
        if validate_trace(&raw, w) != Ok(true) {
            return Err("witness is not a trace".into());
        }
    }
    Ok(oracle)
}

fn compare_windows(state: &ExecutionState, nf: &TimedEventStructure) -> CheckResult {
    if !state.windows_consistent() {
        return Err("a window became empty".into());
    }
    let index: BTreeMap<&EventId, usize> = nf.events.iter().enumerate().map(|(i, e)| (&e.id, i)).collect();
    let cs: Vec<OracleConstraint<usize>> =
        nf.delays.iter().map(|d| OracleConstraint::new(index[&d.from], index[&d.to], d.delta.clone())).collect();
    let pinned: Vec<(usize, Time)> = state.trace().times.iter().map(|(e, &t)| (index[e], t)).collect();
    let global = crate::windows(nf.events.len(), &cs, &pinned).ok_or("oracle finds the pinned network inconsistent")?;
    for (id, local) in state.windows() {
        let g = global[index[&id]];
        if (local.lb, local.ub) != (g.lb, g.ub) {
            return Err(format!(
                "window of {id} after {} fires: local [{}, {:?}] vs global [{}, {:?}]",
                state.records().len(),
                local.lb,
                local.ub,
                g.lb,
                g.ub
            ));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DispatchStats {
    pub fires: usize,
    pub triggers: usize,
}

/// Runs a consistent score under autoFire with random in-window triggers,
/// comparing every window with the global oracle after each fire. `Ok(None)`
/// when the score is not executable (inconsistent or non-contiguous) or has
/// more than `max_events` events.
pub fn dispatch<R: Rng>(score: &Score, rng: &mut R, max_events: usize) -> CheckResult<Option<DispatchStats>> {
    let c = match compile(score) {
        Ok(c) => c,
        Err(EngineError::Stp(_)) | Err(EngineError::Encoding(EncodingError::ZeroCycleContradiction { .. })) => {
            return Ok(None)
        }
        Err(e) => return Err(e.to_string()),
    };
    if c.normal.events.len() > max_events {
        return Ok(None);
    }
    let mut state = init_execution(c.network.clone(), TriggerPolicy::autofire());
    let mut stats = DispatchStats::default();
    compare_windows(&state, &c.normal)?;

    let mut guard = 0;
    while state.status() == Status::Running {
        guard += 1;
        if guard > 10_000 {
            return Err("run does not terminate".into());
        }
        let deadline = state.next_deadline();
        let candidates: Vec<usize> = (1..state.network().node_count())
            .filter(|&i| state.executed_at(i).is_none() && state.network().is_interactive(i) && state.enabled(i))
            .collect();
        let want_trigger = !candidates.is_empty() && (deadline.is_none() || rng.gen_bool(0.5));
        let before = state.records().len();
        if want_trigger {
            let node = candidates[rng.gen_range(0..candidates.len())];
            let w = state.window(node);
            let lo = (w.lb.max(0) as Time).max(state.clock());
            let hi = w.ub.map_or(lo + 4, |u| u as Time);
            let hi = deadline.map_or(hi, |d| hi.min(d));
            if lo <= hi {
                let t = rng.gen_range(lo..=hi);
                let id = state.network().event(node).id.clone();
                state.trigger(&id, t).map_err(|e| format!("in-window trigger rejected: {e}"))?;
                stats.triggers += 1;
            } else if !state.step(deadline.expect("a trigger can only be out of reach of a deadline")) {
                return Err("dispatcher stalled".into());
            }
        } else if !state.step(deadline.ok_or("no deadline and nothing to trigger")?) {
            return Err("dispatcher stalled".into());
        }
        if state.records().len() > before {
            stats.fires += 1;
            compare_windows(&state, &c.normal)?;
        }
    }
    if state.status() != Status::Finished {
        return Err(format!("run ended {:?}", state.status()));
    }
    if validate_trace(&c.normal, &state.trace()) != Ok(true) {
        return Err(format!("finished run is not a trace: {:?}", state.trace()));
    }
    Ok(Some(stats))
}

/// Random non-empty word over the score's actions.
pub fn random_word<R: Rng>(score: &Score, rng: &mut R) -> Word {
    let actions: Vec<String> =
        score.objects.iter().flat_map(|o| [o.start_action_name(), o.end_action_name()]).collect();
    let len = rng.gen_range(1..=3);
    let letters: Vec<String> = (0..len).map(|_| actions[rng.gen_range(0..actions.len())].clone()).collect();
    let mode = if rng.gen_bool(0.5) { WordMode::Consecutive } else { WordMode::Scattered };
    let quantifier = if rng.gen_bool(0.5) { Quantifier::Some } else { Quantifier::All };
    Word::new(letters, mode, quantifier)
}

/// Simultaneity bounds and the verdicts of `words` equal the brute-force
/// figures over all point traces. Returns the number of traces.
pub fn analysis_against_enumeration(score: &Score, horizon: Time, words: &[Word]) -> CheckResult<usize> {
    let (pvars, pcs) = point_constraints(score);
    let traces: Vec<BTreeMap<PointRef, Time>> = enumerate(&pvars, &pcs, horizon);
    let prep = analysis::prepare(score, Some(horizon)).map_err(|e| e.to_string())?;

    let sim = analysis::simultaneity_bounds_of(&prep, Exec::default());
    match (metrics::simultaneity(score, &traces), sim) {
        (None, Err(analysis::AnalysisError::Unplayable { .. })) => return Ok(0),
        (None, other) => return Err(format!("no traces, but the library reports {other:?}")),
        (Some(_), Err(e)) => return Err(format!("{} traces, but the library fails: {e}", traces.len())),
        (Some(o), Ok(r)) => {
            let Verdict::Simultaneity(b) = r.verdict else { return Err("wrong verdict kind".into()) };
            let lib = metrics::Simultaneity {
                events_max: b.events_max,
                events_min: b.events_min,
                events_peak_min: b.events_peak_min,
                objects_max: b.objects_max,
                objects_peak_min: b.objects_peak_min,
            };
            if lib != o {
                return Err(format!("simultaneity: library {lib:?}, oracle {o:?}"));
            }
            if r.traces != Some(traces.len() as u64) {
                return Err(format!("library saw {:?} traces, oracle {}", r.traces, traces.len()));
            }
        }
    }

    let sequences: Vec<Vec<String>> = traces.iter().map(|t| metrics::action_sequence(score, t)).collect();
    for w in words {
        let hits = sequences
            .iter()
            .filter(|s| match w.mode {
                WordMode::Consecutive => metrics::occurs_consecutive(s, &w.actions),
                WordMode::Scattered => metrics::occurs_scattered(s, &w.actions),
            })
            .count();
        let oracle = match w.quantifier {
            Quantifier::Some => hits > 0,
            Quantifier::All => hits == sequences.len(),
        };
        let r = analysis::contains_word_of(&prep, w, Exec::default()).map_err(|e| e.to_string())?;
        if r.verdict != Verdict::Bool(oracle) || r.matching != Some(hits as u64) {
            return Err(format!(
                "word {w:?}: library {:?} ({:?} matching), oracle {oracle} ({hits})",
                r.verdict, r.matching
            ));
        }
    }
    Ok(traces.len())
}
