//! Trace-property queries: playability, minimum duration, simultaneity and
//! word containment.
//!
//! Every query runs the same front end (validate, compile hierarchy, encode,
//! normalize). Playability and minimum duration take the shortest-path route
//! when every duration set is an interval; everything else enumerates traces
//! of the normal form up to a horizon and reads them back onto the raw events.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::constraint::DEFAULT_HORIZON_SLACK;
use crate::csp::{fold_solutions, solve, CspError, FiniteDomainProblem, DEFAULT_NODE_LIMIT};
use crate::duration::Time;
use crate::encoding::{encode_score, normalize, EncodingError, EncodingMap, EventId, TimedEventStructure, Trace};
use crate::par::Exec;
use crate::score::{compile_hierarchy, score_constraints, validate_score, Score, ValidationReport, Violation};
use crate::stp::{apsp, to_stp, StpError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("invalid score: {0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    Hierarchy(#[from] Violation),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Csp(#[from] CspError),
    #[error("score is not playable within horizon {horizon}")]
    Unplayable { horizon: Time },
    #[error("object {object} has an unbounded duration; enumeration needs finite durations")]
    UnboundedDurations { object: String },
    #[error("word must not be empty")]
    EmptyWord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Stp,
    Csp,
    Enumeration,
}

/// Event-level figures count events sharing a timestamp; object-level figures
/// count static objects sounding at an instant (`start <= t < end`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SimultaneityBounds {
    /// Largest group of simultaneous events in any trace.
    pub events_max: u64,
    /// Smallest group of simultaneous events in any trace.
    pub events_min: u64,
    /// Smallest, over traces, of a trace's largest group.
    pub events_peak_min: u64,
    /// Most objects playing at once in any trace.
    pub objects_max: u64,
    /// Smallest, over traces, of a trace's peak object count.
    pub objects_peak_min: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Verdict {
    Bool(bool),
    Nat(Time),
    Simultaneity(SimultaneityBounds),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PropertyReport {
    pub property: String,
    pub verdict: Verdict,
    /// A valid trace of the encoded score, when one illustrates the verdict.
    pub witness: Option<Trace>,
    pub method: Method,
    pub horizon: Time,
    /// Number of traces inspected (enumeration) and, for word queries, the
    /// number of matching traces.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub traces: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matching: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WordMode {
    /// Actions at adjacent positions.
    Consecutive,
    /// Actions in order, possibly with others in between.
    Scattered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantifier {
    Some,
    All,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Word {
    pub actions: Vec<String>,
    pub mode: WordMode,
    pub quantifier: Quantifier,
}

impl Word {
    pub fn new<S: Into<String>>(actions: impl IntoIterator<Item = S>, mode: WordMode, quantifier: Quantifier) -> Self {
        Self { actions: actions.into_iter().map(Into::into).collect(), mode, quantifier }
    }

    /// Whether the action sequence contains this word.
    pub fn occurs_in(&self, sequence: &[&str]) -> bool {
        let w = &self.actions;
        match self.mode {
            WordMode::Consecutive => sequence.windows(w.len()).any(|win| win.iter().zip(w).all(|(a, b)| *a == b)),
            WordMode::Scattered => {
                let mut it = w.iter().peekable();
                for a in sequence {
                    if it.peek().is_some_and(|b| *a == b.as_str()) {
                        it.next();
                    }
                }
                it.peek().is_none()
            }
        }
    }
}

/// A score run through the analysis front end.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub compiled: Score,
    pub raw: TimedEventStructure,
    pub map: EncodingMap,
    /// Normal form and merge map; `None` when zero-duration merging exposed a
    /// contradiction.
    pub normal: Option<(TimedEventStructure, BTreeMap<EventId, EventId>)>,
    pub horizon: Time,
}

pub fn prepare(score: &Score, horizon: Option<Time>) -> Result<Prepared, AnalysisError> {
    let report = validate_score(score);
    if !report.is_valid() {
        return Err(AnalysisError::Invalid(report));
    }
    let compiled = compile_hierarchy(score)?;
    let (raw, map) = encode_score(&compiled)?;
    let normal = match normalize(&raw) {
        Ok(n) => Some(n),
        Err(EncodingError::ZeroCycleContradiction { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let horizon = horizon.unwrap_or_else(|| score_constraints(&compiled).default_horizon(DEFAULT_HORIZON_SLACK));
    Ok(Prepared { compiled, raw, map, normal, horizon })
}

impl Prepared {
    pub fn is_contiguous(&self) -> bool {
        self.raw.delays.iter().all(|d| d.delta.is_contiguous())
    }

    fn method(&self) -> Method {
        if self.is_contiguous() {
            Method::Stp
        } else {
            Method::Csp
        }
    }

    fn report(&self, property: &str, verdict: Verdict, witness: Option<Trace>, method: Method) -> PropertyReport {
        PropertyReport {
            property: property.to_owned(),
            verdict,
            witness,
            method,
            horizon: self.horizon,
            traces: None,
            matching: None,
        }
    }

    fn solve_normal(&self, horizon: Time) -> Result<Option<Trace>, AnalysisError> {
        let Some((nf, merge)) = &self.normal else { return Ok(None) };
        let problem = FiniteDomainProblem::from_structure(nf, horizon)?;
        Ok(solve(&problem)?.trace().map(|t| t.pull_back(merge)))
    }

    fn check_finite(&self) -> Result<(), AnalysisError> {
        match self.compiled.objects.iter().find(|o| !o.duration.is_bounded()) {
            Some(o) => Err(AnalysisError::UnboundedDurations { object: o.id.to_string() }),
            None => Ok(()),
        }
    }

    /// Folds over every trace of the raw structure within the horizon. The
    /// callback receives raw event times aligned with `self.raw.events`.
    pub fn fold_raw<A, I, S, M>(&self, exec: Exec, init: I, step: S, merge: M) -> Result<A, AnalysisError>
    where
        A: Send,
        I: Fn() -> A + Sync + Send,
        S: Fn(&mut A, &[Time]) + Sync + Send,
        M: Fn(A, A) -> A,
    {
        let Some((nf, merge_map)) = &self.normal else { return Ok(init()) };
        let problem = FiniteDomainProblem::from_structure(nf, self.horizon)?;
        let slot: Vec<usize> = self
            .raw
            .events
            .iter()
            .map(|e| problem.variables.iter().position(|v| *v == merge_map[&e.id]).expect("merged event present"))
            .collect();
        Ok(fold_solutions(
            &problem,
            exec,
            DEFAULT_NODE_LIMIT,
            init,
            |acc, values| {
                let raw: Vec<Time> = slot.iter().map(|&i| values[i]).collect();
                step(acc, &raw)
            },
            merge,
        )?)
    }

    pub fn raw_trace(&self, times: &[Time]) -> Trace {
        Trace::new(self.raw.events.iter().map(|e| e.id.clone()).zip(times.iter().copied()).collect())
    }
}

pub fn playability(score: &Score, horizon: Option<Time>) -> Result<PropertyReport, AnalysisError> {
    let prep = prepare(score, horizon)?;
    playability_of(&prep)
}

pub fn playability_of(prep: &Prepared) -> Result<PropertyReport, AnalysisError> {
    let method = prep.method();
    let witness = match (&prep.normal, method) {
        (None, _) => None,
        (Some((nf, merge)), Method::Stp) => match apsp(&to_stp(nf).map_err(stp_to_analysis)?) {
            Ok(m) => Some(m.earliest_schedule().pull_back(merge)),
            Err(StpError::Inconsistent { .. }) => None,
            Err(e) => return Err(stp_to_analysis(e)),
        },
        (Some(_), _) => prep.solve_normal(prep.horizon)?,
    };
    Ok(prep.report("playability", Verdict::Bool(witness.is_some()), witness, method))
}

fn stp_to_analysis(e: StpError) -> AnalysisError {
    match e {
        StpError::Encoding(e) => AnalysisError::Encoding(e),
        other => unreachable!("contiguity checked before building the distance graph: {other}"),
    }
}

/// Smallest possible time of the latest event, with the score starting at 0.
pub fn min_duration(score: &Score, horizon: Option<Time>) -> Result<PropertyReport, AnalysisError> {
    let prep = prepare(score, horizon)?;
    min_duration_of(&prep)
}

pub fn min_duration_of(prep: &Prepared) -> Result<PropertyReport, AnalysisError> {
    let unplayable = AnalysisError::Unplayable { horizon: prep.horizon };
    let Some((nf, merge)) = &prep.normal else { return Err(unplayable) };
    if prep.is_contiguous() {
        let m = match apsp(&to_stp(nf).map_err(stp_to_analysis)?) {
            Ok(m) => m,
            Err(StpError::Inconsistent { .. }) => return Err(unplayable),
            Err(e) => return Err(stp_to_analysis(e)),
        };
        let witness = m.earliest_schedule().pull_back(merge);
        return Ok(prep.report("min_duration", Verdict::Nat(m.min_makespan()), Some(witness), Method::Stp));
    }
    // Makespan <= h is monotone in h, so bisect on the horizon.
    let Some(mut best) = prep.solve_normal(prep.horizon)? else { return Err(unplayable) };
    let (mut lo, mut hi) = (0, makespan(&best));
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        match prep.solve_normal(mid)? {
            Some(t) => {
                hi = makespan(&t).min(mid);
                best = t;
            }
            None => lo = mid + 1,
        }
    }
    Ok(prep.report("min_duration", Verdict::Nat(hi), Some(best), Method::Csp))
}

fn makespan(t: &Trace) -> Time {
    t.times.values().copied().max().unwrap_or(0)
}

pub fn simultaneity_bounds(score: &Score, horizon: Option<Time>) -> Result<PropertyReport, AnalysisError> {
    let prep = prepare(score, horizon)?;
    simultaneity_bounds_of(&prep, Exec::default())
}

#[derive(Debug, Clone, Copy)]
struct SimAcc {
    traces: u64,
    events_max: u64,
    events_min: u64,
    events_peak_min: u64,
    objects_max: u64,
    objects_peak_min: u64,
}

impl SimAcc {
    fn empty() -> Self {
        Self {
            traces: 0,
            events_max: 0,
            events_min: u64::MAX,
            events_peak_min: u64::MAX,
            objects_max: 0,
            objects_peak_min: u64::MAX,
        }
    }

    fn merge(self, o: Self) -> Self {
        Self {
            traces: self.traces + o.traces,
            events_max: self.events_max.max(o.events_max),
            events_min: self.events_min.min(o.events_min),
            events_peak_min: self.events_peak_min.min(o.events_peak_min),
            objects_max: self.objects_max.max(o.objects_max),
            objects_peak_min: self.objects_peak_min.min(o.objects_peak_min),
        }
    }
}

/// Event groups by timestamp: (largest, smallest) group size.
pub fn event_group_sizes(times: &[Time]) -> (u64, u64) {
    let mut counts: BTreeMap<Time, u64> = BTreeMap::new();
    for &t in times {
        *counts.entry(t).or_default() += 1;
    }
    let max = counts.values().copied().max().unwrap_or(0);
    let min = counts.values().copied().min().unwrap_or(0);
    (max, min)
}

/// Peak number of `[start, end)` spans covering one instant.
pub fn peak_overlap(spans: &[(Time, Time)]) -> u64 {
    spans.iter().map(|&(s, _)| spans.iter().filter(|&&(a, b)| a <= s && s < b).count() as u64).max().unwrap_or(0)
}

pub fn simultaneity_bounds_of(prep: &Prepared, exec: Exec) -> Result<PropertyReport, AnalysisError> {
    prep.check_finite()?;
    let index: BTreeMap<&EventId, usize> = prep.raw.events.iter().enumerate().map(|(i, e)| (&e.id, i)).collect();
    let statics: Vec<(usize, usize)> = prep
        .compiled
        .objects
        .iter()
        .filter(|o| !o.is_interactive())
        .map(|o| {
            (index[prep.map.event_of(&o.sp()).expect("encoded")], index[prep.map.event_of(&o.ep()).expect("encoded")])
        })
        .collect();
    let acc = prep.fold_raw(
        exec,
        SimAcc::empty,
        |acc, times| {
            let (gmax, gmin) = event_group_sizes(times);
            let spans: Vec<(Time, Time)> = statics.iter().map(|&(s, e)| (times[s], times[e])).collect();
            let peak = peak_overlap(&spans);
            *acc = acc.merge(SimAcc {
                traces: 1,
                events_max: gmax,
                events_min: gmin,
                events_peak_min: gmax,
                objects_max: peak,
                objects_peak_min: peak,
            });
        },
        SimAcc::merge,
    )?;
    if acc.traces == 0 {
        return Err(AnalysisError::Unplayable { horizon: prep.horizon });
    }
    let bounds = SimultaneityBounds {
        events_max: acc.events_max,
        events_min: acc.events_min,
        events_peak_min: acc.events_peak_min,
        objects_max: acc.objects_max,
        objects_peak_min: acc.objects_peak_min,
    };
    let mut report = prep.report("simultaneity", Verdict::Simultaneity(bounds), None, Method::Enumeration);
    report.traces = Some(acc.traces);
    Ok(report)
}

/// Orders events by `(time, id)` and concatenates their actions.
pub fn linearize<'a>(es: &'a TimedEventStructure, times: &[Time]) -> Vec<&'a str> {
    let mut order: Vec<usize> = (0..es.events.len()).collect();
    order.sort_by(|&a, &b| (times[a], &es.events[a].id).cmp(&(times[b], &es.events[b].id)));
    order.iter().flat_map(|&i| es.events[i].actions.iter().map(String::as_str)).collect()
}

pub fn contains_word(score: &Score, word: &Word, horizon: Option<Time>) -> Result<PropertyReport, AnalysisError> {
    let prep = prepare(score, horizon)?;
    contains_word_of(&prep, word, Exec::default())
}

pub fn contains_word_of(prep: &Prepared, word: &Word, exec: Exec) -> Result<PropertyReport, AnalysisError> {
    if word.actions.is_empty() {
        return Err(AnalysisError::EmptyWord);
    }
    prep.check_finite()?;
    let want_match = word.quantifier == Quantifier::Some;
    // (traces, matching, first trace whose outcome decides the verdict)
    type Acc = (u64, u64, Option<Vec<Time>>);
    let (total, matching, example): Acc = prep.fold_raw(
        exec,
        || (0, 0, None),
        |acc: &mut Acc, times| {
            let hit = word.occurs_in(&linearize(&prep.raw, times));
            acc.0 += 1;
            acc.1 += hit as u64;
            if hit == want_match && acc.2.is_none() {
                acc.2 = Some(times.to_vec());
            }
        },
        |a, b| (a.0 + b.0, a.1 + b.1, a.2.or(b.2)),
    )?;
    if total == 0 {
        return Err(AnalysisError::Unplayable { horizon: prep.horizon });
    }
    let verdict = match word.quantifier {
        Quantifier::Some => matching > 0,
        Quantifier::All => matching == total,
    };
    let witness = example.map(|t| prep.raw_trace(&t));
    let mut report = prep.report("contains_word", Verdict::Bool(verdict), witness, Method::Enumeration);
    report.traces = Some(total);
    report.matching = Some(matching);
    Ok(report)
}

/// "Every trace accepted by `filter` satisfies `check`", over all traces of
/// the score within the horizon. `traces` counts the filtered traces and the
/// witness is the first counterexample, if any.
pub fn conditional_property<F, C>(prep: &Prepared, filter: F, check: C) -> Result<PropertyReport, AnalysisError>
where
    F: Fn(&Trace) -> bool + Sync + Send,
    C: Fn(&Trace) -> bool + Sync + Send,
{
    type Acc = (u64, Option<Trace>);
    let (filtered, counterexample): Acc = prep.fold_raw(
        Exec::default(),
        || (0, None),
        |acc: &mut Acc, times| {
            let t = prep.raw_trace(times);
            if filter(&t) {
                acc.0 += 1;
                if acc.1.is_none() && !check(&t) {
                    acc.1 = Some(t);
                }
            }
        },
        |a, b| (a.0 + b.0, a.1.or(b.1)),
    )?;
    let mut report =
        prep.report("conditional", Verdict::Bool(counterexample.is_none()), counterexample, Method::Enumeration);
    report.traces = Some(filtered);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::{gen_subset_sum_score, SubsetSumInstance};
    use crate::duration::DurationSet;
    use crate::encoding::validate_trace;
    use crate::fixtures;
    use crate::score::{PointRef, TemporalObject};

    fn witness_valid(score: &Score, r: &PropertyReport) -> bool {
        let prep = prepare(score, None).unwrap();
        validate_trace(&prep.raw, r.witness.as_ref().unwrap()).unwrap()
    }

    #[test]
    fn seq2_playable_by_stp() {
        let s = fixtures::seq2();
        let r = playability(&s, None).unwrap();
        assert_eq!((r.verdict.clone(), r.method), (Verdict::Bool(true), Method::Stp));
        assert!(witness_valid(&s, &r));
    }

    #[test]
    fn subset_sum_unplayable_by_csp() {
        let s = gen_subset_sum_score(&SubsetSumInstance::new(vec![3, 5, 7], 2).unwrap()).unwrap();
        let r = playability(&s, Some(15)).unwrap();
        assert_eq!((r.verdict, r.method), (Verdict::Bool(false), Method::Csp));
        let s = gen_subset_sum_score(&SubsetSumInstance::new(vec![3, 5, 7], 8).unwrap()).unwrap();
        let r = playability(&s, Some(15)).unwrap();
        assert_eq!(r.verdict, Verdict::Bool(true));
        assert!(witness_valid(&s, &r));
    }

    #[test]
    fn lights_wide_durations_playable() {
        let s = fixtures::lights_uniform(DurationSet::range(1, 10));
        assert_eq!(playability(&s, Some(30)).unwrap().verdict, Verdict::Bool(true));
    }

    #[test]
    fn min_durations() {
        assert_eq!(min_duration(&fixtures::seq2(), None).unwrap().verdict, Verdict::Nat(5));
        let lone = Score::new("x").with_object(TemporalObject::new("o", DurationSet::range(3, 7)));
        assert_eq!(min_duration(&lone, None).unwrap().verdict, Verdict::Nat(3));
        let tap = Score::new("x").with_object(TemporalObject::interactive("a"));
        assert_eq!(min_duration(&tap, None).unwrap().verdict, Verdict::Nat(0));
    }

    #[test]
    fn min_duration_general_path() {
        // holes force the finite-domain route: {2, 6} then {1, 4}, and B must start >= 3
        let s = Score::new("x")
            .with_object(TemporalObject::new("A", DurationSet::from_values([2, 6]).unwrap()))
            .with_object(TemporalObject::new("B", DurationSet::from_values([1, 4]).unwrap()))
            .with_relation(PointRef::end("A"), PointRef::start("B"), DurationSet::any())
            .with_relation(PointRef::start("A"), PointRef::start("B"), DurationSet::at_least(3));
        let r = min_duration(&s, Some(20)).unwrap();
        assert_eq!((r.verdict.clone(), r.method), (Verdict::Nat(4), Method::Csp));
        assert!(witness_valid(&s, &r));
    }

    #[test]
    fn simultaneity_examples() {
        let two = Score::new("x")
            .with_object(TemporalObject::new("p", DurationSet::singleton(1)))
            .with_object(TemporalObject::new("q", DurationSet::singleton(1)));
        let r = simultaneity_bounds(&two, Some(1)).unwrap();
        let Verdict::Simultaneity(b) = r.verdict else { panic!() };
        assert_eq!(b.objects_max, 2);
        assert_eq!(b.objects_peak_min, 2);

        let one = Score::new("x").with_object(TemporalObject::new("p", DurationSet::range(1, 2)));
        let Verdict::Simultaneity(b) = simultaneity_bounds(&one, Some(4)).unwrap().verdict else { panic!() };
        assert_eq!(b.objects_max, 1);

        let lights = fixtures::lights();
        let Verdict::Simultaneity(b) = simultaneity_bounds(&lights, Some(14)).unwrap().verdict else { panic!() };
        assert!(b.events_peak_min >= 2);
    }

    #[test]
    fn unbounded_objects_rejected() {
        let s = Score::new("x").with_object(TemporalObject::new("p", DurationSet::at_least(1)));
        assert!(matches!(simultaneity_bounds(&s, Some(3)), Err(AnalysisError::UnboundedDurations { .. })));
    }

    #[test]
    fn word_examples() {
        let s = fixtures::seq2();
        let all = Word::new(["A.start", "B.end"], WordMode::Scattered, Quantifier::All);
        let r = contains_word(&s, &all, Some(12)).unwrap();
        assert_eq!(r.verdict, Verdict::Bool(true));
        assert_eq!(r.traces, r.matching);

        let reversed = Word::new(["B.end", "A.start"], WordMode::Scattered, Quantifier::Some);
        assert_eq!(contains_word(&s, &reversed, Some(12)).unwrap().verdict, Verdict::Bool(false));

        let adjacent = Word::new(["A.end", "B.start"], WordMode::Consecutive, Quantifier::All);
        assert_eq!(contains_word(&s, &adjacent, Some(12)).unwrap().verdict, Verdict::Bool(true));

        let lights = fixtures::lights();
        let rg = Word::new(["red.on", "green.on"], WordMode::Scattered, Quantifier::All);
        assert_eq!(contains_word(&lights, &rg, Some(12)).unwrap().verdict, Verdict::Bool(true));
    }

    #[test]
    fn word_matching() {
        let w = Word::new(["a", "c"], WordMode::Scattered, Quantifier::Some);
        assert!(w.occurs_in(&["a", "b", "c"]));
        assert!(!w.occurs_in(&["c", "a"]));
        let w = Word::new(["a", "c"], WordMode::Consecutive, Quantifier::Some);
        assert!(!w.occurs_in(&["a", "b", "c"]));
        assert!(w.occurs_in(&["b", "a", "c"]));
    }

    #[test]
    fn conditional_filter() {
        // if A starts at 0, then B ends no earlier than 5
        let prep = prepare(&fixtures::seq2(), Some(10)).unwrap();
        let r = conditional_property(
            &prep,
            |t| t.get(&"sp(A)".into()) == Some(0),
            |t| t.get(&"ep(B)".into()).unwrap() >= 5,
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::Bool(true));
        assert!(r.traces.unwrap() > 0);
    }
}
