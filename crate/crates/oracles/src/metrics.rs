//! Trace-level figures recomputed from point times.

use std::collections::BTreeMap;

use iscore::score::PointRef;
use iscore::{Score, Time};

/// One occurrence in a performed score: a static point, or an interactive
/// object as a whole.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Occurrence {
    pub id: String,
    pub time: Time,
    pub actions: Vec<String>,
}

/// Occurrences of a point-level trace, in `(time, id)` order.
pub fn occurrences(score: &Score, points: &BTreeMap<PointRef, Time>) -> Vec<Occurrence> {
    let mut out = Vec::new();
    for o in &score.objects {
        let s = points[&PointRef::start(o.id.clone())];
        let e = points[&PointRef::end(o.id.clone())];
        if o.is_interactive() {
            assert_eq!(s, e, "interactive object {} has a span", o.id);
            out.push(Occurrence {
                id: format!("io({})", o.id),
                time: s,
                actions: vec![o.start_action_name(), o.end_action_name()],
            });
        } else {
            out.push(Occurrence { id: format!("sp({})", o.id), time: s, actions: vec![o.start_action_name()] });
            out.push(Occurrence { id: format!("ep({})", o.id), time: e, actions: vec![o.end_action_name()] });
        }
    }
    out.sort_by(|a, b| (a.time, &a.id).cmp(&(b.time, &b.id)));
    out
}

/// Flattened action sequence of a trace.
pub fn action_sequence(score: &Score, points: &BTreeMap<PointRef, Time>) -> Vec<String> {
    occurrences(score, points).into_iter().flat_map(|o| o.actions).collect()
}

/// (largest, smallest) number of occurrences sharing one timestamp.
pub fn group_sizes(occ: &[Occurrence]) -> (u64, u64) {
    let mut by_time: BTreeMap<Time, u64> = BTreeMap::new();
    for o in occ {
        *by_time.entry(o.time).or_insert(0) += 1;
    }
    (*by_time.values().max().unwrap_or(&0), *by_time.values().min().unwrap_or(&0))
}

/// Most static objects sounding at one integer instant, `start <= t < end`.
pub fn objects_playing_peak(score: &Score, points: &BTreeMap<PointRef, Time>) -> u64 {
    let spans: Vec<(Time, Time)> = score
        .objects
        .iter()
        .filter(|o| !o.is_interactive())
        .map(|o| (points[&PointRef::start(o.id.clone())], points[&PointRef::end(o.id.clone())]))
        .collect();
    let last = spans.iter().map(|s| s.1).max().unwrap_or(0);
    (0..=last).map(|t| spans.iter().filter(|&&(s, e)| s <= t && t < e).count() as u64).max().unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Simultaneity {
    pub events_max: u64,
    pub events_min: u64,
    pub events_peak_min: u64,
    pub objects_max: u64,
    pub objects_peak_min: u64,
}

/// `None` when there are no traces.
pub fn simultaneity(score: &Score, traces: &[BTreeMap<PointRef, Time>]) -> Option<Simultaneity> {
    let per_trace: Vec<(u64, u64, u64)> = traces
        .iter()
        .map(|t| {
            let (gmax, gmin) = group_sizes(&occurrences(score, t));
            (gmax, gmin, objects_playing_peak(score, t))
        })
        .collect();
    Some(Simultaneity {
        events_max: per_trace.iter().map(|x| x.0).max()?,
        events_min: per_trace.iter().map(|x| x.1).min()?,
        events_peak_min: per_trace.iter().map(|x| x.0).min()?,
        objects_max: per_trace.iter().map(|x| x.2).max()?,
        objects_peak_min: per_trace.iter().map(|x| x.2).min()?,
    })
}

/// `word` at some offset, letter for letter.
pub fn occurs_consecutive(seq: &[String], word: &[String]) -> bool {
    if word.len() > seq.len() {
        return false;
    }
    (0..=seq.len() - word.len()).any(|i| (0..word.len()).all(|j| seq[i + j] == word[j]))
}

/// `word` as a subsequence, by trying every increasing choice of positions.
pub fn occurs_scattered(seq: &[String], word: &[String]) -> bool {
    fn from(seq: &[String], word: &[String], start: usize) -> bool {
        match word.split_first() {
            None => true,
            Some((w, rest)) => (start..seq.len()).any(|i| seq[i] == *w && from(seq, rest, i + 1)),
        }
    }
    from(seq, word, 0)
}
