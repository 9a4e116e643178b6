//! Timed event structure semantics of a score.
//!
//! Static objects become a start and an end event joined by a delay carrying
//! the object's duration; interactive objects become a single event.
//! Relations become delays between the events of their points.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraint::{Constraint, ConstraintSet};
use crate::duration::{DurationSet, Time};
use crate::score::{ObjectId, PointKind, PointRef, Score, TemporalObject, TemporalRelation};
use crate::unionfind::UnionFind;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventId(pub String);

impl EventId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EventId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum LabelKind {
    StartPoint,
    EndPoint,
    InteractiveObject,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Label {
    #[serde(rename = "type")]
    pub kind: LabelKind,
    pub object: ObjectId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Event {
    pub id: EventId,
    pub labels: BTreeSet<Label>,
    /// External actions emitted when the event occurs, in emission order.
    pub actions: Vec<String>,
}

impl Event {
    pub fn is_interactive(&self) -> bool {
        self.labels.iter().any(|l| l.kind == LabelKind::InteractiveObject)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EventDelay {
    pub from: EventId,
    pub to: EventId,
    pub delta: DurationSet,
}

/// Events with binary delays; the conflict relation is carried but must be
/// empty for every operation in this crate.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct TimedEventStructure {
    pub events: Vec<Event>,
    pub delays: Vec<EventDelay>,
    pub conflicts: Vec<(EventId, EventId)>,
}

impl TimedEventStructure {
    pub fn event(&self, id: &EventId) -> Option<&Event> {
        self.events.iter().find(|e| &e.id == id)
    }

    pub fn event_ids(&self) -> Vec<EventId> {
        self.events.iter().map(|e| e.id.clone()).collect()
    }

    pub fn is_normal(&self) -> bool {
        self.delays.iter().all(|d| !d.delta.is_singleton_zero())
    }
}

/// Point of the score → event of its encoding.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct EncodingMap {
    pub point_to_event: BTreeMap<PointRef, EventId>,
}

impl EncodingMap {
    pub fn event_of(&self, point: &PointRef) -> Option<&EventId> {
        self.point_to_event.get(point)
    }
}

/// A total assignment of times to events.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Trace {
    pub times: BTreeMap<EventId, Time>,
}

impl Trace {
    pub fn new(times: BTreeMap<EventId, Time>) -> Self {
        Self { times }
    }

    pub fn get(&self, e: &EventId) -> Option<Time> {
        self.times.get(e).copied()
    }

    /// Reads the trace of a merged structure back onto the original events.
    pub fn pull_back(&self, merge: &BTreeMap<EventId, EventId>) -> Trace {
        Trace { times: merge.iter().filter_map(|(old, new)| self.times.get(new).map(|&t| (old.clone(), t))).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "kind")]
pub enum EncodingError {
    #[error("relation refers to point {point} which has no event")]
    UnknownPoint { point: String },
    #[error("relation maps both of its points onto event {event}")]
    SelfDelay { event: EventId },
    #[error("conflict relation is not supported ({count} conflicts)")]
    ConflictsUnsupported { count: usize },
    #[error("zero-duration class of {event} carries a delay that excludes 0: {delta}")]
    ZeroCycleContradiction { event: EventId, delta: String },
    #[error("trace assigns no time to event {event}")]
    PartialTrace { event: EventId },
}

fn point_event_id(p: &PointRef) -> EventId {
    EventId(p.to_string())
}

fn interactive_event_id(o: &ObjectId) -> EventId {
    EventId(format!("io({o})"))
}

/// Events and internal delay of a single object.
pub fn encode_object(o: &TemporalObject) -> TimedEventStructure {
    if o.is_interactive() {
        let event = Event {
            id: interactive_event_id(&o.id),
            labels: BTreeSet::from([Label { kind: LabelKind::InteractiveObject, object: o.id.clone() }]),
            actions: vec![o.start_action_name(), o.end_action_name()],
        };
        return TimedEventStructure { events: vec![event], ..Default::default() };
    }
    let start = Event {
        id: point_event_id(&o.sp()),
        labels: BTreeSet::from([Label { kind: LabelKind::StartPoint, object: o.id.clone() }]),
        actions: vec![o.start_action_name()],
    };
    let end = Event {
        id: point_event_id(&o.ep()),
        labels: BTreeSet::from([Label { kind: LabelKind::EndPoint, object: o.id.clone() }]),
        actions: vec![o.end_action_name()],
    };
    let delay = EventDelay { from: start.id.clone(), to: end.id.clone(), delta: o.duration.clone() };
    TimedEventStructure { events: vec![start, end], delays: vec![delay], conflicts: Vec::new() }
}

/// Which event a point of `o` is encoded as.
pub fn point_event(o: &TemporalObject, kind: PointKind) -> EventId {
    if o.is_interactive() {
        interactive_event_id(&o.id)
    } else {
        point_event_id(&PointRef { object: o.id.clone(), kind })
    }
}

pub fn encode_relation(r: &TemporalRelation, map: &EncodingMap) -> Result<EventDelay, EncodingError> {
    let lookup =
        |p: &PointRef| map.event_of(p).cloned().ok_or_else(|| EncodingError::UnknownPoint { point: p.to_string() });
    let from = lookup(&r.from)?;
    let to = lookup(&r.to)?;
    if from == to {
        return Err(EncodingError::SelfDelay { event: from });
    }
    Ok(EventDelay { from, to, delta: r.delta.clone() })
}

/// Encodes a hierarchy-free score. Relations whose two points share an event
/// (only possible around an interactive object) are dropped when they admit
/// 0; otherwise they stay as an unsatisfiable self-delay, so the structure
/// has no traces, exactly like the score.
pub fn encode_score(s: &Score) -> Result<(TimedEventStructure, EncodingMap), EncodingError> {
    let mut objects: Vec<&TemporalObject> = s.objects.iter().collect();
    objects.sort_by(|a, b| a.id.cmp(&b.id));

    let mut structure = TimedEventStructure::default();
    let mut map = EncodingMap::default();
    for o in objects {
        let part = encode_object(o);
        map.point_to_event.insert(o.sp(), point_event(o, PointKind::Start));
        map.point_to_event.insert(o.ep(), point_event(o, PointKind::End));
        structure.events.extend(part.events);
        structure.delays.extend(part.delays);
    }
    for r in &s.relations {
        match encode_relation(r, &map) {
            Ok(d) => structure.delays.push(d),
            Err(EncodingError::SelfDelay { .. }) if r.delta.contains(0) => {}
            Err(EncodingError::SelfDelay { event }) => {
                structure.delays.push(EventDelay { from: event.clone(), to: event, delta: r.delta.clone() })
            }
            Err(e) => return Err(e),
        }
    }
    Ok((structure, map))
}

/// One difference constraint per delay over event variables.
pub fn structure_constraints(es: &TimedEventStructure) -> Result<ConstraintSet<EventId>, EncodingError> {
    if !es.conflicts.is_empty() {
        return Err(EncodingError::ConflictsUnsupported { count: es.conflicts.len() });
    }
    Ok(ConstraintSet::new(
        es.event_ids(),
        es.delays.iter().map(|d| Constraint::new(d.from.clone(), d.to.clone(), d.delta.clone())).collect(),
    ))
}

/// Merges events joined by `{0}` delays. Merged events take the smallest
/// constituent id and the union of labels. Returns the merge map from every
/// original event to its representative.
pub fn normalize(es: &TimedEventStructure) -> Result<(TimedEventStructure, BTreeMap<EventId, EventId>), EncodingError> {
    if !es.conflicts.is_empty() {
        return Err(EncodingError::ConflictsUnsupported { count: es.conflicts.len() });
    }
    let index: BTreeMap<&EventId, usize> = es.events.iter().enumerate().map(|(i, e)| (&e.id, i)).collect();
    let mut uf = UnionFind::new(es.events.len());
    for d in &es.delays {
        if d.delta.is_singleton_zero() {
            uf.union(index[&d.from], index[&d.to]);
        }
    }

    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..es.events.len() {
        members.entry(uf.find(i)).or_default().push(i);
    }
    let mut merge = BTreeMap::new();
    let mut events = Vec::with_capacity(members.len());
    // Roots are the smallest index of each class, so this keeps first-occurrence order.
    for group in members.values() {
        let id = group.iter().map(|&i| &es.events[i].id).min().expect("nonempty class").clone();
        let mut labels = BTreeSet::new();
        let mut actions = Vec::new();
        for &i in group {
            labels.extend(es.events[i].labels.iter().cloned());
            actions.extend(es.events[i].actions.iter().cloned());
            merge.insert(es.events[i].id.clone(), id.clone());
        }
        events.push(Event { id, labels, actions });
    }

    let mut delays = Vec::new();
    for d in &es.delays {
        let from = merge[&d.from].clone();
        let to = merge[&d.to].clone();
        if from == to {
            if d.delta.contains(0) {
                continue;
            }
            return Err(EncodingError::ZeroCycleContradiction { event: from, delta: d.delta.to_string() });
        }
        delays.push(EventDelay { from, to, delta: d.delta.clone() });
    }
    Ok((TimedEventStructure { events, delays, conflicts: Vec::new() }, merge))
}

/// Whether `trace` satisfies every delay of `es`.
pub fn validate_trace(es: &TimedEventStructure, trace: &Trace) -> Result<bool, EncodingError> {
    if let Some(e) = es.events.iter().find(|e| !trace.times.contains_key(&e.id)) {
        return Err(EncodingError::PartialTrace { event: e.id.clone() });
    }
    Ok(es.delays.iter().all(|d| {
        let diff = trace.times[&d.to] as i64 - trace.times[&d.from] as i64;
        d.delta.contains_diff(diff)
    }))
}
