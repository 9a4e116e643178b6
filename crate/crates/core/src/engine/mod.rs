//! Online execution of a dispatchable network.
//!
//! Each unexecuted event carries a live window `[lb, ub]`. Firing an event at
//! `t` tightens every other window using only the fired event's row and
//! column of the distance matrix. Static events fire eagerly at their lower
//! bound once every strict predecessor has fired; interactive events wait for
//! a trigger and, past their upper bound, are resolved by the trigger policy.

pub mod live;
pub mod protocol;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::duration::Time;
use crate::encoding::{
    encode_score, normalize, EncodingError, EncodingMap, EventId, Label, TimedEventStructure, Trace,
};
use crate::score::{compile_hierarchy, validate_score, Score, ValidationReport, Violation};
use crate::stp::{apsp, make_dispatchable, to_stp, DispatchableNetwork, StpError, INF};

pub use protocol::{Incoming, Outgoing, RejectReason};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum OnExpiry {
    /// Fire the interactive event at its upper bound.
    #[default]
    AutoFire,
    /// Stop the run: nothing downstream can be synchronized any more.
    Cancel,
}

/// Static events are always dispatched eagerly; only expiry is configurable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct TriggerPolicy {
    pub on_expiry: OnExpiry,
}

impl TriggerPolicy {
    pub fn autofire() -> Self {
        Self { on_expiry: OnExpiry::AutoFire }
    }

    pub fn cancel() -> Self {
        Self { on_expiry: OnExpiry::Cancel }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Status {
    Running,
    Finished,
    Cancelled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Cause {
    Eager,
    Trigger,
    AutoFire,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DispatchRecord {
    pub time: Time,
    pub event: EventId,
    pub labels: Vec<Label>,
    pub actions: Vec<String>,
    pub cause: Cause,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejection {
    pub time: Time,
    pub event: String,
    pub reason: RejectReason,
    pub lb: Option<Time>,
    pub ub: Option<Time>,
}

/// Live window of an unexecuted event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Window {
    pub lb: i64,
    /// `None` when unbounded.
    pub ub: Option<i64>,
}

impl Window {
    pub fn contains(&self, t: Time) -> bool {
        t as i64 >= self.lb && self.ub.is_none_or(|ub| t as i64 <= ub)
    }

    pub fn is_empty(&self) -> bool {
        self.ub.is_some_and(|ub| ub < self.lb)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FireError {
    #[error("event {event} is unknown")]
    UnknownEvent { event: String },
    #[error("event {event} was already executed")]
    AlreadyExecuted { event: EventId },
    #[error("event {event} waits for a predecessor")]
    NotEnabled { event: EventId },
    #[error("event {event} cannot fire at {time}: window is [{lb}, {}]", ub.map_or("∞".to_owned(), |u| u.to_string()))]
    OutsideWindow { event: EventId, time: Time, lb: Time, ub: Option<Time> },
    #[error("event {event} is not interactive")]
    NotInteractive { event: EventId },
    #[error("execution is no longer running")]
    NotRunning,
}

impl FireError {
    pub fn reason(&self) -> RejectReason {
        match self {
            FireError::UnknownEvent { .. } => RejectReason::UnknownEvent,
            FireError::AlreadyExecuted { .. } => RejectReason::AlreadyExecuted,
            FireError::NotEnabled { .. } => RejectReason::NotEnabled,
            FireError::OutsideWindow { .. } => RejectReason::OutsideWindow,
            FireError::NotInteractive { .. } => RejectReason::NotInteractive,
            FireError::NotRunning => RejectReason::NotRunning,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("invalid score: {0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    Hierarchy(#[from] Violation),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    /// Includes non-contiguous durations, which only the analysis side accepts.
    #[error(transparent)]
    Stp(#[from] StpError),
}

#[derive(Debug, Clone)]
pub struct ExecutionState {
    network: DispatchableNetwork,
    policy: TriggerPolicy,
    executed: Vec<Option<Time>>,
    lb: Vec<i64>,
    ub: Vec<i64>,
    clock: Time,
    status: Status,
    records: Vec<DispatchRecord>,
    rejections: Vec<Rejection>,
    unexecutable: Vec<EventId>,
}

enum Due {
    Cancel,
    Fire(usize, Cause),
}

/// Origin executed at 0; every event's window read off the origin row and column.
pub fn init_execution(network: DispatchableNetwork, policy: TriggerPolicy) -> ExecutionState {
    let n = network.node_count();
    let m = &network.matrix;
    let lb = (0..n).map(|i| -m.dist(i, 0)).collect();
    let ub = (0..n).map(|i| m.dist(0, i)).collect();
    let mut executed = vec![None; n];
    if n > 0 {
        executed[DispatchableNetwork::ORIGIN] = Some(0);
    }
    let mut state = ExecutionState {
        network,
        policy,
        executed,
        lb,
        ub,
        clock: 0,
        status: Status::Running,
        records: Vec::new(),
        rejections: Vec::new(),
        unexecutable: Vec::new(),
    };
    state.check_finished();
    state
}

impl ExecutionState {
    pub fn network(&self) -> &DispatchableNetwork {
        &self.network
    }

    pub fn policy(&self) -> TriggerPolicy {
        self.policy
    }

    pub fn clock(&self) -> Time {
        self.clock
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn records(&self) -> &[DispatchRecord] {
        &self.records
    }

    pub fn rejections(&self) -> &[Rejection] {
        &self.rejections
    }

    /// Events left unexecuted when the run was cancelled.
    pub fn unexecutable(&self) -> &[EventId] {
        &self.unexecutable
    }

    pub fn node_of(&self, e: &EventId) -> Option<usize> {
        self.network.node_of(e)
    }

    pub fn executed_at(&self, node: usize) -> Option<Time> {
        self.executed[node]
    }

    pub fn window(&self, node: usize) -> Window {
        Window { lb: self.lb[node], ub: Some(self.ub[node]).filter(|&u| u != INF) }
    }

    /// Windows of all unexecuted events.
    pub fn windows(&self) -> BTreeMap<EventId, Window> {
        (1..self.network.node_count())
            .filter(|&i| self.executed[i].is_none())
            .map(|i| (self.network.event(i).id.clone(), self.window(i)))
            .collect()
    }

    /// Every strict predecessor of `node` has been executed.
    pub fn enabled(&self, node: usize) -> bool {
        let m = &self.network.matrix;
        (0..self.network.node_count()).all(|f| f == node || m.dist(node, f) >= 0 || self.executed[f].is_some())
    }

    /// Lower bound never exceeds upper bound for any pending event.
    pub fn windows_consistent(&self) -> bool {
        (1..self.network.node_count()).filter(|&i| self.executed[i].is_none()).all(|i| !self.window(i).is_empty())
    }

    /// Executed times so far.
    pub fn trace(&self) -> Trace {
        Trace::new(
            (1..self.network.node_count())
                .filter_map(|i| self.executed[i].map(|t| (self.network.event(i).id.clone(), t)))
                .collect(),
        )
    }

    fn check_finished(&mut self) {
        if self.status == Status::Running && self.executed.iter().all(Option::is_some) {
            self.status = Status::Finished;
        }
    }

    /// Records `node` at `t` and tightens every pending window.
    pub fn fire(&mut self, node: usize, t: Time, cause: Cause) -> Result<&DispatchRecord, FireError> {
        if self.status != Status::Running {
            return Err(FireError::NotRunning);
        }
        if node == DispatchableNetwork::ORIGIN || node >= self.network.node_count() {
            return Err(FireError::UnknownEvent { event: node.to_string() });
        }
        let event = self.network.event(node).id.clone();
        if self.executed[node].is_some() {
            return Err(FireError::AlreadyExecuted { event });
        }
        if !self.enabled(node) {
            return Err(FireError::NotEnabled { event });
        }
        let w = self.window(node);
        if t < self.clock || !w.contains(t) {
            return Err(FireError::OutsideWindow {
                event,
                time: t,
                lb: w.lb.max(self.clock as i64) as Time,
                ub: w.ub.map(|u| u.max(0) as Time),
            });
        }

        self.executed[node] = Some(t);
        self.clock = t;
        let m = &self.network.matrix;
        let ti = t as i64;
        for f in 1..self.network.node_count() {
            if self.executed[f].is_some() {
                continue;
            }
            let up = m.dist(node, f);
            if up != INF {
                self.ub[f] = self.ub[f].min(ti + up);
            }
            let down = m.dist(f, node);
            if down != INF {
                self.lb[f] = self.lb[f].max(ti - down);
            }
            debug_assert!(self.lb[f] <= self.ub[f], "window of node {f} emptied");
        }

        let ev = self.network.event(node);
        self.records.push(DispatchRecord {
            time: t,
            event,
            labels: ev.labels.iter().cloned().collect(),
            actions: ev.actions.clone(),
            cause,
        });
        self.check_finished();
        Ok(self.records.last().expect("just pushed"))
    }

    /// A performer trigger: only interactive events may be fired this way.
    pub fn trigger(&mut self, e: &EventId, t: Time) -> Result<&DispatchRecord, FireError> {
        let Some(node) = self.node_of(e) else {
            return Err(FireError::UnknownEvent { event: e.to_string() });
        };
        if !self.network.is_interactive(node) {
            return Err(FireError::NotInteractive { event: e.clone() });
        }
        self.fire(node, t, Cause::Trigger)
    }

    /// Logs a rejected trigger; it has no other effect on the state. `event`
    /// is the name as sent, `target` the event it resolved to, if any.
    pub fn reject(&mut self, event: &str, target: Option<&EventId>, t: Time, err: &FireError) -> Rejection {
        let (lb, ub) = match err {
            FireError::OutsideWindow { lb, ub, .. } => (Some(*lb), *ub),
            _ => match target.and_then(|e| self.network.node_of(e)) {
                Some(n) if self.executed[n].is_none() => {
                    let w = self.window(n);
                    (Some(w.lb.max(0) as Time), w.ub.map(|u| u.max(0) as Time))
                }
                _ => (None, None),
            },
        };
        let r = Rejection { time: t, event: event.to_owned(), reason: err.reason(), lb, ub };
        self.rejections.push(r.clone());
        r
    }

    /// What the dispatcher will do next on its own, and when.
    fn next_due(&self) -> Option<(Time, Due)> {
        let mut best: Option<(Time, u8, usize)> = None;
        for i in 1..self.network.node_count() {
            if self.executed[i].is_some() || !self.enabled(i) {
                continue;
            }
            let candidate = if self.network.is_interactive(i) {
                if self.ub[i] == INF {
                    continue;
                }
                let ub = self.ub[i].max(0) as Time;
                match self.policy.on_expiry {
                    OnExpiry::AutoFire => (ub.max(self.clock), 1, i),
                    OnExpiry::Cancel => (ub.saturating_add(1).max(self.clock), 0, i),
                }
            } else {
                ((self.lb[i].max(0) as Time).max(self.clock), 1, i)
            };
            if best.is_none_or(|b| candidate < b) {
                best = Some(candidate);
            }
        }
        best.map(|(t, kind, i)| {
            let due = match (kind, self.network.is_interactive(i)) {
                (0, _) => Due::Cancel,
                (_, true) => Due::Fire(i, Cause::AutoFire),
                (_, false) => Due::Fire(i, Cause::Eager),
            };
            (t, due)
        })
    }

    /// Time of the next self-driven step, if any.
    pub fn next_deadline(&self) -> Option<Time> {
        if self.status != Status::Running {
            return None;
        }
        self.next_due().map(|(t, _)| t)
    }

    /// Performs the next self-driven step if it is due at or before `t`.
    /// Returns whether anything happened.
    pub fn step(&mut self, t: Time) -> bool {
        if self.status != Status::Running {
            return false;
        }
        let Some((due_at, due)) = self.next_due() else { return false };
        if due_at > t {
            return false;
        }
        match due {
            Due::Cancel => {
                self.clock = due_at;
                self.status = Status::Cancelled;
                self.unexecutable = (1..self.network.node_count())
                    .filter(|&i| self.executed[i].is_none())
                    .map(|i| self.network.event(i).id.clone())
                    .collect();
                true
            }
            Due::Fire(node, cause) => match self.fire(node, due_at, cause) {
                Ok(_) => true,
                Err(e) => {
                    // Cannot happen on a consistent network; stop rather than spin.
                    log::error!("dispatcher could not fire node {node}: {e}");
                    false
                }
            },
        }
    }

    /// Processes every self-driven step due at or before `t` in time order and
    /// moves the clock to `t`. Returns the records fired on the way.
    pub fn advance(&mut self, t: Time) -> Vec<DispatchRecord> {
        let start = self.records.len();
        while self.step(t) {}
        if self.status == Status::Running {
            self.clock = self.clock.max(t);
        }
        self.records[start..].to_vec()
    }

    /// Advances until finished, cancelled, or waiting on an unbounded trigger.
    pub fn run_until_idle(&mut self) -> Vec<DispatchRecord> {
        let mut out = Vec::new();
        while let Some(t) = self.next_deadline() {
            out.extend(self.advance(t));
        }
        out
    }

    pub fn status_message(&self) -> Outgoing {
        Outgoing::Status { value: self.status, time: self.clock }
    }

    pub fn window_messages(&self) -> Vec<Outgoing> {
        (1..self.network.node_count())
            .filter(|&i| self.executed[i].is_none())
            .map(|i| {
                let w = self.window(i);
                Outgoing::Window {
                    event: self.network.event(i).id.clone(),
                    lb: w.lb.max(0) as Time,
                    ub: w.ub.map(|u| u.max(0) as Time),
                    enabled: self.enabled(i),
                }
            })
            .collect()
    }
}

impl From<&DispatchRecord> for Outgoing {
    fn from(r: &DispatchRecord) -> Self {
        Outgoing::Fired { event: r.event.clone(), time: r.time, actions: r.actions.clone(), cause: r.cause }
    }
}

impl From<&Rejection> for Outgoing {
    fn from(r: &Rejection) -> Self {
        Outgoing::Rejected { event: r.event.clone(), reason: r.reason, lb: r.lb, ub: r.ub }
    }
}

/// A score compiled all the way down to an executable network.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub score: Score,
    pub raw: TimedEventStructure,
    pub map: EncodingMap,
    pub normal: TimedEventStructure,
    pub merge: BTreeMap<EventId, EventId>,
    pub network: DispatchableNetwork,
}

impl Compiled {
    /// Maps a trigger name to a network event: an event id, or the id of an
    /// interactive object.
    pub fn resolve(&self, name: &str) -> Option<EventId> {
        let id = EventId::new(name);
        if self.network.node_of(&id).is_some() {
            return Some(id);
        }
        let point = crate::score::PointRef::start(name);
        self.map.event_of(&point).and_then(|raw| self.merge.get(raw)).cloned()
    }
}

/// Validate, compile hierarchy, encode, normalize, close the distance graph.
pub fn compile(score: &Score) -> Result<Compiled, EngineError> {
    let report = validate_score(score);
    if !report.is_valid() {
        return Err(EngineError::Invalid(report));
    }
    let compiled = compile_hierarchy(score)?;
    let (raw, map) = encode_score(&compiled)?;
    let (normal, merge) = normalize(&raw)?;
    let matrix = apsp(&to_stp(&normal)?)?;
    let network = make_dispatchable(matrix, &normal);
    Ok(Compiled { score: compiled, raw, map, normal, merge, network })
}

/// A deterministic run driven by a trigger script.
#[derive(Debug, Clone)]
pub struct SimulatedRun {
    pub compiled: Compiled,
    pub state: ExecutionState,
    /// Fired, rejected and final status messages in the order they happened.
    pub messages: Vec<Outgoing>,
}

impl SimulatedRun {
    pub fn status(&self) -> Status {
        self.state.status()
    }

    /// Executed times on the normalized structure.
    pub fn trace(&self) -> Trace {
        self.state.trace()
    }
}

/// Runs the whole pipeline and replays `script` (trigger name, time) in time
/// order. Rejected triggers are logged and leave the state untouched.
pub fn run_simulated(
    score: &Score,
    script: &[(String, Time)],
    policy: TriggerPolicy,
) -> Result<SimulatedRun, EngineError> {
    let compiled = compile(score)?;
    let mut state = init_execution(compiled.network.clone(), policy);
    let mut messages = Vec::new();
    let mut script: Vec<&(String, Time)> = script.iter().collect();
    script.sort_by_key(|(_, t)| *t);

    for (name, at) in script {
        if state.status() != Status::Running {
            break;
        }
        if *at > 0 {
            messages.extend(state.advance(at - 1).iter().map(Outgoing::from));
        }
        if state.status() != Status::Running {
            break;
        }
        let target = compiled.resolve(name);
        let result = match &target {
            Some(e) => state.trigger(e, *at).map(Outgoing::from),
            None => Err(FireError::UnknownEvent { event: name.clone() }),
        };
        match result {
            Ok(m) => messages.push(m),
            Err(e) => {
                let r = state.reject(name, target.as_ref(), *at, &e);
                messages.push(Outgoing::from(&r));
            }
        }
    }
    messages.extend(state.run_until_idle().iter().map(Outgoing::from));
    messages.push(state.status_message());
    Ok(SimulatedRun { compiled, state, messages })
}
