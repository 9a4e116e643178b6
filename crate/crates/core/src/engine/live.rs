//! Wall-clock driver for an [`ExecutionState`].
//!
//! One thread owns the state. Transports push [`Stimulus`] values into a
//! channel and receive [`Outgoing`] messages through a sink. Logical time
//! advances at `speed / unit_ms` units per millisecond while not paused.

use std::sync::mpsc::{Receiver, RecvTimeoutError};
use std::time::{Duration, Instant};

use crate::duration::Time;

use super::{Compiled, ExecutionState, FireError, Incoming, Outgoing, Status};

#[derive(Debug, Clone, PartialEq)]
pub enum Stimulus {
    Incoming(Incoming),
    /// Stop the loop without changing the execution status.
    Stop,
}

impl From<Incoming> for Stimulus {
    fn from(m: Incoming) -> Self {
        Stimulus::Incoming(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clock {
    pub unit_ms: u64,
    pub speed: f64,
}

impl Default for Clock {
    fn default() -> Self {
        Self { unit_ms: 1000, speed: 1.0 }
    }
}

/// Maps wall time to logical time, accounting for pauses and speed changes.
struct LogicalClock {
    unit_ms: f64,
    speed: f64,
    anchor: Instant,
    anchor_units: f64,
    paused: bool,
}

impl LogicalClock {
    fn new(c: Clock) -> Self {
        Self {
            unit_ms: c.unit_ms.max(1) as f64,
            speed: c.speed,
            anchor: Instant::now(),
            anchor_units: 0.0,
            paused: false,
        }
    }

    fn units(&self) -> f64 {
        if self.paused {
            return self.anchor_units;
        }
        self.anchor_units + self.anchor.elapsed().as_secs_f64() * 1000.0 * self.speed / self.unit_ms
    }

    fn now(&self) -> Time {
        self.units().floor().max(0.0) as Time
    }

    fn rebase(&mut self) {
        self.anchor_units = self.units();
        self.anchor = Instant::now();
    }

    fn set_paused(&mut self, p: bool) {
        self.rebase();
        self.paused = p;
    }

    fn set_speed(&mut self, s: f64) {
        self.rebase();
        self.speed = s;
    }

    /// Wall duration until logical time `t`; `None` while paused.
    fn until(&self, t: Time) -> Option<Duration> {
        if self.paused {
            return None;
        }
        let left = (t as f64 - self.units()).max(0.0);
        Some(Duration::from_secs_f64(left * self.unit_ms / self.speed / 1000.0))
    }
}

/// Drives `state` until it finishes, is cancelled, or the channel closes.
/// Emits the initial windows, every fired event, rejections, and a status line
/// whenever the status changes.
pub fn run_live<F>(
    compiled: &Compiled,
    mut state: ExecutionState,
    rx: Receiver<Stimulus>,
    clock: Clock,
    mut sink: F,
) -> ExecutionState
where
    F: FnMut(Outgoing),
{
    let mut lc = LogicalClock::new(clock);
    for w in state.window_messages() {
        sink(w);
    }
    sink(state.status_message());

    let emit = |state: &ExecutionState, fired: &[super::DispatchRecord], sink: &mut F| {
        for r in fired {
            sink(Outgoing::from(r));
        }
        if !fired.is_empty() {
            for w in state.window_messages() {
                sink(w);
            }
        }
    };

    loop {
        let before = state.status();
        let fired = state.advance(lc.now());
        emit(&state, &fired, &mut sink);
        if state.status() != before {
            sink(state.status_message());
        }
        if state.status() != Status::Running {
            break;
        }

        let wait = state.next_deadline().and_then(|t| lc.until(t));
        let msg = match wait {
            Some(d) => match rx.recv_timeout(d) {
                Ok(m) => m,
                Err(RecvTimeoutError::Timeout) => continue,
                Err(RecvTimeoutError::Disconnected) => break,
            },
            None => match rx.recv() {
                Ok(m) => m,
                Err(_) => break,
            },
        };

        match msg {
            Stimulus::Stop => break,
            Stimulus::Incoming(Incoming::Pause) => lc.set_paused(true),
            Stimulus::Incoming(Incoming::Resume) => lc.set_paused(false),
            Stimulus::Incoming(Incoming::Speed { factor }) => {
                if factor.is_finite() && factor > 0.0 {
                    lc.set_speed(factor);
                } else {
                    log::warn!("ignoring speed factor {factor}");
                }
            }
            Stimulus::Incoming(Incoming::Trigger { event }) => {
                let now = lc.now();
                // anything due strictly before the trigger happens first
                let fired = state.advance(now.saturating_sub(1));
                emit(&state, &fired, &mut sink);
                if state.status() != Status::Running {
                    sink(state.status_message());
                    break;
                }
                let target = compiled.resolve(&event);
                let result = match &target {
                    Some(e) => state.trigger(e, now.max(state.clock())).cloned(),
                    None => Err(FireError::UnknownEvent { event: event.clone() }),
                };
                match result {
                    Ok(r) => emit(&state, &[r], &mut sink),
                    Err(e) => {
                        let r = state.reject(&event, target.as_ref(), now, &e);
                        sink(Outgoing::from(&r));
                    }
                }
                if state.status() != Status::Running {
                    sink(state.status_message());
                    break;
                }
            }
        }
    }
    state
}

#[cfg(test)]
mod tests {
    use std::sync::mpsc;

    use super::*;
    use crate::engine::{compile, init_execution, TriggerPolicy};
    use crate::fixtures;

    fn fast() -> Clock {
        Clock { unit_ms: 2, speed: 1.0 }
    }

    #[test]
    fn static_score_runs_to_completion() {
        let c = compile(&fixtures::seq2()).unwrap();
        let (_tx, rx) = mpsc::channel();
        let mut out = Vec::new();
        let s = run_live(&c, init_execution(c.network.clone(), TriggerPolicy::default()), rx, fast(), |m| out.push(m));
        assert_eq!(s.status(), Status::Finished);
        assert_eq!(s.trace(), c.network.matrix.earliest_schedule());
        assert_eq!(out.last(), Some(&Outgoing::Status { value: Status::Finished, time: 5 }));
    }

    #[test]
    fn trigger_and_reject_over_channel() {
        let c = compile(&fixtures::lights()).unwrap();
        let (tx, rx) = mpsc::channel();
        tx.send(Incoming::Trigger { event: "nope".into() }.into()).unwrap();
        tx.send(Incoming::Trigger { event: "b".into() }.into()).unwrap();
        tx.send(Incoming::Trigger { event: "b".into() }.into()).unwrap();
        let h = std::thread::spawn(move || {
            let mut out = Vec::new();
            let s =
                run_live(&c, init_execution(c.network.clone(), TriggerPolicy::default()), rx, fast(), |m| out.push(m));
            (s, out)
        });
        // a and d are bounded, so the run finishes on its own even if these arrive late
        std::thread::sleep(Duration::from_millis(10));
        let _ = tx.send(Incoming::Trigger { event: "a".into() }.into());
        let _ = tx.send(Incoming::Trigger { event: "d".into() }.into());
        let (s, out) = h.join().unwrap();
        assert_eq!(s.status(), Status::Finished, "{out:?}");
        let reasons: Vec<_> = out
            .iter()
            .filter_map(|m| match m {
                Outgoing::Rejected { reason, .. } => Some(*reason),
                _ => None,
            })
            .collect();
        // the late triggers may be rejected too, depending on scheduling
        assert_eq!(
            reasons[..2],
            [super::super::RejectReason::UnknownEvent, super::super::RejectReason::AlreadyExecuted]
        );
    }

    #[test]
    fn pause_freezes_and_stop_exits() {
        let c = compile(&fixtures::seq2()).unwrap();
        let (tx, rx) = mpsc::channel();
        tx.send(Incoming::Pause.into()).unwrap();
        let h = std::thread::spawn(move || {
            run_live(
                &c,
                init_execution(c.network.clone(), TriggerPolicy::default()),
                rx,
                Clock { unit_ms: 1, speed: 1.0 },
                |_| {},
            )
        });
        std::thread::sleep(Duration::from_millis(40));
        tx.send(Stimulus::Stop).unwrap();
        let s = h.join().unwrap();
        assert_eq!(s.status(), Status::Running);
        assert!(s.clock() < 2, "clock moved while paused: {}", s.clock());
    }
}
