//! Live protocol messages, one JSON object per line. All numbers are logical
//! time units; a `null` upper bound means unbounded.

use serde::{Deserialize, Serialize};

use crate::duration::Time;
use crate::encoding::EventId;

use super::{Cause, Status};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum Outgoing {
    Score { name: String, score: serde_json::Value, network: serde_json::Value },
    Window { event: EventId, lb: Time, ub: Option<Time>, enabled: bool },
    Fired { event: EventId, time: Time, actions: Vec<String>, cause: Cause },
    Status { value: Status, time: Time },
    Rejected { event: String, reason: RejectReason, lb: Option<Time>, ub: Option<Time> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    NotEnabled,
    OutsideWindow,
    AlreadyExecuted,
    NotInteractive,
    UnknownEvent,
    NotRunning,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase", deny_unknown_fields)]
pub enum Incoming {
    Trigger { event: String },
    Pause,
    Resume,
    Speed { factor: f64 },
}

impl Outgoing {
    /// Compact single-line JSON with sorted keys.
    pub fn to_line(&self) -> String {
        let value = serde_json::to_value(self).expect("protocol messages serialize");
        serde_json::to_string(&value).expect("values serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_shapes() {
        let w = Outgoing::Window { event: "io(a)".into(), lb: 2, ub: None, enabled: true };
        assert_eq!(w.to_line(), r#"{"enabled":true,"event":"io(a)","lb":2,"type":"window","ub":null}"#);
        let f =
            Outgoing::Fired { event: "sp(A)".into(), time: 0, actions: vec!["A.start".into()], cause: Cause::AutoFire };
        assert_eq!(
            f.to_line(),
            r#"{"actions":["A.start"],"cause":"autoFire","event":"sp(A)","time":0,"type":"fired"}"#
        );
        let s = Outgoing::Status { value: Status::Cancelled, time: 4 };
        assert_eq!(s.to_line(), r#"{"time":4,"type":"status","value":"cancelled"}"#);
        let r = Outgoing::Rejected { event: "a".into(), reason: RejectReason::OutsideWindow, lb: Some(2), ub: Some(4) };
        assert_eq!(r.to_line(), r#"{"event":"a","lb":2,"reason":"OutsideWindow","type":"rejected","ub":4}"#);
    }

    #[test]
    fn incoming_parse() {
        let t: Incoming = serde_json::from_str(r#"{"type":"trigger","event":"a"}"#).unwrap();
        assert_eq!(t, Incoming::Trigger { event: "a".into() });
        let s: Incoming = serde_json::from_str(r#"{"type":"speed","factor":2.5}"#).unwrap();
        assert_eq!(s, Incoming::Speed { factor: 2.5 });
        assert_eq!(serde_json::from_str::<Incoming>(r#"{"type":"pause"}"#).unwrap(), Incoming::Pause);
        assert!(serde_json::from_str::<Incoming>(r#"{"type":"jump","to":3}"#).is_err());
    }
}
