//! Interactive scores: temporal objects bound by point-to-point temporal
//! relations, some of them triggered live by a performer.
//!
//! The crate covers the structural model ([`score`]), its timed event
//! structure semantics ([`encoding`]), playability checking by
//! finite-domain search ([`csp`]) or shortest paths when every duration is an
//! interval ([`stp`]), trace-property queries ([`analysis`]), online
//! execution with local propagation ([`engine`]), and the score document
//! format ([`persist`]).

pub mod analysis;
pub mod constraint;
pub mod csp;
pub mod duration;
pub mod encoding;
pub mod engine;
pub mod fixtures;
pub mod par;
pub mod persist;
pub mod score;
pub mod stp;

mod unionfind;

pub use constraint::{Constraint, ConstraintSet};
pub use duration::{DurationSet, Time};
pub use encoding::{EventId, TimedEventStructure, Trace};
pub use par::Exec;
pub use score::{ObjectId, PointRef, Score, TemporalObject};
