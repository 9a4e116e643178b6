//! Small reference scores used by tests, benches and the CLI samples.

use crate::duration::DurationSet;
use crate::score::{PointRef, Score, TemporalObject};

/// Two static objects in sequence: A ∈ [2,4], then B ∈ [3,5] starting exactly
/// when A ends.
pub fn seq2() -> Score {
    Score::new("seq2")
        .with_object(TemporalObject::new("A", DurationSet::range(2, 4)))
        .with_object(TemporalObject::new("B", DurationSet::range(3, 5)))
        .with_relation(PointRef::end("A"), PointRef::start("B"), DurationSet::zero())
}

/// "r overlaps g" as three point-to-point before relations.
pub fn overlaps() -> Score {
    Score::new("overlaps")
        .with_object(TemporalObject::new("r", DurationSet::range(3, 6)).with_actions("red.on", "red.off"))
        .with_object(TemporalObject::new("g", DurationSet::range(3, 6)).with_actions("green.on", "green.off"))
        .with_relation(PointRef::start("r"), PointRef::start("g"), DurationSet::before())
        .with_relation(PointRef::end("r"), PointRef::end("g"), DurationSet::before())
        .with_relation(PointRef::start("g"), PointRef::end("r"), DurationSet::before())
}

/// Red light, green light and sound with interactive objects a, b, d.
pub fn lights() -> Score {
    lights_with(DurationSet::range(3, 6), DurationSet::range(3, 6), DurationSet::range(2, 4))
}

/// The same structure with every static duration set to `d`.
pub fn lights_uniform(d: DurationSet) -> Score {
    lights_with(d.clone(), d.clone(), d)
}

pub fn lights_with(red: DurationSet, green: DurationSet, sound: DurationSet) -> Score {
    Score::new("lights")
        .with_object(TemporalObject::new("r", red).with_actions("red.on", "red.off"))
        .with_object(TemporalObject::new("g", green).with_actions("green.on", "green.off"))
        .with_object(TemporalObject::new("u", sound).with_actions("sound.play", "sound.stop"))
        .with_object(TemporalObject::interactive("a"))
        .with_object(TemporalObject::interactive("b"))
        .with_object(TemporalObject::interactive("d"))
        .with_relation(PointRef::start("u"), PointRef::start("g"), DurationSet::zero())
        .with_relation(PointRef::end("r"), PointRef::end("a"), DurationSet::zero())
        .with_relation(PointRef::start("r"), PointRef::start("g"), DurationSet::before())
        .with_relation(PointRef::end("r"), PointRef::end("g"), DurationSet::before())
        .with_relation(PointRef::start("g"), PointRef::end("r"), DurationSet::before())
        .with_relation(PointRef::end("u"), PointRef::start("d"), DurationSet::zero())
        .with_relation(PointRef::start("r"), PointRef::start("b"), DurationSet::zero())
}
