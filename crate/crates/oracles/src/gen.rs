//! Random well-formed scores for property tests.

use rand::seq::SliceRandom;
use rand::Rng;

use iscore::score::{validate_score, PointRef};
use iscore::{DurationSet, Score, TemporalObject, Time};

#[derive(Debug, Clone, Copy)]
pub struct ScoreParams {
    pub max_objects: usize,
    pub max_relations: usize,
    /// Largest finite bound used in any duration set.
    pub max_bound: Time,
    /// Only single intervals.
    pub contiguous: bool,
    /// Only finite sets; otherwise some sets are `[lo, ∞)`.
    pub bounded: bool,
    pub interactive_prob: f64,
    pub parent_prob: f64,
    /// Chance that a relation is `{0}`.
    pub zero_prob: f64,
}

impl Default for ScoreParams {
    fn default() -> Self {
        Self {
            max_objects: 5,
            max_relations: 4,
            max_bound: 6,
            contiguous: false,
            bounded: true,
            interactive_prob: 0.2,
            parent_prob: 0.15,
            zero_prob: 0.2,
        }
    }
}

fn interval<R: Rng>(rng: &mut R, p: &ScoreParams) -> DurationSet {
    let lo = rng.gen_range(0..=p.max_bound);
    if !p.bounded && rng.gen_bool(0.25) {
        return DurationSet::at_least(lo);
    }
    DurationSet::range(lo, rng.gen_range(lo..=p.max_bound))
}

pub fn duration<R: Rng>(rng: &mut R, p: &ScoreParams) -> DurationSet {
    if p.contiguous || rng.gen_bool(0.5) {
        return interval(rng, p);
    }
    if rng.gen_bool(0.5) {
        let k = rng.gen_range(1..=3);
        DurationSet::from_values((0..k).map(|_| rng.gen_range(0..=p.max_bound))).expect("non-empty")
    } else {
        let a = interval(rng, p);
        let b = interval(rng, p);
        DurationSet::new(a.intervals().iter().chain(b.intervals()).map(|i| (i.lo, i.hi))).expect("valid intervals")
    }
}

fn relation_delta<R: Rng>(rng: &mut R, p: &ScoreParams) -> DurationSet {
    if rng.gen_bool(p.zero_prob) {
        return DurationSet::zero();
    }
    if !p.bounded && rng.gen_bool(0.3) {
        return if rng.gen_bool(0.5) { DurationSet::before() } else { DurationSet::any() };
    }
    duration(rng, p)
}

/// One attempt; may be ill-formed.
fn candidate<R: Rng>(rng: &mut R, p: &ScoreParams) -> Score {
    let n = rng.gen_range(1..=p.max_objects);
    let mut score = Score::new("random");
    for i in 0..n {
        let id = format!("o{i}");
        let mut o = if rng.gen_bool(p.interactive_prob) {
            TemporalObject::interactive(id)
        } else {
            let mut d = duration(rng, p);
            // {0} would make it interactive
            if d.is_singleton_zero() {
                d = DurationSet::range(0, p.max_bound.max(1));
            }
            TemporalObject::new(id, d)
        };
        if i > 0 && rng.gen_bool(p.parent_prob) {
            let parent = format!("o{}", rng.gen_range(0..i));
            if !score.object(&parent.as_str().into()).is_some_and(|x| x.is_interactive()) {
                o = o.with_parent(parent);
            }
        }
        score.objects.push(o);
    }
    let points: Vec<PointRef> = score.points();
    for _ in 0..rng.gen_range(0..=p.max_relations) {
        let mut two: Vec<&PointRef> = points.choose_multiple(rng, 2).collect();
        if two.len() < 2 {
            break;
        }
        two.shuffle(rng);
        let delta = relation_delta(rng, p);
        score = score.with_relation(two[0].clone(), two[1].clone(), delta);
    }
    score
}

/// A random score that passes validation.
pub fn random_score<R: Rng>(rng: &mut R, p: &ScoreParams) -> Score {
    loop {
        let s = candidate(rng, p);
        if validate_score(&s).is_valid() {
            return s;
        }
    }
}

/// `n` values in `1..=max_value` and a target in `1..=sum + 1`, so that some
/// targets are out of reach.
pub fn subset_sum_instance<R: Rng>(rng: &mut R, max_n: usize, max_value: Time) -> (Vec<Time>, Time) {
    let n = rng.gen_range(1..=max_n);
    let values: Vec<Time> = (0..n).map(|_| rng.gen_range(1..=max_value)).collect();
    let sum: Time = values.iter().sum();
    (values, rng.gen_range(1..=sum + 1))
}
