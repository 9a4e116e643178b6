//! Sets of admissible durations over discrete time.
//!
//! A [`DurationSet`] is a nonempty subset of the naturals stored as sorted,
//! pairwise disjoint, non-adjacent intervals. The last interval may be
//! unbounded above.

use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// One logical time unit is the atomic grain.
pub type Time = u64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DurationError {
    #[error("duration set must not be empty")]
    Empty,
    #[error("interval lower bound {lo} exceeds upper bound {hi}")]
    Inverted { lo: Time, hi: Time },
}

/// Closed interval `[lo, hi]`; `hi == None` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Interval {
    pub lo: Time,
    pub hi: Option<Time>,
}

impl Interval {
    pub fn contains(&self, n: Time) -> bool {
        n >= self.lo && self.hi.is_none_or(|hi| n <= hi)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DurationSet {
    intervals: Vec<Interval>,
}

impl DurationSet {
    /// Builds a set from arbitrary intervals, merging overlapping and adjacent ones.
    pub fn new<I>(intervals: I) -> Result<Self, DurationError>
    where
        I: IntoIterator<Item = (Time, Option<Time>)>,
    {
        let mut raw = Vec::new();
        for (lo, hi) in intervals {
            if let Some(hi) = hi {
                if lo > hi {
                    return Err(DurationError::Inverted { lo, hi });
                }
            }
            raw.push(Interval { lo, hi });
        }
        if raw.is_empty() {
            return Err(DurationError::Empty);
        }
        raw.sort();
        let mut merged: Vec<Interval> = Vec::with_capacity(raw.len());
        for iv in raw {
            match merged.last_mut() {
                Some(last) => match last.hi {
                    None => {}
                    Some(hi) if iv.lo <= hi.saturating_add(1) => {
                        last.hi = iv.hi.map(|h| h.max(hi));
                    }
                    Some(_) => merged.push(iv),
                },
                None => merged.push(iv),
            }
        }
        Ok(Self { intervals: merged })
    }

    pub fn singleton(n: Time) -> Self {
        Self { intervals: vec![Interval { lo: n, hi: Some(n) }] }
    }

    /// `{0}`: the "equal" relation, and the duration of an interactive object.
    pub fn zero() -> Self {
        Self::singleton(0)
    }

    /// `[lo, hi]`. Panics if `lo > hi`.
    pub fn range(lo: Time, hi: Time) -> Self {
        assert!(lo <= hi, "inverted range [{lo}, {hi}]");
        Self { intervals: vec![Interval { lo, hi: Some(hi) }] }
    }

    /// `[lo, ∞)`.
    pub fn at_least(lo: Time) -> Self {
        Self { intervals: vec![Interval { lo, hi: None }] }
    }

    /// `[1, ∞)`: the point-to-point "before" relation over discrete time.
    pub fn before() -> Self {
        Self::at_least(1)
    }

    /// `[0, ∞)`: "before or at the same time".
    pub fn any() -> Self {
        Self::at_least(0)
    }

    /// A finite set given by its elements. Fails on an empty iterator.
    pub fn from_values<I: IntoIterator<Item = Time>>(values: I) -> Result<Self, DurationError> {
        Self::new(values.into_iter().map(|v| (v, Some(v))))
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn contains(&self, n: Time) -> bool {
        self.intervals.iter().any(|iv| iv.contains(n))
    }

    /// Membership of a signed difference; negatives are never durations.
    pub fn contains_diff(&self, diff: i64) -> bool {
        diff >= 0 && self.contains(diff as Time)
    }

    pub fn is_singleton_zero(&self) -> bool {
        self.intervals.len() == 1 && self.intervals[0] == Interval { lo: 0, hi: Some(0) }
    }

    pub fn is_contiguous(&self) -> bool {
        self.intervals.len() == 1
    }

    pub fn is_bounded(&self) -> bool {
        self.upper_bound().is_some()
    }

    pub fn lower_bound(&self) -> Time {
        self.intervals[0].lo
    }

    /// Largest element, or `None` when unbounded.
    pub fn upper_bound(&self) -> Option<Time> {
        self.intervals.last().and_then(|iv| iv.hi)
    }

    /// Elements not exceeding `limit`, ascending.
    pub fn values_up_to(&self, limit: Time) -> impl Iterator<Item = Time> + '_ {
        self.intervals
            .iter()
            .flat_map(move |iv| {
                let hi = iv.hi.map_or(limit, |h| h.min(limit));
                iv.lo..=hi
            })
            .filter(move |v| *v <= limit)
    }

    /// Pairs as written in score documents: `(lo, hi-or-None)`.
    pub fn to_pairs(&self) -> Vec<(Time, Option<Time>)> {
        self.intervals.iter().map(|iv| (iv.lo, iv.hi)).collect()
    }
}

impl fmt::Display for DurationSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, iv) in self.intervals.iter().enumerate() {
            if i > 0 {
                f.write_str(" ∪ ")?;
            }
            match iv.hi {
                Some(hi) if hi == iv.lo => write!(f, "{{{}}}", iv.lo)?,
                Some(hi) => write!(f, "[{}, {}]", iv.lo, hi)?,
                None => write!(f, "[{}, ∞)", iv.lo)?,
            }
        }
        Ok(())
    }
}

impl Serialize for DurationSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_pairs().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DurationSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let pairs = Vec::<(Time, Option<Time>)>::deserialize(deserializer)?;
        DurationSet::new(pairs).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn merges_adjacent_and_overlapping() {
        let d = DurationSet::new([(5, Some(7)), (0, Some(0)), (1, Some(2)), (6, None)]).unwrap();
        assert_eq!(d.to_pairs(), vec![(0, Some(2)), (5, None)]);
    }

    #[test]
    fn holes_are_kept() {
        let d = DurationSet::from_values([1, 3, 5]).unwrap();
        assert!(!d.is_contiguous());
        assert!(d.contains(3));
        assert!(!d.contains(2));
        assert_eq!(d.values_up_to(4).collect::<Vec<_>>(), vec![1, 3]);
    }

    #[test]
    fn rejects_inverted_and_empty() {
        assert_eq!(DurationSet::new([(5, Some(2))]), Err(DurationError::Inverted { lo: 5, hi: 2 }));
        assert_eq!(DurationSet::new([]), Err(DurationError::Empty));
        assert!(serde_json::from_str::<DurationSet>("[[5,2]]").is_err());
    }

    #[test]
    fn predicates() {
        assert!(DurationSet::zero().is_singleton_zero());
        assert!(!DurationSet::range(0, 1).is_singleton_zero());
        assert!(DurationSet::before().contains(1_000_000));
        assert!(!DurationSet::before().contains(0));
        assert!(!DurationSet::any().contains_diff(-1));
        assert_eq!(DurationSet::range(2, 4).to_string(), "[2, 4]");
        assert_eq!(DurationSet::from_values([0, 3]).unwrap().to_string(), "{0} ∪ {3}");
    }

    #[test]
    fn json_shape() {
        let d = DurationSet::new([(0, Some(0)), (3, None)]).unwrap();
        assert_eq!(serde_json::to_string(&d).unwrap(), "[[0,0],[3,null]]");
        let back: DurationSet = serde_json::from_str("[[0,0],[3,null]]").unwrap();
        assert_eq!(back, d);
    }

    proptest! {
        #[test]
        fn membership_matches_union(raw in prop::collection::vec((0u64..30, 0u64..6, any::<bool>()), 1..5), n in 0u64..50) {
            let pairs: Vec<_> = raw.iter().map(|&(lo, w, open)| (lo, if open { None } else { Some(lo + w) })).collect();
            let d = DurationSet::new(pairs.clone()).unwrap();
            let expected = pairs.iter().any(|&(lo, hi)| n >= lo && hi.is_none_or(|h| n <= h));
            prop_assert_eq!(d.contains(n), expected);
            for w in d.intervals().windows(2) {
                prop_assert!(w[0].hi.unwrap() + 1 < w[1].lo);
            }
        }
    }
}
