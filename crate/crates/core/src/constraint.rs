//! Binary difference constraints `t(to) - t(from) ∈ Δ` over named variables.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::duration::{DurationSet, Time};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Constraint<V> {
    pub from: V,
    pub to: V,
    pub delta: DurationSet,
}

impl<V> Constraint<V> {
    pub fn new(from: V, to: V, delta: DurationSet) -> Self {
        Self { from, to, delta }
    }
}

impl<V: fmt::Display> fmt::Display for Constraint<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t({}) - t({}) ∈ {}", self.to, self.from, self.delta)
    }
}

/// A conjunction of difference constraints. Every listed variable also
/// carries the implicit constraint `t(v) >= 0`, which the unsigned time
/// representation enforces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConstraintSet<V> {
    pub variables: Vec<V>,
    pub constraints: Vec<Constraint<V>>,
}

impl<V: Ord + Clone> ConstraintSet<V> {
    pub fn new(variables: Vec<V>, constraints: Vec<Constraint<V>>) -> Self {
        Self { variables, constraints }
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn all_contiguous(&self) -> bool {
        self.constraints.iter().all(|c| c.delta.is_contiguous())
    }

    pub fn all_bounded(&self) -> bool {
        self.constraints.iter().all(|c| c.delta.is_bounded())
    }

    /// Checks an assignment. Missing variables make the check fail.
    pub fn is_satisfied_by(&self, times: &BTreeMap<V, Time>) -> bool {
        if self.variables.iter().any(|v| !times.contains_key(v)) {
            return false;
        }
        self.constraints.iter().all(|c| match (times.get(&c.from), times.get(&c.to)) {
            (Some(&a), Some(&b)) => c.delta.contains_diff(b as i64 - a as i64),
            _ => false,
        })
    }

    /// Renames every variable through `f`.
    pub fn map_vars<W: Ord + Clone>(&self, mut f: impl FnMut(&V) -> W) -> ConstraintSet<W> {
        ConstraintSet {
            variables: self.variables.iter().map(&mut f).collect(),
            constraints: self
                .constraints
                .iter()
                .map(|c| Constraint::new(f(&c.from), f(&c.to), c.delta.clone()))
                .collect(),
        }
    }

    /// Default search horizon: the sum of every constraint's largest finite
    /// bound (upper bound, or lower bound when unbounded) plus `slack` per
    /// unbounded constraint. Large enough to contain the earliest schedule
    /// of any consistent contiguous instance.
    pub fn default_horizon(&self, slack: Time) -> Time {
        self.constraints
            .iter()
            .map(|c| match c.delta.upper_bound() {
                Some(hi) => hi,
                None => c.delta.intervals().last().map_or(0, |iv| iv.lo).saturating_add(slack),
            })
            .fold(0, Time::saturating_add)
    }
}

/// Slack added per unbounded duration set when no horizon is given.
pub const DEFAULT_HORIZON_SLACK: Time = 16;
