use std::collections::{BTreeMap, BTreeSet};

use iscore::score::PointRef;
use iscore::{DurationSet, Score, Time};

/// `t(to) - t(from) ∈ delta`, with the difference required to be non-negative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleConstraint<V> {
    pub from: V,
    pub to: V,
    pub delta: DurationSet,
}

impl<V> OracleConstraint<V> {
    pub fn new(from: V, to: V, delta: DurationSet) -> Self {
        Self { from, to, delta }
    }

    pub fn holds(&self, from: Time, to: Time) -> bool {
        holds(&self.delta, from, to)
    }
}

fn holds(delta: &DurationSet, from: Time, to: Time) -> bool {
    to >= from && delta.contains(to - from)
}

/// Every assignment of `0..=horizon` to `vars` satisfying all constraints.
/// Each constraint is checked as soon as both of its ends are assigned; there
/// is no propagation.
pub fn enumerate<V: Ord + Clone>(
    vars: &[V],
    constraints: &[OracleConstraint<V>],
    horizon: Time,
) -> Vec<BTreeMap<V, Time>> {
    let mut out = Vec::new();
    search(vars, constraints, horizon, |times| {
        out.push(vars.iter().cloned().zip(times.iter().copied()).collect());
        true
    });
    out
}

/// The first assignment in enumeration order, if any.
pub fn first<V: Ord + Clone>(
    vars: &[V],
    constraints: &[OracleConstraint<V>],
    horizon: Time,
) -> Option<BTreeMap<V, Time>> {
    let mut out = None;
    search(vars, constraints, horizon, |times| {
        out = Some(vars.iter().cloned().zip(times.iter().copied()).collect());
        false
    });
    out
}

/// Calls `visit` on each solution until it returns false.
fn search<V: Ord>(
    vars: &[V],
    constraints: &[OracleConstraint<V>],
    horizon: Time,
    mut visit: impl FnMut(&[Time]) -> bool,
) {
    let index: BTreeMap<&V, usize> = vars.iter().enumerate().map(|(i, v)| (v, i)).collect();
    // constraints indexed by the later of their two variables
    let mut due: Vec<Vec<(usize, usize, &DurationSet)>> = vec![Vec::new(); vars.len()];
    for c in constraints {
        let (a, b) = (index[&c.from], index[&c.to]);
        due[a.max(b)].push((a, b, &c.delta));
    }
    fn go(
        k: usize,
        due: &[Vec<(usize, usize, &DurationSet)>],
        horizon: Time,
        times: &mut Vec<Time>,
        visit: &mut dyn FnMut(&[Time]) -> bool,
    ) -> bool {
        if k == times.len() {
            return visit(times);
        }
        for t in 0..=horizon {
            times[k] = t;
            if due[k].iter().all(|&(a, b, d)| holds(d, times[a], times[b])) && !go(k + 1, due, horizon, times, visit) {
                return false;
            }
        }
        true
    }
    let mut times = vec![0; vars.len()];
    go(0, &due, horizon, &mut times, &mut visit);
}

/// Variables and constraints of a score over its points, built straight from
/// the object list: a duration constraint per object, two containment
/// constraints per parent link, and every explicit relation.
pub fn point_constraints(score: &Score) -> (Vec<PointRef>, Vec<OracleConstraint<PointRef>>) {
    let ids: BTreeSet<_> = score.objects.iter().map(|o| o.id.clone()).collect();
    let vars: Vec<PointRef> =
        ids.iter().flat_map(|id| [PointRef::start(id.clone()), PointRef::end(id.clone())]).collect();
    let mut cs = Vec::new();
    for o in &score.objects {
        cs.push(OracleConstraint::new(PointRef::start(o.id.clone()), PointRef::end(o.id.clone()), o.duration.clone()));
        if let Some(p) = &o.parent {
            cs.push(OracleConstraint::new(
                PointRef::start(p.clone()),
                PointRef::start(o.id.clone()),
                DurationSet::any(),
            ));
            cs.push(OracleConstraint::new(PointRef::end(o.id.clone()), PointRef::end(p.clone()), DurationSet::any()));
        }
    }
    for r in &score.relations {
        cs.push(OracleConstraint::new(r.from.clone(), r.to.clone(), r.delta.clone()));
    }
    (vars, cs)
}
