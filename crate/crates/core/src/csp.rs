//! Finite-domain playability for arbitrary duration sets.
//!
//! Variables are event times bounded by a horizon. Search is chronological
//! backtracking with arc consistency over the binary difference constraints;
//! domains are bitsets over `0..=horizon`.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::Serialize;
use thiserror::Error;

use crate::constraint::ConstraintSet;
use crate::duration::{DurationSet, Time};
use crate::encoding::{structure_constraints, EncodingError, EventId, TimedEventStructure, Trace};
use crate::par::{map_collect, Exec};
use crate::score::{PointRef, Score, TemporalObject};

/// Default bound on search nodes before enumeration gives up.
pub const DEFAULT_NODE_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "kind")]
pub enum CspError {
    #[error("search exceeded {limit} nodes; lower the horizon or raise the limit")]
    ExplosionGuard { limit: u64 },
    #[error("subset-sum instance rejected: {reason}")]
    InstanceRejected { reason: String },
    #[error("constraint refers to unknown variable {variable}")]
    UnknownVariable { variable: String },
    #[error(transparent)]
    Encoding(#[from] EncodingError),
}

/// Picks the next unassigned variable, or `None` when all are assigned.
type Chooser = dyn Fn(&[Domain], &[bool]) -> Option<usize>;

#[derive(Debug, Clone, PartialEq, Eq)]
struct Domain {
    words: Vec<u64>,
}

impl Domain {
    fn full(horizon: Time) -> Self {
        let size = horizon as usize + 1;
        let mut words = vec![u64::MAX; size.div_ceil(64)];
        let rem = size % 64;
        if rem != 0 {
            *words.last_mut().expect("at least one word") = (1u64 << rem) - 1;
        }
        Self { words }
    }

    fn singleton(&mut self, v: Time) {
        self.words.iter_mut().for_each(|w| *w = 0);
        self.words[v as usize / 64] |= 1 << (v % 64);
    }

    fn remove(&mut self, v: Time) {
        self.words[v as usize / 64] &= !(1 << (v % 64));
    }

    fn len(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    fn max_value(&self) -> i64 {
        (self.words.len() * 64) as i64 - 1
    }

    /// Any member in `[lo, hi]` (clamped to the domain).
    fn any_in(&self, lo: i64, hi: i64) -> bool {
        let lo = lo.max(0);
        let hi = hi.min(self.max_value());
        if lo > hi {
            return false;
        }
        let (lo, hi) = (lo as usize, hi as usize);
        let (wl, wh) = (lo / 64, hi / 64);
        for w in wl..=wh {
            let mut mask = u64::MAX;
            if w == wl {
                mask &= u64::MAX << (lo % 64);
            }
            if w == wh && hi % 64 != 63 {
                mask &= (1u64 << (hi % 64 + 1)) - 1;
            }
            if self.words[w] & mask != 0 {
                return true;
            }
        }
        false
    }

    fn values(&self) -> impl Iterator<Item = Time> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros();
                w &= w - 1;
                Some(wi as Time * 64 + b as Time)
            })
        })
    }
}

/// `t(vars[to]) - t(vars[from]) ∈ delta`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryConstraint {
    pub from: usize,
    pub to: usize,
    pub delta: DurationSet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteDomainProblem {
    pub variables: Vec<EventId>,
    pub constraints: Vec<BinaryConstraint>,
    pub horizon: Time,
    domains: Vec<Domain>,
    watch: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "camelCase")]
pub enum SolveOutcome {
    Solution { trace: Trace },
    Unsatisfiable { horizon: Time },
}

impl SolveOutcome {
    pub fn trace(&self) -> Option<&Trace> {
        match self {
            SolveOutcome::Solution { trace } => Some(trace),
            SolveOutcome::Unsatisfiable { .. } => None,
        }
    }

    pub fn is_satisfiable(&self) -> bool {
        self.trace().is_some()
    }
}

impl FiniteDomainProblem {
    /// Every variable ranges over `0..=horizon`.
    pub fn new(cs: &ConstraintSet<EventId>, horizon: Time) -> Result<Self, CspError> {
        let index: BTreeMap<&EventId, usize> = cs.variables.iter().enumerate().map(|(i, v)| (v, i)).collect();
        let lookup =
            |v: &EventId| index.get(v).copied().ok_or_else(|| CspError::UnknownVariable { variable: v.to_string() });
        let mut constraints = Vec::with_capacity(cs.constraints.len());
        for c in &cs.constraints {
            constraints.push(BinaryConstraint { from: lookup(&c.from)?, to: lookup(&c.to)?, delta: c.delta.clone() });
        }
        let mut watch = vec![Vec::new(); cs.variables.len()];
        for (ci, c) in constraints.iter().enumerate() {
            watch[c.from].push(ci);
            if c.to != c.from {
                watch[c.to].push(ci);
            }
        }
        Ok(Self {
            variables: cs.variables.clone(),
            domains: vec![Domain::full(horizon); cs.variables.len()],
            constraints,
            horizon,
            watch,
        })
    }

    pub fn from_structure(es: &TimedEventStructure, horizon: Time) -> Result<Self, CspError> {
        Self::new(&structure_constraints(es)?, horizon)
    }

    fn trace_of(&self, values: &[Time]) -> Trace {
        Trace::new(self.variables.iter().cloned().zip(values.iter().copied()).collect())
    }
}

struct Search<'a> {
    problem: &'a FiniteDomainProblem,
    budget: &'a AtomicU64,
    limit: u64,
}

impl Search<'_> {
    fn tick(&self) -> Result<(), CspError> {
        if self.budget.fetch_add(1, Ordering::Relaxed) >= self.limit {
            return Err(CspError::ExplosionGuard { limit: self.limit });
        }
        Ok(())
    }

    /// Arc consistency from the given dirty variables. False on a wipe-out.
    fn propagate(&self, domains: &mut [Domain], dirty: &[usize]) -> bool {
        let p = self.problem;
        let mut queue: Vec<usize> = Vec::new();
        let mut queued = vec![false; p.constraints.len()];
        for &v in dirty {
            for &ci in &p.watch[v] {
                if !queued[ci] {
                    queued[ci] = true;
                    queue.push(ci);
                }
            }
        }
        while let Some(ci) = queue.pop() {
            queued[ci] = false;
            let c = &p.constraints[ci];
            let mut changed = Vec::new();
            if c.from == c.to {
                let keep = c.delta.contains(0);
                if !keep {
                    domains[c.from].words.iter_mut().for_each(|w| *w = 0);
                    return false;
                }
                continue;
            }
            if revise_from(&mut domains[..], c) {
                changed.push(c.from);
            }
            if revise_to(&mut domains[..], c) {
                changed.push(c.to);
            }
            for v in changed {
                if domains[v].is_empty() {
                    return false;
                }
                for &cj in &p.watch[v] {
                    if cj != ci && !queued[cj] {
                        queued[cj] = true;
                        queue.push(cj);
                    }
                }
            }
        }
        true
    }

    /// Depth-first search over `order`, starting at `depth`. `visit` returns
    /// false to stop the search.
    fn dfs(
        &self,
        domains: &[Domain],
        choose: &Chooser,
        assigned: &mut Vec<bool>,
        visit: &mut dyn FnMut(&[Time]) -> bool,
    ) -> Result<bool, CspError> {
        let Some(var) = choose(domains, assigned) else {
            let values: Vec<Time> = domains.iter().map(|d| d.values().next().expect("nonempty")).collect();
            return Ok(visit(&values));
        };
        assigned[var] = true;
        for v in domains[var].values() {
            self.tick()?;
            let mut next = domains.to_vec();
            next[var].singleton(v);
            if self.propagate(&mut next, &[var]) && !self.dfs(&next, choose, assigned, visit)? {
                assigned[var] = false;
                return Ok(false);
            }
        }
        assigned[var] = false;
        Ok(true)
    }
}

/// Keeps values of `from` with a support in `to`.
fn revise_from(domains: &mut [Domain], c: &BinaryConstraint) -> bool {
    let mut removed = Vec::new();
    {
        let (dx, dy) = (&domains[c.from], &domains[c.to]);
        for vx in dx.values() {
            let supported = c.delta.intervals().iter().any(|iv| {
                let lo = vx as i64 + iv.lo as i64;
                let hi = iv.hi.map_or(i64::MAX / 4, |h| vx as i64 + h as i64);
                dy.any_in(lo, hi)
            });
            if !supported {
                removed.push(vx);
            }
        }
    }
    for v in &removed {
        domains[c.from].remove(*v);
    }
    !removed.is_empty()
}

/// Keeps values of `to` with a support in `from`.
fn revise_to(domains: &mut [Domain], c: &BinaryConstraint) -> bool {
    let mut removed = Vec::new();
    {
        let (dx, dy) = (&domains[c.from], &domains[c.to]);
        for vy in dy.values() {
            let supported = c.delta.intervals().iter().any(|iv| {
                let lo = iv.hi.map_or(i64::MIN / 4, |h| vy as i64 - h as i64);
                let hi = vy as i64 - iv.lo as i64;
                dx.any_in(lo, hi)
            });
            if !supported {
                removed.push(vy);
            }
        }
    }
    for v in &removed {
        domains[c.to].remove(*v);
    }
    !removed.is_empty()
}

fn smallest_domain_first(domains: &[Domain], assigned: &[bool]) -> Option<usize> {
    (0..domains.len()).filter(|&i| !assigned[i]).min_by_key(|&i| (domains[i].len(), i))
}

fn in_order(_: &[Domain], assigned: &[bool]) -> Option<usize> {
    assigned.iter().position(|a| !a)
}

pub fn solve(problem: &FiniteDomainProblem) -> Result<SolveOutcome, CspError> {
    solve_with_limit(problem, u64::MAX)
}

/// Finds one trace, trying the smallest domain first and values in ascending order.
pub fn solve_with_limit(problem: &FiniteDomainProblem, node_limit: u64) -> Result<SolveOutcome, CspError> {
    let budget = AtomicU64::new(0);
    let search = Search { problem, budget: &budget, limit: node_limit };
    let mut domains = problem.domains.clone();
    let all: Vec<usize> = (0..domains.len()).collect();
    if !search.propagate(&mut domains, &all) {
        return Ok(SolveOutcome::Unsatisfiable { horizon: problem.horizon });
    }
    let mut found = None;
    let mut assigned = vec![false; domains.len()];
    search.dfs(&domains, &smallest_domain_first, &mut assigned, &mut |values| {
        found = Some(values.to_vec());
        false
    })?;
    Ok(match found {
        Some(values) => SolveOutcome::Solution { trace: problem.trace_of(&values) },
        None => SolveOutcome::Unsatisfiable { horizon: problem.horizon },
    })
}

/// Folds over every solution in lexicographic order of the variable list.
/// With a parallel `exec`, the first variable's values are split across the
/// rayon pool and the partial accumulators merged in order.
pub fn fold_solutions<A, I, S, M>(
    problem: &FiniteDomainProblem,
    exec: Exec,
    node_limit: u64,
    init: I,
    step: S,
    merge: M,
) -> Result<A, CspError>
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    S: Fn(&mut A, &[Time]) + Sync + Send,
    M: Fn(A, A) -> A,
{
    let budget = AtomicU64::new(0);
    let search = Search { problem, budget: &budget, limit: node_limit };
    let mut domains = problem.domains.clone();
    let all: Vec<usize> = (0..domains.len()).collect();
    if domains.is_empty() {
        let mut acc = init();
        step(&mut acc, &[]);
        return Ok(acc);
    }
    if !search.propagate(&mut domains, &all) {
        return Ok(init());
    }

    let first: Vec<Time> = domains[0].values().collect();
    let branches = map_collect(exec, first, |v| -> Result<A, CspError> {
        let mut acc = init();
        search.tick()?;
        let mut d = domains.clone();
        d[0].singleton(v);
        if search.propagate(&mut d, &[0]) {
            let mut assigned = vec![false; d.len()];
            assigned[0] = true;
            search.dfs(&d, &in_order, &mut assigned, &mut |values| {
                step(&mut acc, values);
                true
            })?;
        }
        Ok(acc)
    });
    let mut out: Option<A> = None;
    for b in branches {
        let b = b?;
        out = Some(match out {
            None => b,
            Some(acc) => merge(acc, b),
        });
    }
    Ok(out.unwrap_or_else(init))
}

/// All solutions as raw value rows aligned with `problem.variables`.
pub fn enumerate_assignments(
    problem: &FiniteDomainProblem,
    exec: Exec,
    node_limit: u64,
) -> Result<Vec<Vec<Time>>, CspError> {
    fold_solutions(
        problem,
        exec,
        node_limit,
        Vec::new,
        |acc: &mut Vec<Vec<Time>>, v| acc.push(v.to_vec()),
        |mut a, b| {
            a.extend(b);
            a
        },
    )
}

/// Every valid trace with all events in `[0, horizon]`, lexicographically ordered.
pub fn enumerate_traces(es: &TimedEventStructure, horizon: Time) -> Result<Vec<Trace>, CspError> {
    let problem = FiniteDomainProblem::from_structure(es, horizon)?;
    let rows = enumerate_assignments(&problem, Exec::default(), DEFAULT_NODE_LIMIT)?;
    Ok(rows.iter().map(|r| problem.trace_of(r)).collect())
}

pub fn count_traces(problem: &FiniteDomainProblem, exec: Exec, node_limit: u64) -> Result<u64, CspError> {
    fold_solutions(problem, exec, node_limit, || 0u64, |n, _| *n += 1, |a, b| a + b)
}

/// Values `a_1..a_n` and target `W` of a subset-sum decision instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubsetSumInstance {
    pub values: Vec<Time>,
    pub target: Time,
}

impl SubsetSumInstance {
    pub fn new(values: Vec<Time>, target: Time) -> Result<Self, CspError> {
        let inst = Self { values, target };
        inst.check()?;
        Ok(inst)
    }

    fn check(&self) -> Result<(), CspError> {
        let reject = |reason: &str| Err(CspError::InstanceRejected { reason: reason.to_owned() });
        if self.values.is_empty() {
            return reject("at least one value is required");
        }
        if self.values.contains(&0) {
            return reject("values must be positive");
        }
        if self.target == 0 {
            return reject("target must be positive (a non-empty subset is required)");
        }
        Ok(())
    }

    /// Horizon that contains every trace of the generated score.
    pub fn horizon(&self) -> Time {
        self.values.iter().sum()
    }
}

/// Chains objects `O_i` with duration `{0, a_i}` end to start, and fixes the
/// distance from the first start to the last end at `W`. Each object either
/// contributes its value or collapses to an instant, so the score is playable
/// iff some subset of the values sums to `W`.
pub fn gen_subset_sum_score(inst: &SubsetSumInstance) -> Result<Score, CspError> {
    inst.check()?;
    let n = inst.values.len();
    let width = n.to_string().len();
    let name = |i: usize| format!("O{:0width$}", i + 1);
    let mut score = Score::new(format!("subset-sum-{}", inst.target));
    for (i, &a) in inst.values.iter().enumerate() {
        let d = DurationSet::from_values([0, a]).expect("two values");
        score.objects.push(TemporalObject::new(name(i), d));
    }
    for i in 0..n - 1 {
        score = score.with_relation(PointRef::end(name(i)), PointRef::start(name(i + 1)), DurationSet::zero());
    }
    Ok(score.with_relation(PointRef::start(name(0)), PointRef::end(name(n - 1)), DurationSet::singleton(inst.target)))
}
