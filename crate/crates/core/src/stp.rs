//! Simple temporal problems: distance graphs, all-pairs shortest paths and
//! the dispatchable network used by the execution engine.
//!
//! A constraint `t(y) - t(x) ∈ [a, b]` becomes edges `x → y` of weight `b`
//! and `y → x` of weight `-a`. Entry `d[i][j]` of the closed matrix is the
//! tightest upper bound on `t(j) - t(i)`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::constraint::ConstraintSet;
use crate::duration::Time;
use crate::encoding::{structure_constraints, EncodingError, Event, EventId, TimedEventStructure, Trace};
use crate::par::Exec;

/// Distance standing for "no bound".
pub const INF: i64 = i64::MAX;

#[inline]
fn add(a: i64, b: i64) -> i64 {
    if a == INF || b == INF {
        INF
    } else {
        a.saturating_add(b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    /// Time 0.
    Origin,
    Event(EventId),
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Origin => f.write_str("origin"),
            Node::Event(e) => write!(f, "{e}"),
        }
    }
}

impl Serialize for Node {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub weight: i64,
}

/// Node 0 is always the origin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DistanceGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StpError {
    #[error("duration {delta} between {from} and {to} has holes; use the finite-domain solver")]
    NonContiguousDuration { from: EventId, to: EventId, delta: String },
    #[error("constraints are inconsistent; negative cycle through {}", fmt_cycle(.cycle))]
    Inconsistent { cycle: Vec<Node> },
    #[error(transparent)]
    Encoding(#[from] EncodingError),
}

fn fmt_cycle(cycle: &[Node]) -> String {
    cycle.iter().map(ToString::to_string).collect::<Vec<_>>().join(" -> ")
}

impl DistanceGraph {
    pub fn from_constraints(cs: &ConstraintSet<EventId>) -> Result<Self, StpError> {
        let mut nodes = vec![Node::Origin];
        nodes.extend(cs.variables.iter().cloned().map(Node::Event));
        let index = |v: &EventId| cs.variables.iter().position(|x| x == v).map(|i| i + 1);
        let mut edges = Vec::new();
        for i in 1..nodes.len() {
            // t(e) >= 0, i.e. t(origin) - t(e) <= 0
            edges.push(Edge { from: i, to: 0, weight: 0 });
        }
        for c in &cs.constraints {
            if !c.delta.is_contiguous() {
                return Err(StpError::NonContiguousDuration {
                    from: c.from.clone(),
                    to: c.to.clone(),
                    delta: c.delta.to_string(),
                });
            }
            let (Some(x), Some(y)) = (index(&c.from), index(&c.to)) else {
                return Err(EncodingError::UnknownPoint { point: format!("{} / {}", c.from, c.to) }.into());
            };
            if let Some(hi) = c.delta.upper_bound() {
                edges.push(Edge { from: x, to: y, weight: hi as i64 });
            }
            edges.push(Edge { from: y, to: x, weight: -(c.delta.lower_bound() as i64) });
        }
        Ok(Self { nodes, edges })
    }

    pub fn node_index(&self, e: &EventId) -> Option<usize> {
        self.nodes.iter().position(|n| matches!(n, Node::Event(x) if x == e))
    }
}

/// Distance graph of a structure's temporal constraint, rooted at an origin.
pub fn to_stp(es: &TimedEventStructure) -> Result<DistanceGraph, StpError> {
    DistanceGraph::from_constraints(&structure_constraints(es)?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    pub nodes: Vec<Node>,
    n: usize,
    d: Vec<i64>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Raw entry; [`INF`] when unbounded.
    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> i64 {
        self.d[i * self.n + j]
    }

    pub fn upper(&self, i: usize, j: usize) -> Option<i64> {
        Some(self.dist(i, j)).filter(|&v| v != INF)
    }

    pub fn node_index(&self, e: &EventId) -> Option<usize> {
        self.nodes.iter().position(|n| matches!(n, Node::Event(x) if x == e))
    }

    /// Absolute window `[lb, ub]` of node `i` relative to the origin.
    pub fn window(&self, i: usize) -> (i64, Option<i64>) {
        (-self.dist(i, 0), self.upper(0, i))
    }

    /// Every event at its lower bound.
    pub fn earliest_schedule(&self) -> Trace {
        Trace::new(
            self.nodes
                .iter()
                .enumerate()
                .filter_map(|(i, n)| match n {
                    Node::Event(e) => Some((e.clone(), (-self.dist(i, 0)).max(0) as Time)),
                    Node::Origin => None,
                })
                .collect(),
        )
    }

    /// Largest lower bound over all events, i.e. the makespan of the earliest schedule.
    pub fn min_makespan(&self) -> Time {
        (1..self.n).map(|i| (-self.dist(i, 0)).max(0) as Time).max().unwrap_or(0)
    }

    /// The complete graph whose weights are the matrix entries.
    pub fn to_graph(&self) -> DistanceGraph {
        let mut edges = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j && self.dist(i, j) != INF {
                    edges.push(Edge { from: i, to: j, weight: self.dist(i, j) });
                }
            }
        }
        DistanceGraph { nodes: self.nodes.clone(), edges }
    }

    pub fn rows(&self) -> Vec<Vec<Option<i64>>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.upper(i, j)).collect()).collect()
    }
}

impl Serialize for DistanceMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("DistanceMatrix", 2)?;
        s.serialize_field("nodes", &self.nodes)?;
        s.serialize_field("matrix", &self.rows())?;
        s.end()
    }
}

pub fn apsp(g: &DistanceGraph) -> Result<DistanceMatrix, StpError> {
    apsp_with(g, Exec::default())
}

/// Floyd–Warshall. Row updates within one pivot step are independent and run
/// on the rayon pool when `exec` allows it.
pub fn apsp_with(g: &DistanceGraph, exec: Exec) -> Result<DistanceMatrix, StpError> {
    let n = g.nodes.len();
    let mut d = vec![INF; n * n];
    let mut next = vec![usize::MAX; n * n];
    for i in 0..n {
        d[i * n + i] = 0;
        next[i * n + i] = i;
    }
    for e in &g.edges {
        let slot = e.from * n + e.to;
        if e.from == e.to {
            if e.weight < 0 {
                return Err(StpError::Inconsistent { cycle: vec![g.nodes[e.from].clone()] });
            }
            continue;
        }
        if e.weight < d[slot] {
            d[slot] = e.weight;
            next[slot] = e.to;
        }
    }

    for k in 0..n {
        // A negative cycle through k closes with paths whose intermediates are < k,
        // which are still intact in `next`.
        if let Some(i) = (0..n).find(|&i| add(d[i * n + k], d[k * n + i]) < 0) {
            let mut cycle = path(&next, n, i, k);
            let back = path(&next, n, k, i);
            cycle.extend(back.into_iter().skip(1));
            cycle.pop();
            return Err(StpError::Inconsistent { cycle: cycle.into_iter().map(|x| g.nodes[x].clone()).collect() });
        }
        let row_k: Vec<i64> = d[k * n..(k + 1) * n].to_vec();
        let relax = |(i, (drow, nrow)): (usize, (&mut [i64], &mut [usize]))| {
            let dik = drow[k];
            if dik == INF || i == k {
                return;
            }
            let via = nrow[k];
            for j in 0..n {
                let cand = add(dik, row_k[j]);
                if cand < drow[j] {
                    drow[j] = cand;
                    nrow[j] = via;
                }
            }
        };
        #[cfg(feature = "parallel")]
        if exec.is_parallel() && n >= 32 {
            use rayon::prelude::*;
            d.par_chunks_mut(n).zip(next.par_chunks_mut(n)).enumerate().for_each(relax);
            continue;
        }
        let _ = exec;
        d.chunks_mut(n).zip(next.chunks_mut(n)).enumerate().for_each(relax);
    }
    Ok(DistanceMatrix { nodes: g.nodes.clone(), n, d })
}

fn path(next: &[usize], n: usize, from: usize, to: usize) -> Vec<usize> {
    let mut out = vec![from];
    let mut cur = from;
    while cur != to && out.len() <= n {
        cur = next[cur * n + to];
        if cur == usize::MAX {
            break;
        }
        out.push(cur);
    }
    out
}

/// An APSP-closed network that can be executed with local propagation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DispatchableNetwork {
    pub matrix: DistanceMatrix,
    /// `events[i - 1]` is node `i`.
    pub events: Vec<Event>,
    pub interactive: BTreeSet<EventId>,
}

impl DispatchableNetwork {
    pub const ORIGIN: usize = 0;

    pub fn node_count(&self) -> usize {
        self.matrix.len()
    }

    pub fn event(&self, node: usize) -> &Event {
        &self.events[node - 1]
    }

    pub fn node_of(&self, e: &EventId) -> Option<usize> {
        self.matrix.node_index(e)
    }

    pub fn is_interactive(&self, node: usize) -> bool {
        node != Self::ORIGIN && self.interactive.contains(&self.event(node).id)
    }

    /// Admissible values of `t(j) - t(i)`.
    pub fn pair_window(&self, i: usize, j: usize) -> (i64, Option<i64>) {
        (-self.matrix.dist(j, i), self.matrix.upper(i, j))
    }

    /// Node `i` must occur strictly before node `j`.
    pub fn precedes(&self, i: usize, j: usize) -> bool {
        self.matrix.dist(j, i) < 0
    }
}

/// Attaches the structure's events to a consistent matrix built from it.
pub fn make_dispatchable(matrix: DistanceMatrix, es: &TimedEventStructure) -> DispatchableNetwork {
    let events: Vec<Event> = matrix
        .nodes
        .iter()
        .skip(1)
        .map(|n| match n {
            Node::Event(id) => es.event(id).cloned().unwrap_or_else(|| Event {
                id: id.clone(),
                labels: Default::default(),
                actions: Vec::new(),
            }),
            Node::Origin => unreachable!("origin is node 0 only"),
        })
        .collect();
    let interactive = events.iter().filter(|e| e.is_interactive()).map(|e| e.id.clone()).collect();
    DispatchableNetwork { matrix, events, interactive }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::Constraint;
    use crate::duration::DurationSet;
    use crate::encoding::{encode_score, normalize, validate_trace};
    use crate::fixtures;

    fn seq2_network() -> (TimedEventStructure, DistanceMatrix) {
        let (es, _) = encode_score(&fixtures::seq2()).unwrap();
        let (nf, _) = normalize(&es).unwrap();
        let m = apsp(&to_stp(&nf).unwrap()).unwrap();
        (nf, m)
    }

    #[test]
    fn seq2_graph_shape() {
        let (es, _) = encode_score(&fixtures::seq2()).unwrap();
        let (nf, _) = normalize(&es).unwrap();
        let g = to_stp(&nf).unwrap();
        assert_eq!(g.nodes.len(), 4);
        // 3 nonnegativity edges, 2 per bounded duration
        assert_eq!(g.edges.len(), 3 + 4);
    }

    #[test]
    fn holes_are_rejected() {
        let cs = ConstraintSet::new(
            vec![EventId::from("x"), EventId::from("y")],
            vec![Constraint::new("x".into(), "y".into(), DurationSet::from_values([1, 3]).unwrap())],
        );
        assert!(matches!(DistanceGraph::from_constraints(&cs), Err(StpError::NonContiguousDuration { .. })));
    }

    #[test]
    fn unbounded_side_has_no_edge() {
        let cs = ConstraintSet::new(
            vec![EventId::from("x"), EventId::from("y")],
            vec![Constraint::new("x".into(), "y".into(), DurationSet::before())],
        );
        let g = DistanceGraph::from_constraints(&cs).unwrap();
        let between: Vec<_> = g.edges.iter().filter(|e| e.from != 0 && e.to != 0).collect();
        assert_eq!(between, vec![&Edge { from: 2, to: 1, weight: -1 }]);
    }

    #[test]
    fn inconsistent_windows() {
        let cs = ConstraintSet::new(
            vec![EventId::from("x"), EventId::from("y")],
            vec![
                Constraint::new("x".into(), "y".into(), DurationSet::range(2, 3)),
                Constraint::new("y".into(), "x".into(), DurationSet::range(0, 1)),
            ],
        );
        let g = DistanceGraph::from_constraints(&cs).unwrap();
        match apsp(&g) {
            Err(StpError::Inconsistent { cycle }) => {
                let idx: Vec<usize> = cycle.iter().map(|n| g.nodes.iter().position(|m| m == n).unwrap()).collect();
                let weight: i64 = (0..idx.len())
                    .map(|k| {
                        let (a, b) = (idx[k], idx[(k + 1) % idx.len()]);
                        g.edges.iter().filter(|e| e.from == a && e.to == b).map(|e| e.weight).min().unwrap()
                    })
                    .sum();
                assert!(weight < 0, "witness {cycle:?} has weight {weight}");
            }
            other => panic!("expected inconsistency, got {other:?}"),
        }
    }

    #[test]
    fn seq2_windows() {
        let (_, m) = seq2_network();
        let sp_a = m.node_index(&"sp(A)".into()).unwrap();
        let ep_b = m.node_index(&"ep(B)".into()).unwrap();
        assert_eq!(m.dist(sp_a, ep_b), 9);
        assert_eq!(-m.dist(ep_b, sp_a), 5);
        assert_eq!(m.min_makespan(), 5);
    }

    #[test]
    fn single_node() {
        let g = DistanceGraph { nodes: vec![Node::Origin], edges: vec![] };
        let m = apsp(&g).unwrap();
        assert_eq!(m.rows(), vec![vec![Some(0)]]);
    }

    #[test]
    fn closure_is_idempotent_and_earliest_is_valid() {
        let (nf, m) = seq2_network();
        assert_eq!(apsp(&m.to_graph()).unwrap(), m);
        assert_eq!(validate_trace(&nf, &m.earliest_schedule()), Ok(true));
    }

    #[test]
    fn precedence() {
        let (nf, m) = seq2_network();
        let net = make_dispatchable(m, &nf);
        let sp_a = net.node_of(&"sp(A)".into()).unwrap();
        let m1 = net.node_of(&"ep(A)".into()).unwrap();
        let ep_b = net.node_of(&"ep(B)".into()).unwrap();
        assert_eq!(net.matrix.dist(m1, sp_a), -2);
        assert!(net.precedes(sp_a, m1) && net.precedes(m1, ep_b) && net.precedes(sp_a, ep_b));
        assert!(!net.precedes(m1, sp_a));
        assert_eq!(net.pair_window(sp_a, m1), (2, Some(4)));

        let free = ConstraintSet::new(vec![EventId::from("x"), EventId::from("y")], vec![]);
        let m = apsp(&DistanceGraph::from_constraints(&free).unwrap()).unwrap();
        let net = make_dispatchable(m, &TimedEventStructure::default());
        assert!(!net.precedes(1, 2) && !net.precedes(2, 1));
    }

    #[test]
    fn parallel_matches_sequential() {
        let n = 40;
        let vars: Vec<EventId> = (0..n).map(|i| EventId(format!("e{i:02}"))).collect();
        let mut cons = Vec::new();
        for i in 0..n - 1 {
            cons.push(Constraint::new(vars[i].clone(), vars[i + 1].clone(), DurationSet::range(1, 3 + (i as u64 % 4))));
            if i % 3 == 0 && i + 3 < n {
                cons.push(Constraint::new(vars[i].clone(), vars[i + 3].clone(), DurationSet::range(4, 8)));
            }
        }
        let g = DistanceGraph::from_constraints(&ConstraintSet::new(vars, cons)).unwrap();
        assert_eq!(apsp_with(&g, Exec::Parallel).unwrap(), apsp_with(&g, Exec::Sequential).unwrap());
    }
}
