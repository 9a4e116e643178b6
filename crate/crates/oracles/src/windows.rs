use crate::enumerate::OracleConstraint;
use iscore::Time;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub lb: i64,
    pub ub: Option<i64>,
}

/// Feasible time window of every variable given constraints over indices
/// `0..n` and some variables pinned to fixed times; `None` when inconsistent.
///
/// Built from scratch each call: a distance graph with an extra origin node,
/// then Bellman–Ford from the origin on the graph (upper bounds) and on its
/// reverse (lower bounds). Constraints must be contiguous.
pub fn windows(n: usize, constraints: &[OracleConstraint<usize>], pinned: &[(usize, Time)]) -> Option<Vec<Window>> {
    let origin = n;
    let mut edges: Vec<(usize, usize, i64)> = Vec::new();
    for v in 0..n {
        edges.push((v, origin, 0));
    }
    for c in constraints {
        assert!(c.delta.is_contiguous(), "windows oracle needs contiguous constraints");
        if let Some(hi) = c.delta.upper_bound() {
            edges.push((c.from, c.to, hi as i64));
        }
        edges.push((c.to, c.from, -(c.delta.lower_bound() as i64)));
    }
    for &(v, t) in pinned {
        edges.push((origin, v, t as i64));
        edges.push((v, origin, -(t as i64)));
    }

    let forward = bellman_ford(n + 1, &edges, origin)?;
    let reversed: Vec<_> = edges.iter().map(|&(a, b, w)| (b, a, w)).collect();
    let backward = bellman_ford(n + 1, &reversed, origin)?;
    Some((0..n).map(|v| Window { lb: backward[v].map_or(i64::MIN, |d| -d), ub: forward[v] }).collect())
}

fn bellman_ford(n: usize, edges: &[(usize, usize, i64)], src: usize) -> Option<Vec<Option<i64>>> {
    let mut dist: Vec<Option<i64>> = vec![None; n];
    dist[src] = Some(0);
    for _ in 0..n {
        let mut changed = false;
        for &(a, b, w) in edges {
            if let Some(da) = dist[a] {
                if dist[b].is_none_or(|db| da + w < db) {
                    dist[b] = Some(da + w);
                    changed = true;
                }
            }
        }
        if !changed {
            return Some(dist);
        }
    }
    // still relaxing after n rounds: a negative cycle is reachable
    None
}
