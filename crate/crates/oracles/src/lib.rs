//! Slow, obviously-correct reference implementations used by the test suite.
//!
//! Nothing here shares code with the solvers it checks: constraints are
//! rebuilt from the score, traces are enumerated by plain backtracking,
//! windows come from Bellman–Ford, and metrics are recomputed from point
//! times.

pub mod checks;
pub mod enumerate;
pub mod gen;
pub mod metrics;
pub mod windows;

pub use enumerate::{enumerate, first, point_constraints, OracleConstraint};
pub use windows::{windows, Window};

/// Whether some non-empty subset of `values` sums to `target`, by trying all
/// `2^n` subsets.
pub fn subset_sum(values: &[u64], target: u64) -> bool {
    assert!(values.len() < 64);
    (1u64..1 << values.len()).any(|mask| {
        values.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, v)| v).sum::<u64>() == target
    })
}
