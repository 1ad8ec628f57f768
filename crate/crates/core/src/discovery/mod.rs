//! Markov blanket discovery: the per-dataset baseline and MIMB.

pub mod hiton;
pub mod mimb;

use std::cell::RefCell;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::ci::{CiBackend, CiQuery, CiResult, TestLedger};
use crate::graph::{VarId, VarSet};

pub use hiton::{baseline, hiton_mb, hiton_pc, BaselineResult, SingleMbResult};
pub use mimb::{mimb, mipc, DiscoveryResult, MipcResult};

/// Knobs shared by both discovery algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryConfig {
    /// Significance level of every test.
    pub alpha: f64,
    /// Largest conditioning set examined (ℓ).
    pub max_cond: usize,
    /// Drop a candidate `v` from `pc(T)` when `T` is not in `pc(v)`.
    pub symmetry_correction: bool,
    /// Process candidates by ascending marginal p-value instead of declaration order.
    pub ranked: bool,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        Self { alpha: 0.01, max_cond: 3, symmetry_correction: false, ranked: false }
    }
}

impl DiscoveryConfig {
    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_max_cond(mut self, max_cond: usize) -> Self {
        self.max_cond = max_cond;
        self
    }

    pub fn with_symmetry(mut self, on: bool) -> Self {
        self.symmetry_correction = on;
        self
    }

    pub fn with_ranking(mut self, on: bool) -> Self {
        self.ranked = on;
        self
    }
}

type QueryKey = (VarId, VarId, Vec<VarId>, usize);

/// Issues tests against a backend and records them in a ledger. With
/// memoization on, a query already answered in this run is not re-run and
/// not counted again.
pub(crate) struct Tester<'a> {
    backend: &'a dyn CiBackend,
    alpha: f64,
    ledger: &'a TestLedger,
    memo: Option<RefCell<HashMap<QueryKey, CiResult>>>,
}

impl<'a> Tester<'a> {
    pub(crate) fn new(backend: &'a dyn CiBackend, alpha: f64, ledger: &'a TestLedger, memoize: bool) -> Self {
        Self { backend, alpha, ledger, memo: memoize.then(|| RefCell::new(HashMap::new())) }
    }

    pub(crate) fn n_datasets(&self) -> usize {
        self.backend.n_datasets()
    }

    pub(crate) fn test(&self, x: VarId, y: VarId, z: &VarSet, dataset: usize) -> CiResult {
        let Some(memo) = &self.memo else {
            return self.backend.test(&CiQuery::new(x, y, z.clone(), dataset), self.alpha, self.ledger);
        };
        let key = (x.min(y), x.max(y), z.iter().copied().collect(), dataset);
        if let Some(r) = memo.borrow().get(&key) {
            return *r;
        }
        let r = self.backend.test(&CiQuery::new(x, y, z.clone(), dataset), self.alpha, self.ledger);
        memo.borrow_mut().insert(key, r);
        r
    }

    pub(crate) fn independent(&self, x: VarId, y: VarId, z: &VarSet, dataset: usize) -> bool {
        self.test(x, y, z, dataset).independent
    }
}

/// Calls `f` on every subset of `items` with `min..=max` members, smallest
/// first and lexicographic by position within each size, stopping at the
/// first `Some`.
pub(crate) fn first_subset<T: Copy, R>(
    items: &[T],
    min: usize,
    max: usize,
    mut f: impl FnMut(&[T]) -> Option<R>,
) -> Option<R> {
    let n = items.len();
    let mut buf = Vec::with_capacity(max.min(n));
    for k in min..=max.min(n) {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            buf.clear();
            buf.extend(idx.iter().map(|&i| items[i]));
            if let Some(r) = f(&buf) {
                return Some(r);
            }
            // Advance to the next k-combination in lexicographic order.
            let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else { break };
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_in_size_then_lexicographic_order() {
        let mut seen = Vec::new();
        let none: Option<()> = first_subset(&['a', 'b', 'c'], 0, 3, |s| {
            seen.push(s.iter().collect::<String>());
            None
        });
        assert!(none.is_none());
        assert_eq!(seen, ["", "a", "b", "c", "ab", "ac", "bc", "abc"]);
    }

    #[test]
    fn subset_search_respects_bounds_and_stops() {
        let mut seen = Vec::new();
        let hit = first_subset(&[1, 2, 3, 4], 1, 2, |s| {
            seen.push(s.to_vec());
            (s == [2, 3]).then_some(7)
        });
        assert_eq!(hit, Some(7));
        assert_eq!(seen.last().unwrap(), &vec![2, 3]);
        assert_eq!(seen.len(), 4 + 4);
        let mut count = 0;
        first_subset::<i32, ()>(&[], 1, 3, |_| {
            count += 1;
            None
        });
        assert_eq!(count, 0);
    }
}
