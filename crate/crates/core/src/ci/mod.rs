//! Conditional-independence testing: G² on data, d-separation as an oracle,
//! and per-run test accounting.

pub mod chi2;
pub mod g2;

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::dataset::DatasetBundle;
use crate::graph::{Dag, InterventionFamily, VarId, VarSet};
pub use chi2::chi_square_upper_tail;
pub use g2::{g2_statistic, g2_test, CiResult, ContingencyTable, G2Statistic, Reliability};

/// `x ⫫ y | z` in dataset `dataset`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CiQuery {
    pub x: VarId,
    pub y: VarId,
    pub z: VarSet,
    pub dataset: usize,
}

impl CiQuery {
    pub fn new(x: VarId, y: VarId, z: VarSet, dataset: usize) -> Self {
        debug_assert!(x != y && !z.contains(&x) && !z.contains(&y), "malformed CI query");
        Self { x, y, z, dataset }
    }
}

/// Per-dataset count of tests performed during one run.
#[derive(Debug, Default)]
pub struct TestLedger {
    counts: Vec<AtomicU64>,
}

impl TestLedger {
    pub fn new(n_datasets: usize) -> Self {
        Self { counts: (0..n_datasets).map(|_| AtomicU64::new(0)).collect() }
    }

    pub fn record(&self, dataset: usize) {
        self.counts[dataset].fetch_add(1, Ordering::Relaxed);
    }

    pub fn per_dataset(&self) -> Vec<u64> {
        self.counts.iter().map(|c| c.load(Ordering::Relaxed)).collect()
    }

    pub fn total(&self) -> u64 {
        self.per_dataset().iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BackendKind {
    Data,
    Oracle,
}

/// Source of conditional-independence decisions over `n` datasets.
pub trait CiBackend: Sync {
    fn n_datasets(&self) -> usize;

    fn kind(&self) -> BackendKind;

    /// Evaluates a query without bookkeeping.
    fn evaluate(&self, q: &CiQuery, alpha: f64) -> CiResult;

    /// Evaluates a query and records it in `ledger`.
    fn test(&self, q: &CiQuery, alpha: f64, ledger: &TestLedger) -> CiResult {
        ledger.record(q.dataset);
        self.evaluate(q, alpha)
    }
}

/// G² tests over the datasets of a bundle.
#[derive(Debug, Clone)]
pub struct DataBackend<'a> {
    bundle: &'a DatasetBundle,
    rule: Reliability,
}

impl<'a> DataBackend<'a> {
    pub fn new(bundle: &'a DatasetBundle) -> Self {
        Self { bundle, rule: Reliability::default() }
    }

    pub fn with_reliability(mut self, rule: Reliability) -> Self {
        self.rule = rule;
        self
    }
}

impl CiBackend for DataBackend<'_> {
    fn n_datasets(&self) -> usize {
        self.bundle.len()
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Data
    }

    fn evaluate(&self, q: &CiQuery, alpha: f64) -> CiResult {
        let z: Vec<VarId> = q.z.iter().copied().collect();
        g2_test(self.bundle.get(q.dataset), q.x, q.y, &z, alpha, self.rule)
    }
}

/// d-separation in each experiment's post-intervention graph.
#[derive(Debug, Clone)]
pub struct OracleBackend {
    dags: Vec<Dag>,
}

impl OracleBackend {
    pub fn new(dag: &Dag, fam: &InterventionFamily) -> Self {
        Self { dags: fam.post_intervention_dags(dag) }
    }

    pub fn from_dags(dags: Vec<Dag>) -> Self {
        Self { dags }
    }

    pub fn dags(&self) -> &[Dag] {
        &self.dags
    }
}

impl CiBackend for OracleBackend {
    fn n_datasets(&self) -> usize {
        self.dags.len()
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Oracle
    }

    fn evaluate(&self, q: &CiQuery, _alpha: f64) -> CiResult {
        let sep = self.dags[q.dataset]
            .is_d_separated(q.x, q.y, &q.z)
            .expect("oracle queries are well formed");
        CiResult::exact(sep)
    }
}
