//! HITON-PC / HITON-MB on a single dataset, and the baseline that runs it on
//! every dataset and combines the blankets.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{first_subset, DiscoveryConfig, Tester};
use crate::ci::{CiBackend, TestLedger};
use crate::graph::{VarId, VarSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PcResult {
    pub pc: VarSet,
    /// Separating set of every variable outside `pc` (other than the target).
    pub sepsets: BTreeMap<VarId, VarSet>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SingleMbResult {
    pub pc: VarSet,
    pub mb: VarSet,
    pub sepsets: BTreeMap<VarId, VarSet>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub base_mb: VarSet,
    pub base_pa: VarSet,
    pub per_dataset: Vec<SingleMbResult>,
    pub n_tests: u64,
    pub tests_per_dataset: Vec<u64>,
}

fn pc_in(tester: &Tester<'_>, dataset: usize, t: VarId, n_vars: usize, cfg: &DiscoveryConfig) -> PcResult {
    let mut sepsets = BTreeMap::new();
    let mut ranked: Vec<(f64, VarId)> = Vec::new();
    for v in (0..n_vars).map(VarId).filter(|&v| v != t) {
        let r = tester.test(v, t, &VarSet::new(), dataset);
        if r.independent {
            sepsets.insert(v, VarSet::new());
        } else {
            ranked.push((r.p_value, v));
        }
    }
    // Stable sort keeps declaration order among equal p-values.
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut cpc: Vec<VarId> = Vec::new();
    for (_, c) in ranked {
        cpc.push(c);
        // The newcomer first, then every earlier member.
        let order: Vec<VarId> = std::iter::once(c).chain(cpc.iter().copied().filter(|&y| y != c)).collect();
        for y in order {
            if !cpc.contains(&y) {
                continue;
            }
            let rest: Vec<VarId> = cpc.iter().copied().filter(|&w| w != y).collect();
            let hit = first_subset(&rest, 1, cfg.max_cond, |s| {
                let z: VarSet = s.iter().copied().collect();
                tester.independent(y, t, &z, dataset).then_some(z)
            });
            if let Some(z) = hit {
                cpc.retain(|&w| w != y);
                sepsets.insert(y, z);
            }
        }
    }
    PcResult { pc: cpc.into_iter().collect(), sepsets }
}

fn mb_in(tester: &Tester<'_>, dataset: usize, t: VarId, n_vars: usize, cfg: &DiscoveryConfig) -> SingleMbResult {
    let PcResult { mut pc, mut sepsets } = pc_in(tester, dataset, t, n_vars, cfg);
    let neighbours: Vec<(VarId, PcResult)> =
        pc.iter().map(|&u| (u, pc_in(tester, dataset, u, n_vars, cfg))).collect();

    if cfg.symmetry_correction {
        for (u, pcu) in &neighbours {
            if !pcu.pc.contains(&t) {
                pc.remove(u);
                let s = pcu.sepsets.get(&t).cloned().unwrap_or_default();
                sepsets.insert(*u, s);
            }
        }
    }

    let mut mb = pc.clone();
    for (u, pcu) in &neighbours {
        if !pc.contains(u) {
            continue;
        }
        for &v in &pcu.pc {
            if v == t || pc.contains(&v) || mb.contains(&v) {
                continue;
            }
            let Some(sep) = sepsets.get(&v) else { continue };
            if sep.contains(u) {
                continue;
            }
            let mut z = sep.clone();
            z.insert(*u);
            if !tester.independent(v, t, &z, dataset) {
                mb.insert(v);
            }
        }
    }
    SingleMbResult { pc, mb, sepsets }
}

/// Parents and children of `t` in dataset `dataset`.
///
/// Variables dependent on `t` are admitted one at a time by ascending
/// marginal p-value; each admission is followed by an elimination pass in
/// which a member leaves when some nonempty subset (at most `max_cond`
/// members) of the other members separates it from `t`.
pub fn hiton_pc(
    backend: &dyn CiBackend,
    dataset: usize,
    t: VarId,
    n_vars: usize,
    cfg: &DiscoveryConfig,
    ledger: &TestLedger,
) -> PcResult {
    pc_in(&Tester::new(backend, cfg.alpha, ledger, false), dataset, t, n_vars, cfg)
}

/// Markov blanket of `t` in one dataset: [`hiton_pc`] plus every `v` found
/// next to a member `u` with `v ⫫ t | sepset(v)` but `v ⫫̸ t | sepset(v) ∪ {u}`.
pub fn hiton_mb(
    backend: &dyn CiBackend,
    dataset: usize,
    t: VarId,
    n_vars: usize,
    cfg: &DiscoveryConfig,
    ledger: &TestLedger,
) -> SingleMbResult {
    mb_in(&Tester::new(backend, cfg.alpha, ledger, false), dataset, t, n_vars, cfg)
}

/// Runs [`hiton_mb`] on each dataset; the union of the blankets estimates the
/// Markov blanket and their intersection the parents.
pub fn baseline(backend: &dyn CiBackend, t: VarId, n_vars: usize, cfg: &DiscoveryConfig) -> BaselineResult {
    let n = backend.n_datasets();
    let ledger = TestLedger::new(n);
    let run = |i: usize| hiton_mb(backend, i, t, n_vars, cfg, &ledger);
    #[cfg(feature = "parallel")]
    let per_dataset: Vec<SingleMbResult> = {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let per_dataset: Vec<SingleMbResult> = (0..n).map(run).collect();

    let base_mb: VarSet = per_dataset.iter().flat_map(|r| r.mb.iter().copied()).collect();
    let base_pa: VarSet = match per_dataset.split_first() {
        Some((first, rest)) => first.mb.iter().copied().filter(|v| rest.iter().all(|r| r.mb.contains(v))).collect(),
        None => VarSet::new(),
    };
    BaselineResult {
        base_mb,
        base_pa,
        per_dataset,
        n_tests: ledger.total(),
        tests_per_dataset: ledger.per_dataset(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ci::OracleBackend;
    use crate::graph::{Dag, InterventionFamily};

    fn names(d: &Dag, s: &VarSet) -> Vec<String> {
        d.vars().sorted_names(s)
    }

    fn single(dag: &Dag, t: &str) -> SingleMbResult {
        let fam = InterventionFamily::observational(1).unwrap();
        let o = OracleBackend::new(dag, &fam);
        hiton_mb(&o, 0, dag.id(t).unwrap(), dag.len(), &DiscoveryConfig::default(), &TestLedger::new(1))
    }

    #[test]
    fn figure_one_blanket() {
        let d = Dag::new(&["A", "T", "B", "F"], &[("A", "T"), ("T", "B"), ("F", "B")]).unwrap();
        let r = single(&d, "T");
        assert_eq!(names(&d, &r.pc), ["A", "B"]);
        assert_eq!(names(&d, &r.mb), ["A", "B", "F"]);
        assert_eq!(r.sepsets[&d.id("F").unwrap()], VarSet::new());
    }

    #[test]
    fn chain_sepset() {
        let d = Dag::new(&["A", "B", "C"], &[("A", "B"), ("B", "C")]).unwrap();
        let r = single(&d, "C");
        assert_eq!(names(&d, &r.pc), ["B"]);
        assert_eq!(r.sepsets[&d.id("A").unwrap()], d.set(&["B"]).unwrap());
        assert_eq!(r.mb, r.pc);
    }

    #[test]
    fn isolated_target() {
        let d = Dag::new(&["A", "T", "B"], &[("A", "B")]).unwrap();
        let r = single(&d, "T");
        assert!(r.pc.is_empty() && r.mb.is_empty());
    }

    #[test]
    fn figure_two_baseline() {
        let d = Dag::new(&["A", "T", "B", "C"], &[("A", "T"), ("T", "B"), ("C", "B")]).unwrap();
        let fam = InterventionFamily::from_names(&d, &[vec!["B"], vec![], vec!["C"]]).unwrap();
        let o = OracleBackend::new(&d, &fam);
        let r = baseline(&o, d.id("T").unwrap(), d.len(), &DiscoveryConfig::default());
        assert_eq!(names(&d, &r.per_dataset[0].mb), ["A"]);
        assert_eq!(names(&d, &r.base_mb), ["A", "B", "C"]);
        assert_eq!(names(&d, &r.base_pa), ["A"]);
        assert_eq!(r.n_tests, r.tests_per_dataset.iter().sum::<u64>());
    }
}
