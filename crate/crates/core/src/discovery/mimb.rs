//! MIPC and MIMB: parents/children and Markov blanket discovery that shares
//! evidence across all datasets instead of treating each one separately.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{first_subset, DiscoveryConfig, Tester};
use crate::ci::{CiBackend, TestLedger};
use crate::graph::{VarId, VarSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MipcResult {
    /// Candidate parents and children, in admission order.
    pub cpc: Vec<VarId>,
    /// Candidate blanket per dataset.
    pub cmb: Vec<VarSet>,
    /// Separating set of every non-target variable outside `cpc`.
    pub sepset: BTreeMap<VarId, VarSet>,
}

impl MipcResult {
    pub fn cpc_set(&self) -> VarSet {
        self.cpc.iter().copied().collect()
    }
}

/// A spouse admitted through candidate `via`, in dataset `dataset`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpouseEvidence {
    pub spouse: VarId,
    pub via: VarId,
    pub dataset: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscoveryResult {
    pub target: VarId,
    pub mimb_mb: VarSet,
    pub mimb_pa: VarSet,
    pub cpc: VarSet,
    pub cmb: Vec<VarSet>,
    pub sepset: BTreeMap<VarId, VarSet>,
    pub spouses: Vec<SpouseEvidence>,
    /// Candidates dropped because the target was missing from their own `cpc`.
    pub symmetry_removed: VarSet,
    pub n_tests: u64,
    pub tests_per_dataset: Vec<u64>,
}

fn mipc_with(tester: &Tester<'_>, t: VarId, n_vars: usize, cfg: &DiscoveryConfig) -> MipcResult {
    let n = tester.n_datasets();
    let mut cmb = vec![VarSet::new(); n];
    let mut sepset: BTreeMap<VarId, VarSet> = BTreeMap::new();
    let mut admitted: Vec<(f64, VarId)> = Vec::new();

    // Every variable is tested against t in every dataset.
    for v in (0..n_vars).map(VarId).filter(|&v| v != t) {
        let mut best_p = f64::INFINITY;
        let mut dependent = false;
        for (i, cmb_i) in cmb.iter_mut().enumerate() {
            let r = tester.test(v, t, &VarSet::new(), i);
            if !r.independent {
                dependent = true;
                cmb_i.insert(v);
                best_p = best_p.min(r.p_value);
            }
        }
        sepset.insert(v, VarSet::new());
        if dependent {
            admitted.push((best_p, v));
        }
    }
    if cfg.ranked {
        admitted.sort_by(|a, b| a.0.total_cmp(&b.0));
    }

    // (S, k) search: subset size ascending, subsets lexicographic by position,
    // datasets in bundle order; the candidate and S must both sit in cmb_k.
    let separate = |y: VarId, pool: &[VarId], must: Option<VarId>, cmb: &[VarSet]| -> Option<VarSet> {
        first_subset(pool, 1, cfg.max_cond, |s| {
            if must.is_some_and(|m| !s.contains(&m)) {
                return None;
            }
            let z: VarSet = s.iter().copied().collect();
            (0..n).find_map(|k| {
                let ck = &cmb[k];
                let eligible = ck.contains(&y) && z.iter().all(|w| ck.contains(w));
                (eligible && tester.independent(y, t, &z, k)).then(|| z.clone())
            })
        })
    };

    let mut ipc: Vec<VarId> = Vec::new();
    for (_, v) in admitted {
        if let Some(z) = separate(v, &ipc, None, &cmb) {
            cmb.iter_mut().for_each(|c| {
                c.remove(&v);
            });
            sepset.insert(v, z);
            continue;
        }
        ipc.push(v);
        sepset.remove(&v);
        let others: Vec<VarId> = ipc.iter().copied().filter(|&y| y != v).collect();
        for y in others {
            let pool: Vec<VarId> = ipc.iter().copied().filter(|&w| w != y).collect();
            if let Some(z) = separate(y, &pool, Some(v), &cmb) {
                ipc.retain(|&w| w != y);
                cmb.iter_mut().for_each(|c| {
                    c.remove(&y);
                });
                sepset.insert(y, z);
            }
        }
    }
    MipcResult { cpc: ipc, cmb, sepset }
}

/// Candidate parents and children of `t` across all datasets.
///
/// Every variable is first tested marginally in every dataset and joins
/// `cmb_i` wherever it is dependent. Candidates are then taken in turn: a
/// candidate is discarded if some nonempty subset `S` of the admitted set,
/// with the candidate and `S` inside `cmb_k`, separates it from `t` in dataset
/// `k`; otherwise it is admitted and every earlier admission is re-checked
/// against subsets that contain the newcomer.
pub fn mipc(backend: &dyn CiBackend, t: VarId, n_vars: usize, cfg: &DiscoveryConfig, ledger: &TestLedger) -> MipcResult {
    mipc_with(&Tester::new(backend, cfg.alpha, ledger, true), t, n_vars, cfg)
}

/// Markov blanket (union of `cmb_i`) and parents (intersection) of `t`.
///
/// After [`mipc`] for `t` and for each candidate `v`, a variable `x` next to
/// `v` but outside `{t} ∪ cpc(t)` is added to the first `cmb_k` holding `v`
/// in which `x ⫫ t | sepset(x)` and `x ⫫̸ t | sepset(x) ∪ {v}`.
pub fn mimb(backend: &dyn CiBackend, t: VarId, n_vars: usize, cfg: &DiscoveryConfig) -> DiscoveryResult {
    let n = backend.n_datasets();
    let ledger = TestLedger::new(n);
    let tester = Tester::new(backend, cfg.alpha, &ledger, true);
    let MipcResult { cpc, mut cmb, mut sepset } = mipc_with(&tester, t, n_vars, cfg);

    let neighbours: Vec<(VarId, MipcResult)> = cpc.iter().map(|&v| (v, mipc_with(&tester, v, n_vars, cfg))).collect();

    let mut cpc_t: VarSet = cpc.iter().copied().collect();
    let mut symmetry_removed = VarSet::new();
    if cfg.symmetry_correction {
        for (v, res) in &neighbours {
            if !res.cpc.contains(&t) {
                cpc_t.remove(v);
                symmetry_removed.insert(*v);
                cmb.iter_mut().for_each(|c| {
                    c.remove(v);
                });
                sepset.insert(*v, res.sepset.get(&t).cloned().unwrap_or_default());
            }
        }
    }

    let mut spouses = Vec::new();
    for (v, res) in &neighbours {
        if !cpc_t.contains(v) {
            continue;
        }
        for &x in &res.cpc {
            if x == t || cpc_t.contains(&x) || spouses.iter().any(|s: &SpouseEvidence| s.spouse == x) {
                continue;
            }
            let Some(sep) = sepset.get(&x) else { continue };
            if sep.contains(v) {
                continue;
            }
            let mut with_v = sep.clone();
            with_v.insert(*v);
            let hit = (0..n).find(|&k| {
                cmb[k].contains(v) && tester.independent(x, t, sep, k) && !tester.independent(x, t, &with_v, k)
            });
            if let Some(k) = hit {
                cmb[k].insert(x);
                spouses.push(SpouseEvidence { spouse: x, via: *v, dataset: k });
            }
        }
    }

    let mimb_mb: VarSet = cmb.iter().flatten().copied().collect();
    let mimb_pa: VarSet = match cmb.split_first() {
        Some((first, rest)) => first.iter().copied().filter(|v| rest.iter().all(|c| c.contains(v))).collect(),
        None => VarSet::new(),
    };
    DiscoveryResult {
        target: t,
        mimb_mb,
        mimb_pa,
        cpc: cpc_t,
        cmb,
        sepset,
        spouses,
        symmetry_removed,
        n_tests: ledger.total(),
        tests_per_dataset: ledger.per_dataset(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ci::OracleBackend;
    use crate::fixtures;
    use crate::graph::{Dag, InterventionFamily};

    fn names(d: &Dag, s: &VarSet) -> Vec<String> {
        d.vars().sorted_names(s)
    }

    #[test]
    fn trace_example() {
        let (dag, fam) = fixtures::trace_dag();
        let o = OracleBackend::new(&dag, &fam);
        let t = dag.id("T").unwrap();
        let cfg = DiscoveryConfig::default();
        let m = mipc(&o, t, dag.len(), &cfg, &TestLedger::new(3));
        assert_eq!(names(&dag, &m.cpc_set()), ["A", "B", "G"]);
        assert_eq!(names(&dag, &m.cmb[0]), ["A", "B"]);
        assert_eq!(names(&dag, &m.cmb[1]), ["A", "B", "G"]);
        assert_eq!(names(&dag, &m.cmb[2]), ["A", "B", "G"]);
        assert_eq!(names(&dag, &m.sepset[&dag.id("E").unwrap()]), ["B"]);
        assert!(m.sepset[&dag.id("F").unwrap()].is_empty());
        assert!(m.sepset[&dag.id("C").unwrap()].is_empty());

        let r = mimb(&o, t, dag.len(), &cfg);
        assert_eq!(names(&dag, &r.mimb_mb), ["A", "B", "C", "G"]);
        assert_eq!(names(&dag, &r.mimb_pa), ["A", "B"]);
        assert_eq!(names(&dag, &r.cmb[1]), ["A", "B", "C", "G"]);
        assert_eq!(r.n_tests, r.tests_per_dataset.iter().sum::<u64>());
    }

    #[test]
    fn symmetry_correction_drops_descendant() {
        let dag = fixtures::hidden_descendant();
        let fam = InterventionFamily::from_names(&dag, &[vec!["A"], vec![]]).unwrap();
        let o = OracleBackend::new(&dag, &fam);
        let t = dag.id("T").unwrap();
        let off = mimb(&o, t, dag.len(), &DiscoveryConfig::default());
        assert!(off.cpc.contains(&dag.id("C").unwrap()));
        let on = mimb(&o, t, dag.len(), &DiscoveryConfig::default().with_symmetry(true));
        assert_eq!(names(&dag, &on.cpc), ["B"]);
        assert_eq!(names(&dag, &on.mimb_mb), ["A", "B"]);
    }

    #[test]
    fn chain_observational() {
        let dag = Dag::new(&["A", "T", "B"], &[("A", "T"), ("T", "B")]).unwrap();
        let o = OracleBackend::new(&dag, &InterventionFamily::observational(2).unwrap());
        let r = mimb(&o, dag.id("T").unwrap(), 3, &DiscoveryConfig::default());
        assert_eq!(names(&dag, &r.cpc), ["A", "B"]);
        assert_eq!(r.mimb_mb, r.cpc);
    }

    #[test]
    fn nothing_dependent() {
        let dag = Dag::new(&["A", "T", "B"], &[("A", "B")]).unwrap();
        let o = OracleBackend::new(&dag, &InterventionFamily::observational(2).unwrap());
        let m = mipc(&o, dag.id("T").unwrap(), 3, &DiscoveryConfig::default(), &TestLedger::new(2));
        assert!(m.cpc.is_empty());
        assert!(m.sepset.values().all(VarSet::is_empty));
        assert_eq!(m.sepset.len(), 2);
    }

    #[test]
    fn spouse_missed_when_sepset_comes_from_manipulated_child() {
        // V5 is separated from T by {V0, V3} only in the experiment that
        // manipulates V1, the child linking V5 to T, so reusing that set in the
        // spouse step never finds V5.
        let dag = Dag::new(
            &["V0", "V1", "V2", "V3", "V4", "V5", "V6", "T", "V8"],
            &[
                ("T", "V0"), ("V0", "V1"), ("V4", "V1"), ("V5", "V1"), ("T", "V1"), ("V0", "V2"), ("V3", "V2"),
                ("T", "V2"), ("T", "V3"), ("T", "V4"), ("V8", "V4"), ("V0", "V5"), ("V3", "V5"), ("V4", "V5"),
                ("V8", "V5"), ("V4", "V6"),
            ],
        )
        .unwrap();
        let fam = InterventionFamily::from_names(&dag, &[vec!["V1"], vec!["V6"], vec!["V0", "V3"], vec!["V1", "V4"]]).unwrap();
        let o = OracleBackend::new(&dag, &fam);
        let t = dag.id("T").unwrap();
        let r = mimb(&o, t, dag.len(), &DiscoveryConfig::default().with_max_cond(10).with_symmetry(true));
        assert_eq!(names(&dag, &r.sepset[&dag.id("V5").unwrap()]), ["V0", "V3"]);
        assert_eq!(names(&dag, &r.mimb_mb), ["V0", "V1", "V2", "V3", "V4", "V8"]);
        assert!(dag.markov_blanket(t).contains(&dag.id("V5").unwrap()));
    }
}
