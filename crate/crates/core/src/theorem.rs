//! Graph-level checks of what the union and intersection of per-experiment
//! Markov blankets recover, for every regime of target manipulation.
//!
//! Per-experiment blankets are read off the post-intervention graphs, so the
//! checks involve no data and no tests.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{Dag, InterventionFamily, VarId, VarSet};
use crate::sampling::{random_dag_with, stream_rng};

/// Markov blanket of `t` in every experiment's post-intervention graph.
pub fn oracle_mbs(dag: &Dag, t: VarId, fam: &InterventionFamily) -> Vec<VarSet> {
    fam.sets().iter().map(|s| dag.intervene(s).markov_blanket(t)).collect()
}

pub fn union_of(sets: &[VarSet]) -> VarSet {
    sets.iter().flatten().copied().collect()
}

pub fn intersection_of(sets: &[VarSet]) -> VarSet {
    match sets.split_first() {
        Some((first, rest)) => first.iter().copied().filter(|v| rest.iter().all(|s| s.contains(v))).collect(),
        None => VarSet::new(),
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZetaClass {
    Zero,
    Mid,
    All,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeClassification {
    pub n_datasets: usize,
    pub zeta_t: usize,
    pub zeta_class: ZetaClass,
    pub conservative: bool,
    pub conservative_minus_t: bool,
    /// Every child of the target is manipulated in some experiment.
    pub children_covered: bool,
    /// No child of the target is manipulated in any experiment.
    pub children_untouched: bool,
    /// Every child is left alone by at least one experiment.
    pub children_escape: bool,
    /// Every child is manipulated in every experiment.
    pub children_always_manipulated: bool,
}

pub fn classify_regime(dag: &Dag, t: VarId, fam: &InterventionFamily) -> RegimeClassification {
    let n = fam.len();
    let zeta_t = fam.zeta(t);
    let zeta_class = match zeta_t {
        0 => ZetaClass::Zero,
        z if z == n => ZetaClass::All,
        _ => ZetaClass::Mid,
    };
    let ch = dag.child_list(t);
    let union = fam.union();
    RegimeClassification {
        n_datasets: n,
        zeta_t,
        zeta_class,
        conservative: fam.is_conservative(),
        conservative_minus_t: fam.is_conservative_without(t),
        children_covered: ch.iter().all(|c| union.contains(c)),
        children_untouched: ch.iter().all(|c| !union.contains(c)),
        children_escape: ch.iter().all(|c| fam.sets().iter().any(|s| !s.contains(c))),
        children_always_manipulated: ch.iter().all(|c| fam.sets().iter().all(|s| s.contains(c))),
    }
}

/// Row of the union table.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnionRow {
    ZeroConservative,
    ZeroNotConservative,
    MidConservative,
    MidNotConservative,
    AllConservative,
    AllNotConservative,
}

/// Row of the intersection table.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntersectionRow {
    ZeroCovered,
    ZeroUncovered,
    MidCovered,
    MidUncovered,
    AllCovered,
    AllUncovered,
}

impl UnionRow {
    pub const ALL: [UnionRow; 6] = [
        Self::ZeroConservative,
        Self::ZeroNotConservative,
        Self::MidConservative,
        Self::MidNotConservative,
        Self::AllConservative,
        Self::AllNotConservative,
    ];
}

impl IntersectionRow {
    pub const ALL: [IntersectionRow; 6] = [
        Self::ZeroCovered,
        Self::ZeroUncovered,
        Self::MidCovered,
        Self::MidUncovered,
        Self::AllCovered,
        Self::AllUncovered,
    ];
}

impl fmt::Display for UnionRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ZeroConservative => "union ζ=0 conservative",
            Self::ZeroNotConservative => "union ζ=0 not conservative",
            Self::MidConservative => "union 0<ζ<n conservative",
            Self::MidNotConservative => "union 0<ζ<n not conservative",
            Self::AllConservative => "union ζ=n conservative without T",
            Self::AllNotConservative => "union ζ=n not conservative without T",
        })
    }
}

impl fmt::Display for IntersectionRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ZeroCovered => "intersection ζ=0 children covered",
            Self::ZeroUncovered => "intersection ζ=0 children not covered",
            Self::MidCovered => "intersection 0<ζ<n children covered",
            Self::MidUncovered => "intersection 0<ζ<n children not covered",
            Self::AllCovered => "intersection ζ=n children covered",
            Self::AllUncovered => "intersection ζ=n children not covered",
        })
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnionRelation {
    EqualsMb,
    BetweenPaAndMb,
    EqualsChSp,
    SubsetOfChSp,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntersectionRelation {
    EqualsPa,
    EqualsMb,
    /// Only `pa(T) ⊆ ⋂ ⊆ MB(T)` is claimed.
    BetweenPaAndMb,
    Empty,
    EqualsChSp,
    SubsetOfChSp,
}

/// Exact value a sharper sub-case pins the union to.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnionSubcase {
    /// Every child escapes manipulation somewhere: the union is `MB(T)`.
    EqualsMb,
    /// Every child is manipulated everywhere: the union is `pa(T)`.
    EqualsPa,
    /// Every child is manipulated everywhere and so is `T`: the union is empty.
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremPrediction {
    pub union_row: UnionRow,
    pub union_relation: UnionRelation,
    pub union_subcase: Option<UnionSubcase>,
    pub intersection_row: IntersectionRow,
    pub intersection_relation: IntersectionRelation,
    pub mb: VarSet,
    pub pa: VarSet,
    pub ch_sp: VarSet,
}

/// Predicted union and intersection of the per-experiment blankets, from the
/// graph and the family alone.
pub fn predict(dag: &Dag, t: VarId, fam: &InterventionFamily) -> TheoremPrediction {
    let c = classify_regime(dag, t, fam);
    let (union_row, union_relation) = match c.zeta_class {
        ZetaClass::Zero if c.conservative => (UnionRow::ZeroConservative, UnionRelation::EqualsMb),
        ZetaClass::Zero => (UnionRow::ZeroNotConservative, UnionRelation::BetweenPaAndMb),
        ZetaClass::Mid if c.conservative_minus_t => (UnionRow::MidConservative, UnionRelation::EqualsMb),
        ZetaClass::Mid => (UnionRow::MidNotConservative, UnionRelation::BetweenPaAndMb),
        ZetaClass::All if c.conservative_minus_t => (UnionRow::AllConservative, UnionRelation::EqualsChSp),
        ZetaClass::All => (UnionRow::AllNotConservative, UnionRelation::SubsetOfChSp),
    };
    let has_children = !dag.child_list(t).is_empty();
    let union_subcase = match union_relation {
        UnionRelation::BetweenPaAndMb if c.children_escape => Some(UnionSubcase::EqualsMb),
        UnionRelation::BetweenPaAndMb if c.children_always_manipulated && has_children => Some(UnionSubcase::EqualsPa),
        UnionRelation::SubsetOfChSp if c.children_always_manipulated => Some(UnionSubcase::Empty),
        _ => None,
    };
    let (intersection_row, intersection_relation) = match (c.zeta_class, c.children_covered) {
        (ZetaClass::Zero, true) => (IntersectionRow::ZeroCovered, IntersectionRelation::EqualsPa),
        (ZetaClass::Zero, false) if c.children_untouched => (IntersectionRow::ZeroUncovered, IntersectionRelation::EqualsMb),
        (ZetaClass::Zero, false) => (IntersectionRow::ZeroUncovered, IntersectionRelation::BetweenPaAndMb),
        (ZetaClass::Mid, true) => (IntersectionRow::MidCovered, IntersectionRelation::Empty),
        (ZetaClass::Mid, false) if c.children_untouched => (IntersectionRow::MidUncovered, IntersectionRelation::EqualsChSp),
        (ZetaClass::Mid, false) => (IntersectionRow::MidUncovered, IntersectionRelation::SubsetOfChSp),
        (ZetaClass::All, true) => (IntersectionRow::AllCovered, IntersectionRelation::Empty),
        (ZetaClass::All, false) if c.children_untouched => (IntersectionRow::AllUncovered, IntersectionRelation::EqualsChSp),
        (ZetaClass::All, false) => (IntersectionRow::AllUncovered, IntersectionRelation::SubsetOfChSp),
    };
    TheoremPrediction {
        union_row,
        union_relation,
        union_subcase,
        intersection_row,
        intersection_relation,
        mb: dag.markov_blanket(t),
        pa: dag.parents(t),
        ch_sp: dag.children_and_spouses(t),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub target: String,
    pub family: Vec<Vec<String>>,
    pub classification: RegimeClassification,
    pub union_row: UnionRow,
    pub union_relation: UnionRelation,
    pub union_subcase: Option<UnionSubcase>,
    pub intersection_row: IntersectionRow,
    pub intersection_relation: IntersectionRelation,
    pub mb: Vec<String>,
    pub pa: Vec<String>,
    pub ch_sp: Vec<String>,
    pub per_dataset: Vec<Vec<String>>,
    pub union: Vec<String>,
    pub intersection: Vec<String>,
    pub union_pass: bool,
    pub intersection_pass: bool,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.union_pass && self.intersection_pass
    }
}

fn check_union(p: &TheoremPrediction, u: &VarSet) -> bool {
    let relation_holds = match p.union_relation {
        UnionRelation::EqualsMb => *u == p.mb,
        UnionRelation::BetweenPaAndMb => p.pa.is_subset(u) && u.is_subset(&p.mb),
        UnionRelation::EqualsChSp => *u == p.ch_sp,
        UnionRelation::SubsetOfChSp => u.is_subset(&p.ch_sp),
    };
    let subcase_holds = match p.union_subcase {
        None => true,
        Some(UnionSubcase::EqualsMb) => *u == p.mb,
        Some(UnionSubcase::EqualsPa) => *u == p.pa,
        Some(UnionSubcase::Empty) => u.is_empty(),
    };
    relation_holds && subcase_holds
}

fn check_intersection(p: &TheoremPrediction, i: &VarSet) -> bool {
    match p.intersection_relation {
        IntersectionRelation::EqualsPa => *i == p.pa,
        IntersectionRelation::EqualsMb => *i == p.mb,
        IntersectionRelation::BetweenPaAndMb => p.pa.is_subset(i) && i.is_subset(&p.mb),
        IntersectionRelation::Empty => i.is_empty(),
        IntersectionRelation::EqualsChSp => *i == p.ch_sp,
        IntersectionRelation::SubsetOfChSp => i.is_subset(&p.ch_sp),
    }
}

/// Compares the actual union and intersection of [`oracle_mbs`] with [`predict`].
pub fn verify(dag: &Dag, t: VarId, fam: &InterventionFamily) -> VerificationReport {
    let vars = dag.vars();
    let p = predict(dag, t, fam);
    let mbs = oracle_mbs(dag, t, fam);
    let union = union_of(&mbs);
    let intersection = intersection_of(&mbs);
    VerificationReport {
        target: dag.name(t).to_string(),
        family: fam.to_names(vars),
        classification: classify_regime(dag, t, fam),
        union_row: p.union_row,
        union_relation: p.union_relation,
        union_subcase: p.union_subcase,
        intersection_row: p.intersection_row,
        intersection_relation: p.intersection_relation,
        mb: vars.sorted_names(&p.mb),
        pa: vars.sorted_names(&p.pa),
        ch_sp: vars.sorted_names(&p.ch_sp),
        per_dataset: mbs.iter().map(|m| vars.sorted_names(m)).collect(),
        union: vars.sorted_names(&union),
        intersection: vars.sorted_names(&intersection),
        union_pass: check_union(&p, &union),
        intersection_pass: check_intersection(&p, &intersection),
    }
}

/// A failing instance, enough to rebuild it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub instance: u64,
    pub variables: Vec<String>,
    pub edges: Vec<(String, String)>,
    pub report: VerificationReport,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowSummary {
    pub row: String,
    pub instances: usize,
    pub failures: usize,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuzzSummary {
    pub seed: u64,
    pub instances: u64,
    pub union_rows: Vec<RowSummary>,
    pub intersection_rows: Vec<RowSummary>,
}

impl FuzzSummary {
    pub fn failures(&self) -> usize {
        self.union_rows.iter().chain(&self.intersection_rows).map(|r| r.failures).sum()
    }

    /// Fewest instances seen in any row.
    pub fn min_row_instances(&self) -> usize {
        self.union_rows.iter().chain(&self.intersection_rows).map(|r| r.instances).min().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuzzConfig {
    /// Instances required in every table row.
    pub trials_per_row: usize,
    pub min_nodes: usize,
    pub max_nodes: usize,
    pub edge_prob: f64,
    pub seed: u64,
    /// Give up after this many instances even if some row is short.
    pub max_instances: u64,
}

impl FuzzConfig {
    pub fn new(trials_per_row: usize, min_nodes: usize, max_nodes: usize, edge_prob: f64, seed: u64) -> Self {
        Self {
            trials_per_row,
            min_nodes,
            max_nodes,
            edge_prob,
            seed,
            max_instances: (trials_per_row as u64).saturating_mul(500).max(10_000),
        }
    }
}

/// Random instance `index` of a fuzz run: graph, target and family.
pub fn fuzz_instance(cfg: &FuzzConfig, index: u64) -> (Dag, VarId, InterventionFamily) {
    let mut rng = stream_rng(cfg.seed, index);
    let n = rng.random_range(cfg.min_nodes.max(1)..=cfg.max_nodes.max(cfg.min_nodes.max(1)));
    let dag = random_dag_with(n, cfg.edge_prob, &mut rng).expect("edge probability checked by caller");
    let t = VarId(rng.random_range(0..n));
    let regime = rng.random_range(0..3u8);
    let mut n_sets = rng.random_range(1..=4usize);
    if regime == 1 && n_sets < 2 {
        n_sets = 2;
    }
    let with_t: Vec<bool> = match regime {
        0 => vec![false; n_sets],
        2 => vec![true; n_sets],
        _ => {
            let zeta = rng.random_range(1..n_sets);
            let mut flags: Vec<bool> = (0..n_sets).map(|i| i < zeta).collect();
            rand::seq::SliceRandom::shuffle(flags.as_mut_slice(), &mut rng);
            flags
        }
    };
    let q = rng.random_range(0.05..0.5);
    let sets = with_t
        .into_iter()
        .map(|wt| {
            let mut s: VarSet = (0..n).map(VarId).filter(|&v| v != t && rng.random_bool(q)).collect();
            if wt {
                s.insert(t);
            }
            s
        })
        .collect();
    (dag, t, InterventionFamily::new(sets).expect("at least one set"))
}

/// Verifies random instances until every row of both tables has at least
/// `trials_per_row` instances (or `max_instances` is reached). Instance `i`
/// uses stream `i` of the seed, so runs are reproducible.
pub fn fuzz_theorems(cfg: &FuzzConfig) -> FuzzSummary {
    const BATCH: u64 = 2048;
    let mut union_rows: Vec<RowSummary> = UnionRow::ALL
        .iter()
        .map(|r| RowSummary { row: r.to_string(), instances: 0, failures: 0, witness: None })
        .collect();
    let mut intersection_rows: Vec<RowSummary> = IntersectionRow::ALL
        .iter()
        .map(|r| RowSummary { row: r.to_string(), instances: 0, failures: 0, witness: None })
        .collect();

    let run = |i: u64| {
        let (dag, t, fam) = fuzz_instance(cfg, i);
        let report = verify(&dag, t, &fam);
        (i, dag, report)
    };
    let mut next = 0u64;
    loop {
        let full = union_rows.iter().chain(&intersection_rows).all(|r| r.instances >= cfg.trials_per_row);
        if full || next >= cfg.max_instances {
            break;
        }
        let end = (next + BATCH).min(cfg.max_instances);
        #[cfg(feature = "parallel")]
        let batch: Vec<_> = {
            use rayon::prelude::*;
            (next..end).into_par_iter().map(run).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let batch: Vec<_> = (next..end).map(run).collect();
        next = end;

        for (i, dag, report) in batch {
            let witness = |report: &VerificationReport| Witness {
                instance: i,
                variables: dag.vars().names().to_vec(),
                edges: dag.edges().map(|(a, b)| (dag.name(a).to_string(), dag.name(b).to_string())).collect(),
                report: report.clone(),
            };
            let u = &mut union_rows[UnionRow::ALL.iter().position(|r| *r == report.union_row).expect("row")];
            u.instances += 1;
            if !report.union_pass {
                u.failures += 1;
                u.witness.get_or_insert_with(|| witness(&report));
            }
            let x = &mut intersection_rows
                [IntersectionRow::ALL.iter().position(|r| *r == report.intersection_row).expect("row")];
            x.instances += 1;
            if !report.intersection_pass {
                x.failures += 1;
                x.witness.get_or_insert_with(|| witness(&report));
            }
        }
    }
    FuzzSummary { seed: cfg.seed, instances: next, union_rows, intersection_rows }
}
