//! Random intervention families for synthetic experiments.

use std::fmt;
use std::str::FromStr;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Dag, InterventionFamily, VarId, VarSet};

const REJECTION_ATTEMPTS: usize = 10_000;

/// How often the target itself is manipulated across the `n` experiments.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Never manipulated.
    ZetaZero,
    /// Manipulated in some but not all experiments.
    ZetaMid,
    /// Manipulated in every experiment.
    ZetaAll,
}

impl Regime {
    /// Regime a family places `t` in.
    pub fn of(fam: &InterventionFamily, t: VarId) -> Self {
        match fam.zeta(t) {
            0 => Self::ZetaZero,
            z if z == fam.len() => Self::ZetaAll,
            _ => Self::ZetaMid,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ZetaZero => "zeta0",
            Self::ZetaMid => "mid",
            Self::ZetaAll => "all",
        })
    }
}

impl FromStr for Regime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zeta0" | "zeta_zero" | "zero" => Ok(Self::ZetaZero),
            "mid" | "zeta_mid" => Ok(Self::ZetaMid),
            "all" | "zeta_all" => Ok(Self::ZetaAll),
            other => Err(format!("unknown regime `{other}` (expected zeta0, mid or all)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FamilyError {
    #[error("need at least one experiment")]
    NoExperiments,
    #[error("at least one target per experiment is required")]
    NoBudget,
    #[error("unsatisfiable constraints: {0}")]
    Unsatisfiable(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    pub n_datasets: usize,
    pub regime: Regime,
    pub require_conservative: bool,
    pub require_children_covered: bool,
    /// Upper bound on the set size drawn per experiment (the target counts
    /// toward it when manipulated). Repairs for child coverage may exceed it.
    pub max_targets_per_set: usize,
}

impl FamilySpec {
    /// Defaults for a graph with `n_vars` variables: at most `⌈n_vars / 5⌉`
    /// targets per experiment, no constraints.
    pub fn new(n_datasets: usize, regime: Regime, n_vars: usize) -> Self {
        Self {
            n_datasets,
            regime,
            require_conservative: false,
            require_children_covered: false,
            max_targets_per_set: default_max_targets(n_vars),
        }
    }

    pub fn conservative(mut self, on: bool) -> Self {
        self.require_conservative = on;
        self
    }

    pub fn children_covered(mut self, on: bool) -> Self {
        self.require_children_covered = on;
        self
    }

    pub fn max_targets(mut self, m: usize) -> Self {
        self.max_targets_per_set = m;
        self
    }
}

pub fn default_max_targets(n_vars: usize) -> usize {
    n_vars.div_ceil(5).max(1)
}

fn satisfied(dag: &Dag, t: VarId, spec: &FamilySpec, sets: &[VarSet]) -> bool {
    let fam = InterventionFamily::new(sets.to_vec()).expect("non-empty");
    let conservative = match spec.regime {
        Regime::ZetaAll => fam.is_conservative_without(t),
        _ => fam.is_conservative(),
    };
    if spec.require_conservative && !conservative {
        return false;
    }
    if spec.require_children_covered {
        let u = fam.union();
        if !dag.child_list(t).iter().all(|c| u.contains(c)) {
            return false;
        }
    }
    true
}

fn check_feasible(dag: &Dag, t: VarId, spec: &FamilySpec) -> Result<(), FamilyError> {
    let n = spec.n_datasets;
    if n == 0 {
        return Err(FamilyError::NoExperiments);
    }
    if spec.max_targets_per_set == 0 {
        return Err(FamilyError::NoBudget);
    }
    if spec.regime == Regime::ZetaMid && n < 2 {
        return Err(FamilyError::Unsatisfiable("0 < ζ < n needs at least two experiments".into()));
    }
    if spec.regime == Regime::ZetaZero && dag.len() < 2 {
        return Err(FamilyError::Unsatisfiable("no variable other than the target to manipulate".into()));
    }
    if spec.require_conservative && n < 2 && spec.regime == Regime::ZetaZero {
        return Err(FamilyError::Unsatisfiable(
            "a single conservative experiment cannot manipulate anything".into(),
        ));
    }
    if spec.require_conservative && spec.require_children_covered && n < 2 && !dag.child_list(t).is_empty() {
        return Err(FamilyError::Unsatisfiable(
            "children cannot be covered conservatively with one experiment".into(),
        ));
    }
    Ok(())
}

fn draw<R: Rng + ?Sized>(dag: &Dag, t: VarId, spec: &FamilySpec, rng: &mut R) -> Vec<VarSet> {
    let n = spec.n_datasets;
    let contains_t: Vec<bool> = match spec.regime {
        Regime::ZetaZero => vec![false; n],
        Regime::ZetaAll => vec![true; n],
        Regime::ZetaMid => {
            let zeta = rng.random_range(1..n);
            let mut flags: Vec<bool> = (0..n).map(|i| i < zeta).collect();
            flags.shuffle(rng);
            flags
        }
    };
    let others: Vec<VarId> = dag.vars().ids().filter(|&v| v != t).collect();
    contains_t
        .into_iter()
        .map(|with_t| {
            let size = rng.random_range(1..=spec.max_targets_per_set);
            let k = (size - usize::from(with_t)).min(others.len());
            let mut set: VarSet = others.choose_multiple(rng, k).copied().collect();
            if with_t {
                set.insert(t);
            }
            set
        })
        .collect()
}

fn repair<R: Rng + ?Sized>(dag: &Dag, t: VarId, spec: &FamilySpec, sets: &mut [VarSet], rng: &mut R) {
    let n = sets.len();
    if spec.require_conservative {
        let everywhere: Vec<VarId> = dag
            .vars()
            .ids()
            .filter(|&v| !(v == t && spec.regime == Regime::ZetaAll))
            .filter(|v| sets.iter().all(|s| s.contains(v)))
            .collect();
        for v in everywhere {
            let i = rng.random_range(0..n);
            sets[i].remove(&v);
        }
    }
    if spec.require_children_covered {
        for &c in dag.child_list(t) {
            if !sets.iter().any(|s| s.contains(&c)) {
                let i = rng.random_range(0..n);
                sets[i].insert(c);
            }
        }
    }
}

/// Draws a family for target `t` under `spec`.
///
/// Set sizes are uniform on `1..=max_targets_per_set` and members are drawn
/// uniformly. Constraints are met by rejection (up to 10000 draws); if that
/// fails, the last draw is repaired by dropping each everywhere-manipulated
/// variable from one random experiment and adding each uncovered child to one.
pub fn generate_intervention_family(
    dag: &Dag,
    t: VarId,
    spec: &FamilySpec,
    seed: u64,
) -> Result<InterventionFamily, FamilyError> {
    generate_intervention_family_with(dag, t, spec, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn generate_intervention_family_with<R: Rng + ?Sized>(
    dag: &Dag,
    t: VarId,
    spec: &FamilySpec,
    rng: &mut R,
) -> Result<InterventionFamily, FamilyError> {
    check_feasible(dag, t, spec)?;
    let mut sets = draw(dag, t, spec, rng);
    let mut attempts = 1;
    while !satisfied(dag, t, spec, &sets) && attempts < REJECTION_ATTEMPTS {
        sets = draw(dag, t, spec, rng);
        attempts += 1;
    }
    if !satisfied(dag, t, spec, &sets) {
        repair(dag, t, spec, &mut sets, rng);
    }
    debug_assert!(satisfied(dag, t, spec, &sets));
    InterventionFamily::new(sets).map_err(|_| FamilyError::NoExperiments)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig2a() -> Dag {
        Dag::new(&["A", "T", "B", "C"], &[("A", "T"), ("T", "B"), ("C", "B")]).unwrap()
    }

    #[test]
    fn regimes_place_target() {
        let d = fig2a();
        let t = d.id("T").unwrap();
        for seed in 0..50 {
            let f0 = generate_intervention_family(&d, t, &FamilySpec::new(3, Regime::ZetaZero, 4), seed).unwrap();
            assert_eq!(f0.zeta(t), 0);
            let fm = generate_intervention_family(&d, t, &FamilySpec::new(3, Regime::ZetaMid, 4), seed).unwrap();
            assert!(fm.zeta(t) > 0 && fm.zeta(t) < 3);
            let fa = generate_intervention_family(&d, t, &FamilySpec::new(3, Regime::ZetaAll, 4), seed).unwrap();
            assert_eq!(fa.zeta(t), 3);
        }
    }

    #[test]
    fn constraints_hold() {
        let d = fig2a();
        let t = d.id("T").unwrap();
        let b = d.id("B").unwrap();
        for regime in [Regime::ZetaZero, Regime::ZetaMid, Regime::ZetaAll] {
            for seed in 0..50 {
                let spec = FamilySpec::new(2, regime, 4).conservative(true).children_covered(true).max_targets(2);
                let f = generate_intervention_family(&d, t, &spec, seed).unwrap();
                assert!(f.union().contains(&b));
                if regime == Regime::ZetaAll {
                    assert!(f.is_conservative_without(t));
                } else {
                    assert!(f.is_conservative());
                }
            }
        }
    }

    #[test]
    fn unsatisfiable_is_reported() {
        let d = fig2a();
        let t = d.id("T").unwrap();
        let mid = FamilySpec::new(1, Regime::ZetaMid, 4);
        assert!(matches!(generate_intervention_family(&d, t, &mid, 0), Err(FamilyError::Unsatisfiable(_))));
        let one = FamilySpec::new(1, Regime::ZetaZero, 4).conservative(true);
        assert!(matches!(generate_intervention_family(&d, t, &one, 0), Err(FamilyError::Unsatisfiable(_))));
        let zero = FamilySpec::new(0, Regime::ZetaZero, 4);
        assert!(generate_intervention_family(&d, t, &zero, 0).is_err());
    }

    #[test]
    fn repair_path_terminates() {
        // A single other variable must be in every set when n = 2 and sizes
        // are 1, so conservativity forces the repair path on some draws.
        let d = Dag::new(&["T", "C"], &[("T", "C")]).unwrap();
        let t = d.id("T").unwrap();
        let spec = FamilySpec::new(2, Regime::ZetaZero, 2).conservative(true).children_covered(true).max_targets(1);
        for seed in 0..20 {
            let f = generate_intervention_family(&d, t, &spec, seed).unwrap();
            assert!(f.is_conservative());
            assert_eq!(f.union().len(), 1);
        }
    }

    #[test]
    fn default_budget() {
        assert_eq!(default_max_targets(37), 8);
        assert_eq!(default_max_targets(3), 1);
    }

    #[test]
    fn regime_parsing() {
        assert_eq!("zeta0".parse::<Regime>().unwrap(), Regime::ZetaZero);
        assert_eq!("mid".parse::<Regime>().unwrap(), Regime::ZetaMid);
        assert!("x".parse::<Regime>().is_err());
    }
}
