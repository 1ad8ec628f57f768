//! Repeated synthetic runs of MIMB and the per-dataset baseline on one
//! network and target, scored against the known graph.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ci::DataBackend;
use crate::discovery::{baseline, mimb, DiscoveryConfig};
use crate::family::{generate_intervention_family, FamilyError, FamilySpec, Regime};
use crate::graph::{VarId, VarSet};
use crate::metrics::{score, Score, ScoreSummary};
use crate::network::BayesianNetwork;
use crate::sampling::{generate_bundle, stream_rng, SimError};

/// What a benchmark run generates and what it scores.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    /// Target never manipulated; the union is scored against `MB(T)`.
    Table3,
    /// Target manipulated in some experiments; union against `MB(T)`.
    MbMid,
    /// Target never manipulated, every child manipulated somewhere; the
    /// intersection is scored against `pa(T)`.
    Parents,
}

impl Protocol {
    pub fn regime(self) -> Regime {
        match self {
            Self::Table3 | Self::Parents => Regime::ZetaZero,
            Self::MbMid => Regime::ZetaMid,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Table3 => "table3",
            Self::MbMid => "mb-mid",
            Self::Parents => "parents",
        })
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table3" => Ok(Self::Table3),
            "mb-mid" => Ok(Self::MbMid),
            "parents" => Ok(Self::Parents),
            other => Err(format!("unknown protocol `{other}` (expected table3, mb-mid or parents)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub protocol: Protocol,
    pub n_datasets: usize,
    pub rows_per_dataset: usize,
    pub reps: usize,
    pub dirichlet_alpha: f64,
    /// Defaults to `⌈|V|/5⌉` when absent.
    pub max_targets_per_set: Option<usize>,
    pub seed: u64,
    pub alpha: f64,
    pub max_cond: usize,
    pub symmetry_correction: bool,
}

impl BenchmarkConfig {
    pub fn new(protocol: Protocol, seed: u64) -> Self {
        Self {
            protocol,
            n_datasets: 5,
            rows_per_dataset: 5000,
            reps: 10,
            dirichlet_alpha: 1.0,
            max_targets_per_set: None,
            seed,
            alpha: 0.01,
            max_cond: 3,
            symmetry_correction: false,
        }
    }

    fn discovery(&self) -> DiscoveryConfig {
        DiscoveryConfig::default()
            .with_alpha(self.alpha)
            .with_max_cond(self.max_cond)
            .with_symmetry(self.symmetry_correction)
    }
}

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepResult {
    pub rep: usize,
    pub family: Vec<Vec<String>>,
    pub mimb_found: Vec<String>,
    pub baseline_found: Vec<String>,
    pub mimb: Score,
    pub baseline: Score,
    pub mimb_n_test: u64,
    pub baseline_n_test: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub protocol: Protocol,
    pub target: String,
    pub truth: Vec<String>,
    pub config: BenchmarkConfig,
    pub mimb: ScoreSummary,
    pub baseline: ScoreSummary,
    /// Repetitions in which MIMB ran fewer tests than the baseline.
    pub mimb_fewer_tests: usize,
    pub reps: Vec<RepResult>,
}

/// Family and bundle seeds for repetition `rep`.
fn rep_seeds(seed: u64, rep: usize) -> (u64, u64) {
    let mut rng = stream_rng(seed, rep as u64);
    (rng.random(), rng.random())
}

fn run_rep(bn: &BayesianNetwork, t: VarId, truth: &VarSet, cfg: &BenchmarkConfig, rep: usize) -> Result<RepResult, BenchmarkError> {
    let dag = bn.dag();
    let (fam_seed, data_seed) = rep_seeds(cfg.seed, rep);
    let mut spec = FamilySpec::new(cfg.n_datasets, cfg.protocol.regime(), dag.len())
        .conservative(true)
        .children_covered(cfg.protocol == Protocol::Parents);
    if let Some(m) = cfg.max_targets_per_set {
        spec = spec.max_targets(m);
    }
    let fam = generate_intervention_family(dag, t, &spec, fam_seed)?;
    let bundle = generate_bundle(bn, &fam, cfg.rows_per_dataset, cfg.dirichlet_alpha, data_seed)?;
    let backend = DataBackend::new(&bundle);
    let dcfg = cfg.discovery();
    let m = mimb(&backend, t, dag.len(), &dcfg);
    let b = baseline(&backend, t, dag.len(), &dcfg);
    let (mimb_set, base_set) = match cfg.protocol {
        Protocol::Parents => (m.mimb_pa, b.base_pa),
        _ => (m.mimb_mb, b.base_mb),
    };
    let vars = dag.vars();
    Ok(RepResult {
        rep,
        family: fam.to_names(vars),
        mimb_found: vars.sorted_names(&mimb_set),
        baseline_found: vars.sorted_names(&base_set),
        mimb: score(&mimb_set, truth),
        baseline: score(&base_set, truth),
        mimb_n_test: m.n_tests,
        baseline_n_test: b.n_tests,
    })
}

/// Runs `cfg.reps` independent repetitions. Repetition `r` draws its family
/// and data from seeds derived from stream `r` of `cfg.seed`, so the
/// generated bundles do not depend on `alpha` or the other test settings.
pub fn run_benchmark(bn: &BayesianNetwork, t: VarId, cfg: &BenchmarkConfig) -> Result<EvalReport, BenchmarkError> {
    let dag = bn.dag();
    let truth = match cfg.protocol {
        Protocol::Parents => dag.parents(t),
        _ => dag.markov_blanket(t),
    };
    let run = |rep: usize| run_rep(bn, t, &truth, cfg, rep);
    #[cfg(feature = "parallel")]
    let reps: Result<Vec<RepResult>, BenchmarkError> = {
        use rayon::prelude::*;
        (0..cfg.reps).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let reps: Result<Vec<RepResult>, BenchmarkError> = (0..cfg.reps).map(run).collect();
    let reps = reps?;

    let summary = |score: fn(&RepResult) -> Score, n: fn(&RepResult) -> u64| {
        ScoreSummary::of(&reps.iter().map(score).collect::<Vec<_>>(), &reps.iter().map(n).collect::<Vec<_>>())
    };
    Ok(EvalReport {
        protocol: cfg.protocol,
        target: dag.name(t).to_string(),
        truth: dag.vars().sorted_names(&truth),
        config: cfg.clone(),
        mimb: summary(|r| r.mimb, |r| r.mimb_n_test),
        baseline: summary(|r| r.baseline, |r| r.baseline_n_test),
        mimb_fewer_tests: reps.iter().filter(|r| r.mimb_n_test < r.baseline_n_test).count(),
        reps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::parse_network;

    const NET: &str = "\
VAR A 0 1
VAR T 0 1
VAR B 0 1
VAR C 0 1
PARENTS T A
PARENTS B T C
CPT A
0.4 0.6
CPT T
0.85 0.15
0.2 0.8
CPT C
0.5 0.5
CPT B
0.9 0.1
0.3 0.7
0.25 0.75
0.8 0.2
";

    #[test]
    fn small_network_runs_reproducibly() {
        let bn = parse_network(NET).unwrap();
        let t = bn.dag().id("T").unwrap();
        let mut cfg = BenchmarkConfig::new(Protocol::Table3, 9);
        cfg.n_datasets = 3;
        cfg.rows_per_dataset = 2000;
        cfg.reps = 3;
        let a = run_benchmark(&bn, t, &cfg).unwrap();
        assert_eq!(a, run_benchmark(&bn, t, &cfg).unwrap());
        assert_eq!(a.truth, ["A", "B", "C"]);
        assert_eq!(a.reps.len(), 3);
        assert!(a.reps.iter().all(|r| r.family.iter().all(|s| !s.contains(&"T".to_string()))));
    }

    #[test]
    fn protocol_names() {
        for p in [Protocol::Table3, Protocol::MbMid, Protocol::Parents] {
            assert_eq!(p.to_string().parse::<Protocol>().unwrap(), p);
        }
        assert!("x".parse::<Protocol>().is_err());
    }
}
