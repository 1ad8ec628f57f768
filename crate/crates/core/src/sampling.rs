//! Ancestral sampling, randomized interventions and random network generation.
//!
//! All randomness comes from [`ChaCha8Rng`]. A bundle generated from master
//! seed `s` uses stream `2i` of `ChaCha8Rng::seed_from_u64(s)` to draw the
//! manipulated tables of dataset `i` and stream `2i + 1` to sample its rows,
//! so every dataset is reproducible on its own and independent of the others.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use thiserror::Error;

use crate::dataset::{Dataset, DatasetBundle, DatasetError, Schema};
use crate::graph::{Dag, GraphError, InterventionFamily, VarId, VarNames, VarSet};
use crate::network::{BayesianNetwork, Cpt, NetworkError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("Dirichlet concentration must be positive, got {0}")]
    NonPositiveAlpha(f64),
    #[error("row count must be at least 1")]
    NoRows,
    #[error("cardinality must be at least 2, got {0}")]
    Cardinality(usize),
    #[error("edge probability must lie in [0, 1], got {0}")]
    EdgeProbability(f64),
    #[error("intervention family refers to a variable outside the network")]
    ForeignTarget,
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Generator for stream `stream` of master seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One draw from a symmetric Dirichlet with `k` components.
pub fn dirichlet_row<R: Rng + ?Sized>(k: usize, alpha: f64, rng: &mut R) -> Result<Vec<f64>, SimError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(SimError::NonPositiveAlpha(alpha));
    }
    let gamma = Gamma::new(alpha, 1.0).map_err(|_| SimError::NonPositiveAlpha(alpha))?;
    loop {
        let mut row: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
        let s: f64 = row.iter().sum();
        // Very small concentrations can underflow every component.
        if s > 0.0 && s.is_finite() {
            row.iter_mut().for_each(|p| *p /= s);
            return Ok(row);
        }
    }
}

/// Samples `n_rows` complete records in topological order.
pub fn forward_sample(bn: &BayesianNetwork, n_rows: usize, seed: u64) -> Result<Dataset, SimError> {
    forward_sample_with(bn, n_rows, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn forward_sample_with<R: Rng + ?Sized>(
    bn: &BayesianNetwork,
    n_rows: usize,
    rng: &mut R,
) -> Result<Dataset, SimError> {
    if n_rows == 0 {
        return Err(SimError::NoRows);
    }
    let order = bn.dag().topological_order()?;
    let cumulative: Vec<Vec<f64>> = bn
        .vars()
        .ids()
        .map(|v| {
            let cpt = bn.cpt(v);
            let mut out = Vec::with_capacity(cpt.n_rows() * cpt.card());
            for r in 0..cpt.n_rows() {
                let mut acc = 0.0;
                let row = cpt.row(r);
                for (i, p) in row.iter().enumerate() {
                    acc += p;
                    out.push(if i + 1 == row.len() { f64::INFINITY } else { acc });
                }
            }
            out
        })
        .collect();

    let n = bn.len();
    let mut columns = vec![Vec::with_capacity(n_rows); n];
    let mut current = vec![0usize; n];
    for _ in 0..n_rows {
        for &v in &order {
            let cpt = bn.cpt(v);
            let r = cpt.row_index(|p| current[p.0]);
            let card = cpt.card();
            let cum = &cumulative[v.0][r * card..(r + 1) * card];
            let u: f64 = rng.random();
            let s = cum.iter().position(|&c| u < c).unwrap_or(card - 1);
            current[v.0] = s;
        }
        for (col, &s) in columns.iter_mut().zip(&current) {
            col.push(s as u16);
        }
    }
    Ok(Dataset::new(Arc::new(Schema::of_network(bn)), columns)?)
}

/// Replaces the table of every target with one parent-free Dirichlet(α) row
/// and cuts the target's in-edges. Other tables are untouched.
pub fn randomize_manipulated_cpts(
    bn: &BayesianNetwork,
    targets: &VarSet,
    dirichlet_alpha: f64,
    seed: u64,
) -> Result<BayesianNetwork, SimError> {
    randomize_manipulated_cpts_with(bn, targets, dirichlet_alpha, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn randomize_manipulated_cpts_with<R: Rng + ?Sized>(
    bn: &BayesianNetwork,
    targets: &VarSet,
    dirichlet_alpha: f64,
    rng: &mut R,
) -> Result<BayesianNetwork, SimError> {
    if !(dirichlet_alpha > 0.0 && dirichlet_alpha.is_finite()) {
        return Err(SimError::NonPositiveAlpha(dirichlet_alpha));
    }
    if targets.iter().any(|v| v.0 >= bn.len()) {
        return Err(SimError::ForeignTarget);
    }
    let mut replacements = Vec::with_capacity(targets.len());
    for &v in targets {
        replacements.push((v, dirichlet_row(bn.card(v), dirichlet_alpha, rng)?));
    }
    Ok(bn.with_root_tables(replacements)?)
}

fn bundle_member(
    bn: &BayesianNetwork,
    targets: &VarSet,
    i: usize,
    rows: usize,
    alpha: f64,
    seed: u64,
) -> Result<Dataset, SimError> {
    let manipulated = randomize_manipulated_cpts_with(bn, targets, alpha, &mut stream_rng(seed, 2 * i as u64))?;
    let data = forward_sample_with(&manipulated, rows, &mut stream_rng(seed, 2 * i as u64 + 1))?;
    Ok(data.with_provenance(targets.clone()))
}

/// One dataset per experiment of `fam`, each sampled from the network with
/// that experiment's targets randomized.
pub fn generate_bundle(
    bn: &BayesianNetwork,
    fam: &InterventionFamily,
    rows_per_dataset: usize,
    dirichlet_alpha: f64,
    seed: u64,
) -> Result<DatasetBundle, SimError> {
    fam.validate_against(bn.dag()).map_err(|_| SimError::ForeignTarget)?;
    let make = |(i, s): (usize, &VarSet)| bundle_member(bn, s, i, rows_per_dataset, dirichlet_alpha, seed);
    #[cfg(feature = "parallel")]
    let datasets: Result<Vec<Dataset>, SimError> = {
        use rayon::prelude::*;
        fam.sets().par_iter().enumerate().map(make).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let datasets: Result<Vec<Dataset>, SimError> = fam.sets().iter().enumerate().map(make).collect();
    Ok(DatasetBundle::new(datasets?)?)
}

/// Random DAG over `V0..V{n-1}`: a uniformly random variable order, then each
/// forward pair joined with probability `edge_prob`.
pub fn random_dag(n_nodes: usize, edge_prob: f64, seed: u64) -> Result<Dag, SimError> {
    random_dag_with(n_nodes, edge_prob, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn random_dag_with<R: Rng + ?Sized>(n_nodes: usize, edge_prob: f64, rng: &mut R) -> Result<Dag, SimError> {
    if !(0.0..=1.0).contains(&edge_prob) {
        return Err(SimError::EdgeProbability(edge_prob));
    }
    let names: Vec<String> = (0..n_nodes).map(|i| format!("V{i}")).collect();
    let vars = Arc::new(VarNames::new(&names)?);
    let mut perm: Vec<usize> = (0..n_nodes).collect();
    perm.shuffle(rng);
    let mut parents = vec![Vec::new(); n_nodes];
    for j in 0..n_nodes {
        for i in 0..j {
            if rng.random_bool(edge_prob) {
                parents[perm[j]].push(VarId(perm[i]));
            }
        }
    }
    Ok(Dag::from_parents(vars, parents)?)
}

/// Attaches Dirichlet(α) tables to `dag`, every variable with `cardinality`
/// states labelled `0..cardinality`.
pub fn random_cpts(dag: &Dag, cardinality: usize, dirichlet_alpha: f64, seed: u64) -> Result<BayesianNetwork, SimError> {
    random_cpts_with(dag, cardinality, dirichlet_alpha, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn random_cpts_with<R: Rng + ?Sized>(
    dag: &Dag,
    cardinality: usize,
    dirichlet_alpha: f64,
    rng: &mut R,
) -> Result<BayesianNetwork, SimError> {
    if cardinality < 2 {
        return Err(SimError::Cardinality(cardinality));
    }
    let labels: Vec<String> = (0..cardinality).map(|s| s.to_string()).collect();
    let states = vec![labels; dag.len()];
    let mut cpts = Vec::with_capacity(dag.len());
    for v in dag.vars().ids() {
        let parents = dag.parent_list(v).to_vec();
        let cards = vec![cardinality; parents.len()];
        let rows: usize = cards.iter().product();
        let mut probs = Vec::with_capacity(rows * cardinality);
        for _ in 0..rows {
            probs.extend(dirichlet_row(cardinality, dirichlet_alpha, rng)?);
        }
        let cpt = Cpt::new(parents, &cards, cardinality, probs).map_err(|msg| NetworkError::Shape {
            name: dag.name(v).to_string(),
            msg,
        })?;
        cpts.push(cpt);
    }
    Ok(BayesianNetwork::new(dag.clone(), states, cpts)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::parse_network;

    fn coin(p1: f64) -> BayesianNetwork {
        parse_network(&format!("VAR X 0 1\nCPT X\n{} {}\n", 1.0 - p1, p1)).unwrap()
    }

    #[test]
    fn empirical_frequency_matches_cpt() {
        let d = forward_sample(&coin(0.25), 100_000, 7).unwrap();
        let ones = d.column(VarId(0)).iter().filter(|&&s| s == 1).count();
        let f = ones as f64 / 100_000.0;
        assert!((f - 0.25).abs() < 0.01, "frequency {f}");
    }

    #[test]
    fn deterministic_tables_give_constant_rows() {
        let bn = parse_network(
            "VAR A 0 1\nVAR B 0 1 2\nPARENTS B A\nCPT A\n0 1\nCPT B\n1 0 0\n0 0 1\n",
        )
        .unwrap();
        let d = forward_sample(&bn, 50, 1).unwrap();
        assert!(d.column(VarId(0)).iter().all(|&s| s == 1));
        assert!(d.column(VarId(1)).iter().all(|&s| s == 2));
    }

    #[test]
    fn same_seed_same_data() {
        let bn = coin(0.4);
        assert_eq!(forward_sample(&bn, 500, 3).unwrap(), forward_sample(&bn, 500, 3).unwrap());
        assert_ne!(forward_sample(&bn, 500, 3).unwrap(), forward_sample(&bn, 500, 4).unwrap());
    }

    #[test]
    fn uninformative_dirichlet_mean_is_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 10_000;
        let mean: f64 = (0..draws).map(|_| dirichlet_row(2, 1.0, &mut rng).unwrap()[1]).sum::<f64>() / draws as f64;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
        assert!(matches!(dirichlet_row(2, 0.0, &mut rng), Err(SimError::NonPositiveAlpha(_))));
    }

    #[test]
    fn empty_targets_leave_network_unchanged() {
        let bn = coin(0.3);
        assert_eq!(randomize_manipulated_cpts(&bn, &VarSet::new(), 1.0, 5).unwrap(), bn);
        assert!(randomize_manipulated_cpts(&bn, &VarSet::new(), -1.0, 5).is_err());
    }

    #[test]
    fn randomized_graph_is_post_intervention_graph() {
        let dag = random_dag(6, 0.6, 2).unwrap();
        let bn = random_cpts(&dag, 2, 1.0, 2).unwrap();
        let targets: VarSet = [VarId(1), VarId(4)].into_iter().collect();
        let m = randomize_manipulated_cpts(&bn, &targets, 1.0, 9).unwrap();
        assert_eq!(*m.dag(), dag.intervene(&targets));
    }

    #[test]
    fn random_dag_extremes() {
        assert_eq!(random_dag(5, 0.0, 1).unwrap().edge_count(), 0);
        assert_eq!(random_dag(4, 1.0, 1).unwrap().edge_count(), 6);
        assert!(random_dag(4, 1.5, 1).is_err());
    }

    #[test]
    fn random_dags_are_acyclic() {
        for seed in 0..1000 {
            let d = random_dag(8, 0.25, seed).unwrap();
            assert_eq!(d.topological_order().unwrap().len(), 8);
        }
    }

    #[test]
    fn observational_bundle_reproducible() {
        let bn = random_cpts(&random_dag(4, 0.5, 8).unwrap(), 3, 1.0, 8).unwrap();
        let fam = InterventionFamily::observational(3).unwrap();
        let a = generate_bundle(&bn, &fam, 200, 1.0, 42).unwrap();
        let b = generate_bundle(&bn, &fam, 200, 1.0, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        assert_ne!(a.get(0), a.get(1));
        assert_eq!(a.provenance().unwrap(), vec![VarSet::new(); 3]);
    }
}
