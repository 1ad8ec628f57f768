//! Browser demo over `mimb-core`.
//!
//! Graphs are written one edge per line as `A -> B` (a left side may list
//! several parents, `A, B -> C`); a line with a bare name declares an
//! isolated node. Families are one experiment per line, names separated by
//! commas or spaces, with `-` for an experiment that manipulates nothing.
//! `#` starts a comment in both formats.
//!
//! Every exported function returns a JSON string. The plain functions
//! (`explore`, `compare_oracle`, `sample_and_discover`) carry the logic and
//! are what the native tests exercise; the `wasm_*` wrappers only convert the
//! error type.

use mimb_core::ci::{DataBackend, OracleBackend};
use mimb_core::discovery::{baseline, mimb, DiscoveryConfig};
use mimb_core::graph::{Dag, InterventionFamily, VarId, VarSet};
use mimb_core::metrics::{score, Score};
use mimb_core::sampling::{generate_bundle, random_cpts};
use mimb_core::theorem::{verify, VerificationReport};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

fn split_names(s: &str) -> impl Iterator<Item = &str> {
    s.split(|c: char| c == ',' || c.is_whitespace()).filter(|n| !n.is_empty())
}

pub fn parse_graph(text: &str) -> Result<Dag, String> {
    let mut names: Vec<String> = Vec::new();
    let mut edges: Vec<(String, String)> = Vec::new();
    let declare = |n: &str, names: &mut Vec<String>| {
        if !names.iter().any(|m| m == n) {
            names.push(n.to_string());
        }
    };
    for (i, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        match line.split_once("->") {
            Some((lhs, rhs)) => {
                let children: Vec<&str> = split_names(rhs).collect();
                let parents: Vec<&str> = split_names(lhs).collect();
                if parents.is_empty() || children.is_empty() {
                    return Err(format!("line {}: expected `A -> B`", i + 1));
                }
                for p in &parents {
                    declare(p, &mut names);
                    for c in &children {
                        declare(c, &mut names);
                        edges.push((p.to_string(), c.to_string()));
                    }
                }
            }
            None => split_names(line).for_each(|n| declare(n, &mut names)),
        }
    }
    if names.is_empty() {
        return Err("the graph has no variables".into());
    }
    Dag::new(&names, &edges).map_err(|e| e.to_string())
}

pub fn parse_family(dag: &Dag, text: &str) -> Result<InterventionFamily, String> {
    let sets: Vec<Vec<&str>> = text
        .lines()
        .map(strip_comment)
        .filter(|l| !l.is_empty())
        .map(|l| split_names(l).filter(|n| *n != "-").collect())
        .collect();
    if sets.is_empty() {
        return Err("the family needs at least one experiment".into());
    }
    InterventionFamily::from_names(dag, &sets).map_err(|e| e.to_string())
}

fn setup(graph: &str, family: &str, target: &str) -> Result<(Dag, InterventionFamily, VarId), String> {
    let dag = parse_graph(graph)?;
    let fam = parse_family(&dag, family)?;
    let t = dag.id(target.trim()).map_err(|e| e.to_string())?;
    Ok((dag, fam, t))
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Experiment {
    manipulated: Vec<String>,
    edges: Vec<(String, String)>,
    removed_edges: Vec<(String, String)>,
    mb: Vec<String>,
}

#[derive(Serialize)]
struct Exploration {
    nodes: Vec<String>,
    edges: Vec<(String, String)>,
    experiments: Vec<Experiment>,
    report: VerificationReport,
}

/// Post-intervention graph and blanket of `target` in each experiment, with
/// the predicted and actual union/intersection of those blankets.
pub fn explore(graph: &str, family: &str, target: &str) -> Result<String, String> {
    let (dag, fam, t) = setup(graph, family, target)?;
    let named = |d: &Dag| -> Vec<(String, String)> {
        d.edges().map(|(a, b)| (d.name(a).to_string(), d.name(b).to_string())).collect()
    };
    let experiments = fam
        .sets()
        .iter()
        .zip(fam.post_intervention_dags(&dag))
        .map(|(set, post)| Experiment {
            manipulated: dag.vars().sorted_names(set),
            removed_edges: dag
                .edges()
                .filter(|&(a, b)| !post.has_edge(a, b))
                .map(|(a, b)| (dag.name(a).to_string(), dag.name(b).to_string()))
                .collect(),
            edges: named(&post),
            mb: dag.vars().sorted_names(&post.markov_blanket(t)),
        })
        .collect();
    to_json(&Exploration {
        nodes: dag.vars().names().to_vec(),
        edges: named(&dag),
        experiments,
        report: verify(&dag, t, &fam),
    })
}

#[derive(Serialize)]
struct Side {
    mb: Vec<String>,
    pa: Vec<String>,
    n_tests: u64,
    tests_per_dataset: Vec<u64>,
    score: Score,
}

#[derive(Serialize)]
struct Comparison {
    truth_mb: Vec<String>,
    truth_pa: Vec<String>,
    mimb: Side,
    baseline: Side,
}

fn compare(
    backend: &dyn mimb_core::ci::CiBackend,
    dag: &Dag,
    t: VarId,
    cfg: &DiscoveryConfig,
) -> Comparison {
    let names = |s: &VarSet| dag.vars().sorted_names(s);
    let truth = dag.markov_blanket(t);
    let m = mimb(backend, t, dag.len(), cfg);
    let b = baseline(backend, t, dag.len(), cfg);
    Comparison {
        truth_mb: names(&truth),
        truth_pa: names(&dag.parents(t)),
        mimb: Side {
            mb: names(&m.mimb_mb),
            pa: names(&m.mimb_pa),
            n_tests: m.n_tests,
            tests_per_dataset: m.tests_per_dataset,
            score: score(&m.mimb_mb, &truth),
        },
        baseline: Side {
            mb: names(&b.base_mb),
            pa: names(&b.base_pa),
            n_tests: b.n_tests,
            tests_per_dataset: b.tests_per_dataset,
            score: score(&b.base_mb, &truth),
        },
    }
}

/// MIMB and the per-experiment baseline with exact (graphical) tests.
pub fn compare_oracle(graph: &str, family: &str, target: &str, max_cond: usize, symmetry: bool) -> Result<String, String> {
    let (dag, fam, t) = setup(graph, family, target)?;
    let cfg = DiscoveryConfig::default().with_max_cond(max_cond).with_symmetry(symmetry);
    to_json(&compare(&OracleBackend::new(&dag, &fam), &dag, t, &cfg))
}

/// Draws binary tables for the graph, samples every experiment and runs both
/// algorithms with G² tests.
pub fn sample_and_discover(
    graph: &str,
    family: &str,
    target: &str,
    rows: usize,
    alpha: f64,
    seed: u64,
) -> Result<String, String> {
    let (dag, fam, t) = setup(graph, family, target)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(format!("alpha must lie in (0, 1), got {alpha}"));
    }
    let bn = random_cpts(&dag, 2, 1.0, seed).map_err(|e| e.to_string())?;
    let bundle = generate_bundle(&bn, &fam, rows, 1.0, seed.wrapping_add(1)).map_err(|e| e.to_string())?;
    let cfg = DiscoveryConfig::default().with_alpha(alpha);
    to_json(&compare(&DataBackend::new(&bundle), &dag, t, &cfg))
}

#[wasm_bindgen(js_name = explore)]
pub fn wasm_explore(graph: &str, family: &str, target: &str) -> Result<String, JsError> {
    explore(graph, family, target).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = compareOracle)]
pub fn wasm_compare_oracle(graph: &str, family: &str, target: &str, max_cond: usize, symmetry: bool) -> Result<String, JsError> {
    compare_oracle(graph, family, target, max_cond, symmetry).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = sampleAndDiscover)]
pub fn wasm_sample_and_discover(
    graph: &str,
    family: &str,
    target: &str,
    rows: usize,
    alpha: f64,
    seed: u32,
) -> Result<String, JsError> {
    sample_and_discover(graph, family, target, rows, alpha, u64::from(seed)).map_err(|e| JsError::new(&e))
}
