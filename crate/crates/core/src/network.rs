//! Discrete Bayesian networks and the line-oriented network file format.
//!
//! ```text
//! VAR <name> <state1> <state2> [...]
//! PARENTS <name> [<p1> <p2> ...]
//! CPT <name>
//! <one row per parent configuration>
//! ```
//!
//! Parent configurations enumerate with the last listed parent varying
//! fastest. Blank lines and `#` comments are ignored.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::graph::{Dag, GraphError, VarId, VarNames, VarSet};

const ROW_SUM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown variable `{name}`")]
    UnknownVariable { line: usize, name: String },
    #[error("line {line}: duplicate {what} for `{name}`")]
    Duplicate { line: usize, what: &'static str, name: String },
    #[error("line {line}: CPT for `{name}` has {found} rows, expected {expected}")]
    RowCount { line: usize, name: String, found: usize, expected: usize },
    #[error("line {line}: row has {found} entries, expected {expected}")]
    ColumnCount { line: usize, found: usize, expected: usize },
    #[error("row sum {sum} ≠ 1 at line {line}")]
    RowSum { line: usize, sum: f64 },
    #[error("line {line}: invalid probability `{token}`")]
    BadProbability { line: usize, token: String },
    #[error("variable `{0}` has no CPT")]
    MissingCpt(String),
    #[error("variable `{name}` needs at least two states, found {found}")]
    Cardinality { name: String, found: usize },
    #[error("CPT shape for `{name}`: {msg}")]
    Shape { name: String, msg: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Conditional table `P(v | parents)`, stored row-major with one row per
/// parent configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    parents: Vec<VarId>,
    strides: Vec<usize>,
    card: usize,
    probs: Vec<f64>,
}

impl Cpt {
    /// `parent_cards[i]` is the cardinality of `parents[i]`; `probs` holds
    /// `Π parent_cards` rows of `card` entries each.
    pub fn new(parents: Vec<VarId>, parent_cards: &[usize], card: usize, probs: Vec<f64>) -> Result<Self, String> {
        if parents.len() != parent_cards.len() {
            return Err("parent cardinalities do not match parent list".into());
        }
        let mut strides = vec![1; parents.len()];
        for i in (0..parents.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * parent_cards[i + 1];
        }
        let rows: usize = parent_cards.iter().product();
        if probs.len() != rows * card {
            return Err(format!("expected {} entries, found {}", rows * card, probs.len()));
        }
        for (r, row) in probs.chunks(card).enumerate() {
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(format!("row {r} has a negative or non-finite entry"));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(format!("row {r} sums to {s}"));
            }
        }
        let mut cpt = Self { parents, strides, card, probs };
        cpt.normalize();
        Ok(cpt)
    }

    /// A parent-free table with a single row.
    pub fn root(row: Vec<f64>) -> Result<Self, String> {
        let card = row.len();
        Self::new(Vec::new(), &[], card, row)
    }

    fn normalize(&mut self) {
        for row in self.probs.chunks_mut(self.card) {
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= s);
        }
    }

    /// Parents in table order (the order rows enumerate them).
    pub fn parents(&self) -> &[VarId] {
        &self.parents
    }

    pub fn card(&self) -> usize {
        self.card
    }

    pub fn n_rows(&self) -> usize {
        self.probs.len() / self.card
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.probs[r * self.card..(r + 1) * self.card]
    }

    /// Row index of the parent configuration read from a full assignment.
    #[inline]
    pub fn row_index(&self, assignment: impl Fn(VarId) -> usize) -> usize {
        self.parents
            .iter()
            .zip(&self.strides)
            .map(|(&p, &s)| assignment(p) * s)
            .sum()
    }

    pub fn prob(&self, row: usize, state: usize) -> f64 {
        self.probs[row * self.card + state]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BayesianNetwork {
    dag: Dag,
    states: Vec<Vec<String>>,
    cpts: Vec<Cpt>,
}

impl BayesianNetwork {
    /// Assembles a network; each CPT's parent set must match the DAG.
    pub fn new(dag: Dag, states: Vec<Vec<String>>, cpts: Vec<Cpt>) -> Result<Self, NetworkError> {
        let n = dag.len();
        if states.len() != n || cpts.len() != n {
            return Err(NetworkError::Shape {
                name: String::from("<network>"),
                msg: format!("{n} variables but {} state lists and {} tables", states.len(), cpts.len()),
            });
        }
        for v in dag.vars().ids() {
            let name = dag.name(v).to_string();
            if states[v.0].len() < 2 {
                return Err(NetworkError::Cardinality { name, found: states[v.0].len() });
            }
            let cpt = &cpts[v.0];
            let mut listed: Vec<VarId> = cpt.parents.clone();
            listed.sort_unstable();
            if listed != dag.parent_list(v) {
                return Err(NetworkError::Shape { name, msg: "parents differ from graph".into() });
            }
            if cpt.card != states[v.0].len() {
                return Err(NetworkError::Shape { name, msg: "column count differs from cardinality".into() });
            }
            let rows: usize = cpt.parents.iter().map(|p| states[p.0].len()).product();
            if cpt.n_rows() != rows {
                return Err(NetworkError::Shape { name, msg: format!("{} rows, expected {rows}", cpt.n_rows()) });
            }
        }
        Ok(Self { dag, states, cpts })
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn vars(&self) -> &Arc<VarNames> {
        self.dag.vars()
    }

    pub fn len(&self) -> usize {
        self.dag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dag.is_empty()
    }

    pub fn states(&self, v: VarId) -> &[String] {
        &self.states[v.0]
    }

    pub fn all_states(&self) -> &[Vec<String>] {
        &self.states
    }

    pub fn card(&self, v: VarId) -> usize {
        self.states[v.0].len()
    }

    pub fn cpt(&self, v: VarId) -> &Cpt {
        &self.cpts[v.0]
    }

    /// Copy with the tables of `targets` replaced; every replacement must be
    /// parent-free. The graph loses the in-edges of `targets`.
    pub fn with_root_tables(&self, replacements: Vec<(VarId, Vec<f64>)>) -> Result<Self, NetworkError> {
        let targets: VarSet = replacements.iter().map(|(v, _)| *v).collect();
        let dag = self.dag.intervene(&targets);
        let mut cpts = self.cpts.clone();
        for (v, row) in replacements {
            cpts[v.0] = Cpt::root(row).map_err(|msg| NetworkError::Shape { name: self.dag.name(v).into(), msg })?;
        }
        Self::new(dag, self.states.clone(), cpts)
    }

    /// Joint probability of a complete assignment (state index per variable).
    pub fn joint_probability(&self, assignment: &[usize]) -> f64 {
        self.dag
            .vars()
            .ids()
            .map(|v| {
                let cpt = &self.cpts[v.0];
                cpt.prob(cpt.row_index(|p| assignment[p.0]), assignment[v.0])
            })
            .product()
    }
}

struct VarDecl {
    states: Vec<String>,
}

struct CptDecl {
    line: usize,
    rows: Vec<(usize, Vec<f64>)>,
}

/// Parses the network text format. Declarations may appear in any order.
pub fn parse_network(text: &str) -> Result<BayesianNetwork, NetworkError> {
    let mut order: Vec<String> = Vec::new();
    let mut vars: HashMap<String, VarDecl> = HashMap::new();
    let mut parents: HashMap<String, (usize, Vec<String>)> = HashMap::new();
    let mut cpts: HashMap<String, CptDecl> = HashMap::new();
    let mut open_cpt: Option<String> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut tokens = content.split_whitespace();
        let Some(head) = tokens.next() else { continue };
        match head {
            "VAR" => {
                open_cpt = None;
                let name = tokens
                    .next()
                    .ok_or_else(|| NetworkError::Syntax { line, msg: "VAR needs a name".into() })?
                    .to_string();
                let states: Vec<String> = tokens.map(str::to_string).collect();
                if states.len() < 2 {
                    return Err(NetworkError::Syntax {
                        line,
                        msg: format!("variable `{name}` needs at least two states"),
                    });
                }
                let mut seen = states.clone();
                seen.sort();
                seen.dedup();
                if seen.len() != states.len() {
                    return Err(NetworkError::Duplicate { line, what: "state label", name });
                }
                if vars.contains_key(&name) {
                    return Err(NetworkError::Duplicate { line, what: "VAR", name });
                }
                order.push(name.clone());
                vars.insert(name, VarDecl { states });
            }
            "PARENTS" => {
                open_cpt = None;
                let name = tokens
                    .next()
                    .ok_or_else(|| NetworkError::Syntax { line, msg: "PARENTS needs a name".into() })?
                    .to_string();
                let ps: Vec<String> = tokens.map(str::to_string).collect();
                if parents.contains_key(&name) {
                    return Err(NetworkError::Duplicate { line, what: "PARENTS", name });
                }
                parents.insert(name, (line, ps));
            }
            "CPT" => {
                let name = tokens
                    .next()
                    .ok_or_else(|| NetworkError::Syntax { line, msg: "CPT needs a name".into() })?
                    .to_string();
                if tokens.next().is_some() {
                    return Err(NetworkError::Syntax { line, msg: "unexpected tokens after CPT name".into() });
                }
                if cpts.contains_key(&name) {
                    return Err(NetworkError::Duplicate { line, what: "CPT", name });
                }
                cpts.insert(name.clone(), CptDecl { line, rows: Vec::new() });
                open_cpt = Some(name);
            }
            _ => {
                let Some(name) = &open_cpt else {
                    return Err(NetworkError::Syntax { line, msg: format!("unexpected `{head}` outside a CPT block") });
                };
                let row = std::iter::once(head)
                    .chain(tokens)
                    .map(|t| match t.parse::<f64>() {
                        Ok(p) if p.is_finite() && p >= 0.0 => Ok(p),
                        _ => Err(NetworkError::BadProbability { line, token: t.to_string() }),
                    })
                    .collect::<Result<Vec<f64>, _>>()?;
                cpts.get_mut(name).expect("open block registered").rows.push((line, row));
            }
        }
    }

    let names = Arc::new(VarNames::new(&order)?);
    for (name, (line, ps)) in &parents {
        if !vars.contains_key(name) {
            return Err(NetworkError::UnknownVariable { line: *line, name: name.clone() });
        }
        let mut seen = Vec::with_capacity(ps.len());
        for p in ps {
            if !vars.contains_key(p) {
                return Err(NetworkError::UnknownVariable { line: *line, name: p.clone() });
            }
            if seen.contains(&p) {
                return Err(NetworkError::Duplicate { line: *line, what: "parent", name: p.clone() });
            }
            seen.push(p);
        }
    }
    for (name, decl) in &cpts {
        if !vars.contains_key(name) {
            return Err(NetworkError::UnknownVariable { line: decl.line, name: name.clone() });
        }
    }

    let states: Vec<Vec<String>> = order.iter().map(|n| vars[n].states.clone()).collect();
    let parent_ids: Vec<Vec<VarId>> = order
        .iter()
        .map(|n| {
            parents
                .get(n)
                .map(|(_, ps)| ps.iter().map(|p| names.id(p).expect("checked above")).collect())
                .unwrap_or_default()
        })
        .collect();

    let mut tables = Vec::with_capacity(order.len());
    for (i, name) in order.iter().enumerate() {
        let decl = cpts.get(name).ok_or_else(|| NetworkError::MissingCpt(name.clone()))?;
        let card = states[i].len();
        let cards: Vec<usize> = parent_ids[i].iter().map(|p| states[p.0].len()).collect();
        let expected: usize = cards.iter().product();
        if decl.rows.len() != expected {
            return Err(NetworkError::RowCount {
                line: decl.line,
                name: name.clone(),
                found: decl.rows.len(),
                expected,
            });
        }
        let mut flat = Vec::with_capacity(expected * card);
        for (line, row) in &decl.rows {
            if row.len() != card {
                return Err(NetworkError::ColumnCount { line: *line, found: row.len(), expected: card });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(NetworkError::RowSum { line: *line, sum: (sum * 1e9).round() / 1e9 });
            }
            flat.extend_from_slice(row);
        }
        let cpt = Cpt::new(parent_ids[i].clone(), &cards, card, flat)
            .map_err(|msg| NetworkError::Shape { name: name.clone(), msg })?;
        tables.push(cpt);
    }

    let dag = Dag::from_parents(names, parent_ids)?;
    BayesianNetwork::new(dag, states, tables)
}

/// Serializes a network in the text format accepted by [`parse_network`].
pub fn write_network(bn: &BayesianNetwork) -> String {
    let mut out = String::new();
    for v in bn.vars().ids() {
        let _ = writeln!(out, "VAR {} {}", bn.dag().name(v), bn.states(v).join(" "));
    }
    for v in bn.vars().ids() {
        let cpt = bn.cpt(v);
        out.push('\n');
        if !cpt.parents().is_empty() {
            let ps: Vec<&str> = cpt.parents().iter().map(|&p| bn.dag().name(p)).collect();
            let _ = writeln!(out, "PARENTS {} {}", bn.dag().name(v), ps.join(" "));
        }
        let _ = writeln!(out, "CPT {}", bn.dag().name(v));
        for r in 0..cpt.n_rows() {
            let row: Vec<String> = cpt.row(r).iter().map(|p| format!("{p}")).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO: &str = "\
# A -> B
VAR A a0 a1
VAR B b0 b1
PARENTS B A
CPT A
0.3 0.7
CPT B
0.9 0.1
0.2 0.8
";

    #[test]
    fn parses_two_variable_network() {
        let bn = parse_network(TWO).unwrap();
        assert_eq!(bn.dag().edge_count(), 1);
        let b = bn.dag().id("B").unwrap();
        assert_eq!(bn.cpt(b).row(1), &[0.2, 0.8]);
        assert_eq!(bn.states(b), ["b0", "b1"]);
    }

    #[test]
    fn last_parent_varies_fastest() {
        let text = "\
VAR A 0 1
VAR B 0 1 2
VAR C 0 1
PARENTS C A B
CPT A
0.5 0.5
CPT B
0.2 0.3 0.5
CPT C
1 0
0.9 0.1
0.8 0.2
0.7 0.3
0.6 0.4
0.5 0.5
";
        let bn = parse_network(text).unwrap();
        let c = bn.dag().id("C").unwrap();
        let cpt = bn.cpt(c);
        // A=1, B=1 -> row 1*3 + 1 = 4
        let assignment = [1usize, 1, 0];
        let r = cpt.row_index(|p| assignment[p.0]);
        assert_eq!(r, 4);
        assert_eq!(cpt.row(r), &[0.6, 0.4]);
    }

    #[test]
    fn row_sum_error_names_line() {
        let bad = TWO.replace("0.2 0.8", "0.2 0.7");
        let err = parse_network(&bad).unwrap_err();
        assert_eq!(err.to_string(), "row sum 0.9 ≠ 1 at line 9");
    }

    #[test]
    fn structural_errors() {
        let unknown = TWO.replace("PARENTS B A", "PARENTS B Z");
        assert!(matches!(parse_network(&unknown), Err(NetworkError::UnknownVariable { line: 4, .. })));
        let short = TWO.replace("0.2 0.8\n", "");
        assert!(matches!(parse_network(&short), Err(NetworkError::RowCount { found: 1, expected: 2, .. })));
        let dup = format!("{TWO}VAR A x y\n");
        assert!(matches!(parse_network(&dup), Err(NetworkError::Duplicate { what: "VAR", .. })));
        let dup_cpt = format!("{TWO}CPT A\n0.5 0.5\n");
        assert!(matches!(parse_network(&dup_cpt), Err(NetworkError::Duplicate { what: "CPT", .. })));
        let missing = "VAR A 0 1\n";
        assert!(matches!(parse_network(missing), Err(NetworkError::MissingCpt(_))));
        let cols = TWO.replace("0.3 0.7", "0.3 0.3 0.4");
        assert!(matches!(parse_network(&cols), Err(NetworkError::ColumnCount { line: 6, .. })));
        let neg = TWO.replace("0.3 0.7", "-0.3 1.3");
        assert!(matches!(parse_network(&neg), Err(NetworkError::BadProbability { .. })));
        let cyc = "VAR A 0 1\nVAR B 0 1\nPARENTS A B\nPARENTS B A\nCPT A\n1 0\n0 1\nCPT B\n1 0\n0 1\n";
        assert!(matches!(parse_network(cyc), Err(NetworkError::Graph(GraphError::Cycle(_)))));
    }

    #[test]
    fn write_then_parse_is_identity() {
        let bn = parse_network(TWO).unwrap();
        let again = parse_network(&write_network(&bn)).unwrap();
        assert_eq!(bn, again);
    }

    #[test]
    fn joint_sums_to_one() {
        let bn = parse_network(TWO).unwrap();
        let total: f64 = [[0, 0], [0, 1], [1, 0], [1, 1]]
            .iter()
            .map(|a| bn.joint_probability(a))
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((bn.joint_probability(&[1, 1]) - 0.7 * 0.8).abs() < 1e-12);
    }
}
