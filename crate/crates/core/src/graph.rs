//! Directed acyclic graphs over named variables.
//!
//! Variables are identified by name at the API boundary and by a dense
//! [`VarId`] (declaration order) internally. A [`Dag`] is immutable once
//! built; [`Dag::intervene`] returns the post-intervention copy.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense index of a variable in declaration order.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VarId(pub usize);

impl VarId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

pub type VarSet = BTreeSet<VarId>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{0}` declared twice")]
    DuplicateVariable(String),
    #[error("self edge on `{0}`")]
    SelfLoop(String),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(String, String),
    #[error("edge set contains a directed cycle through `{0}`")]
    Cycle(String),
    #[error("query endpoints must differ (got `{0}` twice)")]
    SameEndpoints(String),
    #[error("conditioning set contains query endpoint `{0}`")]
    EndpointConditioned(String),
    #[error("an intervention family needs at least one experiment")]
    EmptyFamily,
}

/// Ordered variable names with a reverse lookup table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarNames {
    names: Vec<String>,
    index: HashMap<String, VarId>,
}

impl VarNames {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self, GraphError> {
        let mut index = HashMap::with_capacity(names.len());
        let mut out = Vec::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            let n = n.as_ref().to_string();
            if index.insert(n.clone(), VarId(i)).is_some() {
                return Err(GraphError::DuplicateVariable(n));
            }
            out.push(n);
        }
        Ok(Self { names: out, index })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, v: VarId) -> &str {
        &self.names[v.0]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn id(&self, name: &str) -> Result<VarId, GraphError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| GraphError::UnknownVariable(name.to_string()))
    }

    pub fn set<S: AsRef<str>>(&self, names: &[S]) -> Result<VarSet, GraphError> {
        names.iter().map(|n| self.id(n.as_ref())).collect()
    }

    /// Names of a set, in lexicographic order.
    pub fn sorted_names<'a, I: IntoIterator<Item = &'a VarId>>(&self, ids: I) -> Vec<String> {
        let mut v: Vec<String> = ids.into_iter().map(|&i| self.name(i).to_string()).collect();
        v.sort();
        v
    }

    pub fn ids(&self) -> impl Iterator<Item = VarId> {
        (0..self.names.len()).map(VarId)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    vars: Arc<VarNames>,
    parents: Vec<Vec<VarId>>,
    children: Vec<Vec<VarId>>,
}

impl Dag {
    /// Builds a DAG from variable names and `(parent, child)` edges.
    pub fn new<S: AsRef<str>, E: AsRef<str>>(
        names: &[S],
        edges: &[(E, E)],
    ) -> Result<Self, GraphError> {
        let vars = Arc::new(VarNames::new(names)?);
        let mut parents = vec![Vec::new(); vars.len()];
        for (a, b) in edges {
            let pa = vars.id(a.as_ref())?;
            let ch = vars.id(b.as_ref())?;
            if pa == ch {
                return Err(GraphError::SelfLoop(a.as_ref().to_string()));
            }
            if parents[ch.0].contains(&pa) {
                return Err(GraphError::DuplicateEdge(
                    a.as_ref().to_string(),
                    b.as_ref().to_string(),
                ));
            }
            parents[ch.0].push(pa);
        }
        Self::from_parents(vars, parents)
    }

    /// Builds a DAG from per-variable parent lists over an existing name table.
    pub fn from_parents(vars: Arc<VarNames>, mut parents: Vec<Vec<VarId>>) -> Result<Self, GraphError> {
        assert_eq!(vars.len(), parents.len(), "one parent list per variable");
        let mut children = vec![Vec::new(); vars.len()];
        for (c, ps) in parents.iter_mut().enumerate() {
            ps.sort_unstable();
            for w in ps.windows(2) {
                if w[0] == w[1] {
                    return Err(GraphError::DuplicateEdge(
                        vars.name(w[0]).to_string(),
                        vars.name(VarId(c)).to_string(),
                    ));
                }
            }
            for &p in ps.iter() {
                if p.0 == c {
                    return Err(GraphError::SelfLoop(vars.name(p).to_string()));
                }
                children[p.0].push(VarId(c));
            }
        }
        for ch in &mut children {
            ch.sort_unstable();
        }
        let dag = Self { vars, parents, children };
        dag.topological_order()?;
        Ok(dag)
    }

    pub fn vars(&self) -> &Arc<VarNames> {
        &self.vars
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn id(&self, name: &str) -> Result<VarId, GraphError> {
        self.vars.id(name)
    }

    pub fn name(&self, v: VarId) -> &str {
        self.vars.name(v)
    }

    pub fn set<S: AsRef<str>>(&self, names: &[S]) -> Result<VarSet, GraphError> {
        self.vars.set(names)
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (VarId, VarId)> + '_ {
        self.parents
            .iter()
            .enumerate()
            .flat_map(|(c, ps)| ps.iter().map(move |&p| (p, VarId(c))))
    }

    pub fn has_edge(&self, from: VarId, to: VarId) -> bool {
        self.parents[to.0].binary_search(&from).is_ok()
    }

    pub fn adjacent(&self, a: VarId, b: VarId) -> bool {
        self.has_edge(a, b) || self.has_edge(b, a)
    }

    pub fn parent_list(&self, v: VarId) -> &[VarId] {
        &self.parents[v.0]
    }

    pub fn child_list(&self, v: VarId) -> &[VarId] {
        &self.children[v.0]
    }

    /// Kahn's algorithm; ties resolved by declaration order.
    pub fn topological_order(&self) -> Result<Vec<VarId>, GraphError> {
        let n = self.len();
        let mut indeg: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<VarId> = (0..n).filter(|&i| indeg[i] == 0).map(VarId).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &c in &self.children[v.0] {
                indeg[c.0] -= 1;
                if indeg[c.0] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() != n {
            let stuck = (0..n).find(|&i| indeg[i] > 0).unwrap_or(0);
            return Err(GraphError::Cycle(self.vars.name(VarId(stuck)).to_string()));
        }
        Ok(order)
    }

    pub fn parents(&self, v: VarId) -> VarSet {
        self.parents[v.0].iter().copied().collect()
    }

    pub fn children(&self, v: VarId) -> VarSet {
        self.children[v.0].iter().copied().collect()
    }

    pub fn parents_and_children(&self, v: VarId) -> VarSet {
        let mut s = self.parents(v);
        s.extend(self.children[v.0].iter().copied());
        s
    }

    /// Every other parent of a child of `v`. This includes co-parents that
    /// are themselves parents or children of `v`.
    pub fn spouses(&self, v: VarId) -> VarSet {
        self.children[v.0]
            .iter()
            .flat_map(|c| self.parents[c.0].iter().copied())
            .filter(|&p| p != v)
            .collect()
    }

    /// Parents, children and spouses of `v`; each member reported once.
    pub fn markov_blanket(&self, v: VarId) -> VarSet {
        let mut mb = self.parents_and_children(v);
        mb.extend(self.spouses(v));
        mb
    }

    /// `ch(v) ∪ sp(v)`: the blanket `v` keeps once its own in-edges are cut.
    pub fn children_and_spouses(&self, v: VarId) -> VarSet {
        let mut s = self.children(v);
        s.extend(self.spouses(v));
        s
    }

    /// Strict descendants of `v`.
    pub fn descendants(&self, v: VarId) -> VarSet {
        self.reach(std::iter::once(v), |u| &self.children[u.0], false)
    }

    /// Strict ancestors of `v`.
    pub fn ancestors(&self, v: VarId) -> VarSet {
        self.reach(std::iter::once(v), |u| &self.parents[u.0], false)
    }

    /// Everything that is neither `v` nor a descendant of `v`.
    pub fn non_descendants(&self, v: VarId) -> VarSet {
        let desc = self.descendants(v);
        self.vars.ids().filter(|u| *u != v && !desc.contains(u)).collect()
    }

    fn reach<'a, F>(&'a self, seeds: impl Iterator<Item = VarId>, next: F, include_seeds: bool) -> VarSet
    where
        F: Fn(VarId) -> &'a [VarId],
    {
        let mut seen = vec![false; self.len()];
        let mut stack: Vec<VarId> = Vec::new();
        let mut out = VarSet::new();
        for s in seeds {
            if include_seeds && !seen[s.0] {
                seen[s.0] = true;
                out.insert(s);
            }
            stack.push(s);
        }
        while let Some(u) = stack.pop() {
            for &w in next(u) {
                if !seen[w.0] {
                    seen[w.0] = true;
                    out.insert(w);
                    stack.push(w);
                }
            }
        }
        out
    }

    /// Post-intervention graph: every edge into a member of `targets` is removed.
    pub fn intervene(&self, targets: &VarSet) -> Dag {
        let parents = self
            .parents
            .iter()
            .enumerate()
            .map(|(c, ps)| if targets.contains(&VarId(c)) { Vec::new() } else { ps.clone() })
            .collect::<Vec<_>>();
        let mut children = vec![Vec::new(); self.len()];
        for (c, ps) in parents.iter().enumerate() {
            for &p in ps {
                children[p.0].push(VarId(c));
            }
        }
        Dag { vars: Arc::clone(&self.vars), parents, children }
    }

    fn check_query(&self, x: VarId, y: VarId, z: &VarSet) -> Result<(), GraphError> {
        for v in [x, y].iter().chain(z.iter()) {
            if v.0 >= self.len() {
                return Err(GraphError::UnknownVariable(v.to_string()));
            }
        }
        if x == y {
            return Err(GraphError::SameEndpoints(self.name(x).to_string()));
        }
        for v in [x, y] {
            if z.contains(&v) {
                return Err(GraphError::EndpointConditioned(self.name(v).to_string()));
            }
        }
        Ok(())
    }

    /// d-separation of `x` and `y` given `z`, decided by a single reachability
    /// sweep over (node, direction) states.
    pub fn is_d_separated(&self, x: VarId, y: VarId, z: &VarSet) -> Result<bool, GraphError> {
        self.check_query(x, y, z)?;
        let n = self.len();
        let mut in_z = vec![false; n];
        for v in z {
            in_z[v.0] = true;
        }
        // Colliders are open iff they are in An(z) ∪ z.
        let anc_z = self.reach(z.iter().copied(), |u| &self.parents[u.0], true);
        let mut opens = vec![false; n];
        for v in &anc_z {
            opens[v.0] = true;
        }

        // visited[v][0]: arrived from a child (moving up); [1]: from a parent.
        let mut visited = vec![[false; 2]; n];
        let mut queue = VecDeque::new();
        queue.push_back((x, 0usize));
        while let Some((v, dir)) = queue.pop_front() {
            if visited[v.0][dir] {
                continue;
            }
            visited[v.0][dir] = true;
            if v == y {
                return Ok(false);
            }
            if dir == 0 {
                if !in_z[v.0] {
                    queue.extend(self.parents[v.0].iter().map(|&p| (p, 0)));
                    queue.extend(self.children[v.0].iter().map(|&c| (c, 1)));
                }
            } else {
                if !in_z[v.0] {
                    queue.extend(self.children[v.0].iter().map(|&c| (c, 1)));
                }
                if opens[v.0] {
                    queue.extend(self.parents[v.0].iter().map(|&p| (p, 0)));
                }
            }
        }
        Ok(true)
    }

    /// Reference d-separation: enumerates every simple undirected path between
    /// `x` and `y` and checks each one against the blocking rules directly.
    /// Exponential; meant for cross-checking on small graphs.
    pub fn brute_force_d_separated(&self, x: VarId, y: VarId, z: &VarSet) -> Result<bool, GraphError> {
        self.check_query(x, y, z)?;
        let mut on_path = vec![false; self.len()];
        let mut path = vec![x];
        on_path[x.0] = true;
        Ok(!self.open_path_from(&mut path, &mut on_path, y, z))
    }

    fn open_path_from(&self, path: &mut Vec<VarId>, on_path: &mut [bool], y: VarId, z: &VarSet) -> bool {
        let last = *path.last().expect("path never empty");
        if last == y {
            return self.path_is_open(path, z);
        }
        let neighbours: Vec<VarId> = self.parents[last.0]
            .iter()
            .chain(self.children[last.0].iter())
            .copied()
            .collect();
        for w in neighbours {
            if on_path[w.0] {
                continue;
            }
            on_path[w.0] = true;
            path.push(w);
            let open = self.open_path_from(path, on_path, y, z);
            path.pop();
            on_path[w.0] = false;
            if open {
                return true;
            }
        }
        false
    }

    fn path_is_open(&self, path: &[VarId], z: &VarSet) -> bool {
        for w in path.windows(3) {
            let (a, m, b) = (w[0], w[1], w[2]);
            let collider = self.has_edge(a, m) && self.has_edge(b, m);
            if collider {
                let activated = z.contains(&m) || self.descendants(m).iter().any(|d| z.contains(d));
                if !activated {
                    return false;
                }
            } else if z.contains(&m) {
                return false;
            }
        }
        true
    }
}

/// The manipulated-variable sets of `n` experiments, one per dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterventionFamily {
    sets: Vec<VarSet>,
}

impl InterventionFamily {
    pub fn new(sets: Vec<VarSet>) -> Result<Self, GraphError> {
        if sets.is_empty() {
            return Err(GraphError::EmptyFamily);
        }
        Ok(Self { sets })
    }

    /// Family over `dag` given by variable names.
    pub fn from_names<S: AsRef<str>>(dag: &Dag, sets: &[Vec<S>]) -> Result<Self, GraphError> {
        let sets = sets.iter().map(|s| dag.set(s)).collect::<Result<Vec<_>, _>>()?;
        Self::new(sets)
    }

    /// `n` observational experiments.
    pub fn observational(n: usize) -> Result<Self, GraphError> {
        Self::new(vec![VarSet::new(); n])
    }

    pub fn sets(&self) -> &[VarSet] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn union(&self) -> VarSet {
        self.sets.iter().flatten().copied().collect()
    }

    /// Number of experiments that manipulate `t`.
    pub fn zeta(&self, t: VarId) -> usize {
        self.sets.iter().filter(|s| s.contains(&t)).count()
    }

    /// Every manipulated variable is left alone by at least one experiment.
    pub fn is_conservative(&self) -> bool {
        self.union()
            .iter()
            .all(|v| self.sets.iter().any(|s| !s.contains(v)))
    }

    /// Conservativity of the family with `t` removed from every set.
    pub fn is_conservative_without(&self, t: VarId) -> bool {
        self.union()
            .iter()
            .filter(|&&v| v != t)
            .all(|v| self.sets.iter().any(|s| !s.contains(v)))
    }

    pub fn with_appended(&self, set: VarSet) -> Self {
        let mut sets = self.sets.clone();
        sets.push(set);
        Self { sets }
    }

    /// Post-intervention graph of every experiment.
    pub fn post_intervention_dags(&self, dag: &Dag) -> Vec<Dag> {
        self.sets.iter().map(|s| dag.intervene(s)).collect()
    }

    pub fn validate_against(&self, dag: &Dag) -> Result<(), GraphError> {
        for v in self.sets.iter().flatten() {
            if v.0 >= dag.len() {
                return Err(GraphError::UnknownVariable(v.to_string()));
            }
        }
        Ok(())
    }

    pub fn to_names(&self, vars: &VarNames) -> Vec<Vec<String>> {
        self.sets.iter().map(|s| vars.sorted_names(s)).collect()
    }
}
