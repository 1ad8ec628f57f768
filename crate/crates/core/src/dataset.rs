//! Complete discrete datasets, stored column-major as state indices.

use std::sync::Arc;

use thiserror::Error;

use crate::graph::{GraphError, VarId, VarNames, VarSet};
use crate::network::BayesianNetwork;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DatasetError {
    #[error("column {column} has {found} rows, expected {expected}")]
    RaggedColumns { column: String, found: usize, expected: usize },
    #[error("column `{column}` holds state index {index} but has only {card} states")]
    StateOutOfRange { column: String, index: u16, card: usize },
    #[error("schema mismatch between dataset 0 and dataset {0}")]
    SchemaMismatch(usize),
    #[error("a bundle needs at least one dataset")]
    EmptyBundle,
    #[error("dataset {0} has no rows")]
    NoRows(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Variable names plus the ordered state labels of each variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    vars: Arc<VarNames>,
    states: Vec<Vec<String>>,
}

impl Schema {
    pub fn new(vars: Arc<VarNames>, states: Vec<Vec<String>>) -> Self {
        assert_eq!(vars.len(), states.len(), "one state list per variable");
        Self { vars, states }
    }

    pub fn of_network(bn: &BayesianNetwork) -> Self {
        Self::new(Arc::clone(bn.vars()), bn.all_states().to_vec())
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

    pub fn states(&self, v: VarId) -> &[String] {
        &self.states[v.0]
    }

    pub fn card(&self, v: VarId) -> usize {
        self.states[v.0].len()
    }

    pub fn id(&self, name: &str) -> Result<VarId, GraphError> {
        self.vars.id(name)
    }

    pub fn name(&self, v: VarId) -> &str {
        self.vars.name(v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    schema: Arc<Schema>,
    columns: Vec<Vec<u16>>,
    n_rows: usize,
    provenance: Option<VarSet>,
}

impl Dataset {
    pub fn new(schema: Arc<Schema>, columns: Vec<Vec<u16>>) -> Result<Self, DatasetError> {
        assert_eq!(schema.len(), columns.len(), "one column per variable");
        let n_rows = columns.first().map_or(0, Vec::len);
        for (i, col) in columns.iter().enumerate() {
            let v = VarId(i);
            if col.len() != n_rows {
                return Err(DatasetError::RaggedColumns {
                    column: schema.name(v).to_string(),
                    found: col.len(),
                    expected: n_rows,
                });
            }
            let card = schema.card(v);
            if let Some(&bad) = col.iter().find(|&&s| usize::from(s) >= card) {
                return Err(DatasetError::StateOutOfRange { column: schema.name(v).to_string(), index: bad, card });
            }
        }
        Ok(Self { schema, columns, n_rows, provenance: None })
    }

    /// Attaches the manipulated set this dataset was generated under.
    pub fn with_provenance(mut self, targets: VarSet) -> Self {
        self.provenance = Some(targets);
        self
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn column(&self, v: VarId) -> &[u16] {
        &self.columns[v.0]
    }

    pub fn columns(&self) -> &[Vec<u16>] {
        &self.columns
    }

    pub fn provenance(&self) -> Option<&VarSet> {
        self.provenance.as_ref()
    }

    pub fn row(&self, r: usize) -> Vec<u16> {
        self.columns.iter().map(|c| c[r]).collect()
    }

    /// Rows selected by `keep`, in original order.
    pub fn filter_rows(&self, keep: &[bool]) -> Self {
        let columns = self
            .columns
            .iter()
            .map(|c| c.iter().zip(keep).filter(|(_, &k)| k).map(|(&s, _)| s).collect::<Vec<_>>())
            .collect::<Vec<_>>();
        let n_rows = columns.first().map_or(0, Vec::len);
        Self { schema: Arc::clone(&self.schema), columns, n_rows, provenance: self.provenance.clone() }
    }
}

/// Datasets over one shared schema, one per experiment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetBundle {
    datasets: Vec<Dataset>,
}

impl DatasetBundle {
    pub fn new(datasets: Vec<Dataset>) -> Result<Self, DatasetError> {
        let first = datasets.first().ok_or(DatasetError::EmptyBundle)?;
        for (i, d) in datasets.iter().enumerate() {
            if d.schema != first.schema && *d.schema != *first.schema {
                return Err(DatasetError::SchemaMismatch(i));
            }
            if d.n_rows == 0 {
                return Err(DatasetError::NoRows(i));
            }
        }
        Ok(Self { datasets })
    }

    pub fn len(&self) -> usize {
        self.datasets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.datasets.is_empty()
    }

    pub fn datasets(&self) -> &[Dataset] {
        &self.datasets
    }

    pub fn get(&self, i: usize) -> &Dataset {
        &self.datasets[i]
    }

    pub fn schema(&self) -> &Arc<Schema> {
        self.datasets[0].schema()
    }

    /// The recorded manipulated sets, if every dataset carries one.
    pub fn provenance(&self) -> Option<Vec<VarSet>> {
        self.datasets.iter().map(|d| d.provenance().cloned()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> Arc<Schema> {
        let vars = Arc::new(VarNames::new(&["A", "B"]).unwrap());
        Arc::new(Schema::new(vars, vec![vec!["0".into(), "1".into()], vec!["x".into(), "y".into(), "z".into()]]))
    }

    #[test]
    fn validates_states_and_shape() {
        let s = schema();
        assert!(Dataset::new(Arc::clone(&s), vec![vec![0, 1], vec![2, 0]]).is_ok());
        assert!(matches!(
            Dataset::new(Arc::clone(&s), vec![vec![0, 2], vec![2, 0]]),
            Err(DatasetError::StateOutOfRange { .. })
        ));
        assert!(matches!(
            Dataset::new(s, vec![vec![0, 1], vec![2]]),
            Err(DatasetError::RaggedColumns { .. })
        ));
    }

    #[test]
    fn bundle_checks_schema() {
        let s = schema();
        let d = Dataset::new(Arc::clone(&s), vec![vec![0], vec![1]]).unwrap();
        let other = Arc::new(Schema::new(
            Arc::new(VarNames::new(&["A", "C"]).unwrap()),
            vec![vec!["0".into(), "1".into()], vec!["x".into(), "y".into(), "z".into()]],
        ));
        let e = Dataset::new(other, vec![vec![0], vec![1]]).unwrap();
        assert!(DatasetBundle::new(vec![d.clone(), d.clone()]).is_ok());
        assert!(matches!(DatasetBundle::new(vec![d, e]), Err(DatasetError::SchemaMismatch(1))));
        assert!(matches!(DatasetBundle::new(vec![]), Err(DatasetError::EmptyBundle)));
    }

    #[test]
    fn filter_keeps_order() {
        let d = Dataset::new(schema(), vec![vec![0, 1, 1], vec![0, 1, 2]]).unwrap();
        let f = d.filter_rows(&[true, false, true]);
        assert_eq!(f.n_rows(), 2);
        assert_eq!(f.row(1), vec![1, 2]);
    }
}
