//! Turning one observational table into interventional datasets: split on a
//! variable, and bin numeric columns so they can be tested with G².

use std::sync::Arc;

use thiserror::Error;

use crate::dataset::{Dataset, DatasetBundle, DatasetError, Schema};
use crate::graph::VarId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SplitError {
    #[error("`{column}` has non-numeric state `{label}`")]
    NotNumeric { column: String, label: String },
    #[error("split on `{0}` leaves one side empty")]
    EmptyPartition(String),
    #[error("`{0}` has no state `{1}`")]
    UnknownLabel(String, String),
    #[error("at least one bin is needed")]
    NoBins,
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SplitRule {
    /// Rows whose numeric value is below the threshold form the first part.
    Below(f64),
    /// Rows carrying this label form the first part.
    Label(String),
}

fn numeric_states(data: &Dataset, v: VarId) -> Result<Vec<f64>, SplitError> {
    let schema = data.schema();
    schema
        .states(v)
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| SplitError::NotNumeric { column: schema.name(v).to_string(), label: s.clone() })
        })
        .collect()
}

/// `true` for rows that belong to the first part.
pub fn split_mask(data: &Dataset, by: VarId, rule: &SplitRule) -> Result<Vec<bool>, SplitError> {
    let col = data.column(by);
    let hit: Vec<bool> = match rule {
        SplitRule::Below(x) => numeric_states(data, by)?.iter().map(|v| v < x).collect(),
        SplitRule::Label(l) => {
            let schema = data.schema();
            let idx = schema
                .states(by)
                .iter()
                .position(|s| s == l)
                .ok_or_else(|| SplitError::UnknownLabel(schema.name(by).to_string(), l.clone()))?;
            (0..schema.card(by)).map(|s| s == idx).collect()
        }
    };
    Ok(col.iter().map(|&s| hit[s as usize]).collect())
}

/// Two datasets, rows where `mask` holds and the rest. The split variable
/// stays in both.
pub fn split_by_mask(data: &Dataset, mask: &[bool], by_name: &str) -> Result<DatasetBundle, SplitError> {
    let inverse: Vec<bool> = mask.iter().map(|m| !m).collect();
    let (a, b) = (data.filter_rows(mask), data.filter_rows(&inverse));
    if a.n_rows() == 0 || b.n_rows() == 0 {
        return Err(SplitError::EmptyPartition(by_name.to_string()));
    }
    Ok(DatasetBundle::new(vec![a, b])?)
}

pub fn split_dataset(data: &Dataset, by: VarId, rule: &SplitRule) -> Result<DatasetBundle, SplitError> {
    let mask = split_mask(data, by, rule)?;
    split_by_mask(data, &mask, data.schema().name(by))
}

/// Equal-frequency binning of a numeric column into at most `bins` states.
///
/// Bin `i` ends at the value in sorted position `⌈(i+1)·n/bins⌉ − 1`; every
/// value up to and including a cut point goes to the lowest bin whose cut it
/// does not exceed, so ties stay together in the lower bin. Bins left empty
/// by ties are dropped. States are labelled `b0`, `b1`, ...
pub fn discretize(data: &Dataset, v: VarId, bins: usize) -> Result<Dataset, SplitError> {
    if bins == 0 {
        return Err(SplitError::NoBins);
    }
    let states = numeric_states(data, v)?;
    let values: Vec<f64> = data.column(v).iter().map(|&s| states[s as usize]).collect();
    let cuts = bin_edges(&values, bins);
    let column: Vec<u16> =
        values.iter().map(|x| cuts.iter().position(|c| x <= c).unwrap_or(cuts.len() - 1) as u16).collect();

    let old = data.schema();
    let mut all_states: Vec<Vec<String>> = old.vars().ids().map(|u| old.states(u).to_vec()).collect();
    all_states[v.index()] = (0..cuts.len()).map(|i| format!("b{i}")).collect();
    let schema = Arc::new(Schema::new(Arc::clone(old.vars()), all_states));
    let mut columns = data.columns().to_vec();
    columns[v.index()] = column;
    let mut out = Dataset::new(schema, columns)?;
    if let Some(p) = data.provenance() {
        out = out.with_provenance(p.clone());
    }
    Ok(out)
}

/// Cut points (upper bounds) of the bins [`discretize`] would make.
pub fn bin_edges(values: &[f64], bins: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut cuts: Vec<f64> =
        (0..bins).filter_map(|i| ((i + 1) * n).div_ceil(bins).checked_sub(1).map(|p| sorted[p])).collect();
    cuts.dedup();
    cuts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{infer_schema, RawTable};

    fn table(header: &str, rows: impl Iterator<Item = String>) -> Dataset {
        let text = std::iter::once(header.to_string()).chain(rows).collect::<Vec<_>>().join("\n");
        let t = RawTable::read(text.as_bytes(), "mem").unwrap();
        let s = Arc::new(infer_schema(std::slice::from_ref(&t)).unwrap());
        t.encode(&s).unwrap()
    }

    fn counts(d: &Dataset, v: VarId) -> Vec<usize> {
        let mut c = vec![0; d.schema().card(v)];
        d.column(v).iter().for_each(|&s| c[s as usize] += 1);
        c
    }

    #[test]
    fn quartiles_of_one_to_hundred() {
        let d = table("x", (1..=100).map(|i| i.to_string()));
        let q = discretize(&d, VarId(0), 4).unwrap();
        assert_eq!(counts(&q, VarId(0)), [25, 25, 25, 25]);
        assert_eq!(bin_edges(&(1..=100).map(f64::from).collect::<Vec<_>>(), 4), [25.0, 50.0, 75.0, 100.0]);
    }

    #[test]
    fn constant_column_has_one_state() {
        let d = table("x", (0..10).map(|_| "3".to_string()));
        let q = discretize(&d, VarId(0), 5).unwrap();
        assert_eq!(counts(&q, VarId(0)), [10]);
    }

    #[test]
    fn ties_go_low() {
        let d = table("x", ["1", "2", "2", "2", "3", "4"].iter().map(|s| s.to_string()));
        let q = discretize(&d, VarId(0), 2).unwrap();
        assert_eq!(q.column(VarId(0)), [0, 0, 0, 0, 1, 1]);
    }

    #[test]
    fn split_threshold_and_label() {
        let d = table("dist,sex", (0..20).map(|i| format!("{},{}", i, if i % 3 == 0 { "f" } else { "m" })));
        let b = split_dataset(&d, VarId(0), &SplitRule::Below(10.0)).unwrap();
        assert_eq!((b.get(0).n_rows(), b.get(1).n_rows()), (10, 10));
        let b = split_dataset(&d, VarId(1), &SplitRule::Label("f".into())).unwrap();
        assert_eq!(b.get(0).n_rows() + b.get(1).n_rows(), 20);
        assert_eq!(b.get(0).n_rows(), 7);
        assert_eq!(
            split_dataset(&d, VarId(0), &SplitRule::Below(-1.0)).unwrap_err(),
            SplitError::EmptyPartition("dist".into())
        );
        assert!(matches!(split_dataset(&d, VarId(1), &SplitRule::Below(1.0)), Err(SplitError::NotNumeric { .. })));
    }
}
