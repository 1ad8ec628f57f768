//! CSV datasets and JSON bundle manifests.
//!
//! A dataset file has a header row of variable names and one state label
//! per cell. A manifest lists dataset files in experiment order, with paths
//! relative to the manifest, plus optional ground truth:
//!
//! ```json
//! {
//!   "network": "alarm.net",
//!   "target": "VTUB",
//!   "datasets": [
//!     { "path": "d0.csv", "manipulated": ["HR", "CVP"] },
//!     { "path": "d1.csv", "manipulated": [] }
//!   ]
//! }
//! ```

use std::cmp::Ordering;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, DatasetBundle, DatasetError, Schema};
use crate::graph::{GraphError, InterventionFamily, VarNames, VarSet};
use crate::network::{parse_network, BayesianNetwork, NetworkError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("{path}: header does not match the schema (expected {expected:?})")]
    Header { path: String, expected: Vec<String> },
    #[error("{path}: line {line}: unknown state `{label}` for `{column}`")]
    UnknownLabel { path: String, line: usize, column: String, label: String },
    #[error("{path}: line {line}: expected {expected} cells, found {found}")]
    RowLength { path: String, line: usize, expected: usize, found: usize },
    #[error("{path}: no data rows")]
    Empty { path: String },
    #[error("`{0}` has more than 65535 states")]
    TooManyStates(String),
    #[error("{path}: {source}")]
    Network { path: String, source: NetworkError },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::File { path: path.to_path_buf(), source }
}

/// A CSV file as strings, before any schema is applied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTable {
    pub source: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl RawTable {
    pub fn read<R: Read>(reader: R, source: &str) -> Result<Self, IoError> {
        let csv_err = |source_err| IoError::Csv { path: source.to_string(), source: source_err };
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(reader);
        let header: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            if rec.len() != header.len() {
                return Err(IoError::RowLength {
                    path: source.to_string(),
                    line: i + 2,
                    expected: header.len(),
                    found: rec.len(),
                });
            }
            rows.push(rec.iter().map(str::to_string).collect());
        }
        Ok(Self { source: source.to_string(), header, rows })
    }

    pub fn read_path(path: &Path) -> Result<Self, IoError> {
        let f = fs::File::open(path).map_err(file_err(path))?;
        Self::read(f, &path.display().to_string())
    }

    /// Encodes every cell as an index into `schema`'s state labels.
    pub fn encode(&self, schema: &Arc<Schema>) -> Result<Dataset, IoError> {
        if self.header != schema.vars().names() {
            return Err(IoError::Header { path: self.source.clone(), expected: schema.vars().names().to_vec() });
        }
        if self.rows.is_empty() {
            return Err(IoError::Empty { path: self.source.clone() });
        }
        let mut columns = vec![Vec::with_capacity(self.rows.len()); self.header.len()];
        for (r, row) in self.rows.iter().enumerate() {
            for (c, label) in row.iter().enumerate() {
                let v = crate::graph::VarId(c);
                let idx = schema.states(v).iter().position(|s| s == label).ok_or_else(|| IoError::UnknownLabel {
                    path: self.source.clone(),
                    line: r + 2,
                    column: self.header[c].clone(),
                    label: label.clone(),
                })?;
                columns[c].push(idx as u16);
            }
        }
        Ok(Dataset::new(Arc::clone(schema), columns)?)
    }
}

/// Orders labels numerically when both parse as numbers, else as strings.
pub fn compare_labels(a: &str, b: &str) -> Ordering {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x.total_cmp(&y).then_with(|| a.cmp(b)),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        _ => a.cmp(b),
    }
}

/// Schema whose states are the labels seen in any of `tables`, sorted with
/// [`compare_labels`]. All tables must share one header.
pub fn infer_schema(tables: &[RawTable]) -> Result<Schema, IoError> {
    let first = tables.first().ok_or(IoError::Dataset(DatasetError::EmptyBundle))?;
    let mut states: Vec<Vec<String>> = vec![Vec::new(); first.header.len()];
    for t in tables {
        if t.header != first.header {
            return Err(IoError::Header { path: t.source.clone(), expected: first.header.clone() });
        }
        for row in &t.rows {
            for (c, label) in row.iter().enumerate() {
                states[c].push(label.clone());
            }
        }
    }
    for (c, s) in states.iter_mut().enumerate() {
        s.sort_by(|a, b| compare_labels(a, b));
        s.dedup();
        if s.len() > u16::MAX as usize {
            return Err(IoError::TooManyStates(first.header[c].clone()));
        }
    }
    Ok(Schema::new(Arc::new(VarNames::new(&first.header)?), states))
}

pub fn write_csv<W: Write>(data: &Dataset, writer: W) -> Result<(), IoError> {
    let csv_err = |source| IoError::Csv { path: "<output>".into(), source };
    let schema = data.schema();
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(schema.vars().names()).map_err(csv_err)?;
    for r in 0..data.n_rows() {
        let row = data.row(r);
        w.write_record(row.iter().enumerate().map(|(c, &s)| schema.states(crate::graph::VarId(c))[s as usize].as_str()))
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| IoError::Csv { path: "<output>".into(), source: e.into() })?;
    Ok(())
}

pub fn write_csv_path(data: &Dataset, path: &Path) -> Result<(), IoError> {
    let f = fs::File::create(path).map_err(file_err(path))?;
    write_csv(data, std::io::BufWriter::new(f))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    /// Variables manipulated in this experiment, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manipulated: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub datasets: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, IoError> {
        let text = fs::read_to_string(path).map_err(file_err(path))?;
        serde_json::from_str(&text).map_err(|source| IoError::Json { path: path.display().to_string(), source })
    }

    pub fn save(&self, path: &Path) -> Result<(), IoError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, text + "\n").map_err(file_err(path))
    }

    /// The recorded family, if every entry lists its manipulated set.
    pub fn family(&self, vars: &VarNames) -> Result<Option<InterventionFamily>, IoError> {
        let Some(sets) = self.datasets.iter().map(|d| d.manipulated.clone()).collect::<Option<Vec<_>>>() else {
            return Ok(None);
        };
        let sets = sets.iter().map(|s| vars.set(s)).collect::<Result<Vec<VarSet>, _>>()?;
        Ok(Some(InterventionFamily::new(sets)?))
    }
}

pub fn load_network(path: &Path) -> Result<BayesianNetwork, IoError> {
    let text = fs::read_to_string(path).map_err(file_err(path))?;
    parse_network(&text).map_err(|source| IoError::Network { path: path.display().to_string(), source })
}

/// A bundle read through its manifest, with the network if one is named.
#[derive(Debug, Clone)]
pub struct LoadedBundle {
    pub manifest: Manifest,
    pub bundle: DatasetBundle,
    pub network: Option<BayesianNetwork>,
}

impl LoadedBundle {
    pub fn family(&self) -> Result<Option<InterventionFamily>, IoError> {
        self.manifest.family(self.bundle.schema().vars())
    }
}

/// Reads every dataset of a manifest. With a network, cells must use its
/// state labels; otherwise the schema is inferred from all files together.
pub fn load_bundle(manifest_path: &Path) -> Result<LoadedBundle, IoError> {
    let manifest = Manifest::load(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let network = manifest.network.as_ref().map(|p| load_network(&base.join(p))).transpose()?;
    let tables =
        manifest.datasets.iter().map(|d| RawTable::read_path(&base.join(&d.path))).collect::<Result<Vec<_>, _>>()?;
    let schema = Arc::new(match &network {
        Some(bn) => Schema::of_network(bn),
        None => infer_schema(&tables)?,
    });
    let mut datasets = Vec::with_capacity(tables.len());
    for (t, entry) in tables.iter().zip(&manifest.datasets) {
        let mut d = t.encode(&schema)?;
        if let Some(m) = &entry.manipulated {
            d = d.with_provenance(schema.vars().set(m)?);
        }
        datasets.push(d);
    }
    Ok(LoadedBundle { manifest, bundle: DatasetBundle::new(datasets)?, network })
}

/// Writes `d{i}.csv` per dataset plus `manifest.json` into `dir`.
pub fn save_bundle(
    bundle: &DatasetBundle,
    dir: &Path,
    network: Option<&str>,
    target: Option<&str>,
    seed: Option<u64>,
) -> Result<Manifest, IoError> {
    fs::create_dir_all(dir).map_err(file_err(dir))?;
    let vars = bundle.schema().vars();
    let mut entries = Vec::with_capacity(bundle.len());
    for (i, d) in bundle.datasets().iter().enumerate() {
        let name = format!("d{i}.csv");
        write_csv_path(d, &dir.join(&name))?;
        entries.push(ManifestEntry { path: name, manipulated: d.provenance().map(|p| vars.sorted_names(p)) });
    }
    let manifest = Manifest {
        network: network.map(str::to_string),
        target: target.map(str::to_string),
        seed,
        datasets: entries,
    };
    manifest.save(&dir.join("manifest.json"))?;
    Ok(manifest)
}
