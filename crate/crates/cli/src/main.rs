use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use mimb_core::benchmark::{run_benchmark, BenchmarkConfig, BenchmarkError, Protocol};
use mimb_core::ci::{CiBackend, DataBackend, OracleBackend};
use mimb_core::dataset::{DatasetBundle, DatasetError};
use mimb_core::discovery::{baseline, mimb, DiscoveryConfig};
use mimb_core::family::{generate_intervention_family, FamilyError, FamilySpec, Regime};
use mimb_core::fixtures;
use mimb_core::graph::{Dag, GraphError, VarSet};
use mimb_core::io::{infer_schema, load_bundle, load_network, save_bundle, IoError, RawTable};
use mimb_core::metrics::{score, Score};
use mimb_core::network::write_network;
use mimb_core::realworld::{discretize, split_by_mask, split_mask, SplitError, SplitRule};
use mimb_core::sampling::{generate_bundle, random_cpts, SimError};
use mimb_core::theorem::{fuzz_theorems, FuzzConfig};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "mimb", version, about = "Markov blanket discovery from multiple interventional datasets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample an interventional bundle from a network file.
    Generate(GenerateArgs),
    /// Run MIMB or the per-dataset baseline on a bundle.
    Discover(DiscoverArgs),
    /// Check union/intersection predictions on random graphs.
    VerifyTheorems(VerifyArgs),
    /// Repeated generate-and-discover runs scored against the network.
    Benchmark(BenchmarkArgs),
    /// Split one table into two experiments.
    Split(SplitArgs),
    /// Write a small built-in example (network, data and manifest).
    Fixture(FixtureArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    target: String,
    #[arg(long, default_value_t = 5)]
    n_datasets: usize,
    #[arg(long, default_value_t = 5000)]
    samples: usize,
    #[arg(long, default_value = "zeta0")]
    regime: Regime,
    #[arg(long)]
    conservative: bool,
    #[arg(long)]
    cover_children: bool,
    #[arg(long, default_value_t = 1.0)]
    alpha_dirichlet: f64,
    /// Largest manipulated set per experiment (default ⌈|V|/5⌉).
    #[arg(long)]
    max_targets: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Algo {
    Mimb,
    Baseline,
}

#[derive(Args)]
struct DiscoverArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Defaults to the manifest's target.
    #[arg(long)]
    target: Option<String>,
    #[arg(long, value_enum, default_value = "mimb")]
    algo: Algo,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    #[arg(long, default_value_t = 3)]
    max_cond: usize,
    #[arg(long)]
    symmetry: bool,
    /// Answer tests from the manifest's network and manipulated sets instead of the data.
    #[arg(long)]
    oracle: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Instances required in each table row.
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Node count or inclusive range, e.g. `8` or `6-10`.
    #[arg(long, default_value = "6-10")]
    nodes: String,
    #[arg(long, default_value_t = 0.3)]
    edge_prob: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    target: String,
    #[arg(long, default_value = "table3")]
    protocol: Protocol,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, default_value_t = 5)]
    n_datasets: usize,
    #[arg(long, default_value_t = 5000)]
    samples: usize,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    #[arg(long, default_value_t = 3)]
    max_cond: usize,
    #[arg(long)]
    symmetry: bool,
    #[arg(long)]
    max_targets: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    by: String,
    /// Rows with a value below this go to the first dataset.
    #[arg(long, conflicts_with = "label", required_unless_present = "label")]
    threshold: Option<f64>,
    /// Rows with this label go to the first dataset.
    #[arg(long)]
    label: Option<String>,
    /// Equal-frequency binning, `VAR:BINS`; repeatable.
    #[arg(long = "discretize", value_name = "VAR:BINS")]
    discretize: Vec<String>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FixtureArgs {
    /// Only `trace` is available.
    #[arg(long, default_value = "trace")]
    name: String,
    #[arg(long, default_value_t = 5000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Failure classes, each with its own exit code.
enum CliError {
    Input(String),
    Unsatisfiable(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            Self::Input(_) => 2,
            Self::Unsatisfiable(_) => 3,
            Self::Internal(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Input(m) | Self::Unsatisfiable(m) | Self::Internal(m) => f.write_str(m),
        }
    }
}

macro_rules! input_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                Self::Input(e.to_string())
            }
        }
    )*};
}
input_error!(IoError, GraphError, DatasetError, SplitError, std::io::Error);

impl From<FamilyError> for CliError {
    fn from(e: FamilyError) -> Self {
        Self::Unsatisfiable(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Network(_) | SimError::Dataset(_) => Self::Internal(e.to_string()),
            _ => Self::Input(e.to_string()),
        }
    }
}

impl From<BenchmarkError> for CliError {
    fn from(e: BenchmarkError) -> Self {
        match e {
            BenchmarkError::Family(f) => f.into(),
            BenchmarkError::Sim(s) => s.into(),
        }
    }
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))? + "\n";
    match out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn generate(a: GenerateArgs) -> Result<(), CliError> {
    let bn = load_network(&a.network)?;
    let t = bn.dag().id(&a.target)?;
    let mut spec = FamilySpec::new(a.n_datasets, a.regime, bn.len())
        .conservative(a.conservative)
        .children_covered(a.cover_children);
    if let Some(m) = a.max_targets {
        spec = spec.max_targets(m);
    }
    let fam = generate_intervention_family(bn.dag(), t, &spec, a.seed)?;
    // Dataset sampling uses its own seed so the family and data can vary independently.
    let bundle = generate_bundle(&bn, &fam, a.samples, a.alpha_dirichlet, a.seed.wrapping_add(1))?;
    fs::create_dir_all(&a.out)?;
    fs::write(a.out.join("network.net"), write_network(&bn))?;
    save_bundle(&bundle, &a.out, Some("network.net"), Some(&a.target), Some(a.seed))?;
    eprintln!("wrote {} datasets to {}", bundle.len(), a.out.display());
    Ok(())
}

#[derive(Serialize)]
struct SpouseJson {
    spouse: String,
    via: String,
    dataset: usize,
}

#[derive(Serialize)]
struct Truth {
    mb: Vec<String>,
    pa: Vec<String>,
}

#[derive(Serialize)]
struct Scores {
    mb: Score,
    pa: Score,
}

#[derive(Serialize)]
struct MimbReport {
    algo: Algo,
    backend: &'static str,
    target: String,
    alpha: f64,
    max_cond: usize,
    symmetry: bool,
    mimb_mb: Vec<String>,
    mimb_pa: Vec<String>,
    cpc: Vec<String>,
    cmb: Vec<Vec<String>>,
    spouses: Vec<SpouseJson>,
    symmetry_removed: Vec<String>,
    n_tests: u64,
    tests_per_dataset: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    truth: Option<Truth>,
    #[serde(skip_serializing_if = "Option::is_none")]
    score: Option<Scores>,
}

#[derive(Serialize)]
struct BaselineReport {
    algo: Algo,
    backend: &'static str,
    target: String,
    alpha: f64,
    max_cond: usize,
    symmetry: bool,
    base_mb: Vec<String>,
    base_pa: Vec<String>,
    per_dataset_mb: Vec<Vec<String>>,
    n_tests: u64,
    tests_per_dataset: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    truth: Option<Truth>,
    #[serde(skip_serializing_if = "Option::is_none")]
    score: Option<Scores>,
}

fn discover(a: DiscoverArgs) -> Result<(), CliError> {
    let loaded = load_bundle(&a.manifest)?;
    let target = a
        .target
        .or_else(|| loaded.manifest.target.clone())
        .ok_or_else(|| CliError::Input("no --target given and the manifest names none".into()))?;
    let vars = Arc::clone(loaded.bundle.schema().vars());
    let t = vars.id(&target)?;
    let dag: Option<&Dag> = loaded.network.as_ref().map(|bn| bn.dag());

    let oracle;
    let data;
    let backend: &dyn CiBackend = if a.oracle {
        let dag = dag.ok_or_else(|| CliError::Input("--oracle needs a network in the manifest".into()))?;
        let fam = loaded
            .family()?
            .ok_or_else(|| CliError::Input("--oracle needs `manipulated` on every manifest entry".into()))?;
        oracle = OracleBackend::new(dag, &fam);
        &oracle
    } else {
        data = DataBackend::new(&loaded.bundle);
        &data
    };
    let backend_name = if a.oracle { "oracle" } else { "data" };
    let cfg = DiscoveryConfig::default().with_alpha(a.alpha).with_max_cond(a.max_cond).with_symmetry(a.symmetry);
    let names = |s: &VarSet| vars.sorted_names(s);
    let truth_sets = dag.map(|d| (d.markov_blanket(t), d.parents(t)));
    let truth = truth_sets.as_ref().map(|(mb, pa)| Truth { mb: names(mb), pa: names(pa) });
    let scores = |mb: &VarSet, pa: &VarSet| {
        truth_sets.as_ref().map(|(tm, tp)| Scores { mb: score(mb, tm), pa: score(pa, tp) })
    };

    match a.algo {
        Algo::Mimb => {
            let r = mimb(backend, t, vars.len(), &cfg);
            let report = MimbReport {
                algo: a.algo,
                backend: backend_name,
                target,
                alpha: a.alpha,
                max_cond: a.max_cond,
                symmetry: a.symmetry,
                mimb_mb: names(&r.mimb_mb),
                mimb_pa: names(&r.mimb_pa),
                cpc: names(&r.cpc),
                cmb: r.cmb.iter().map(names).collect(),
                spouses: r
                    .spouses
                    .iter()
                    .map(|s| SpouseJson {
                        spouse: vars.name(s.spouse).to_string(),
                        via: vars.name(s.via).to_string(),
                        dataset: s.dataset,
                    })
                    .collect(),
                symmetry_removed: names(&r.symmetry_removed),
                n_tests: r.n_tests,
                tests_per_dataset: r.tests_per_dataset,
                score: scores(&r.mimb_mb, &r.mimb_pa),
                truth,
            };
            emit(&report, a.out.as_deref())
        }
        Algo::Baseline => {
            let r = baseline(backend, t, vars.len(), &cfg);
            let report = BaselineReport {
                algo: a.algo,
                backend: backend_name,
                target,
                alpha: a.alpha,
                max_cond: a.max_cond,
                symmetry: a.symmetry,
                base_mb: names(&r.base_mb),
                base_pa: names(&r.base_pa),
                per_dataset_mb: r.per_dataset.iter().map(|d| names(&d.mb)).collect(),
                n_tests: r.n_tests,
                tests_per_dataset: r.tests_per_dataset,
                score: scores(&r.base_mb, &r.base_pa),
                truth,
            };
            emit(&report, a.out.as_deref())
        }
    }
}

fn parse_nodes(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Input(format!("--nodes expects N or LO-HI, got `{s}`"));
    let (lo, hi) = match s.split_once('-') {
        Some((lo, hi)) => (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?),
        None => {
            let n = s.trim().parse().map_err(|_| bad())?;
            (n, n)
        }
    };
    if lo == 0 || lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn verify_theorems(a: VerifyArgs) -> Result<(), CliError> {
    let (lo, hi) = parse_nodes(&a.nodes)?;
    if !(0.0..=1.0).contains(&a.edge_prob) {
        return Err(CliError::Input(format!("--edge-prob must lie in [0, 1], got {}", a.edge_prob)));
    }
    let summary = fuzz_theorems(&FuzzConfig::new(a.trials, lo, hi, a.edge_prob, a.seed));
    eprintln!("{} instances, {} failures", summary.instances, summary.failures());
    emit(&summary, a.out.as_deref())
}

fn benchmark(a: BenchmarkArgs) -> Result<(), CliError> {
    let bn = load_network(&a.network)?;
    let t = bn.dag().id(&a.target)?;
    let cfg = BenchmarkConfig {
        n_datasets: a.n_datasets,
        rows_per_dataset: a.samples,
        reps: a.reps,
        max_targets_per_set: a.max_targets,
        alpha: a.alpha,
        max_cond: a.max_cond,
        symmetry_correction: a.symmetry,
        ..BenchmarkConfig::new(a.protocol, a.seed)
    };
    let r = run_benchmark(&bn, t, &cfg)?;
    eprintln!(
        "MIMB      precision {} recall {} F1 {} nTest {:.0}",
        r.mimb.precision, r.mimb.recall, r.mimb.f1, r.mimb.n_test
    );
    eprintln!(
        "baseline  precision {} recall {} F1 {} nTest {:.0}",
        r.baseline.precision, r.baseline.recall, r.baseline.f1, r.baseline.n_test
    );
    emit(&r, a.out.as_deref())
}

fn split(a: SplitArgs) -> Result<(), CliError> {
    let raw = RawTable::read_path(&a.data)?;
    let schema = Arc::new(infer_schema(std::slice::from_ref(&raw))?);
    let mut data = raw.encode(&schema)?;
    let by = schema.id(&a.by)?;
    let rule = match (a.threshold, a.label) {
        (Some(x), _) => SplitRule::Below(x),
        (None, Some(l)) => SplitRule::Label(l),
        (None, None) => return Err(CliError::Input("give --threshold or --label".into())),
    };
    // The mask is taken on raw values, so the split column may be binned too.
    let mask = split_mask(&data, by, &rule)?;
    for spec in &a.discretize {
        let (name, bins) = spec
            .rsplit_once(':')
            .and_then(|(n, b)| b.parse::<usize>().ok().map(|b| (n, b)))
            .ok_or_else(|| CliError::Input(format!("--discretize expects VAR:BINS, got `{spec}`")))?;
        data = discretize(&data, schema.id(name)?, bins)?;
    }
    let bundle: DatasetBundle = split_by_mask(&data, &mask, &a.by)?;
    if let Some(t) = &a.target {
        schema.id(t)?;
    }
    save_bundle(&bundle, &a.out, None, a.target.as_deref(), None)?;
    eprintln!("wrote {} + {} rows to {}", bundle.get(0).n_rows(), bundle.get(1).n_rows(), a.out.display());
    Ok(())
}

fn fixture(a: FixtureArgs) -> Result<(), CliError> {
    if a.name != "trace" {
        return Err(CliError::Input(format!("unknown fixture `{}` (available: trace)", a.name)));
    }
    let (dag, fam) = fixtures::trace_dag();
    let bn = random_cpts(&dag, 2, 0.5, a.seed)?;
    let bundle = generate_bundle(&bn, &fam, a.samples, 1.0, a.seed.wrapping_add(1))?;
    fs::create_dir_all(&a.out)?;
    fs::write(a.out.join("network.net"), write_network(&bn))?;
    save_bundle(&bundle, &a.out, Some("network.net"), Some("T"), Some(a.seed))?;
    eprintln!("wrote the trace example to {}", a.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Discover(a) => discover(a),
        Command::VerifyTheorems(a) => verify_theorems(a),
        Command::Benchmark(a) => benchmark(a),
        Command::Split(a) => split(a),
        Command::Fixture(a) => fixture(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
