//! Experiment commands behind the `ssnmf` binary.
//!
//! Every command is a plain function so the integration tests can drive it
//! without spawning a process.

mod args;

pub use args::{run, Cli, Command};

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{extract_biclusters, Bicluster};
use crate::data::{
    load_labels, load_matrix, preprocess_scrna, save_labels, save_matrix, synthetic_outlier,
    synthetic_three_block, LabeledDataset, MatrixFormat,
};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::metrics::{
    assign_clusters, entropy_metric, nmi, orthogonality_score, purity, LabelVector,
};
use crate::solver::{
    solve, FactorPair, ModelSpec, SolverConfig, SolverReport, StageSummary, Termination,
};

/// Environment variable capping the number of restarts run at once.
pub const THREADS_ENV: &str = "SSNMF_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    ThreeBlock,
    Outlier,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Generator { kind: GeneratorKind, seed: u64 },
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub source: DataSource,
    /// Label sidecar for file datasets.
    pub labels: Option<PathBuf>,
    /// Dropout fraction for expression preprocessing, if requested.
    pub preprocess: Option<f64>,
    pub model: ModelSpec,
    pub solver: SolverConfig,
    pub restarts: usize,
    /// Also write `biclusters.json` per restart at this z-score threshold.
    #[serde(with = "crate::analysis::lenient_float::option")]
    pub threshold: Option<f64>,
    /// Not part of the serialized report, so two runs that only differ in
    /// output location produce identical files.
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterMetrics {
    pub nmi: f64,
    pub purity: f64,
    /// Undefined when the truth has a single class.
    pub entropy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartReport {
    pub index: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub termination: Option<Termination>,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_objective: Option<f64>,
    pub rho_history: Vec<f64>,
    pub stages: Vec<StageSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orthogonality: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<ClusterMetrics>,
}

impl RestartReport {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub completed: usize,
    pub failed: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nmi_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nmi_std: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub purity_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub purity_std: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropy_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropy_std: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orth_mean: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentStamp {
    pub version: String,
    pub seed: u64,
    pub threads: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub environment: EnvironmentStamp,
    pub restarts: Vec<RestartReport>,
    pub aggregate: Aggregate,
}

impl RunReport {
    pub fn all_completed(&self) -> bool {
        self.aggregate.failed == 0
    }
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Some((mean, std))
}

fn aggregate(restarts: &[RestartReport]) -> Aggregate {
    let ok: Vec<&RestartReport> = restarts.iter().filter(|r| r.succeeded()).collect();
    let pick = |f: &dyn Fn(&ClusterMetrics) -> Option<f64>| -> Vec<f64> {
        ok.iter()
            .filter_map(|r| r.metrics.as_ref().and_then(f))
            .collect()
    };
    let nmi = mean_std(&pick(&|m| Some(m.nmi)));
    let purity = mean_std(&pick(&|m| Some(m.purity)));
    let entropy = mean_std(&pick(&|m| m.entropy));
    let orth: Vec<f64> = ok.iter().filter_map(|r| r.orthogonality).collect();
    Aggregate {
        completed: ok.len(),
        failed: restarts.len() - ok.len(),
        nmi_mean: nmi.map(|s| s.0),
        nmi_std: nmi.map(|s| s.1),
        purity_mean: purity.map(|s| s.0),
        purity_std: purity.map(|s| s.1),
        entropy_mean: entropy.map(|s| s.0),
        entropy_std: entropy.map(|s| s.1),
        orth_mean: mean_std(&orth).map(|s| s.0),
    }
}

/// Number of worker threads for restarts: `SSNMF_THREADS` when set to a
/// positive integer, otherwise the machine's available parallelism.
pub fn thread_count() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::InvalidArgument(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Sidecar label path for a generated matrix: `data.csv` → `data.labels.txt`.
pub fn labels_sidecar(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.labels.txt"))
}

pub fn generate(kind: GeneratorKind, seed: u64) -> LabeledDataset {
    match kind {
        GeneratorKind::ThreeBlock => synthetic_three_block(seed),
        GeneratorKind::Outlier => synthetic_outlier(seed),
    }
}

/// Writes the generated matrix to `out` and its labels to the sidecar.
pub fn cmd_generate(kind: GeneratorKind, seed: u64, out: &Path) -> Result<()> {
    let ds = generate(kind, seed);
    save_matrix(out, &ds.x, None, None, MatrixFormat::from_path(out))?;
    if let Some(truth) = &ds.truth {
        save_labels(&labels_sidecar(out), truth)?;
    }
    Ok(())
}

/// Loads (or generates) the dataset described by `config`.
pub fn load_dataset(config: &ExperimentConfig) -> Result<LabeledDataset> {
    let mut ds = match &config.source {
        DataSource::Generator { kind, seed } => generate(*kind, *seed),
        DataSource::File { path } => load_matrix(path, MatrixFormat::from_path(path))?,
    };
    if let Some(path) = &config.labels {
        let truth = load_labels(path)?;
        ds = LabeledDataset::new(ds.x, Some(truth), ds.feature_names, ds.sample_names)?;
    }
    if let Some(frac) = config.preprocess {
        ds = preprocess_scrna(&ds, frac)?;
    }
    Ok(ds)
}

fn default_names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}_{i}")).collect()
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_trace(path: &Path, report: &SolverReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let csv_err = |e: csv::Error| Error::InvalidArgument(format!("{}: {e}", path.display()));
    w.write_record([
        "iteration",
        "objective",
        "relative_change",
        "rho",
        "accepted_extrapolation",
    ])
    .map_err(csv_err)?;
    for row in &report.trace {
        w.write_record([
            row.iteration.to_string(),
            format!("{:.16e}", row.objective),
            format!("{:.16e}", row.relative_change),
            format!("{:.16e}", row.rho),
            u8::from(row.accepted_extrapolation).to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_assignments(path: &Path, labels: &LabelVector, sample_names: &[String]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let csv_err = |e: csv::Error| Error::InvalidArgument(format!("{}: {e}", path.display()));
    w.write_record(["sample", "cluster"]).map_err(csv_err)?;
    for (name, l) in sample_names.iter().zip(labels.as_slice()) {
        w.write_record([name.as_str(), &l.to_string()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Directory holding the artifacts of restart `index`.
pub fn restart_dir(out: &Path, index: usize) -> PathBuf {
    out.join(format!("restart_{index:02}"))
}

fn write_factors(dir: &Path, ds: &LabeledDataset, pair: &FactorPair) -> Result<()> {
    let factors = default_names("factor", pair.w.cols());
    let samples = ds
        .sample_names
        .clone()
        .unwrap_or_else(|| default_names("sample", ds.n_samples()));
    save_matrix(
        &dir.join("W.csv"),
        &pair.w,
        ds.feature_names.as_deref(),
        Some(&factors),
        MatrixFormat::Csv,
    )?;
    save_matrix(
        &dir.join("H.csv"),
        &pair.h,
        Some(&factors),
        Some(&samples),
        MatrixFormat::Csv,
    )?;
    write_assignments(&dir.join("labels.csv"), &assign_clusters(&pair.h), &samples)
}

fn cluster_metrics(h: &DenseMatrix, truth: &LabelVector) -> Result<ClusterMetrics> {
    let pred = assign_clusters(h);
    let entropy = if truth.n_classes() >= 2 {
        Some(entropy_metric(&pred, truth)?)
    } else {
        log::warn!("truth has a single class; entropy is undefined");
        None
    };
    Ok(ClusterMetrics {
        nmi: nmi(&pred, truth)?,
        purity: purity(&pred, truth)?,
        entropy,
    })
}

fn run_restart(config: &ExperimentConfig, ds: &LabeledDataset, index: usize) -> RestartReport {
    let seed = config.solver.seed.wrapping_add(index as u64);
    let mut report = RestartReport {
        index,
        seed,
        error: None,
        termination: None,
        iterations: 0,
        final_objective: None,
        rho_history: Vec::new(),
        stages: Vec::new(),
        orthogonality: None,
        metrics: None,
    };
    let dir = restart_dir(&config.out, index);
    let clock = Instant::now();
    let outcome = (|| -> Result<()> {
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let solver = SolverConfig {
            seed,
            ..config.solver.clone()
        };
        let (pair, solver_report) = solve(&ds.x, &config.model, &solver)?;
        report.termination = Some(solver_report.termination);
        report.iterations = solver_report.iterations();
        report.final_objective = Some(pair.objective);
        report.rho_history = solver_report.rho_history.clone();
        report.stages = solver_report.stages.clone();
        report.orthogonality = Some(orthogonality_score(&pair.h));
        if let Some(truth) = &ds.truth {
            report.metrics = Some(cluster_metrics(&pair.h, truth)?);
        }
        write_factors(&dir, ds, &pair)?;
        write_trace(&dir.join("trace.csv"), &solver_report)?;
        if let Some(t) = config.threshold {
            let biclusters = extract_biclusters(&pair.w, &pair.h, t)?;
            write_json(
                &dir.join("biclusters.json"),
                &name_biclusters(
                    biclusters,
                    ds.feature_names.as_deref(),
                    ds.sample_names.as_deref(),
                ),
            )?;
        }
        Ok(())
    })();
    match outcome {
        Ok(()) => log::info!(
            "restart {index} (seed {seed}): {} iterations, objective {:.6e}",
            report.iterations,
            report.final_objective.unwrap_or(f64::NAN)
        ),
        Err(e) => {
            log::error!("restart {index} failed: {e}");
            report.error = Some(e.to_string());
        }
    }
    if dir.is_dir() {
        let _ = write_json(&dir.join("report.json"), &report);
        let _ = write_json(
            &dir.join("timing.json"),
            &serde_json::json!({ "wall_time_seconds": clock.elapsed().as_secs_f64() }),
        );
    }
    report
}

/// Runs `config.restarts` independent solves (seeds `seed + i`) on a pool
/// capped by `SSNMF_THREADS` and writes per-restart artifacts plus the
/// aggregate `report.json`. Failed restarts are recorded, not fatal; check
/// [`RunReport::all_completed`].
pub fn cmd_solve(config: &ExperimentConfig) -> Result<RunReport> {
    if config.restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be at least 1".into()));
    }
    config.solver.validate()?;
    let ds = load_dataset(config)?;
    config.model.validate(ds.n_features())?;
    log::info!(
        "{} on {}x{} matrix, {} restarts",
        config.model.variant,
        ds.n_features(),
        ds.n_samples(),
        config.restarts
    );
    fs::create_dir_all(&config.out).map_err(|e| Error::io(&config.out, e))?;

    let threads = thread_count()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let clock = Instant::now();
    let restarts: Vec<RestartReport> = pool.install(|| {
        (0..config.restarts)
            .into_par_iter()
            .map(|i| run_restart(config, &ds, i))
            .collect()
    });

    let report = RunReport {
        config: config.clone(),
        environment: EnvironmentStamp {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.solver.seed,
            threads,
        },
        aggregate: aggregate(&restarts),
        restarts,
    };
    write_json(&config.out.join("report.json"), &report)?;
    write_json(
        &config.out.join("timing.json"),
        &serde_json::json!({ "wall_time_seconds": clock.elapsed().as_secs_f64() }),
    )?;
    Ok(report)
}

/// One row of a method comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub method: String,
    pub rank: usize,
    pub k: usize,
    pub rho: f64,
    pub restarts: usize,
    pub completed: usize,
    pub aggregate: Aggregate,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v:.6}"))
}

fn pm(mean: Option<f64>, std: Option<f64>) -> String {
    match (mean, std) {
        (Some(m), Some(s)) => format!("{:.2} ± {:.2}", 100.0 * m, 100.0 * s),
        _ => "n/a".into(),
    }
}

/// Formats rows as an aligned plain-text table (metrics in percent).
pub fn comparison_table(rows: &[ComparisonRow]) -> String {
    let header = ["method", "NMI %", "Purity %", "Entropy %"];
    let body: Vec<[String; 4]> = rows
        .iter()
        .map(|r| {
            let a = &r.aggregate;
            [
                r.method.clone(),
                pm(a.nmi_mean, a.nmi_std),
                pm(a.purity_mean, a.purity_std),
                pm(a.entropy_mean, a.entropy_std),
            ]
        })
        .collect();
    let mut widths = header.map(|h| h.chars().count());
    for row in &body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| -> String {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}", w = *w))
            .collect();
        padded.join("  ").trim_end().to_string()
    };
    let mut out = line(&header.map(String::from));
    out.push('\n');
    out.push_str(
        &widths
            .iter()
            .map(|w| "-".repeat(*w))
            .collect::<Vec<_>>()
            .join("  "),
    );
    out.push('\n');
    for row in &body {
        out.push_str(&line(row));
        out.push('\n');
    }
    out
}

/// Runs every config with [`cmd_solve`] into `out/NN_<model>/` and writes
/// `comparison.csv` and `comparison.txt` under `out`.
pub fn cmd_compare(configs: &[ExperimentConfig], out: &Path) -> Result<Vec<ComparisonRow>> {
    let Some(first) = configs.first() else {
        return Err(Error::InvalidArgument("no models to compare".into()));
    };
    if configs
        .iter()
        .any(|c| c.source != first.source || c.labels != first.labels)
    {
        return Err(Error::InvalidArgument(
            "all compared configs must share one dataset".into(),
        ));
    }
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut rows = Vec::with_capacity(configs.len());
    for (i, config) in configs.iter().enumerate() {
        let mut config = config.clone();
        config.out = out.join(format!("{i:02}_{}", config.model.variant));
        let report = cmd_solve(&config)?;
        rows.push(ComparisonRow {
            method: config.model.variant.to_string(),
            rank: config.model.rank,
            k: config.model.k,
            rho: config.model.rho0,
            restarts: config.restarts,
            completed: report.aggregate.completed,
            aggregate: report.aggregate,
        });
    }

    let path = out.join("comparison.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let csv_err = |e: csv::Error| Error::InvalidArgument(format!("{}: {e}", path.display()));
    w.write_record([
        "method",
        "rank",
        "k",
        "rho",
        "restarts",
        "completed",
        "nmi_mean",
        "nmi_std",
        "purity_mean",
        "purity_std",
        "entropy_mean",
        "entropy_std",
        "orth_mean",
    ])
    .map_err(csv_err)?;
    for r in &rows {
        let a = &r.aggregate;
        w.write_record([
            r.method.clone(),
            r.rank.to_string(),
            r.k.to_string(),
            r.rho.to_string(),
            r.restarts.to_string(),
            r.completed.to_string(),
            fmt_opt(a.nmi_mean),
            fmt_opt(a.nmi_std),
            fmt_opt(a.purity_mean),
            fmt_opt(a.purity_std),
            fmt_opt(a.entropy_mean),
            fmt_opt(a.entropy_std),
            fmt_opt(a.orth_mean),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    let table_path = out.join("comparison.txt");
    fs::write(&table_path, comparison_table(&rows)).map_err(|e| Error::io(&table_path, e))?;
    Ok(rows)
}

/// A bicluster with the names of its members, when the inputs carry names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedBicluster {
    #[serde(flatten)]
    pub bicluster: Bicluster,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_names: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_names: Option<Vec<String>>,
}

fn name_biclusters(
    biclusters: Vec<Bicluster>,
    features: Option<&[String]>,
    samples: Option<&[String]>,
) -> Vec<NamedBicluster> {
    biclusters
        .into_iter()
        .map(|b| NamedBicluster {
            feature_names: features
                .map(|f| b.feature_indices.iter().map(|&i| f[i].clone()).collect()),
            sample_names: samples.map(|s| b.sample_indices.iter().map(|&j| s[j].clone()).collect()),
            bicluster: b,
        })
        .collect()
}

/// Extracts biclusters from saved factor files and writes them as JSON.
pub fn cmd_biclusters(
    w_path: &Path,
    h_path: &Path,
    threshold: f64,
    out: &Path,
) -> Result<Vec<NamedBicluster>> {
    if !threshold.is_finite() && threshold != f64::INFINITY {
        return Err(Error::InvalidArgument(format!(
            "invalid threshold {threshold}"
        )));
    }
    let w = load_matrix(w_path, MatrixFormat::from_path(w_path))?;
    let h = load_matrix(h_path, MatrixFormat::from_path(h_path))?;
    let biclusters = extract_biclusters(&w.x, &h.x, threshold)?;
    let named = name_biclusters(
        biclusters,
        w.feature_names.as_deref(),
        h.sample_names.as_deref(),
    );
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    write_json(out, &named)?;
    Ok(named)
}

/// Parses a biclusters JSON file written by [`cmd_biclusters`].
pub fn read_biclusters(path: &Path) -> Result<Vec<NamedBicluster>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
