use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::{FitConfig, SimulateConfig, SimulationPlan};
use super::dataset::{with_path, write_text, DatasetBundle};
use super::pipeline::{run_pipeline, PipelineOptions};
use super::trace::write_trace;
use crate::baselines::{hierarchical_ward, pairwise_riemannian, pam, WardVariant};
use crate::error::{Error, Result};
use crate::postprocess::{
    adjusted_rand_index, credible_interval, dahl_partition, ess, fisher_exact_2x2, mean_and_sd,
    ContingencyTable2x2, PartitionEstimate,
};
use crate::random::rng_from_seed;
use crate::sampler::{canonicalize, run, Timing};
use crate::simulation::{generate_large_setting, generate_var1_dataset, generate_wishart_mixture};
use crate::spd::SpdMetric;

pub const RESULT_FORMAT: &str = "wishmix-result";
pub const LABELS_FORMAT: &str = "wishmix-labels";
pub const METRICS_FORMAT: &str = "wishmix-metrics";
pub const REPORT_FORMAT: &str = "wishmix-report";
pub const FORMAT_VERSION: u32 = 1;

/// Level of the ν credible interval in run results.
pub const NU_INTERVAL_LEVEL: f64 = 0.95;

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Data(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

fn check_format(found: &str, expected: &str, version: u32, path: &Path) -> Result<()> {
    if found != expected || version != FORMAT_VERSION {
        return Err(Error::Data(format!(
            "{}: expected {expected} version {FORMAT_VERSION}, found {found} version {version}",
            path.display()
        )));
    }
    Ok(())
}

/// Posterior summary of ν.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuSummary {
    pub mean: f64,
    pub sd: f64,
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
    pub ess: f64,
    pub acceptance_rate: f64,
}

/// Everything `fit` writes besides the trace itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub format: String,
    pub version: u32,
    pub dataset: String,
    pub n: usize,
    pub dim: usize,
    /// Fully explicit settings; fitting the same data with them reproduces the trace.
    pub config: FitConfig,
    pub partition: PartitionEstimate,
    pub nu: NuSummary,
    pub timing: Timing,
    /// Trace file name, relative to the result file.
    pub trace_file: String,
}

impl RunResult {
    pub fn read(path: &Path) -> Result<Self> {
        let r: RunResult = read_json(path)?;
        check_format(&r.format, RESULT_FORMAT, r.version, path)?;
        Ok(r)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(self, path)
    }

    pub fn trace_path(&self, result_path: &Path) -> PathBuf {
        result_path.parent().unwrap_or(Path::new("")).join(&self.trace_file)
    }

    pub fn method(&self) -> String {
        match self.config.model {
            Some(super::config::ModelName::Dpm) => "dpm".into(),
            _ => "mfm".into(),
        }
    }
}

/// `<out stem>.trace` next to the result file.
pub fn trace_path_for(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    out.with_file_name(format!("{stem}.trace"))
}

fn label_stats(labels: &[usize]) -> usize {
    labels.iter().copied().max().map_or(0, |m| m + 1)
}

/// Generates the data set a `simulate` config describes and writes it.
pub fn cmd_simulate(config: &SimulateConfig, base_dir: &Path, out: &Path) -> Result<DatasetBundle> {
    let plan = config.plan(base_dir)?;
    let seed = config.seed()?;
    let mut rng = rng_from_seed(seed);
    let mut prov = BTreeMap::new();
    prov.insert("generator".into(), Value::from("wishmix simulate"));
    prov.insert(
        "config".into(),
        serde_json::to_value(config).map_err(|e| Error::Data(e.to_string()))?,
    );
    let (data, labels) = match &plan {
        SimulationPlan::Mixture(spec) => generate_wishart_mixture(spec, &mut rng)?,
        SimulationPlan::Large { n, setting } => {
            let (data, labels, s3) = generate_large_setting(*n, setting, &mut rng)?;
            let m = s3.matrix();
            let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
            prov.insert("sigma3".into(), serde_json::to_value(rows).map_err(|e| Error::Data(e.to_string()))?);
            (data, labels)
        }
        SimulationPlan::Var1 { scales, phi, t, nu0, balance, n } => {
            prov.insert("t".into(), Value::from(*t));
            generate_var1_dataset(scales, *phi, *t, *nu0, balance.clone(), *n, &mut rng)?
        }
    };
    let bundle = DatasetBundle::from_matrices(&data, Some(labels), None, prov)?;
    bundle.write(out)?;
    Ok(bundle)
}

pub fn cmd_pipeline(dir: &Path, options: &PipelineOptions, out: &Path) -> Result<DatasetBundle> {
    let bundle = run_pipeline(dir, options)?;
    bundle.write(out)?;
    Ok(bundle)
}

/// Runs the sampler on a dataset bundle, writes `out` and its trace file.
pub fn cmd_fit(dataset: &Path, config: &FitConfig, out: &Path) -> Result<RunResult> {
    let bundle = DatasetBundle::read(dataset)?;
    let data = bundle.observations()?;
    let (sampler, explicit) = config.resolve(bundle.dim)?;
    let trace = run(&data, &sampler)?;
    let partition = dahl_partition(&trace)?;
    let (mean, sd) = mean_and_sd(&trace.nu);
    let (lower, upper) = credible_interval(&trace.nu, NU_INTERVAL_LEVEL)?;
    let nu = NuSummary {
        mean,
        sd,
        level: NU_INTERVAL_LEVEL,
        lower,
        upper,
        ess: ess(&trace.nu).unwrap_or(f64::NAN),
        acceptance_rate: trace.acceptance_rate(),
    };
    let trace_file = trace_path_for(out);
    write_trace(&trace, &trace_file)?;
    let result = RunResult {
        format: RESULT_FORMAT.into(),
        version: FORMAT_VERSION,
        dataset: dataset.display().to_string(),
        n: data.len(),
        dim: bundle.dim,
        config: explicit,
        partition,
        nu,
        timing: trace.timing.clone(),
        trace_file: trace_file.file_name().and_then(|s| s.to_str()).unwrap_or_default().to_string(),
    };
    result.write(out)?;
    Ok(result)
}

/// Where the baselines take their number of clusters from.
#[derive(Debug, Clone, PartialEq)]
pub enum KSource {
    Fixed(usize),
    /// K̂ of the Dahl partition in a run result.
    FromResult(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodLabels {
    pub method: String,
    pub labels: Vec<usize>,
}

/// Labels produced by the distance-based methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelsFile {
    pub format: String,
    pub version: u32,
    pub dataset: String,
    pub k: usize,
    pub metric: SpdMetric,
    pub ward_variant: WardVariant,
    pub methods: Vec<MethodLabels>,
}

impl LabelsFile {
    pub fn read(path: &Path) -> Result<Self> {
        let r: LabelsFile = read_json(path)?;
        check_format(&r.format, LABELS_FORMAT, r.version, path)?;
        Ok(r)
    }
}

pub fn cmd_baselines(
    dataset: &Path,
    k: &KSource,
    metric: SpdMetric,
    variant: WardVariant,
    out: &Path,
) -> Result<LabelsFile> {
    let data = DatasetBundle::read(dataset)?.observations()?;
    let k = match k {
        KSource::Fixed(k) => *k,
        KSource::FromResult(path) => RunResult::read(path)?.partition.k_plus,
    };
    let d = pairwise_riemannian(&data, metric)?;
    let ward = hierarchical_ward(&d, k, variant)?;
    let medoids = pam(&d, k)?;
    let file = LabelsFile {
        format: LABELS_FORMAT.into(),
        version: FORMAT_VERSION,
        dataset: dataset.display().to_string(),
        k,
        metric,
        ward_variant: variant,
        methods: vec![
            MethodLabels { method: "ward".into(), labels: canonicalize(&ward) },
            MethodLabels { method: "pam".into(), labels: canonicalize(&medoids.labels) },
        ],
    };
    write_json(&file, out)?;
    Ok(file)
}

/// A 2×2 table with its two-sided Fisher exact p-value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencyReport {
    pub cells: [[u64; 2]; 2],
    pub fisher_p: f64,
}

impl ContingencyReport {
    pub fn new(table: ContingencyTable2x2) -> Result<Self> {
        Ok(ContingencyReport { cells: table.cells, fisher_p: fisher_exact_2x2(&table)? })
    }
}

/// Agreement of one estimated partition with the truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricEntry {
    pub source: String,
    pub method: String,
    pub k_hat: usize,
    pub ari: f64,
    pub k_correct: bool,
    /// Clusters × classes, present when both have exactly two groups.
    pub contingency: Option<ContingencyReport>,
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub format: String,
    pub version: u32,
    pub truth: String,
    pub k0: usize,
    pub entries: Vec<MetricEntry>,
}

impl MetricsReport {
    pub fn read(path: &Path) -> Result<Self> {
        let r: MetricsReport = read_json(path)?;
        check_format(&r.format, METRICS_FORMAT, r.version, path)?;
        Ok(r)
    }
}

/// Cross-tabulates estimated clusters (rows) against true classes (columns).
pub fn contingency(estimate: &[usize], truth: &[usize]) -> Option<ContingencyTable2x2> {
    let est = canonicalize(estimate);
    let tru = canonicalize(truth);
    if label_stats(&est) != 2 || label_stats(&tru) != 2 {
        return None;
    }
    let mut cells = [[0u64; 2]; 2];
    for (&e, &t) in est.iter().zip(&tru) {
        cells[e][t] += 1;
    }
    Some(ContingencyTable2x2 { cells })
}

fn score(source: &str, method: &str, labels: &[usize], truth: &[usize], k0: usize, seconds: Option<f64>) -> Result<MetricEntry> {
    if labels.len() != truth.len() {
        return Err(Error::LengthMismatch { expected: truth.len(), found: labels.len() });
    }
    let k_hat = label_stats(&canonicalize(labels));
    Ok(MetricEntry {
        source: source.into(),
        method: method.into(),
        k_hat,
        ari: adjusted_rand_index(labels, truth)?,
        k_correct: k_hat == k0,
        contingency: contingency(labels, truth).map(ContingencyReport::new).transpose()?,
        seconds,
    })
}

fn format_of(path: &Path) -> Result<String> {
    let v: Value = read_json(path)?;
    Ok(v.get("format").and_then(Value::as_str).unwrap_or("").to_string())
}

/// Scores run results and baseline label files against the labels stored
/// in the `truth` dataset bundle.
pub fn cmd_evaluate(truth: &Path, estimates: &[PathBuf], out: &Path) -> Result<MetricsReport> {
    let bundle = DatasetBundle::read(truth)?;
    let labels = bundle
        .labels
        .ok_or_else(|| Error::Data(format!("{}: dataset has no true labels", truth.display())))?;
    let k0 = label_stats(&canonicalize(&labels));
    let mut entries = Vec::new();
    for path in estimates {
        let source = path.display().to_string();
        match format_of(path)?.as_str() {
            RESULT_FORMAT => {
                let r = RunResult::read(path)?;
                entries.push(score(&source, &r.method(), &r.partition.labels, &labels, k0, Some(r.timing.total_seconds)).map_err(|e| with_path(e, path))?);
            }
            LABELS_FORMAT => {
                for m in LabelsFile::read(path)?.methods {
                    entries.push(score(&source, &m.method, &m.labels, &labels, k0, None).map_err(|e| with_path(e, path))?);
                }
            }
            other => {
                return Err(Error::Data(format!("{source}: cannot evaluate a {other:?} file")));
            }
        }
    }
    let report = MetricsReport {
        format: METRICS_FORMAT.into(),
        version: FORMAT_VERSION,
        truth: truth.display().to_string(),
        k0,
        entries,
    };
    write_json(&report, out)?;
    Ok(report)
}

/// Mean and sd over replicates for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub replicates: usize,
    pub ari_mean: f64,
    pub ari_sd: f64,
    pub k_accuracy: f64,
    pub k_hat_mean: f64,
    pub seconds_mean: Option<f64>,
    pub seconds_sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub format: String,
    pub version: u32,
    pub sources: Vec<String>,
    pub methods: Vec<MethodSummary>,
    pub contingency: Vec<ContingencyReport>,
}

impl AggregateReport {
    /// Plain-text table, one row per method.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<10} {:>5} {:>8} {:>8} {:>8} {:>8} {:>10}\n",
            "method", "reps", "ARI", "sd", "K-acc", "mean K", "seconds"
        );
        for m in &self.methods {
            let secs = m.seconds_mean.map_or("-".to_string(), |s| format!("{s:.2}"));
            out.push_str(&format!(
                "{:<10} {:>5} {:>8.3} {:>8.3} {:>8.2} {:>8.2} {:>10}\n",
                m.method, m.replicates, m.ari_mean, m.ari_sd, m.k_accuracy, m.k_hat_mean, secs
            ));
        }
        for c in &self.contingency {
            out.push_str(&format!("contingency {:?}: Fisher p = {:.3}\n", c.cells, c.fisher_p));
        }
        out
    }
}

/// Aggregates metrics files; methods keep their first-seen order.
pub fn aggregate(reports: &[MetricsReport]) -> AggregateReport {
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<&MetricEntry>> = BTreeMap::new();
    for e in reports.iter().flat_map(|r| &r.entries) {
        if !groups.contains_key(&e.method) {
            order.push(e.method.clone());
        }
        groups.entry(e.method.clone()).or_default().push(e);
    }
    let methods = order
        .iter()
        .map(|m| {
            let es = &groups[m];
            let aris: Vec<f64> = es.iter().map(|e| e.ari).collect();
            let (ari_mean, ari_sd) = mean_and_sd(&aris);
            let secs: Vec<f64> = es.iter().filter_map(|e| e.seconds).collect();
            let (sm, ss) = mean_and_sd(&secs);
            let n = es.len() as f64;
            MethodSummary {
                method: m.clone(),
                replicates: es.len(),
                ari_mean,
                ari_sd,
                k_accuracy: es.iter().filter(|e| e.k_correct).count() as f64 / n,
                k_hat_mean: es.iter().map(|e| e.k_hat as f64).sum::<f64>() / n,
                seconds_mean: (!secs.is_empty()).then_some(sm),
                seconds_sd: (!secs.is_empty()).then_some(ss),
            }
        })
        .collect();
    AggregateReport {
        format: REPORT_FORMAT.into(),
        version: FORMAT_VERSION,
        sources: reports.iter().map(|r| r.truth.clone()).collect(),
        methods,
        contingency: reports
            .iter()
            .flat_map(|r| &r.entries)
            .filter_map(|e| e.contingency.clone())
            .collect(),
    }
}

/// Reads metrics files in parallel and writes the aggregate.
pub fn cmd_report(files: &[PathBuf], out: &Path) -> Result<AggregateReport> {
    if files.is_empty() {
        return Err(Error::config("report", "no metrics files given"));
    }
    let reports = files
        .par_iter()
        .map(|p| MetricsReport::read(p))
        .collect::<Result<Vec<_>>>()?;
    let report = aggregate(&reports);
    write_json(&report, out)?;
    Ok(report)
}
