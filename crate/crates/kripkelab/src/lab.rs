//! Seeded Monte Carlo experiments: validity-probability estimation, frame
//! statistics, the conditional-uniformity test, and the config-driven
//! experiment runner.
//!
//! Every trial draws from `substream(seed, trial_index)`, and all
//! aggregation is either exact counting or a sequential fold over the
//! trial-ordered value vector, so results are byte-identical across thread
//! counts and schedules.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::classes::{in_class, reduction_height, ClassError, ClassId, ClassScope};
use crate::count::{for_each_frame, CountError};
use crate::formula::Formula;
use crate::frame::{Frame, FrameError, StateSet};
use crate::parser::{parse, ParseError};
use crate::rng::RngStream;
use crate::sample::{census_frames, AllSampler, ConnectedSampler, SampleError};
use crate::semantics::{is_valid, SemanticsError, Validity};

#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error(transparent)]
    Count(#[from] CountError),
    #[error(transparent)]
    Class(#[from] ClassError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Formula(#[from] ParseError),
    #[error("unknown statistic `{0}`")]
    UnknownStatistic(String),
    #[error("config {path}: {message}")]
    Config { path: String, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

// ---------------------------------------------------------------------------
// Statistics helpers
// ---------------------------------------------------------------------------

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    assert!(trials > 0);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Chi-square goodness-of-fit against the uniform distribution over the
/// cells.
#[derive(Clone, Copy, Debug)]
pub struct ChiSquareOutcome {
    pub statistic: f64,
    pub critical: f64,
    pub dof: usize,
    pub pass: bool,
}

pub fn chi_square_uniform(counts: &[u64], alpha: f64) -> ChiSquareOutcome {
    let cells = counts.len();
    assert!(cells >= 1);
    let total: u64 = counts.iter().sum();
    if cells == 1 {
        // single-cell support is trivially uniform
        return ChiSquareOutcome { statistic: 0.0, critical: 0.0, dof: 0, pass: true };
    }
    let expected = total as f64 / cells as f64;
    let statistic: f64 = counts
        .iter()
        .map(|&o| {
            let d = o as f64 - expected;
            d * d / expected
        })
        .sum();
    let dof = cells - 1;
    let critical = ChiSquared::new(dof as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(1.0 - alpha);
    ChiSquareOutcome { statistic, critical, dof, pass: statistic <= critical }
}

// ---------------------------------------------------------------------------
// Validity estimation
// ---------------------------------------------------------------------------

/// One Monte Carlo validity-probability measurement.
#[derive(Clone, Debug, Serialize)]
pub struct EstimateRecord {
    pub class: ClassId,
    pub scope: ClassScope,
    pub formula: String,
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    pub valid_count: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl EstimateRecord {
    pub const CSV_HEADER: &'static str =
        "class,scope,formula,n,trials,seed,valid_count,p_hat,ci_low,ci_high";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},\"{}\",{},{},{},{},{:.6},{:.6},{:.6}",
            self.class,
            self.scope,
            self.formula,
            self.n,
            self.trials,
            self.seed,
            self.valid_count,
            self.p_hat,
            self.ci_low,
            self.ci_high
        )
    }
}

enum Sampler {
    Connected(ConnectedSampler),
    All(AllSampler),
}

impl Sampler {
    fn new(class: ClassId, scope: ClassScope, n: usize) -> Sampler {
        match scope {
            ClassScope::Connected => Sampler::Connected(ConnectedSampler::new(class, n)),
            ClassScope::All => Sampler::All(AllSampler::new(class, n)),
        }
    }

    fn sample(&self, rng: &mut RngStream) -> Frame {
        match self {
            Sampler::Connected(s) => s.sample(rng),
            Sampler::All(s) => s.sample(rng),
        }
    }
}

/// Draws `trials` frames from the structured sampler on
/// `substream(seed, trial)` and model-checks the formula on each.
pub fn estimate_validity(
    class: ClassId,
    scope: ClassScope,
    formula: &Formula,
    n: usize,
    trials: u64,
    seed: u64,
) -> Result<EstimateRecord, LabError> {
    assert!(trials > 0);
    let sampler = Sampler::new(class, scope, n);
    let root = RngStream::new(seed);
    let verdicts: Result<Vec<bool>, SemanticsError> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = root.substream(trial);
            let frame = sampler.sample(&mut rng);
            Ok(is_valid(&frame, formula)?.is_valid())
        })
        .collect();
    let valid_count = verdicts?.into_iter().filter(|&v| v).count() as u64;
    let p_hat = valid_count as f64 / trials as f64;
    let (ci_low, ci_high) = wilson_interval(valid_count, trials, 1.96);
    Ok(EstimateRecord {
        class,
        scope,
        formula: formula.render(),
        n,
        trials,
        seed,
        valid_count,
        p_hat,
        ci_low,
        ci_high,
    })
}

/// Exact validity ratio over the full census: frames in the class/scope on
/// `[n]` that validate the formula, out of the class total.
pub fn exact_validity_ratio(
    class: ClassId,
    scope: ClassScope,
    formula: &Formula,
    n: usize,
) -> Result<(u64, u64), LabError> {
    let mut valid = 0u64;
    let mut total = 0u64;
    let mut first_error: Option<SemanticsError> = None;
    for_each_frame(n, |f| {
        if first_error.is_some() || !in_class(class, scope, f) {
            return;
        }
        total += 1;
        match is_valid(f, formula) {
            Ok(Validity::Valid) => valid += 1,
            Ok(Validity::Refuted { .. }) => {}
            Err(e) => first_error = Some(e),
        }
    })?;
    if let Some(e) = first_error {
        return Err(e.into());
    }
    Ok((valid, total))
}

// ---------------------------------------------------------------------------
// Frame statistics
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum StatisticName {
    MaxComponentSize,
    ClusterCoreSize,
    TreeHeight,
    IrreflexiveSingletonCount,
    OutdegSpreadHolds(usize),
}

impl fmt::Display for StatisticName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatisticName::MaxComponentSize => f.write_str("max_component_size"),
            StatisticName::ClusterCoreSize => f.write_str("cluster_core_size"),
            StatisticName::TreeHeight => f.write_str("tree_height"),
            StatisticName::IrreflexiveSingletonCount => {
                f.write_str("irreflexive_singleton_count")
            }
            StatisticName::OutdegSpreadHolds(r) => write!(f, "outdeg_spread_holds({r})"),
        }
    }
}

impl FromStr for StatisticName {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self, LabError> {
        match s {
            "max_component_size" => Ok(StatisticName::MaxComponentSize),
            "cluster_core_size" => Ok(StatisticName::ClusterCoreSize),
            "tree_height" => Ok(StatisticName::TreeHeight),
            "irreflexive_singleton_count" => Ok(StatisticName::IrreflexiveSingletonCount),
            other => {
                if let Some(inner) = other
                    .strip_prefix("outdeg_spread_holds(")
                    .and_then(|rest| rest.strip_suffix(')'))
                {
                    if let Ok(r) = inner.parse::<usize>() {
                        return Ok(StatisticName::OutdegSpreadHolds(r));
                    }
                }
                Err(LabError::UnknownStatistic(other.to_string()))
            }
        }
    }
}

/// Evaluates one statistic on a frame; booleans come back as 0/1.
pub fn frame_statistic(frame: &Frame, stat: StatisticName) -> Result<f64, LabError> {
    match stat {
        StatisticName::MaxComponentSize => {
            Ok(frame.connected_components().max_block_size() as f64)
        }
        StatisticName::ClusterCoreSize => Ok(frame.cluster_core()?.len() as f64),
        StatisticName::TreeHeight => {
            // infer the flavor from the diagonal
            let class = if frame.has_edge(0, 0) { ClassId::Grz3 } else { ClassId::Gl3 };
            Ok(reduction_height(frame, class)? as f64)
        }
        StatisticName::IrreflexiveSingletonCount => {
            let singletons = frame
                .connected_components()
                .blocks()
                .iter()
                .filter(|b| b.len() == 1 && !frame.has_edge(b[0], b[0]))
                .count();
            Ok(singletons as f64)
        }
        StatisticName::OutdegSpreadHolds(r) => {
            let core = frame.cluster_core()?;
            let core_size = core.len();
            let holds = (0..frame.n()).any(|a| {
                if core.contains(a) {
                    return false;
                }
                let degree = frame.out_degree(a);
                degree > r && degree + r < core_size
            });
            Ok(if holds { 1.0 } else { 0.0 })
        }
    }
}

/// One row of a statistic sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub class: ClassId,
    pub scope: ClassScope,
    pub stat: String,
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    pub mean: f64,
    pub variance: f64,
    pub threshold: Option<f64>,
    pub freq_exceed: Option<f64>,
}

impl SweepRow {
    pub const CSV_HEADER: &'static str =
        "class,scope,stat,n,trials,seed,mean,variance,threshold,freq_exceed";

    pub fn csv_row(&self) -> String {
        let threshold = self.threshold.map(|t| format!("{t:.6}")).unwrap_or_default();
        let freq = self.freq_exceed.map(|f| format!("{f:.6}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{:.6},{:.6},{},{}",
            self.class,
            self.scope,
            self.stat,
            self.n,
            self.trials,
            self.seed,
            self.mean,
            self.variance,
            threshold,
            freq
        )
    }
}

/// Per n: empirical mean, sample variance, and the frequency of values
/// strictly above the threshold (when one is given), over `trials` sampled
/// frames.
pub fn stat_sweep(
    class: ClassId,
    scope: ClassScope,
    stat: StatisticName,
    ns: &[usize],
    trials: u64,
    seed: u64,
    threshold: Option<f64>,
) -> Result<Vec<SweepRow>, LabError> {
    assert!(trials > 0);
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let sampler = Sampler::new(class, scope, n);
        let root = RngStream::new(seed);
        let values: Result<Vec<f64>, LabError> = (0..trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = root.substream(trial);
                let frame = sampler.sample(&mut rng);
                frame_statistic(&frame, stat)
            })
            .collect();
        let values = values?;
        // sequential fold in trial order keeps the result thread-count
        // independent
        let mean = values.iter().sum::<f64>() / trials as f64;
        let variance = if trials > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (trials - 1) as f64
        } else {
            0.0
        };
        let freq_exceed = threshold
            .map(|t| values.iter().filter(|&&v| v > t).count() as f64 / trials as f64);
        rows.push(SweepRow {
            class,
            scope,
            stat: stat.to_string(),
            n,
            trials,
            seed,
            mean,
            variance,
            threshold,
            freq_exceed,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Conditional uniformity
// ---------------------------------------------------------------------------

/// Minimum stratum occupancy for a chi-square verdict; smaller strata are
/// reported but excluded from the overall pass.
pub const MIN_STRATUM_SAMPLES: u64 = 50;

#[derive(Clone, Debug, Serialize)]
pub struct UniformityStratum {
    pub component_size: usize,
    pub support: usize,
    pub samples: u64,
    pub statistic: f64,
    pub critical: f64,
    pub excluded: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct UniformityReport {
    pub class: ClassId,
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    pub alpha: f64,
    pub strata: Vec<UniformityStratum>,
    /// Every stratum with enough samples passed.
    pub pass: bool,
}

impl UniformityReport {
    pub const CSV_HEADER: &'static str =
        "class,scope,n,trials,seed,component_size,support,samples,chisq,critical,excluded,pass";

    pub fn csv_rows(&self) -> Vec<String> {
        self.strata
            .iter()
            .map(|s| {
                format!(
                    "{},all,{},{},{},{},{},{},{:.6},{:.6},{},{}",
                    self.class,
                    self.n,
                    self.trials,
                    self.seed,
                    s.component_size,
                    s.support,
                    s.samples,
                    s.statistic,
                    s.critical,
                    s.excluded,
                    s.pass
                )
            })
            .collect()
    }
}

/// Samples scope=all frames, takes the maximal connected component (ties
/// broken by the component holding the smallest state), monotone-relabels
/// the subframe it generates, and chi-square-tests the result against the
/// uniform distribution over the connected census, stratified by component
/// size.
pub fn conditional_uniformity_test(
    class: ClassId,
    n: usize,
    trials: u64,
    seed: u64,
    alpha: f64,
) -> Result<UniformityReport, LabError> {
    assert!(trials > 0);
    // exact connected census per size, as an index
    let mut census_index: Vec<HashMap<Frame, usize>> = Vec::with_capacity(n + 1);
    let mut support_sizes = vec![0usize; n + 1];
    census_index.push(HashMap::new()); // size 0 unused
    for m in 1..=n {
        let frames = census_frames(class, ClassScope::Connected, m)?;
        support_sizes[m] = frames.len();
        census_index.push(
            frames
                .into_iter()
                .enumerate()
                .map(|(i, f)| (f, i))
                .collect(),
        );
    }

    let sampler = AllSampler::new(class, n);
    let root = RngStream::new(seed);
    let observations: Result<Vec<(usize, usize)>, LabError> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = root.substream(trial);
            let frame = sampler.sample(&mut rng);
            let components = frame.connected_components();
            let max_size = components.max_block_size();
            // blocks are ordered by minimum element, so the first block of
            // maximal size is the one containing the smallest state among
            // the maximal components
            let block = components
                .blocks()
                .iter()
                .find(|b| b.len() == max_size)
                .expect("some block is maximal");
            let sub = frame.monotone_relabel(&StateSet::from_states(n, block.iter().copied()))?;
            let index = *census_index[max_size]
                .get(&sub)
                .expect("component of a class frame lies in the connected census");
            Ok((max_size, index))
        })
        .collect();

    let mut counts: Vec<Vec<u64>> = (0..=n).map(|m| vec![0u64; support_sizes[m]]).collect();
    for (m, index) in observations? {
        counts[m][index] += 1;
    }

    let mut strata = Vec::new();
    let mut pass = true;
    for m in 1..=n {
        if support_sizes[m] == 0 {
            continue;
        }
        let samples: u64 = counts[m].iter().sum();
        if samples == 0 {
            continue;
        }
        let excluded = samples < MIN_STRATUM_SAMPLES;
        let outcome = chi_square_uniform(&counts[m], alpha);
        if !excluded && !outcome.pass {
            pass = false;
        }
        strata.push(UniformityStratum {
            component_size: m,
            support: support_sizes[m],
            samples,
            statistic: outcome.statistic,
            critical: outcome.critical,
            excluded,
            pass: outcome.pass,
        });
    }
    Ok(UniformityReport { class, n, trials, seed, alpha, strata, pass })
}

// ---------------------------------------------------------------------------
// Experiment runner
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct JobSpec {
    pub kind: String,
    pub class: String,
    pub scope: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formula: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stat: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    pub ns: Vec<usize>,
    pub trials: u64,
    pub seed: u64,
    pub out: String,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct ExperimentConfig {
    pub jobs: Vec<JobSpec>,
    /// Manifest output path, relative to the config file; defaults to
    /// `manifest.json`.
    #[serde(default)]
    pub manifest: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct JobOutcome {
    pub kind: String,
    pub out: String,
    pub status: String,
    pub rows: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub version: String,
    pub config: String,
    pub wall_time_secs: f64,
    pub jobs: Vec<JobOutcome>,
    #[serde(skip)]
    pub manifest_path: PathBuf,
}

fn config_error(path: &Path, message: impl Into<String>) -> LabError {
    LabError::Config { path: path.display().to_string(), message: message.into() }
}

fn run_job(job: &JobSpec, base: &Path) -> Result<(PathBuf, usize), LabError> {
    let class: ClassId = job
        .class
        .parse()
        .map_err(|e| config_error(base, format!("{e}")))?;
    let scope: ClassScope = job
        .scope
        .parse()
        .map_err(|e| config_error(base, format!("{e}")))?;
    if job.ns.is_empty() {
        return Err(config_error(base, "job has an empty `ns` list"));
    }
    if job.trials == 0 {
        return Err(config_error(base, "job has zero trials"));
    }
    let out_path = base.join(&job.out);
    let mut lines = Vec::new();
    match job.kind.as_str() {
        "estimate" => {
            let text = job
                .formula
                .as_deref()
                .ok_or_else(|| config_error(base, "estimate job needs a formula"))?;
            let formula = parse(text)?;
            lines.push(EstimateRecord::CSV_HEADER.to_string());
            for &n in &job.ns {
                let record =
                    estimate_validity(class, scope, &formula, n, job.trials, job.seed)?;
                lines.push(record.csv_row());
            }
        }
        "sweep" => {
            let stat: StatisticName = job
                .stat
                .as_deref()
                .ok_or_else(|| config_error(base, "sweep job needs a stat"))?
                .parse()?;
            lines.push(SweepRow::CSV_HEADER.to_string());
            for row in stat_sweep(class, scope, stat, &job.ns, job.trials, job.seed, job.threshold)? {
                lines.push(row.csv_row());
            }
        }
        "uniformity" => {
            lines.push(UniformityReport::CSV_HEADER.to_string());
            for &n in &job.ns {
                let report =
                    conditional_uniformity_test(class, n, job.trials, job.seed, 1e-3)?;
                lines.extend(report.csv_rows());
            }
        }
        other => {
            return Err(config_error(base, format!("unknown job kind `{other}`")));
        }
    }
    let body = lines.join("\n") + "\n";
    if let Some(parent) = out_path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|source| LabError::Io { path: parent.display().to_string(), source })?;
    }
    std::fs::write(&out_path, body)
        .map_err(|source| LabError::Io { path: out_path.display().to_string(), source })?;
    Ok((out_path, lines.len() - 1))
}

/// Executes the jobs of a JSON experiment config, writing one CSV per job
/// and a JSON manifest. Per-job failures are isolated: a failing job is
/// recorded in the manifest and the remaining jobs still run.
pub fn run_experiment(config_path: &Path) -> Result<RunSummary, LabError> {
    let started = Instant::now();
    let text = std::fs::read_to_string(config_path)
        .map_err(|source| LabError::Io { path: config_path.display().to_string(), source })?;
    let config: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| config_error(config_path, e.to_string()))?;
    if config.jobs.is_empty() {
        return Err(config_error(config_path, "no jobs"));
    }
    let mut seen_outputs = std::collections::HashSet::new();
    for job in &config.jobs {
        if !seen_outputs.insert(job.out.clone()) {
            return Err(config_error(
                config_path,
                format!("duplicate output path `{}`", job.out),
            ));
        }
    }

    let base = config_path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let mut outcomes = Vec::with_capacity(config.jobs.len());
    for job in &config.jobs {
        let outcome = match run_job(job, &base) {
            Ok((_, rows)) => JobOutcome {
                kind: job.kind.clone(),
                out: job.out.clone(),
                status: "ok".to_string(),
                rows,
            },
            Err(e) => JobOutcome {
                kind: job.kind.clone(),
                out: job.out.clone(),
                status: format!("error: {e}"),
                rows: 0,
            },
        };
        outcomes.push(outcome);
    }

    let manifest_rel = config.manifest.as_deref().unwrap_or("manifest.json");
    let manifest_path = base.join(manifest_rel);
    let summary = RunSummary {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config_path.display().to_string(),
        wall_time_secs: started.elapsed().as_secs_f64(),
        jobs: outcomes,
        manifest_path: manifest_path.clone(),
    };
    let manifest_json =
        serde_json::to_string_pretty(&summary).expect("manifest serializes");
    std::fs::write(&manifest_path, manifest_json + "\n")
        .map_err(|source| LabError::Io { path: manifest_path.display().to_string(), source })?;
    Ok(summary)
}

impl Serialize for ClassId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl Serialize for ClassScope {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}
