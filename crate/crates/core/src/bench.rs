//! Benchmark driver: builds indices over a threshold sweep, times queries
//! against the brute-force oracle, and reports accuracy and cost.
//!
//! Timings are wall-clock. Every query pass is run twice and the first pass
//! is discarded. Memory is reported as serialized index size plus dataset
//! bytes, not process RSS.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{
    gen_klein, gen_queries, gen_sphere, read_vecs, Dataset, ElementKind, QuerySet,
};
use crate::error::{check_dim, parameter, Result};
use crate::hypercube::{default_dprime, HypercubeIndex};
use crate::lsh::{FamilySpec, Metric};
use crate::search::{brute_force_near, Neighbor, QueryParams, SearchStats};

/// Fixed CSV header of a report.
pub const CSV_HEADER: &str = "config_id,n,d,dprime,metric,w,threshold,build_s,query_mean_s,query_median_s,candidates_mean,buckets_mean,accuracy,speedup,index_bytes";

/// Default approximation factor; the random-line width defaults to `c·r`.
pub const DEFAULT_C: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataSource {
    File { path: PathBuf, kind: ElementKind },
    Sphere { n: usize, d: usize, noise: f64 },
    Klein { n: usize, d: usize, noise: f64 },
}

impl DataSource {
    pub fn load(&self, seed: u64) -> Result<Dataset> {
        match *self {
            DataSource::File { ref path, kind } => read_vecs(path, kind),
            DataSource::Sphere { n, d, noise } => gen_sphere(n, d, noise, seed),
            DataSource::Klein { n, d, noise } => gen_klein(n, d, noise, seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum QuerySource {
    File { path: PathBuf, kind: ElementKind },
    /// Queries planted around dataset points, see [`gen_queries`].
    Planted { m: usize, p_near: f64, near_sigma: Option<f64> },
}

impl QuerySource {
    pub fn load(&self, dataset: &Dataset, seed: u64) -> Result<QuerySet> {
        match *self {
            QuerySource::File { ref path, kind } => Ok(QuerySet::unlabeled(read_vecs(path, kind)?)),
            QuerySource::Planted { m, p_near, near_sigma } => gen_queries(dataset, m, p_near, near_sigma, seed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    /// Stop at the first point within the radius.
    Decision,
    /// Collect every point within the radius until the threshold.
    AllNear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchConfig {
    pub dataset: DataSource,
    pub queries: QuerySource,
    /// Hypercube dimension; `None` uses `floor(log2 n)`.
    pub dprime: Option<u32>,
    pub metric: Metric,
    /// Hash family; `None` picks the random-line family of width `c·r` for ℓ2
    /// or the `α = k = log2 n` grid for ℓ1.
    pub family: Option<FamilySpec>,
    pub radius: f64,
    pub c: f64,
    /// Candidate thresholds, strictly ascending. Values above `n` are capped at `n`.
    pub thresholds: Vec<usize>,
    pub rho_max: Option<u32>,
    pub repetitions: usize,
    pub mode: SearchMode,
    pub seed: u64,
    /// Run queries on the rayon pool; per-query times are then per-thread.
    pub parallel: bool,
}

impl BenchConfig {
    pub fn new(dataset: DataSource, queries: QuerySource) -> Self {
        Self {
            dataset,
            queries,
            dprime: None,
            metric: Metric::L2,
            family: None,
            radius: 1.0,
            c: DEFAULT_C,
            thresholds: vec![usize::MAX],
            rho_max: None,
            repetitions: 1,
            mode: SearchMode::Decision,
            seed: 0,
            parallel: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.thresholds.is_empty() {
            return Err(parameter("threshold sweep is empty"));
        }
        if self.thresholds[0] == 0 || self.thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(parameter("thresholds must be positive and strictly ascending"));
        }
        if self.repetitions == 0 {
            return Err(parameter("repetitions must be at least 1"));
        }
        if !(self.radius >= 0.0 && self.radius.is_finite()) {
            return Err(parameter(format!("radius must be non-negative, got {}", self.radius)));
        }
        if !(self.c > 1.0) {
            return Err(parameter(format!("c must exceed 1, got {}", self.c)));
        }
        if let Some(family) = self.family {
            family.validate()?;
            if family.metric() != self.metric {
                return Err(parameter(format!(
                    "family {} works under {}, not {}",
                    family.name(),
                    family.metric(),
                    self.metric
                )));
            }
        }
        Ok(())
    }

    /// The family used for a dataset of `n` points.
    pub fn resolve_family(&self, n: usize) -> FamilySpec {
        self.family.unwrap_or(match self.metric {
            Metric::L2 => FamilySpec::random_line(self.c * self.radius.max(f64::MIN_POSITIVE)),
            Metric::L1 => FamilySpec::grid_l1_for(n, self.radius.max(f64::MIN_POSITIVE)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub config_id: usize,
    pub n: usize,
    pub d: usize,
    pub dprime: u32,
    pub metric: Metric,
    pub family: FamilySpec,
    pub w: Option<f64>,
    pub threshold: usize,
    pub build_s: f64,
    pub query_mean_s: f64,
    pub query_median_s: f64,
    pub candidates_mean: f64,
    pub buckets_mean: f64,
    /// `decision_accuracy` in decision mode, `recall` in all-near mode.
    pub accuracy: f64,
    /// Fraction of queries whose yes/no answer matches the oracle.
    pub decision_accuracy: f64,
    /// Fraction of the oracle's near pairs that were reported.
    pub recall: f64,
    /// Brute-force mean query time over index mean query time.
    pub speedup: f64,
    pub index_bytes: usize,
}

impl BenchRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{:.9},{:.9},{:.9},{:.3},{:.3},{:.6},{:.3},{}",
            self.config_id,
            self.n,
            self.d,
            self.dprime,
            self.metric,
            self.w.map(|w| w.to_string()).unwrap_or_default(),
            self.threshold,
            self.build_s,
            self.query_mean_s,
            self.query_median_s,
            self.candidates_mean,
            self.buckets_mean,
            self.accuracy,
            self.speedup,
            self.index_bytes
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub queries: usize,
    /// Queries the oracle answers "yes" for.
    pub oracle_positives: usize,
    pub brute_force_mean_s: f64,
    pub dataset_bytes: usize,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.csv_line());
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Writes the report through a temporary file and a rename.
    pub fn write(&self, path: &Path, format: OutputFormat) -> Result<()> {
        let body = match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        };
        write_atomic(path, body.as_bytes())
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp_name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = (|| {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

/// Exact answers for a query set.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub near: Vec<Vec<Neighbor>>,
    pub mean_query_s: f64,
}

impl GroundTruth {
    /// Runs the brute-force scan over every query twice and times the second pass.
    pub fn compute(dataset: &Dataset, queries: &Dataset, radius: f64, metric: Metric) -> Result<Self> {
        check_dim(dataset.dim(), queries.dim())?;
        let mut near = Vec::new();
        let mut elapsed = 0.0;
        for pass in 0..2 {
            let start = Instant::now();
            near = queries
                .iter()
                .map(|q| brute_force_near(dataset, q, radius, metric))
                .collect::<Result<Vec<_>>>()?;
            if pass == 1 {
                elapsed = start.elapsed().as_secs_f64();
            }
        }
        Ok(Self { near, mean_query_s: elapsed / queries.len() as f64 })
    }

    pub fn positives(&self) -> usize {
        self.near.iter().filter(|n| !n.is_empty()).count()
    }
}

/// Per-query results of one pass over a query set.
#[derive(Debug, Clone)]
pub struct QueryPass {
    pub found: Vec<Vec<u32>>,
    pub stats: Vec<SearchStats>,
    pub seconds: Vec<f64>,
}

impl QueryPass {
    pub fn run(index: &HypercubeIndex, queries: &Dataset, params: &QueryParams, mode: SearchMode, parallel: bool) -> Result<Self> {
        let one = |q: &[f64]| -> Result<(Vec<u32>, SearchStats, f64)> {
            let start = Instant::now();
            let (found, stats) = match mode {
                SearchMode::Decision => {
                    let out = index.query_decision(q, params)?;
                    (out.witness.map(|w| w.id).into_iter().collect(), out.stats)
                }
                SearchMode::AllNear => {
                    let out = index.query_all_near(q, params)?;
                    (out.neighbors.iter().map(|n| n.id).collect(), out.stats)
                }
            };
            Ok((found, stats, start.elapsed().as_secs_f64()))
        };
        let results: Vec<_> = if parallel {
            queries.as_flat().par_chunks_exact(queries.dim()).map(one).collect::<Result<_>>()?
        } else {
            queries.iter().map(one).collect::<Result<_>>()?
        };
        let mut pass = QueryPass { found: Vec::new(), stats: Vec::new(), seconds: Vec::new() };
        for (found, stats, secs) in results {
            pass.found.push(found);
            pass.stats.push(stats);
            pass.seconds.push(secs);
        }
        Ok(pass)
    }

    /// Fraction of queries where "found something" agrees with the oracle.
    pub fn decision_accuracy(&self, truth: &GroundTruth) -> f64 {
        let agree = self
            .found
            .iter()
            .zip(&truth.near)
            .filter(|(f, t)| f.is_empty() == t.is_empty())
            .count();
        agree as f64 / self.found.len() as f64
    }

    /// Reported oracle pairs over all oracle pairs; 1 when the oracle has none.
    pub fn recall(&self, truth: &GroundTruth) -> f64 {
        let total: usize = truth.near.iter().map(Vec::len).sum();
        if total == 0 {
            return 1.0;
        }
        let hit: usize = self
            .found
            .iter()
            .zip(&truth.near)
            .map(|(f, t)| f.iter().filter(|id| t.iter().any(|n| n.id == **id)).count())
            .sum();
        hit as f64 / total as f64
    }

    /// Fraction of oracle-positive queries that found at least one point.
    pub fn positive_hit_rate(&self, truth: &GroundTruth) -> f64 {
        let positives = truth.positives();
        if positives == 0 {
            return 1.0;
        }
        let hits = self
            .found
            .iter()
            .zip(&truth.near)
            .filter(|(f, t)| !t.is_empty() && !f.is_empty())
            .count();
        hits as f64 / positives as f64
    }

    pub fn mean_candidates(&self) -> f64 {
        mean(self.stats.iter().map(|s| s.candidates_examined as f64))
    }

    pub fn mean_buckets(&self) -> f64 {
        mean(self.stats.iter().map(|s| s.buckets_visited as f64))
    }
}

pub fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, count) = xs.into_iter().fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    }
}

/// Builds an index and times the build.
pub fn timed_build(dataset: Arc<Dataset>, dprime: u32, family: FamilySpec, seed: u64) -> Result<(HypercubeIndex, f64)> {
    let start = Instant::now();
    let index = HypercubeIndex::build(dataset, dprime, family, seed)?;
    Ok((index, start.elapsed().as_secs_f64()))
}

pub fn run_bench(config: &BenchConfig) -> Result<BenchReport> {
    config.validate()?;
    let dataset = Arc::new(config.dataset.load(config.seed)?);
    let queries = config.queries.load(&dataset, config.seed.wrapping_add(1))?;
    check_dim(dataset.dim(), queries.points.dim())?;
    let n = dataset.len();
    let dprime = match config.dprime {
        Some(dp) => dp,
        None => default_dprime(n.max(2))?,
    };
    let family = config.resolve_family(n);
    if family.metric() != config.metric {
        return Err(parameter(format!("family {} does not match metric {}", family.name(), config.metric)));
    }
    let truth = GroundTruth::compute(&dataset, &queries.points, config.radius, config.metric)?;

    let mut rows = Vec::with_capacity(config.thresholds.len());
    for (config_id, &requested) in config.thresholds.iter().enumerate() {
        let threshold = requested.min(n);
        let params = QueryParams {
            radius: config.radius,
            c: Some(config.c),
            threshold,
            rho_max: config.rho_max,
        };
        let mut build_times = Vec::with_capacity(config.repetitions);
        let mut query_times = Vec::new();
        let mut last: Option<(HypercubeIndex, QueryPass)> = None;
        for _ in 0..config.repetitions {
            let (index, build_s) = timed_build(dataset.clone(), dprime, family, config.seed)?;
            build_times.push(build_s);
            QueryPass::run(&index, &queries.points, &params, config.mode, config.parallel)?;
            let pass = QueryPass::run(&index, &queries.points, &params, config.mode, config.parallel)?;
            query_times.extend_from_slice(&pass.seconds);
            last = Some((index, pass));
        }
        let (index, pass) = last.expect("at least one repetition");
        let decision_accuracy = pass.decision_accuracy(&truth);
        let recall = pass.recall(&truth);
        let query_mean_s = mean(query_times.iter().copied());
        rows.push(BenchRow {
            config_id,
            n,
            d: dataset.dim(),
            dprime,
            metric: config.metric,
            family,
            w: family.width(),
            threshold,
            build_s: median(&build_times),
            query_mean_s,
            query_median_s: median(&query_times),
            candidates_mean: pass.mean_candidates(),
            buckets_mean: pass.mean_buckets(),
            accuracy: match config.mode {
                SearchMode::Decision => decision_accuracy,
                SearchMode::AllNear => recall,
            },
            decision_accuracy,
            recall,
            speedup: truth.mean_query_s / query_mean_s,
            index_bytes: index.to_bytes().len(),
        });
    }

    Ok(BenchReport {
        config: config.clone(),
        queries: queries.len(),
        oracle_positives: truth.positives(),
        brute_force_mean_s: truth.mean_query_s,
        dataset_bytes: dataset.byte_size(),
        rows,
    })
}
