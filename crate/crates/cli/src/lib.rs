//! Command-line front end: dataset generation, index build/query/inspection
//! and the benchmark harness.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hyperdolphin::bench::{run_bench, write_atomic, BenchConfig, DataSource, OutputFormat, QuerySource, SearchMode, DEFAULT_C};
use hyperdolphin::data::{
    gen_klein, gen_queries, gen_sphere, read_vecs, write_vecs, DEFAULT_KLEIN_NOISE, DEFAULT_P_NEAR, DEFAULT_SPHERE_NOISE,
};
use hyperdolphin::hypercube::read_index_info;
use hyperdolphin::{default_dprime, Dataset, ElementKind, FamilySpec, HypercubeIndex, Metric, QueryParams};

pub const SEED_ENV: &str = "HYPERDOLPHIN_SEED";

#[derive(Parser, Debug)]
#[command(name = "hyperdolphin", version, about = "Linear-space approximate near neighbor search on a Hamming hypercube")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset, and optionally planted queries, as fvecs.
    Gen(GenArgs),
    /// Build an index over a dataset file and save it.
    Build(BuildArgs),
    /// Answer a query file against a saved index, printing JSON.
    Query(QueryArgs),
    /// Run a threshold sweep and report timings and accuracy.
    Bench(BenchArgs),
    /// Print metadata of a saved index.
    Info(InfoArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Shape {
    Sphere,
    Klein,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MetricArg {
    L2,
    L1,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::L2 => Metric::L2,
            MetricArg::L1 => Metric::L1,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FamilyArg {
    Line,
    Hyperplane,
    Grid,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Decision,
    AllNear,
}

impl From<ModeArg> for SearchMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Decision => SearchMode::Decision,
            ModeArg::AllNear => SearchMode::AllNear,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct SeedArg {
    /// RNG seed; the HYPERDOLPHIN_SEED environment variable takes precedence.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SeedArg {
    fn resolve(&self) -> Result<u64> {
        match std::env::var(SEED_ENV) {
            Ok(v) => v.trim().parse().with_context(|| format!("{SEED_ENV}={v:?} is not an unsigned integer")),
            Err(std::env::VarError::NotPresent) => Ok(self.seed),
            Err(e) => bail!("{SEED_ENV}: {e}"),
        }
    }
}

#[derive(Args, Debug)]
struct FamilyArgs {
    #[arg(long, value_enum, default_value = "l2")]
    metric: MetricArg,
    /// Hash family; defaults to the random-line family for l2 and the shifted grid for l1.
    #[arg(long, value_enum)]
    family: Option<FamilyArg>,
    /// Bucket width (line) or grid cell side (grid).
    #[arg(long)]
    w: Option<f64>,
    /// Amplification: hyperplanes per hash, or grids per hash.
    #[arg(long)]
    k: Option<usize>,
}

impl FamilyArgs {
    fn resolve(&self, n: usize, radius: f64, c: f64) -> Result<FamilySpec> {
        let metric = Metric::from(self.metric);
        let family = self.family.unwrap_or(match metric {
            Metric::L2 => FamilyArg::Line,
            Metric::L1 => FamilyArg::Grid,
        });
        let spec = match family {
            FamilyArg::Line => FamilySpec::random_line(self.w.unwrap_or(c * radius)),
            FamilyArg::Hyperplane => FamilySpec::Hyperplane { k: self.k.unwrap_or(1) },
            FamilyArg::Grid => {
                let default = FamilySpec::grid_l1_for(n, radius);
                let FamilySpec::GridL1 { width, k } = default else { unreachable!() };
                let k = self.k.unwrap_or(k);
                let width = self.w.unwrap_or(if self.k.is_some() { k as f64 * radius } else { width });
                FamilySpec::GridL1 { width, k }
            }
        };
        if spec.metric() != metric {
            bail!("family {} works under {}, not {}", spec.name(), spec.metric(), metric);
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Shape,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    /// Per-coordinate Gaussian noise; defaults to 0.1 (sphere) or 0.05 (klein).
    #[arg(long)]
    noise: Option<f64>,
    /// Dataset output path (fvecs).
    #[arg(long)]
    out: PathBuf,
    /// Also write this many planted queries.
    #[arg(long, requires = "queries")]
    m: Option<usize>,
    /// Query output path (fvecs); labels go to the same stem with `.labels.ivecs`.
    #[arg(long, requires = "m")]
    queries: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_P_NEAR)]
    p_near: f64,
    #[arg(long)]
    near_sigma: Option<f64>,
    #[command(flatten)]
    seed: SeedArg,
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    dprime: Option<u32>,
    #[command(flatten)]
    family: FamilyArgs,
    /// Target radius, used only to derive default widths.
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    seed: SeedArg,
}

#[derive(Args, Debug)]
struct QueryArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Candidate budget; `n` means the whole dataset.
    #[arg(long, value_parser = parse_threshold, default_value = "n")]
    threshold: usize,
    #[arg(long)]
    rho_max: Option<u32>,
    #[arg(long, value_enum, default_value = "decision")]
    mode: ModeArg,
    /// Write JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Dataset file; when absent a synthetic dataset is generated.
    #[arg(long, conflicts_with_all = ["kind", "n", "d"])]
    dataset: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "sphere")]
    kind: Shape,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 128)]
    d: usize,
    #[arg(long)]
    noise: Option<f64>,
    /// Query file; when absent queries are planted around dataset points.
    #[arg(long)]
    queries: Option<PathBuf>,
    /// Number of planted queries.
    #[arg(long, default_value_t = 100, conflicts_with = "queries")]
    m: usize,
    #[arg(long, default_value_t = DEFAULT_P_NEAR)]
    p_near: f64,
    #[arg(long)]
    dprime: Option<u32>,
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value_t = DEFAULT_C)]
    c: f64,
    /// Candidate budget; repeat for a sweep. `n` means the whole dataset.
    #[arg(long, value_parser = parse_threshold, default_values = ["n"])]
    threshold: Vec<usize>,
    #[arg(long)]
    rho_max: Option<u32>,
    #[arg(long, value_enum, default_value = "decision")]
    mode: ModeArg,
    #[arg(long, default_value_t = 1)]
    repeat: usize,
    /// Run queries on all cores.
    #[arg(long)]
    parallel: bool,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    #[command(flatten)]
    seed: SeedArg,
}

#[derive(Args, Debug)]
struct InfoArgs {
    #[arg(long)]
    index: PathBuf,
}

fn parse_threshold(s: &str) -> std::result::Result<usize, String> {
    if s == "n" {
        return Ok(usize::MAX);
    }
    match s.parse::<usize>() {
        Ok(0) => Err("threshold must be positive".into()),
        Ok(t) => Ok(t),
        Err(e) => Err(format!("{e} (expected a positive integer or `n`)")),
    }
}

fn element_kind(path: &Path) -> Result<ElementKind> {
    ElementKind::from_path(path)
        .with_context(|| format!("{}: unknown extension, expected .fvecs, .bvecs or .ivecs", path.display()))
}

fn load(path: &Path) -> Result<Dataset> {
    read_vecs(path, element_kind(path)?).with_context(|| format!("reading {}", path.display()))
}

fn labels_path(queries: &Path) -> PathBuf {
    queries.with_extension("labels.ivecs")
}

fn gen(args: GenArgs) -> Result<()> {
    let seed = args.seed.resolve()?;
    let data = match args.kind {
        Shape::Sphere => gen_sphere(args.n, args.d, args.noise.unwrap_or(DEFAULT_SPHERE_NOISE), seed)?,
        Shape::Klein => gen_klein(args.n, args.d, args.noise.unwrap_or(DEFAULT_KLEIN_NOISE), seed)?,
    };
    write_vecs(&data, &args.out, ElementKind::Float32).with_context(|| format!("writing {}", args.out.display()))?;
    if let (Some(m), Some(path)) = (args.m, args.queries) {
        let qs = gen_queries(&data, m, args.p_near, args.near_sigma, seed.wrapping_add(1))?;
        write_vecs(&qs.points, &path, ElementKind::Float32).with_context(|| format!("writing {}", path.display()))?;
        let labels: Vec<f64> = qs.labels.unwrap_or_default().iter().map(|&b| b as u8 as f64).collect();
        let labels = Dataset::new(1, labels)?;
        write_vecs(&labels, labels_path(&path), ElementKind::Int32)?;
    }
    Ok(())
}

fn build(args: BuildArgs) -> Result<()> {
    let seed = args.seed.resolve()?;
    let data = Arc::new(load(&args.dataset)?);
    let dprime = match args.dprime {
        Some(dp) => dp,
        None => default_dprime(data.len().max(2))?,
    };
    let family = args.family.resolve(data.len(), args.radius, DEFAULT_C)?;
    let index = HypercubeIndex::build(data, dprime, family, seed)?;
    index.save(&args.out).with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}

fn query(args: QueryArgs) -> Result<()> {
    let data = Arc::new(load(&args.dataset)?);
    let index = HypercubeIndex::load(&args.index, data.clone()).with_context(|| format!("loading {}", args.index.display()))?;
    let queries = load(&args.queries)?;
    let mut params = QueryParams::new(args.radius, args.threshold.min(data.len()));
    params.rho_max = args.rho_max;
    params.validate(index.dprime())?;
    let mut outcomes = Vec::with_capacity(queries.len());
    for (i, q) in queries.iter().enumerate() {
        let value = match args.mode {
            ModeArg::Decision => {
                let out = index.query_decision(q, &params)?;
                serde_json::json!({ "query": i, "found": out.witness.is_some(), "witness": out.witness, "stats": out.stats })
            }
            ModeArg::AllNear => {
                let out = index.query_all_near(q, &params)?;
                serde_json::json!({ "query": i, "found": !out.neighbors.is_empty(), "neighbors": out.neighbors, "stats": out.stats })
            }
        };
        outcomes.push(value);
    }
    let body = serde_json::to_string_pretty(&outcomes)? + "\n";
    emit(args.out.as_deref(), &body)
}

fn bench(args: BenchArgs) -> Result<()> {
    let seed = args.seed.resolve()?;
    let dataset = match &args.dataset {
        Some(path) => DataSource::File { path: path.clone(), kind: element_kind(path)? },
        None => match args.kind {
            Shape::Sphere => DataSource::Sphere { n: args.n, d: args.d, noise: args.noise.unwrap_or(DEFAULT_SPHERE_NOISE) },
            Shape::Klein => DataSource::Klein { n: args.n, d: args.d, noise: args.noise.unwrap_or(DEFAULT_KLEIN_NOISE) },
        },
    };
    let n = match &dataset {
        DataSource::File { .. } => dataset.load(seed)?.len(),
        DataSource::Sphere { n, .. } | DataSource::Klein { n, .. } => *n,
    };
    let queries = match &args.queries {
        Some(path) => QuerySource::File { path: path.clone(), kind: element_kind(path)? },
        None => QuerySource::Planted { m: args.m, p_near: args.p_near, near_sigma: None },
    };
    let mut thresholds = args.threshold.clone();
    thresholds.sort_unstable();
    thresholds.dedup();
    let mut config = BenchConfig::new(dataset, queries);
    config.dprime = args.dprime;
    config.metric = args.family.metric.into();
    config.family = Some(args.family.resolve(n, args.radius, args.c)?);
    config.radius = args.radius;
    config.c = args.c;
    config.thresholds = thresholds;
    config.rho_max = args.rho_max;
    config.repetitions = args.repeat;
    config.mode = args.mode.into();
    config.seed = seed;
    config.parallel = args.parallel;
    let report = run_bench(&config)?;
    let format = match args.format {
        FormatArg::Csv => OutputFormat::Csv,
        FormatArg::Json => OutputFormat::Json,
    };
    match &args.out {
        Some(path) => report.write(path, format).with_context(|| format!("writing {}", path.display()))?,
        None => emit(None, &match format {
            OutputFormat::Csv => report.to_csv(),
            OutputFormat::Json => report.to_json() + "\n",
        })?,
    }
    Ok(())
}

fn info(args: InfoArgs) -> Result<()> {
    let info = read_index_info(&args.index).with_context(|| format!("reading {}", args.index.display()))?;
    emit(None, &(serde_json::to_string_pretty(&info)? + "\n"))
}

fn emit(path: Option<&Path>, body: &str) -> Result<()> {
    match path {
        Some(path) => write_atomic(path, body.as_bytes()).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit code: 0 on success, 2 on usage errors, 1 on runtime errors.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Build(a) => build(a),
        Command::Query(a) => query(a),
        Command::Bench(a) => bench(a),
        Command::Info(a) => info(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

