//! Experiment harness: parameter grids over seed nodes, per-run records and
//! CSV output.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::clustering::sweep;
use crate::error::{Error, Result};
use crate::estimators::{Delta, Estimator, HkprParams, Method};
use crate::graph::{load_edge_list_file, Graph, NodeId};
use crate::oracle::{best_f1_for_seed, exact_hkpr, load_communities, ndcg_at, DEFAULT_ITERATIONS};
use crate::sampling::RandomSource;
use crate::synthetic::{generate_synthetic, GeneratorKind, SyntheticSize};

/// Where the experiment graph comes from.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSource {
    pub path: Option<PathBuf>,
    pub generator: Option<GeneratorKind>,
    /// Node count, or lattice side for `grid3d`.
    pub size: Option<usize>,
    /// Edges per new node for `powerlaw_cluster`.
    pub m: Option<usize>,
    /// Triad probability for `powerlaw_cluster`.
    pub p: Option<f64>,
    /// Generator seed; the experiment seed when absent.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterGrid {
    #[serde(default = "default_methods")]
    pub methods: Vec<String>,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<String>,
    #[serde(default = "default_eps")]
    pub eps_r: Vec<f64>,
    #[serde(default = "default_t")]
    pub t: Vec<f64>,
    /// Only TEA+ depends on `c`; the other methods run once per cell.
    #[serde(default = "default_c")]
    pub c: Vec<f64>,
    #[serde(default = "default_pf")]
    pub p_f: f64,
}

fn default_methods() -> Vec<String> {
    Method::ALL.iter().map(|m| m.as_str().to_string()).collect()
}
fn default_deltas() -> Vec<String> {
    vec!["1/n".into()]
}
fn default_eps() -> Vec<f64> {
    vec![0.5]
}
fn default_t() -> Vec<f64> {
    vec![5.0]
}
fn default_c() -> Vec<f64> {
    vec![2.5]
}
fn default_pf() -> f64 {
    1e-6
}

impl Default for ParameterGrid {
    fn default() -> Self {
        Self {
            methods: default_methods(),
            deltas: default_deltas(),
            eps_r: default_eps(),
            t: default_t(),
            c: default_c(),
            p_f: default_pf(),
        }
    }
}

/// Seed nodes given explicitly by label or drawn at random.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum SeedSelection {
    Labels(Vec<String>),
    Count(usize),
}

/// Experiment description, normally read from TOML.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub graph: GraphSource,
    pub seeds: SeedSelection,
    #[serde(default)]
    pub grid: ParameterGrid,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    /// Master seed for seed-node selection and every run's RNG stream.
    #[serde(default)]
    pub rng_seed: u64,
    /// Community file for F1.
    pub ground_truth: Option<PathBuf>,
    /// Compute NDCG against the power-method oracle (dense, one per seed).
    #[serde(default)]
    pub ndcg: bool,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default = "default_threads")]
    pub threads: usize,
    /// Run independent queries concurrently. Timings are then not
    /// comparable across methods.
    #[serde(default)]
    pub parallel_runs: bool,
}

fn default_repetitions() -> usize {
    1
}
fn default_top_k() -> usize {
    100
}
fn default_threads() -> usize {
    1
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a TOML file; relative paths inside resolve against its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut spec = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        if let Some(p) = spec.graph.path.as_mut() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(p) = spec.ground_truth.as_mut() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(spec)
    }

    pub fn load_graph(&self) -> Result<Graph> {
        let src = &self.graph;
        match (&src.path, src.generator) {
            (Some(path), None) => Ok(load_edge_list_file(path)?.0),
            (None, Some(kind)) => {
                let defaults = SyntheticSize::default();
                let size = SyntheticSize {
                    size: src.size.unwrap_or(defaults.size),
                    m: src.m.unwrap_or(defaults.m),
                    p: src.p.unwrap_or(defaults.p),
                };
                generate_synthetic(kind, size, src.seed.unwrap_or(self.rng_seed))
            }
            _ => Err(Error::Config(
                "graph needs exactly one of `path` or `generator`".into(),
            )),
        }
    }
}

/// One query's outcome. `ndcg` and `f1` are empty when not computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: String,
    pub eps_r: f64,
    pub delta: f64,
    pub t: f64,
    /// Empty for methods that ignore it.
    pub c: Option<f64>,
    pub seed_node: String,
    pub wall_ms: f64,
    pub pushes: u64,
    pub walks: u64,
    pub cluster_size: usize,
    pub conductance: f64,
    pub ndcg: Option<f64>,
    pub f1: Option<f64>,
}

/// A run that raised an error instead of producing a record.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub method: String,
    pub seed_node: String,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct BenchReport {
    pub records: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
    /// Set when runs executed concurrently.
    pub parallel: bool,
}

/// Mean statistics of the records sharing one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigSummary {
    pub method: String,
    pub eps_r: f64,
    pub delta: f64,
    pub t: f64,
    pub c: Option<f64>,
    pub runs: usize,
    pub mean_wall_ms: f64,
    pub mean_pushes: f64,
    pub mean_walks: f64,
    pub mean_conductance: f64,
    /// Standard error of the mean conductance.
    pub conductance_stderr: f64,
    pub mean_ndcg: Option<f64>,
    pub mean_f1: Option<f64>,
}

/// One cell of the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Config {
    method: Method,
    eps_r: f64,
    delta: Delta,
    t: f64,
    c: Option<f64>,
}

fn expand_grid(grid: &ParameterGrid) -> Result<Vec<Config>> {
    let methods = grid
        .methods
        .iter()
        .map(|m| m.parse::<Method>())
        .collect::<Result<Vec<_>>>()?;
    let deltas = grid
        .deltas
        .iter()
        .map(|d| d.parse::<Delta>())
        .collect::<Result<Vec<_>>>()?;
    if methods.is_empty() || deltas.is_empty() || grid.eps_r.is_empty() || grid.t.is_empty() || grid.c.is_empty() {
        return Err(Error::Config("every grid axis needs at least one value".into()));
    }
    let mut out = Vec::new();
    for &method in &methods {
        let cs: Vec<Option<f64>> = if method == Method::TeaPlus {
            grid.c.iter().copied().map(Some).collect()
        } else {
            vec![None]
        };
        for &delta in &deltas {
            for &eps_r in &grid.eps_r {
                for &t in &grid.t {
                    for &c in &cs {
                        out.push(Config {
                            method,
                            eps_r,
                            delta,
                            t,
                            c,
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Draws `count` distinct non-isolated nodes.
pub fn sample_seed_nodes(g: &Graph, count: usize, rng: &mut RandomSource) -> Result<Vec<NodeId>> {
    let candidates: Vec<NodeId> = (0..g.n()).filter(|&v| g.degree(v) > 0).collect();
    if count > candidates.len() {
        return Err(Error::Config(format!(
            "asked for {count} seed nodes but only {} are non-isolated",
            candidates.len()
        )));
    }
    // Partial Fisher–Yates keeps the draw deterministic for a given stream.
    let mut pool = candidates;
    for i in 0..count {
        let j = i + rng.below(pool.len() - i);
        pool.swap(i, j);
    }
    pool.truncate(count);
    Ok(pool)
}

struct Job {
    index: u64,
    config: Config,
    seed: NodeId,
}

struct Context<'a> {
    graph: &'a Graph,
    spec: &'a ExperimentSpec,
    communities: Option<Vec<Vec<NodeId>>>,
    exact: FxHashMap<(NodeId, u64), crate::oracle::ExactHkpr>,
}

fn params_for(spec: &ExperimentSpec, config: &Config, rng_seed: u64) -> HkprParams {
    HkprParams {
        t: config.t,
        eps_r: config.eps_r,
        delta: config.delta,
        p_f: spec.grid.p_f,
        c: config.c.unwrap_or(HkprParams::default().c),
        r_max: None,
        hop_cap: None,
        seed: rng_seed,
        threads: spec.threads,
    }
}

fn run_one(ctx: &Context<'_>, job: &Job) -> std::result::Result<RunRecord, RunFailure> {
    let g = ctx.graph;
    let fail = |e: Error| RunFailure {
        method: job.config.method.to_string(),
        seed_node: g.label(job.seed).to_string(),
        message: e.to_string(),
    };
    let master = RandomSource::new(ctx.spec.rng_seed);
    let mut rng = master.fork(job.index);
    let params = params_for(ctx.spec, &job.config, rng.seed());
    let estimator = Estimator::new(g, params).map_err(fail)?;

    let start = Instant::now();
    let est = estimator
        .estimate_with(job.config.method, job.seed, &mut rng)
        .map_err(fail)?;
    let cut = sweep(g, &est).map_err(fail)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;

    let ndcg = match ctx.exact.get(&(job.seed, job.config.t.to_bits())) {
        Some(exact) => Some(ndcg_at(&est, exact, g, ctx.spec.top_k).map_err(fail)?),
        None => None,
    };
    let f1 = match &ctx.communities {
        Some(comms) => best_f1_for_seed(&cut.best_cluster, comms, job.seed).map_err(fail)?,
        None => None,
    };
    Ok(RunRecord {
        method: job.config.method.to_string(),
        eps_r: job.config.eps_r,
        delta: estimator.delta(),
        t: job.config.t,
        c: job.config.c,
        seed_node: g.label(job.seed).to_string(),
        wall_ms,
        pushes: est.meta.pushes,
        walks: est.meta.walks,
        cluster_size: cut.best_cluster.len(),
        conductance: cut.best_conductance,
        ndcg,
        f1,
    })
}

/// Runs every grid cell on every seed node `repetitions` times. Failed runs
/// are reported in [`BenchReport::failures`] and do not stop the experiment.
pub fn run_experiments(spec: &ExperimentSpec, graph: &Graph) -> Result<BenchReport> {
    if spec.repetitions == 0 {
        return Err(Error::Config("repetitions must be at least 1".into()));
    }
    if spec.threads == 0 {
        return Err(Error::Config("threads must be at least 1".into()));
    }
    let configs = expand_grid(&spec.grid)?;
    let seeds = match &spec.seeds {
        SeedSelection::Labels(labels) => labels
            .iter()
            .map(|l| graph.seed_node(l))
            .collect::<Result<Vec<_>>>()?,
        SeedSelection::Count(k) => {
            let mut rng = RandomSource::new(spec.rng_seed).fork(u64::MAX);
            sample_seed_nodes(graph, *k, &mut rng)?
        }
    };
    if seeds.is_empty() {
        return Err(Error::Config("no seed nodes".into()));
    }

    let communities = match &spec.ground_truth {
        Some(path) => {
            let file = std::io::BufReader::new(std::fs::File::open(path)?);
            Some(load_communities(file, graph)?)
        }
        None => None,
    };
    let mut exact = FxHashMap::default();
    if spec.ndcg {
        for &t in &spec.grid.t {
            let w = crate::weights::PoissonWeights::new(t)?;
            for &s in &seeds {
                exact.insert((s, t.to_bits()), exact_hkpr(graph, s, &w, DEFAULT_ITERATIONS)?);
            }
        }
    }
    let ctx = Context {
        graph,
        spec,
        communities,
        exact,
    };

    let mut jobs = Vec::new();
    for config in &configs {
        for &seed in &seeds {
            for _ in 0..spec.repetitions {
                jobs.push(Job {
                    index: jobs.len() as u64,
                    config: *config,
                    seed,
                });
            }
        }
    }

    // Warm caches and page in the graph before anything is timed.
    let warm = Job {
        index: u64::MAX - 1,
        config: configs[0],
        seed: seeds[0],
    };
    let _ = run_one(&ctx, &warm);

    let outcomes: Vec<std::result::Result<RunRecord, RunFailure>> = if spec.parallel_runs {
        warn!("runs execute concurrently; wall times are not comparable across methods");
        let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
        let chunk = jobs.len().div_ceil(workers).max(1);
        std::thread::scope(|scope| {
            let handles: Vec<_> = jobs
                .chunks(chunk)
                .map(|part| {
                    let ctx = &ctx;
                    scope.spawn(move || part.iter().map(|j| run_one(ctx, j)).collect::<Vec<_>>())
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("experiment worker panicked"))
                .collect()
        })
    } else {
        jobs.iter().map(|j| run_one(&ctx, j)).collect()
    };

    let mut report = BenchReport {
        parallel: spec.parallel_runs,
        ..BenchReport::default()
    };
    for outcome in outcomes {
        match outcome {
            Ok(rec) => report.records.push(rec),
            Err(f) => {
                warn!("run {} on {} failed: {}", f.method, f.seed_node, f.message);
                report.failures.push(f);
            }
        }
    }
    info!(
        "{} runs finished, {} failed",
        report.records.len(),
        report.failures.len()
    );
    Ok(report)
}

pub fn write_records_csv<W: Write>(records: &[RunRecord], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for rec in records {
        writer.serialize(rec)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    reader
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Groups records by configuration, preserving first-appearance order.
pub fn summarize(records: &[RunRecord]) -> Vec<ConfigSummary> {
    let key = |r: &RunRecord| {
        (
            r.method.clone(),
            r.eps_r.to_bits(),
            r.delta.to_bits(),
            r.t.to_bits(),
            r.c.map(f64::to_bits),
        )
    };
    let mut order = Vec::new();
    let mut groups: FxHashMap<_, Vec<&RunRecord>> = FxHashMap::default();
    for r in records {
        let k = key(r);
        if !groups.contains_key(&k) {
            order.push(k.clone());
        }
        groups.entry(k).or_default().push(r);
    }
    order
        .into_iter()
        .map(|k| {
            let rs = &groups[&k];
            let n = rs.len();
            let mc = mean(rs.iter().map(|r| r.conductance)).unwrap_or(0.0);
            let var = if n > 1 {
                rs.iter().map(|r| (r.conductance - mc).powi(2)).sum::<f64>() / (n - 1) as f64
            } else {
                0.0
            };
            ConfigSummary {
                method: rs[0].method.clone(),
                eps_r: rs[0].eps_r,
                delta: rs[0].delta,
                t: rs[0].t,
                c: rs[0].c,
                runs: n,
                mean_wall_ms: mean(rs.iter().map(|r| r.wall_ms)).unwrap_or(0.0),
                mean_pushes: mean(rs.iter().map(|r| r.pushes as f64)).unwrap_or(0.0),
                mean_walks: mean(rs.iter().map(|r| r.walks as f64)).unwrap_or(0.0),
                mean_conductance: mc,
                conductance_stderr: (var / n as f64).sqrt(),
                mean_ndcg: mean(rs.iter().filter_map(|r| r.ndcg)),
                mean_f1: mean(rs.iter().filter_map(|r| r.f1)),
            }
        })
        .collect()
}
