//! Command-line front end. Output is tab-separated with the graph's raw node
//! ids; numbers use Rust's shortest round-trip formatting.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::bench::{run_experiments, summarize, write_records_csv, ExperimentSpec};
use crate::clustering::sweep;
use crate::error::{Error, Result};
use crate::estimators::{ApproxHkpr, Delta, Estimator, HkprParams, Method};
use crate::graph::{load_edge_list, Graph, LoadOptions};
use crate::oracle::{best_f1_for_seed, exact_hkpr, load_communities, ndcg_at, DEFAULT_ITERATIONS};
use crate::synthetic::{generate_synthetic, GeneratorKind, SyntheticSize};
use crate::weights::PoissonWeights;

#[derive(Debug, Parser)]
#[command(name = "hkpr", version, about = "Heat kernel PageRank estimation and local clustering")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Approximate HKPR vector of a seed node.
    Hkpr(QueryArgs),
    /// Local cluster from a sweep over the approximate HKPR.
    Cluster {
        #[command(flatten)]
        query: QueryArgs,
        /// Also print the conductance of every sweep prefix.
        #[arg(long)]
        prefixes: bool,
    },
    /// Power-method HKPR vector (dense; small graphs).
    Exact {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        seed: String,
        #[arg(long, default_value_t = 5.0)]
        t: f64,
        #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
        iterations: usize,
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// NDCG against the power-method oracle and F1 against ground truth.
    Eval {
        #[command(flatten)]
        query: QueryArgs,
        /// Community file, one community of raw ids per line.
        #[arg(long)]
        ground_truth: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
        iterations: usize,
    },
    /// Run an experiment grid from a TOML config and print per-run CSV.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Write a synthetic graph as an edge list.
    Generate {
        #[arg(long, value_parser = parse_generator)]
        kind: GeneratorKind,
        /// Node count, or lattice side for grid3d.
        #[arg(long)]
        size: usize,
        #[arg(long, default_value_t = 5)]
        m: usize,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct GraphArgs {
    /// Whitespace-separated edge list.
    #[arg(long)]
    graph: PathBuf,
    /// First line holds `n m`.
    #[arg(long)]
    header: bool,
    /// Reject duplicate edges instead of dropping them.
    #[arg(long)]
    strict: bool,
    /// Require integer node ids.
    #[arg(long)]
    numeric_ids: bool,
}

#[derive(Debug, Args)]
struct QueryArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Seed node (raw id as in the edge list).
    #[arg(long)]
    seed: String,
    #[arg(long, default_value = "tea+", value_parser = parse_method)]
    method: Method,
    #[arg(long, default_value_t = 5.0)]
    t: f64,
    #[arg(long, default_value_t = 0.5)]
    eps_r: f64,
    /// A number or `1/n`.
    #[arg(long, default_value = "1/n", value_parser = parse_delta)]
    delta: Delta,
    #[arg(long, default_value_t = 1e-6)]
    pf: f64,
    /// TEA+ hop-cap constant.
    #[arg(long, default_value_t = 2.5)]
    c: f64,
    /// Explicit TEA+ hop cap (overrides `--c`).
    #[arg(long)]
    hop_cap: Option<usize>,
    /// TEA residue threshold.
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_delta(s: &str) -> std::result::Result<Delta, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_generator(s: &str) -> std::result::Result<GeneratorKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl GraphArgs {
    fn load(&self) -> Result<Graph> {
        let opts = LoadOptions {
            dedup: !self.strict,
            numeric_ids: self.numeric_ids,
            header: self.header,
        };
        let file = std::io::BufReader::new(File::open(&self.graph)?);
        let (g, report) = load_edge_list(file, opts)?;
        log::info!(
            "loaded {} nodes, {} edges ({} self-loops, {} duplicates dropped)",
            g.n(),
            g.m(),
            report.self_loops,
            report.duplicates
        );
        Ok(g)
    }
}

impl QueryArgs {
    fn params(&self) -> HkprParams {
        HkprParams {
            t: self.t,
            eps_r: self.eps_r,
            delta: self.delta,
            p_f: self.pf,
            c: self.c,
            r_max: self.r_max,
            hop_cap: self.hop_cap,
            seed: self.rng_seed,
            threads: self.threads,
        }
    }

    fn estimate(&self, g: &Graph) -> Result<ApproxHkpr> {
        let seed = g.seed_node(&self.seed)?;
        let est = Estimator::new(g, self.params())?.estimate(self.method, seed)?;
        log::info!(
            "{}: {} pushes, {} walks, support {}",
            self.method,
            est.meta.pushes,
            est.meta.walks,
            est.values.len()
        );
        Ok(est)
    }
}

/// Opens `path` for writing, or falls back to `stdout`.
fn sink<'a>(path: &Option<PathBuf>, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(stdout),
    })
}

fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Hkpr(q) => {
            let g = q.graph.load()?;
            let est = q.estimate(&g)?;
            let mut out = sink(&q.output, stdout)?;
            let rows = est.ranking(&g);
            for &v in rows.iter().take(q.top_k.unwrap_or(usize::MAX)) {
                writeln!(out, "{}\t{}\t{}", g.label(v), est.effective(&g, v), est.normalized(&g, v))?;
            }
            if est.offset_coeff > 0.0 {
                log::info!("every node carries an extra {} * degree", est.offset_coeff);
            }
            out.flush()?;
        }
        Command::Cluster { query, prefixes } => {
            let g = query.graph.load()?;
            let est = query.estimate(&g)?;
            let cut = sweep(&g, &est)?;
            let mut out = sink(&query.output, stdout)?;
            writeln!(out, "conductance\t{}", cut.best_conductance)?;
            writeln!(out, "size\t{}", cut.best_cluster.len())?;
            for &v in &cut.best_cluster {
                writeln!(out, "member\t{}", g.label(v))?;
            }
            if prefixes {
                for (i, phi) in cut.conductances.iter().enumerate() {
                    writeln!(out, "prefix\t{}\t{}\t{}", i + 1, g.label(cut.order[i]), phi)?;
                }
            }
            out.flush()?;
        }
        Command::Exact {
            graph,
            seed,
            t,
            iterations,
            top_k,
            output,
        } => {
            let g = graph.load()?;
            let s = g.seed_node(&seed)?;
            let w = PoissonWeights::new(t)?;
            let exact = exact_hkpr(&g, s, &w, iterations)?;
            let mut rows: Vec<usize> = (0..g.n()).filter(|&v| exact.values[v] > 0.0).collect();
            rows.sort_by(|&a, &b| {
                exact
                    .normalized(&g, b)
                    .total_cmp(&exact.normalized(&g, a))
                    .then(a.cmp(&b))
            });
            let mut out = sink(&output, stdout)?;
            for &v in rows.iter().take(top_k.unwrap_or(usize::MAX)) {
                writeln!(out, "{}\t{}\t{}", g.label(v), exact.values[v], exact.normalized(&g, v))?;
            }
            out.flush()?;
        }
        Command::Eval {
            query,
            ground_truth,
            iterations,
        } => {
            let g = query.graph.load()?;
            let s = g.seed_node(&query.seed)?;
            let est = query.estimate(&g)?;
            let w = PoissonWeights::new(query.t)?;
            let exact = exact_hkpr(&g, s, &w, iterations)?;
            let ndcg = ndcg_at(&est, &exact, &g, query.top_k.unwrap_or(100))?;
            let mut out = sink(&query.output, stdout)?;
            writeln!(out, "ndcg\t{ndcg}")?;
            let cut = sweep(&g, &est)?;
            writeln!(out, "conductance\t{}", cut.best_conductance)?;
            if let Some(path) = ground_truth {
                let comms = load_communities(std::io::BufReader::new(File::open(path)?), &g)?;
                match best_f1_for_seed(&cut.best_cluster, &comms, s)? {
                    Some(f1) => writeln!(out, "f1\t{f1}")?,
                    None => {
                        writeln!(stderr, "seed {} belongs to no ground-truth community", query.seed)?;
                        writeln!(out, "f1\tNA")?;
                    }
                }
            }
            out.flush()?;
        }
        Command::Bench { config, csv } => {
            let spec = ExperimentSpec::from_file(&config)?;
            let g = spec.load_graph()?;
            let report = run_experiments(&spec, &g)?;
            let out = sink(&csv, stdout)?;
            write_records_csv(&report.records, out)?;
            if report.parallel {
                writeln!(stderr, "note: runs were concurrent; wall times are not comparable")?;
            }
            for s in summarize(&report.records) {
                writeln!(
                    stderr,
                    "{}\teps_r={}\tdelta={}\tt={}\tc={}\truns={}\tmean_ms={:.3}\tphi={:.4}±{:.4}",
                    s.method,
                    s.eps_r,
                    s.delta,
                    s.t,
                    s.c.map_or_else(|| "-".to_string(), |c| c.to_string()),
                    s.runs,
                    s.mean_wall_ms,
                    s.mean_conductance,
                    s.conductance_stderr
                )?;
            }
            for f in &report.failures {
                writeln!(stderr, "failed: {} seed {}: {}", f.method, f.seed_node, f.message)?;
            }
        }
        Command::Generate {
            kind,
            size,
            m,
            p,
            rng_seed,
            output,
        } => {
            let g = generate_synthetic(kind, SyntheticSize { size, m, p }, rng_seed)?;
            let mut out = sink(&output, stdout)?;
            if g.write_edge_list(&mut out)? {
                writeln!(stderr, "note: output starts with an `n m` header; load it with --header")?;
            }
            out.flush()?;
        }
    }
    Ok(())
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code: 0 on success, 1 for usage or parameter errors, 2 for
/// data errors.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    1
                }
            };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    match run(cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_data_error() {
                2
            } else {
                1
            }
        }
    }
}
