//! End-to-end HKPR estimators: plain Monte-Carlo, TEA (push then walks) and
//! TEA+ (budgeted push, residue reduction, walks and a degree offset).

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::push::{hk_push, hk_push_plus, PushState, SparseVec};
use crate::sampling::{AliasTable, RandomSource};
use crate::walk::walk_unchecked;
use crate::weights::PoissonWeights;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    MonteCarlo,
    Tea,
    TeaPlus,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::MonteCarlo, Method::Tea, Method::TeaPlus];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::MonteCarlo => "mc",
            Method::Tea => "tea",
            Method::TeaPlus => "tea+",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mc" | "monte-carlo" | "montecarlo" => Ok(Method::MonteCarlo),
            "tea" => Ok(Method::Tea),
            "tea+" | "teaplus" | "tea-plus" => Ok(Method::TeaPlus),
            other => Err(Error::param(format!("unknown method `{other}`"))),
        }
    }
}

/// Significance threshold on normalised HKPR values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Delta {
    /// `1/n` of the graph the query runs on.
    InverseN,
    Value(f64),
}

impl Delta {
    pub fn resolve(self, n: usize) -> f64 {
        match self {
            Delta::InverseN => 1.0 / n as f64,
            Delta::Value(d) => d,
        }
    }
}

impl FromStr for Delta {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("1/n") {
            return Ok(Delta::InverseN);
        }
        s.parse::<f64>()
            .map(Delta::Value)
            .map_err(|_| Error::param(format!("delta must be a number or `1/n`, got `{s}`")))
    }
}

impl fmt::Display for Delta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Delta::InverseN => f.write_str("1/n"),
            Delta::Value(d) => write!(f, "{d}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HkprParams {
    /// Heat constant.
    pub t: f64,
    /// Relative error bound.
    pub eps_r: f64,
    pub delta: Delta,
    /// Failure probability.
    pub p_f: f64,
    /// Hop-cap constant for TEA+.
    pub c: f64,
    /// Residue threshold for TEA; `1/(omega t)` when unset.
    pub r_max: Option<f64>,
    /// Explicit hop cap for TEA+, overriding the `c`-based rule.
    pub hop_cap: Option<usize>,
    /// Master RNG seed.
    pub seed: u64,
    /// Walk-phase threads; 1 is the reproducibility reference.
    pub threads: usize,
}

impl Default for HkprParams {
    fn default() -> Self {
        Self {
            t: 5.0,
            eps_r: 0.5,
            delta: Delta::InverseN,
            p_f: 1e-6,
            c: 2.5,
            r_max: None,
            hop_cap: None,
            seed: 0,
            threads: 1,
        }
    }
}

impl HkprParams {
    fn validate(&self, delta: f64) -> Result<()> {
        if !(self.eps_r > 0.0 && self.eps_r < 1.0) {
            return Err(Error::param(format!("eps_r must lie in (0, 1), got {}", self.eps_r)));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::param(format!("delta must be positive, got {delta}")));
        }
        if self.eps_r * delta >= 1.0 {
            return Err(Error::param("eps_r * delta must be below 1"));
        }
        if !(self.p_f > 0.0 && self.p_f < 1.0) {
            return Err(Error::param(format!("p_f must lie in (0, 1), got {}", self.p_f)));
        }
        if !(self.c > 0.0) {
            return Err(Error::param(format!("c must be positive, got {}", self.c)));
        }
        if let Some(r) = self.r_max {
            if !(r > 0.0) {
                return Err(Error::param(format!("r_max must be positive, got {r}")));
            }
        }
        if self.hop_cap == Some(0) {
            return Err(Error::param("hop cap must be at least 1"));
        }
        if self.threads == 0 {
            return Err(Error::param("threads must be at least 1"));
        }
        Ok(())
    }
}

/// Run statistics attached to an estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateMeta {
    pub method: Method,
    /// Random walks performed.
    pub walks: u64,
    /// Neighbour touches charged by the push phase.
    pub pushes: u64,
    /// Residue mass the walks corrected for (1 for Monte-Carlo).
    pub alpha: f64,
    /// Hop cap used by TEA+.
    pub hop_cap: Option<usize>,
    /// Whether the TEA+ push phase met its error condition.
    pub converged: Option<bool>,
}

/// Sparse HKPR estimate. The effective value of `v` is
/// `values[v] + offset_coeff * d(v)`; the offset is never materialised.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxHkpr {
    pub values: SparseVec,
    pub offset_coeff: f64,
    pub meta: EstimateMeta,
}

impl ApproxHkpr {
    pub fn value(&self, v: NodeId) -> f64 {
        self.values.get(&v).copied().unwrap_or(0.0)
    }

    pub fn effective(&self, g: &Graph, v: NodeId) -> f64 {
        self.value(v) + self.offset_coeff * g.degree(v) as f64
    }

    /// Effective normalised value `effective(v) / d(v)`.
    pub fn normalized(&self, g: &Graph, v: NodeId) -> f64 {
        self.value(v) / g.degree(v) as f64 + self.offset_coeff
    }

    /// Support nodes ordered by `values[v]/d(v)` descending, ties by node id.
    pub fn ranking(&self, g: &Graph) -> Vec<NodeId> {
        let mut keyed: Vec<(f64, NodeId)> = self
            .values
            .iter()
            .filter(|(_, &x)| x > 0.0)
            .map(|(&v, &x)| (x / g.degree(v) as f64, v))
            .collect();
        keyed.sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        keyed.into_iter().map(|(_, v)| v).collect()
    }
}

/// Failure probability adjusted for the union bound over nodes:
/// `p_f / sum_v p_f^(d(v)-1)` when that sum exceeds 1. Isolated nodes are
/// skipped since they never carry HKPR mass.
pub fn adjusted_failure_prob(g: &Graph, p_f: f64) -> f64 {
    let s: f64 = g
        .degrees()
        .filter(|&d| d > 0)
        .map(|d| p_f.powf(d as f64 - 1.0))
        .sum();
    if s <= 1.0 {
        p_f
    } else {
        p_f / s
    }
}

/// Walk-count scale for TEA.
pub fn tea_omega(eps_r: f64, delta: f64, pf_adjusted: f64) -> f64 {
    2.0 * (1.0 + eps_r / 3.0) * (1.0 / pf_adjusted).ln() / (eps_r * eps_r * delta)
}

/// Walk-count scale for TEA+.
pub fn tea_plus_omega(eps_r: f64, delta: f64, pf_adjusted: f64) -> f64 {
    8.0 * (1.0 + eps_r / 6.0) * (1.0 / pf_adjusted).ln() / (eps_r * eps_r * delta)
}

/// Number of walks the Monte-Carlo baseline needs on an `n`-node graph.
pub fn monte_carlo_walks(n: usize, eps_r: f64, delta: f64, p_f: f64) -> u64 {
    let x = 2.0 * (1.0 + eps_r / 3.0) * (n as f64 / p_f).ln() / (eps_r * eps_r * delta);
    x.ceil() as u64
}

/// Hop cap `max(1, ceil(c ln(1/(eps_r delta)) / ln(avg_degree)))`.
pub fn select_k(eps_r: f64, delta: f64, avg_degree: f64, c: f64) -> Result<usize> {
    if !(avg_degree > 1.0) {
        return Err(Error::param(format!(
            "average degree must exceed 1 to choose the hop cap, got {avg_degree}"
        )));
    }
    if !(c > 0.0) {
        return Err(Error::param(format!("c must be positive, got {c}")));
    }
    let raw = c * (1.0 / (eps_r * delta)).ln() / avg_degree.ln();
    // Absorb rounding noise so exact integers do not round up.
    let k = (raw - 1e-9).ceil();
    Ok(if k.is_finite() && k > 1.0 { k as usize } else { 1 })
}

/// Per-hop shares and the amounts removed by [`reduce_residues`].
#[derive(Debug, Clone, PartialEq)]
pub struct ResidueReduction {
    /// `beta[k]`, proportional to the hop-`k` residue mass; sums to 1.
    pub beta: Vec<f64>,
    /// Removed amounts per hop as `(node, amount)`, node-ascending.
    pub rb: Vec<Vec<(NodeId, f64)>>,
    pub alpha_before: f64,
    pub alpha_after: f64,
}

/// Lowers every `r^(k)[u]` by `beta_k * eps_r * delta * d(u)` (floored at 0).
pub fn reduce_residues(
    mut state: PushState,
    eps_r: f64,
    delta: f64,
    g: &Graph,
) -> Result<(PushState, ResidueReduction)> {
    let hop_sums = state.hop_sums();
    let alpha_before: f64 = hop_sums.iter().sum();
    if !(alpha_before > 0.0) {
        return Err(Error::param("residue reduction needs a positive residue mass"));
    }
    let beta: Vec<f64> = hop_sums.iter().map(|s| s / alpha_before).collect();
    let eps_a = eps_r * delta;
    let mut rb = Vec::with_capacity(state.residues.len());
    for (k, hop) in state.residues.iter_mut().enumerate() {
        let cut = beta[k] * eps_a;
        let mut keys: Vec<NodeId> = hop.keys().copied().collect();
        keys.sort_unstable();
        let mut removed = Vec::with_capacity(keys.len());
        for u in keys {
            let r = hop[&u];
            let amount = r.min(cut * g.degree(u) as f64);
            removed.push((u, amount));
            let left = r - amount;
            if left > 0.0 {
                hop.insert(u, left);
            } else {
                hop.remove(&u);
            }
        }
        rb.push(removed);
    }
    let alpha_after = state.residue_sum();
    Ok((
        state,
        ResidueReduction {
            beta,
            rb,
            alpha_before,
            alpha_after,
        },
    ))
}

/// Walks `walks` times from residue entries sampled in proportion to their
/// value, crediting `alpha / walks` per endpoint into `values`.
#[allow(clippy::too_many_arguments)]
fn residue_walks(
    g: &Graph,
    w: &PoissonWeights,
    state: &PushState,
    alpha: f64,
    walks: u64,
    rng: &mut RandomSource,
    threads: usize,
    values: &mut SparseVec,
) -> Result<()> {
    if walks == 0 {
        return Ok(());
    }
    let entries = state.residue_entries();
    let weights: Vec<f64> = entries.iter().map(|e| e.2).collect();
    let table = AliasTable::new(&weights)?;
    let credit = alpha / walks as f64;
    let run = |count: u64, rng: &mut RandomSource, acc: &mut SparseVec| {
        for _ in 0..count {
            let (k, u, _) = entries[table.sample(rng)];
            let end = walk_unchecked(g, u, k, w, rng).endpoint;
            *acc.entry(end).or_insert(0.0) += credit;
        }
    };
    parallel_batches(walks, rng, threads, values, run);
    Ok(())
}

/// Splits `total` units of work over `threads` batches. One thread uses the
/// master stream directly; otherwise batch `b` uses `rng.fork(b)` and partial
/// maps are merged in batch order.
fn parallel_batches<F>(total: u64, rng: &mut RandomSource, threads: usize, into: &mut SparseVec, run: F)
where
    F: Fn(u64, &mut RandomSource, &mut SparseVec) + Sync,
{
    if threads <= 1 || total < 2 {
        run(total, rng, into);
        return;
    }
    let batches = threads as u64;
    let per = total / batches;
    let extra = total % batches;
    let parts: Vec<SparseVec> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..batches)
            .map(|b| {
                let count = per + u64::from(b < extra);
                let mut local_rng = rng.fork(b);
                let run = &run;
                scope.spawn(move || {
                    let mut acc = SparseVec::default();
                    run(count, &mut local_rng, &mut acc);
                    acc
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("walk batch panicked"))
            .collect()
    });
    for part in parts {
        let mut keys: Vec<_> = part.into_iter().collect();
        keys.sort_unstable_by_key(|e| e.0);
        for (v, x) in keys {
            *into.entry(v).or_insert(0.0) += x;
        }
    }
}

/// Estimator bound to one graph and one parameter set. Graph-level
/// quantities (adjusted failure probability, Poisson weights) are computed
/// once here and reused across queries.
#[derive(Debug, Clone)]
pub struct Estimator<'g> {
    graph: &'g Graph,
    params: HkprParams,
    delta: f64,
    weights: PoissonWeights,
    pf_adjusted: f64,
}

impl<'g> Estimator<'g> {
    pub fn new(graph: &'g Graph, params: HkprParams) -> Result<Self> {
        let delta = params.delta.resolve(graph.n());
        params.validate(delta)?;
        let weights = PoissonWeights::new(params.t)?;
        let pf_adjusted = adjusted_failure_prob(graph, params.p_f);
        Ok(Self {
            graph,
            params,
            delta,
            weights,
            pf_adjusted,
        })
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn params(&self) -> &HkprParams {
        &self.params
    }

    /// Resolved numeric delta.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn weights(&self) -> &PoissonWeights {
        &self.weights
    }

    pub fn pf_adjusted(&self) -> f64 {
        self.pf_adjusted
    }

    pub fn tea_omega(&self) -> f64 {
        tea_omega(self.params.eps_r, self.delta, self.pf_adjusted)
    }

    pub fn tea_plus_omega(&self) -> f64 {
        tea_plus_omega(self.params.eps_r, self.delta, self.pf_adjusted)
    }

    /// Residue threshold TEA uses.
    pub fn r_max(&self) -> f64 {
        self.params
            .r_max
            .unwrap_or_else(|| 1.0 / (self.tea_omega() * self.params.t))
    }

    /// Hop cap TEA+ uses.
    pub fn hop_cap(&self) -> Result<usize> {
        match self.params.hop_cap {
            Some(k) => Ok(k),
            None => select_k(
                self.params.eps_r,
                self.delta,
                self.graph.avg_degree(),
                self.params.c,
            ),
        }
    }

    /// Push budget TEA+ uses, `ceil(omega t / 2)`.
    pub fn push_budget(&self) -> u64 {
        (self.tea_plus_omega() * self.params.t / 2.0).ceil().max(1.0) as u64
    }

    /// Runs `method` from `seed` with a fresh stream from the master seed.
    pub fn estimate(&self, method: Method, seed: NodeId) -> Result<ApproxHkpr> {
        let mut rng = RandomSource::new(self.params.seed);
        self.estimate_with(method, seed, &mut rng)
    }

    pub fn estimate_with(
        &self,
        method: Method,
        seed: NodeId,
        rng: &mut RandomSource,
    ) -> Result<ApproxHkpr> {
        match method {
            Method::MonteCarlo => self.monte_carlo(seed, rng),
            Method::Tea => self.tea(seed, rng),
            Method::TeaPlus => self.tea_plus(seed, rng),
        }
    }

    pub fn monte_carlo(&self, seed: NodeId, rng: &mut RandomSource) -> Result<ApproxHkpr> {
        let g = self.graph;
        g.check_seed(seed)?;
        let walks = monte_carlo_walks(g.n(), self.params.eps_r, self.delta, self.params.p_f);
        let lengths = AliasTable::new(&self.weights.length_distribution())?;
        let credit = 1.0 / walks as f64;
        let mut values = SparseVec::default();
        parallel_batches(walks, rng, self.params.threads, &mut values, |count, rng, acc| {
            for _ in 0..count {
                let len = lengths.sample(rng);
                let mut v = seed;
                for _ in 0..len {
                    let nbrs = g.neighbors(v);
                    v = nbrs[rng.below(nbrs.len())];
                }
                *acc.entry(v).or_insert(0.0) += credit;
            }
        });
        Ok(ApproxHkpr {
            values,
            offset_coeff: 0.0,
            meta: EstimateMeta {
                method: Method::MonteCarlo,
                walks,
                pushes: 0,
                alpha: 1.0,
                hop_cap: None,
                converged: None,
            },
        })
    }

    pub fn tea(&self, seed: NodeId, rng: &mut RandomSource) -> Result<ApproxHkpr> {
        let g = self.graph;
        let omega = self.tea_omega();
        let state = hk_push(g, seed, self.r_max(), &self.weights)?;
        let alpha = state.residue_sum();
        let walks = walk_count(alpha, omega);
        let mut values = state.reserve.clone();
        residue_walks(g, &self.weights, &state, alpha, walks, rng, self.params.threads, &mut values)?;
        Ok(ApproxHkpr {
            values,
            offset_coeff: 0.0,
            meta: EstimateMeta {
                method: Method::Tea,
                walks,
                pushes: state.pushes_done,
                alpha,
                hop_cap: None,
                converged: None,
            },
        })
    }

    pub fn tea_plus(&self, seed: NodeId, rng: &mut RandomSource) -> Result<ApproxHkpr> {
        let g = self.graph;
        let eps_r = self.params.eps_r;
        let omega = self.tea_plus_omega();
        let hop_cap = self.hop_cap()?;
        let (state, converged) = hk_push_plus(
            g,
            seed,
            eps_r,
            self.delta,
            hop_cap,
            self.push_budget(),
            &self.weights,
        )?;
        let pushes = state.pushes_done;
        let mut meta = EstimateMeta {
            method: Method::TeaPlus,
            walks: 0,
            pushes,
            alpha: 0.0,
            hop_cap: Some(hop_cap),
            converged: Some(converged),
        };
        if converged {
            return Ok(ApproxHkpr {
                values: state.reserve,
                offset_coeff: 0.0,
                meta,
            });
        }
        let mut values = state.reserve.clone();
        let (reduced, reduction) = reduce_residues(state, eps_r, self.delta, g)?;
        let alpha = reduction.alpha_after;
        let walks = walk_count(alpha, omega);
        residue_walks(g, &self.weights, &reduced, alpha, walks, rng, self.params.threads, &mut values)?;
        meta.walks = walks;
        meta.alpha = alpha;
        Ok(ApproxHkpr {
            values,
            offset_coeff: eps_r * self.delta / 2.0,
            meta,
        })
    }
}

/// `ceil(alpha * omega)`, zero when no residue is left.
pub fn walk_count(alpha: f64, omega: f64) -> u64 {
    if alpha > 0.0 {
        (alpha * omega).ceil() as u64
    } else {
        0
    }
}
