//! Dense reference computations and ranking/cluster quality metrics.
//!
//! Everything here is O(n) per hop or worse and meant for small and medium
//! graphs: tests, the `exact` and `eval` commands, and benchmarks.

use std::io::BufRead;

use rustc_hash::FxHashSet;

use crate::error::{Error, Result};
use crate::estimators::ApproxHkpr;
use crate::graph::{Graph, NodeId};
use crate::weights::PoissonWeights;

/// Power iterations used when none are given.
pub const DEFAULT_ITERATIONS: usize = 40;

/// Dense HKPR vector computed by power iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactHkpr {
    pub values: Vec<f64>,
    pub iterations: usize,
    /// Poisson mass beyond the last iteration.
    pub tail_mass: f64,
}

impl ExactHkpr {
    pub fn normalized(&self, g: &Graph, v: NodeId) -> f64 {
        let d = g.degree(v);
        if d == 0 {
            0.0
        } else {
            self.values[v] / d as f64
        }
    }
}

/// One step of the walk: `x P`, i.e. every node splits its mass evenly over
/// its neighbours.
pub fn transition_step(g: &Graph, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; g.n()];
    for (u, &mass) in x.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        let share = mass / g.degree(u) as f64;
        for &v in g.neighbors(u) {
            y[v] += share;
        }
    }
    y
}

/// Row `u` of `P^steps`.
pub fn transition_row_power(g: &Graph, u: NodeId, steps: usize) -> Vec<f64> {
    let mut x = vec![0.0; g.n()];
    x[u] = 1.0;
    for _ in 0..steps {
        x = transition_step(g, &x);
    }
    x
}

/// Weight of hop `k` in the truncated process: `eta(k)` below the cap, the
/// whole remaining tail at the cap.
fn hop_weight(w: &PoissonWeights, k: usize) -> f64 {
    use std::cmp::Ordering::*;
    match k.cmp(&w.k_cap()) {
        Less => w.eta(k),
        Equal => w.psi(k),
        Greater => 0.0,
    }
}

/// `sum_{k=0}^{iterations} eta(k) e_s P^k`.
pub fn exact_hkpr(g: &Graph, s: NodeId, w: &PoissonWeights, iterations: usize) -> Result<ExactHkpr> {
    g.check_seed(s)?;
    let mut x = vec![0.0; g.n()];
    x[s] = 1.0;
    let mut values = vec![0.0; g.n()];
    let last = iterations.min(w.k_cap());
    for k in 0..=last {
        let weight = hop_weight(w, k);
        for (acc, &xi) in values.iter_mut().zip(&x) {
            *acc += weight * xi;
        }
        if k < last {
            x = transition_step(g, &x);
        }
    }
    let tail_mass = if iterations >= w.k_cap() {
        0.0
    } else {
        w.psi(iterations + 1)
    };
    Ok(ExactHkpr {
        values,
        iterations,
        tail_mass,
    })
}

/// Endpoint distribution of a walk conditioned on being at `u` after `k`
/// hops: `sum_l eta(k+l)/psi(k) P^l[u, .]` for `l = 0..=iterations`.
pub fn h_oracle(g: &Graph, u: NodeId, k: usize, w: &PoissonWeights, iterations: usize) -> Result<Vec<f64>> {
    g.check_seed(u)?;
    if k >= w.k_cap() {
        return Err(Error::param(format!(
            "hop {k} has tail mass below {} (cap {})",
            w.tail_tol(),
            w.k_cap()
        )));
    }
    let norm = w.psi(k);
    let mut x = vec![0.0; g.n()];
    x[u] = 1.0;
    let mut out = vec![0.0; g.n()];
    let last = iterations.min(w.k_cap() - k);
    for l in 0..=last {
        let weight = hop_weight(w, k + l) / norm;
        for (acc, &xi) in out.iter_mut().zip(&x) {
            *acc += weight * xi;
        }
        if l < last {
            x = transition_step(g, &x);
        }
    }
    Ok(out)
}

fn dcg(gains: impl Iterator<Item = f64>) -> f64 {
    gains
        .enumerate()
        .map(|(i, rel)| rel / ((i + 2) as f64).log2())
        .sum()
}

/// NDCG@`top_k` of the estimator's ranking, using exact normalised HKPR as
/// graded relevance.
pub fn ndcg_at(est: &ApproxHkpr, exact: &ExactHkpr, g: &Graph, top_k: usize) -> Result<f64> {
    if top_k == 0 {
        return Err(Error::param("top_k must be at least 1"));
    }
    let ranking = est.ranking(g);
    if ranking.is_empty() {
        return Err(Error::EmptySupport);
    }
    let k = if top_k > ranking.len() {
        log::warn!(
            "top_k {top_k} exceeds the estimate's support ({}); clamping",
            ranking.len()
        );
        ranking.len()
    } else {
        top_k
    };
    let actual = dcg(ranking.iter().take(k).map(|&v| exact.normalized(g, v)));
    let mut ideal_gains: Vec<f64> = (0..g.n()).map(|v| exact.normalized(g, v)).collect();
    ideal_gains.sort_unstable_by(|a, b| b.total_cmp(a));
    let ideal = dcg(ideal_gains.into_iter().take(k));
    if ideal <= 0.0 {
        return Ok(0.0);
    }
    Ok(actual / ideal)
}

/// Harmonic mean of precision and recall of `cluster` against
/// `ground_truth`.
pub fn f1_score(cluster: &[NodeId], ground_truth: &[NodeId]) -> Result<f64> {
    if ground_truth.is_empty() {
        return Err(Error::InvalidNodeSet("ground-truth community is empty".into()));
    }
    if cluster.is_empty() {
        log::warn!("empty cluster scored against ground truth");
        return Ok(0.0);
    }
    let truth: FxHashSet<NodeId> = ground_truth.iter().copied().collect();
    let found: FxHashSet<NodeId> = cluster.iter().copied().collect();
    let hits = found.intersection(&truth).count();
    if hits == 0 {
        return Ok(0.0);
    }
    let precision = hits as f64 / found.len() as f64;
    let recall = hits as f64 / truth.len() as f64;
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Reads communities, one per line as whitespace-separated raw ids. Ids the
/// graph does not know are skipped; empty communities are dropped.
pub fn load_communities<R: BufRead>(reader: R, g: &Graph) -> Result<Vec<Vec<NodeId>>> {
    let mut out = Vec::new();
    let mut unknown = 0usize;
    for line in reader.lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let mut community = Vec::new();
        for tok in trimmed.split_whitespace() {
            match g.node(tok) {
                Some(v) => community.push(v),
                None => unknown += 1,
            }
        }
        if !community.is_empty() {
            community.sort_unstable();
            community.dedup();
            out.push(community);
        }
    }
    if unknown > 0 {
        log::warn!("skipped {unknown} community member id(s) absent from the graph");
    }
    Ok(out)
}

/// Best F1 of `cluster` against the communities that contain `seed`.
pub fn best_f1_for_seed(cluster: &[NodeId], communities: &[Vec<NodeId>], seed: NodeId) -> Result<Option<f64>> {
    let mut best: Option<f64> = None;
    for c in communities.iter().filter(|c| c.binary_search(&seed).is_ok()) {
        let f = f1_score(cluster, c)?;
        best = Some(best.map_or(f, |b: f64| b.max(f)));
    }
    Ok(best)
}
