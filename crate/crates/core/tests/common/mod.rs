//! Shared fixtures and reference computations for the integration tests.
//!
//! The dense oracle here is deliberately independent of the library: Poisson
//! weights come from log-space evaluation, tails are summed forward instead of
//! subtracted, and transition powers use a dense matrix.

#![allow(dead_code)]

use hkpr::graph::{load_edge_list, Graph, LoadOptions, NodeId};
use hkpr::sampling::RandomSource;

pub const TOY_EDGES: &str = "s v1\ns v2\nv1 v2\nv1 v3\nv2 v4\nv2 v5\nv2 v6\nv2 v7\n";

/// The 8-node example graph; ids compact to s=0, v1=1, v2=2, v3=3, v4..v7=4..7.
pub fn toy() -> Graph {
    load_edge_list(TOY_EDGES.as_bytes(), LoadOptions::default()).unwrap().0
}

/// `1 - 4/e^3`.
pub fn tau() -> f64 {
    1.0 - 4.0 / 3.0f64.exp()
}

/// Random connected graph: a random spanning tree plus each remaining pair
/// with probability `p`.
pub fn random_connected(n: usize, p: f64, rng: &mut RandomSource) -> Graph {
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.below(v), v));
    }
    for a in 0..n {
        for b in a + 1..n {
            if rng.uniform() < p {
                edges.push((a, b));
            }
        }
    }
    Graph::from_edges(n, edges).unwrap()
}

/// `count` random connected graphs with `lo..=hi` nodes.
pub fn graph_family(count: usize, lo: usize, hi: usize, seed: u64) -> Vec<Graph> {
    let mut rng = RandomSource::new(seed);
    (0..count)
        .map(|_| {
            let n = lo + rng.below(hi - lo + 1);
            let p = 0.1 + 0.4 * rng.uniform();
            random_connected(n, p, &mut rng)
        })
        .collect()
}

/// Two 4-cliques {0..3} and {4..7} joined by the edge 3-4.
pub fn barbell() -> Graph {
    let mut edges = Vec::new();
    for base in [0, 4] {
        for a in 0..4 {
            for b in a + 1..4 {
                edges.push((base + a, base + b));
            }
        }
    }
    edges.push((3, 4));
    Graph::from_edges(8, edges).unwrap()
}

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// `e^-t t^k / k!` evaluated in log space.
pub fn poisson(t: f64, k: usize) -> f64 {
    (k as f64 * t.ln() - t - ln_factorial(k)).exp()
}

pub struct DenseOracle {
    pub n: usize,
    /// Row-stochastic transition matrix.
    pub p: Vec<Vec<f64>>,
    pub eta: Vec<f64>,
    /// `psi[k] = sum_{j >= k} eta[j]`, summed from the far tail inward.
    pub psi: Vec<f64>,
}

impl DenseOracle {
    pub fn new(g: &Graph, t: f64) -> Self {
        let n = g.n();
        let mut p = vec![vec![0.0; n]; n];
        for u in 0..n {
            let d = g.degree(u) as f64;
            for &v in g.neighbors(u) {
                p[u][v] += 1.0 / d;
            }
        }
        let len = 40 + (8.0 * t) as usize;
        let eta: Vec<f64> = (0..len).map(|k| poisson(t, k)).collect();
        let mut psi = vec![0.0; len + 1];
        for k in (0..len).rev() {
            psi[k] = psi[k + 1] + eta[k];
        }
        Self { n, p, eta, psi }
    }

    pub fn step(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (u, &xu) in x.iter().enumerate() {
            if xu != 0.0 {
                for (v, &puv) in self.p[u].iter().enumerate() {
                    y[v] += xu * puv;
                }
            }
        }
        y
    }

    /// `h_u^(k)`: endpoint distribution of a walk known to be at `u` after
    /// `k` hops.
    pub fn h(&self, u: NodeId, k: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        x[u] = 1.0;
        let mut out = vec![0.0; self.n];
        if k >= self.eta.len() {
            out[u] = 1.0;
            return out;
        }
        for l in 0..self.eta.len() - k {
            let wgt = self.eta[k + l] / self.psi[k];
            for v in 0..self.n {
                out[v] += wgt * x[v];
            }
            x = self.step(&x);
        }
        out
    }

    pub fn rho(&self, s: NodeId) -> Vec<f64> {
        self.h(s, 0)
    }

    /// Row `u` of `P^steps`.
    pub fn row_power(&self, u: NodeId, steps: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        x[u] = 1.0;
        for _ in 0..steps {
            x = self.step(&x);
        }
        x
    }
}

/// Sum over every walk of length `<= max_len` from `s` of `eta(len)` times
/// its probability, by explicit enumeration.
pub fn enumerate_walks(g: &Graph, s: NodeId, t: f64, max_len: usize) -> Vec<f64> {
    fn go(g: &Graph, v: NodeId, len: usize, prob: f64, t: f64, max_len: usize, out: &mut [f64]) {
        out[v] += poisson(t, len) * prob;
        if len == max_len {
            return;
        }
        let d = g.degree(v) as f64;
        for &u in g.neighbors(v) {
            go(g, u, len + 1, prob / d, t, max_len, out);
        }
    }
    let mut out = vec![0.0; g.n()];
    go(g, s, 0, 1.0, t, max_len, &mut out);
    out
}

/// Conductance from the definition, with no incremental bookkeeping.
pub fn conductance_from_scratch(g: &Graph, set: &[NodeId]) -> Option<f64> {
    let inside: Vec<bool> = (0..g.n()).map(|v| set.contains(&v)).collect();
    let vol: usize = set.iter().map(|&v| g.degree(v)).sum();
    let total: usize = (0..g.n()).map(|v| g.degree(v)).sum();
    let cut = (0..g.n())
        .filter(|&v| inside[v])
        .flat_map(|v| g.neighbors(v).iter().map(move |&u| (v, u)))
        .filter(|&(_, u)| !inside[u])
        .count();
    let denom = vol.min(total - vol);
    (denom > 0).then(|| cut as f64 / denom as f64)
}

/// Residue-weighted sum `sum_k sum_u r^(k)[u] h_u^(k)` over sparse entries.
pub fn propagate(oracle: &DenseOracle, entries: &[(usize, NodeId, f64)]) -> Vec<f64> {
    let mut out = vec![0.0; oracle.n];
    for &(k, u, x) in entries {
        for (acc, hv) in out.iter_mut().zip(oracle.h(u, k)) {
            *acc += x * hv;
        }
    }
    out
}
