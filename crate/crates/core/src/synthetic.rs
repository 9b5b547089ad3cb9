//! Synthetic graph generators for self-contained experiments.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::sampling::RandomSource;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    /// Holme–Kim growth: preferential attachment with triad closure.
    PowerlawCluster,
    /// Torus-wrapped 3-D lattice; every node has degree 6.
    Grid3d,
}

impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "powerlaw_cluster" | "plc" => Ok(GeneratorKind::PowerlawCluster),
            "grid3d" => Ok(GeneratorKind::Grid3d),
            other => Err(Error::param(format!("unknown generator `{other}`"))),
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GeneratorKind::PowerlawCluster => "powerlaw_cluster",
            GeneratorKind::Grid3d => "grid3d",
        })
    }
}

/// Holme–Kim powerlaw-cluster graph on `n` nodes. Each new node attaches `m`
/// edges; after the first preferential attachment, each further edge closes
/// a triangle with probability `p`.
pub fn powerlaw_cluster(n: usize, m: usize, p: f64, seed: u64) -> Result<Graph> {
    if m < 1 || m >= n {
        return Err(Error::param(format!("need 1 <= m < n, got m={m}, n={n}")));
    }
    if n < 8 {
        return Err(Error::param(format!("need at least 8 nodes, got {n}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::param(format!("triad probability must lie in [0, 1], got {p}")));
    }
    let mut rng = RandomSource::new(seed);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut edges = Vec::with_capacity(n * m);
    // Every node appears once per unit of degree (initial nodes once).
    let mut repeated: Vec<usize> = (0..m).collect();

    for source in m..n {
        let mut targets: Vec<usize> = Vec::with_capacity(m);
        while targets.len() < m {
            let pick = repeated[rng.below(repeated.len())];
            if !targets.contains(&pick) {
                targets.push(pick);
            }
        }
        let mut target = targets.pop().unwrap();
        if connect(source, target, &mut adj, &mut edges) {
            repeated.push(target);
        }
        let mut count = 1;
        while count < m {
            if rng.uniform() < p {
                let candidates: Vec<usize> = adj[target]
                    .iter()
                    .copied()
                    .filter(|&u| u != source && !adj[source].contains(&u))
                    .collect();
                if !candidates.is_empty() {
                    let nbr = candidates[rng.below(candidates.len())];
                    connect(source, nbr, &mut adj, &mut edges);
                    repeated.push(nbr);
                    count += 1;
                    continue;
                }
            }
            target = targets.pop().unwrap();
            if connect(source, target, &mut adj, &mut edges) {
                repeated.push(target);
            }
            count += 1;
        }
        repeated.extend(std::iter::repeat_n(source, m));
    }
    Graph::from_edges(n, edges)
}

fn connect(a: usize, b: usize, adj: &mut [Vec<usize>], edges: &mut Vec<(usize, usize)>) -> bool {
    if a == b || adj[a].contains(&b) {
        return false;
    }
    adj[a].push(b);
    adj[b].push(a);
    edges.push((a, b));
    true
}

/// `side^3` torus lattice.
pub fn grid3d(side: usize) -> Result<Graph> {
    if side < 3 {
        return Err(Error::param(format!("grid side must be at least 3, got {side}")));
    }
    let idx = |x: usize, y: usize, z: usize| (x * side + y) * side + z;
    let mut edges = Vec::with_capacity(3 * side * side * side);
    for x in 0..side {
        for y in 0..side {
            for z in 0..side {
                let v = idx(x, y, z);
                edges.push((v, idx((x + 1) % side, y, z)));
                edges.push((v, idx(x, (y + 1) % side, z)));
                edges.push((v, idx(x, y, (z + 1) % side)));
            }
        }
    }
    Graph::from_edges(side * side * side, edges)
}

/// Size parameters for [`generate_synthetic`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSize {
    /// Node count (powerlaw-cluster) or lattice side (grid).
    pub size: usize,
    /// Edges per new node.
    pub m: usize,
    /// Triad-closure probability.
    pub p: f64,
}

impl Default for SyntheticSize {
    fn default() -> Self {
        Self {
            size: 1000,
            m: 5,
            p: 0.5,
        }
    }
}

pub fn generate_synthetic(kind: GeneratorKind, size: SyntheticSize, seed: u64) -> Result<Graph> {
    match kind {
        GeneratorKind::PowerlawCluster => powerlaw_cluster(size.size, size.m, size.p, seed),
        GeneratorKind::Grid3d => grid3d(size.size),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_side_four() {
        let g = grid3d(4).unwrap();
        assert_eq!(g.n(), 64);
        assert_eq!(g.m(), 192);
        assert!(g.degrees().all(|d| d == 6));
        assert!(grid3d(2).is_err());
    }

    #[test]
    fn powerlaw_cluster_shape() {
        let g = powerlaw_cluster(1000, 5, 0.5, 7).unwrap();
        let m = g.m() as f64;
        assert!(m > 0.97 * 5.0 * 1000.0 && m <= 5.0 * 1000.0, "m={m}");
        let mut degs: Vec<usize> = g.degrees().collect();
        degs.sort_unstable();
        let median = degs[degs.len() / 2];
        assert!(*degs.last().unwrap() > 5 * median);
        assert!(degs[0] >= 1);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = powerlaw_cluster(300, 3, 0.5, 1).unwrap();
        let b = powerlaw_cluster(300, 3, 0.5, 1).unwrap();
        let c = powerlaw_cluster(300, 3, 0.5, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(powerlaw_cluster(5, 2, 0.5, 1).is_err());
        assert!(powerlaw_cluster(100, 0, 0.5, 1).is_err());
        assert!(powerlaw_cluster(100, 3, 1.5, 1).is_err());
        assert_eq!("plc".parse::<GeneratorKind>().unwrap(), GeneratorKind::PowerlawCluster);
    }
}
