//! Hop-conditioned random walks.
//!
//! A walk that is known to sit at `u` after `k` hops continues the heat
//! kernel process from there: at absolute hop `k + l` it stops with
//! probability `eta(k+l)/psi(k+l)` and otherwise moves to a uniform neighbour.
//! The endpoint is distributed as `h_u^(k)`.

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::push::SparseVec;
use crate::sampling::RandomSource;
use crate::weights::PoissonWeights;

/// `count` walks that start at `start` conditioned on having taken
/// `start_hop` hops already.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkRequest {
    pub start: NodeId,
    pub start_hop: usize,
    pub count: usize,
}

/// Where a walk stopped and how many moves it made.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkOutcome {
    pub endpoint: NodeId,
    pub steps: usize,
}

#[inline]
pub(crate) fn walk_unchecked(
    g: &Graph,
    start: NodeId,
    start_hop: usize,
    w: &PoissonWeights,
    rng: &mut RandomSource,
) -> WalkOutcome {
    let mut current = start;
    let mut hop = start_hop;
    loop {
        if hop >= w.k_cap() || rng.uniform() < w.stop_probability(hop) {
            return WalkOutcome {
                endpoint: current,
                steps: hop - start_hop,
            };
        }
        let nbrs = g.neighbors(current);
        current = nbrs[rng.below(nbrs.len())];
        hop += 1;
    }
}

/// Runs one walk from `(u, k)` and reports its endpoint and length.
pub fn k_random_walk_traced(
    g: &Graph,
    u: NodeId,
    k: usize,
    w: &PoissonWeights,
    rng: &mut RandomSource,
) -> Result<WalkOutcome> {
    g.check_seed(u)?;
    Ok(walk_unchecked(g, u, k, w, rng))
}

pub fn k_random_walk(
    g: &Graph,
    u: NodeId,
    k: usize,
    w: &PoissonWeights,
    rng: &mut RandomSource,
) -> Result<NodeId> {
    k_random_walk_traced(g, u, k, w, rng).map(|o| o.endpoint)
}

/// Runs every request in order and adds `weight_per_walk` to the endpoint of
/// each walk.
pub fn run_walk_batch(
    g: &Graph,
    requests: &[WalkRequest],
    w: &PoissonWeights,
    rng: &mut RandomSource,
    accumulate_into: &mut SparseVec,
    weight_per_walk: f64,
) -> Result<()> {
    if !(weight_per_walk > 0.0) {
        return Err(Error::param("weight per walk must be positive"));
    }
    for req in requests {
        if req.count > 0 {
            g.check_seed(req.start)?;
        }
    }
    for req in requests {
        for _ in 0..req.count {
            let end = walk_unchecked(g, req.start, req.start_hop, w, rng).endpoint;
            *accumulate_into.entry(end).or_insert(0.0) += weight_per_walk;
        }
    }
    Ok(())
}
