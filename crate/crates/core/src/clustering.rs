//! Conductance and the sweep cut over an HKPR estimate.

use rustc_hash::FxHashSet;

use crate::error::{Error, Result};
use crate::estimators::ApproxHkpr;
use crate::graph::{Graph, NodeId};

/// `|cut(S)| / min(vol(S), 2m - vol(S))`.
pub fn conductance(g: &Graph, set: &[NodeId]) -> Result<f64> {
    let members: FxHashSet<NodeId> = set.iter().copied().collect();
    if members.is_empty() {
        return Err(Error::InvalidNodeSet("empty set".into()));
    }
    if let Some(&bad) = members.iter().find(|&&v| v >= g.n()) {
        return Err(Error::InvalidNodeSet(format!("node {bad} out of range")));
    }
    let mut vol = 0usize;
    let mut cut = 0usize;
    for &v in &members {
        vol += g.degree(v);
        cut += g.neighbors(v).iter().filter(|u| !members.contains(u)).count();
    }
    let denom = vol.min(g.volume() - vol);
    if denom == 0 {
        return Err(Error::InvalidNodeSet(
            "conductance undefined: set or complement has zero volume".into(),
        ));
    }
    Ok(cut as f64 / denom as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Support of the estimate by descending `value/d`, ties by node id.
    pub order: Vec<NodeId>,
    /// `conductances[i]` is the conductance of `order[..=i]`.
    pub conductances: Vec<f64>,
    pub best_index: usize,
    pub best_cluster: Vec<NodeId>,
    pub best_conductance: f64,
}

/// Sweeps prefixes of the estimate's ranking and keeps the one with minimum
/// conductance. The TEA+ offset is a uniform shift of `value/d` and is
/// ignored.
pub fn sweep(g: &Graph, est: &ApproxHkpr) -> Result<SweepResult> {
    sweep_order(g, est.ranking(g))
}

/// Sweep over an explicit node order.
pub fn sweep_order(g: &Graph, order: Vec<NodeId>) -> Result<SweepResult> {
    if order.is_empty() {
        return Err(Error::EmptySupport);
    }
    let total = g.volume();
    let mut inside: FxHashSet<NodeId> = FxHashSet::default();
    let mut vol = 0usize;
    let mut cut: isize = 0;
    let mut conductances = Vec::with_capacity(order.len());
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in order.iter().enumerate() {
        let d = g.degree(v);
        let into_set = g.neighbors(v).iter().filter(|u| inside.contains(u)).count();
        inside.insert(v);
        vol += d;
        cut += d as isize - 2 * into_set as isize;
        let denom = vol.min(total - vol);
        if denom == 0 {
            break;
        }
        let phi = cut as f64 / denom as f64;
        conductances.push(phi);
        if best.is_none_or(|(_, b)| phi < b) {
            best = Some((i, phi));
        }
    }
    let (best_index, best_conductance) = best.ok_or_else(|| {
        Error::InvalidNodeSet("no sweep prefix has defined conductance".into())
    })?;
    let best_cluster = order[..=best_index].to_vec();
    Ok(SweepResult {
        order,
        conductances,
        best_index,
        best_cluster,
        best_conductance,
    })
}
