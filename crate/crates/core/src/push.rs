//! Deterministic push engines.
//!
//! Both engines start from unit residue on the seed at hop 0 and repeatedly
//! pick an entry `(v, k)` whose residue is large relative to `d(v)`. A push
//! moves the stop fraction `eta(k)/psi(k)` of that residue into `v`'s reserve
//! and spreads the rest evenly over `v`'s neighbours at hop `k + 1`. Entries
//! are processed in FIFO order, so results are fully deterministic.

use std::collections::VecDeque;

use rustc_hash::{FxHashMap, FxHashSet};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::weights::PoissonWeights;

/// Sparse non-negative vector keyed by node.
pub type SparseVec = FxHashMap<NodeId, f64>;

/// Reserve vector and per-hop residue vectors produced by a push engine.
#[derive(Debug, Clone, PartialEq)]
pub struct PushState {
    pub reserve: SparseVec,
    /// `residues[k]` holds the non-zero `k`-hop residues.
    pub residues: Vec<SparseVec>,
    /// Neighbour touches charged so far (each push on `v` costs `d(v)`).
    pub pushes_done: u64,
}

impl PushState {
    fn start(seed: NodeId, hops: usize) -> Self {
        let mut residues = vec![SparseVec::default(); hops.max(1)];
        residues[0].insert(seed, 1.0);
        Self {
            reserve: SparseVec::default(),
            residues,
            pushes_done: 0,
        }
    }

    pub fn reserve_of(&self, v: NodeId) -> f64 {
        self.reserve.get(&v).copied().unwrap_or(0.0)
    }

    pub fn residue(&self, k: usize, v: NodeId) -> f64 {
        self.residues
            .get(k)
            .and_then(|r| r.get(&v))
            .copied()
            .unwrap_or(0.0)
    }

    /// Largest hop holding a non-zero residue.
    pub fn k_max_nonzero(&self) -> Option<usize> {
        self.residues.iter().rposition(|r| !r.is_empty())
    }

    pub fn hop_sums(&self) -> Vec<f64> {
        self.residues.iter().map(|r| r.values().sum()).collect()
    }

    /// Total residue mass, `alpha`.
    pub fn residue_sum(&self) -> f64 {
        self.hop_sums().iter().sum()
    }

    pub fn reserve_sum(&self) -> f64 {
        self.reserve.values().sum()
    }

    pub fn nonzero_residues(&self) -> usize {
        self.residues.iter().map(|r| r.len()).sum()
    }

    /// `sum_k max_u r^(k)[u] / d(u)`.
    pub fn max_ratio_sum(&self, g: &Graph) -> f64 {
        self.residues
            .iter()
            .map(|r| {
                r.iter()
                    .map(|(&u, &x)| x / g.degree(u) as f64)
                    .fold(0.0, f64::max)
            })
            .sum()
    }

    /// Non-zero residue entries as `(hop, node, value)`, hop-major and
    /// node-ascending.
    pub fn residue_entries(&self) -> Vec<(usize, NodeId, f64)> {
        let mut out = Vec::with_capacity(self.nonzero_residues());
        for (k, r) in self.residues.iter().enumerate() {
            let start = out.len();
            out.extend(r.iter().map(|(&u, &x)| (k, u, x)));
            out[start..].sort_unstable_by_key(|e| e.1);
        }
        out
    }

    /// Reserve entries sorted by node.
    pub fn reserve_entries(&self) -> Vec<(NodeId, f64)> {
        let mut out: Vec<_> = self.reserve.iter().map(|(&v, &x)| (v, x)).collect();
        out.sort_unstable_by_key(|e| e.0);
        out
    }
}

/// Pushes the whole `k`-hop residue of `v`. Calls `on_write(u, new_value)` for
/// every neighbour residue it increases at hop `k + 1`.
fn push_entry<F: FnMut(NodeId, f64)>(
    g: &Graph,
    w: &PoissonWeights,
    state: &mut PushState,
    v: NodeId,
    k: usize,
    mut on_write: F,
) {
    let r = match state.residues[k].remove(&v) {
        Some(r) => r,
        None => return,
    };
    let stop = w.stop_probability(k);
    *state.reserve.entry(v).or_insert(0.0) += stop * r;
    if stop >= 1.0 {
        return;
    }
    let share = (1.0 - stop) * r / g.degree(v) as f64;
    if state.residues.len() <= k + 1 {
        state.residues.resize_with(k + 2, SparseVec::default);
    }
    let next = &mut state.residues[k + 1];
    for &u in g.neighbors(v) {
        let slot = next.entry(u).or_insert(0.0);
        *slot += share;
        on_write(u, *slot);
    }
}

/// Threshold-driven push: runs until no entry has `r^(k)[v] > r_max * d(v)`.
pub fn hk_push(g: &Graph, seed: NodeId, r_max: f64, w: &PoissonWeights) -> Result<PushState> {
    hk_push_observed(g, seed, r_max, w, |_| {})
}

/// [`hk_push`] that hands the state to `observe` after initialisation and
/// after every push.
pub fn hk_push_observed<O: FnMut(&PushState)>(
    g: &Graph,
    seed: NodeId,
    r_max: f64,
    w: &PoissonWeights,
    mut observe: O,
) -> Result<PushState> {
    g.check_seed(seed)?;
    if !(r_max > 0.0) {
        return Err(Error::param(format!("r_max must be positive, got {r_max}")));
    }
    let mut state = PushState::start(seed, 1);
    let mut queue: VecDeque<(NodeId, usize)> = VecDeque::new();
    let mut queued: FxHashSet<(NodeId, usize)> = FxHashSet::default();
    if 1.0 > r_max * g.degree(seed) as f64 {
        queue.push_back((seed, 0));
        queued.insert((seed, 0));
    }
    observe(&state);

    while let Some((v, k)) = queue.pop_front() {
        queued.remove(&(v, k));
        if state.residue(k, v) <= r_max * g.degree(v) as f64 {
            continue;
        }
        state.pushes_done += g.degree(v) as u64;
        push_entry(g, w, &mut state, v, k, |u, value| {
            if value > r_max * g.degree(u) as f64 && queued.insert((u, k + 1)) {
                queue.push_back((u, k + 1));
            }
        });
        observe(&state);
    }
    Ok(state)
}

/// Running per-hop maximum of `r/d`, rescanned when the holder is pushed.
struct RatioTracker {
    best: Vec<(f64, Option<NodeId>)>,
    stale: Vec<bool>,
}

impl RatioTracker {
    fn new(hops: usize) -> Self {
        Self {
            best: vec![(0.0, None); hops],
            stale: vec![false; hops],
        }
    }

    fn offer(&mut self, k: usize, u: NodeId, ratio: f64) {
        if !self.stale[k] && ratio > self.best[k].0 {
            self.best[k] = (ratio, Some(u));
        }
    }

    fn cleared(&mut self, k: usize, v: NodeId) {
        if self.best[k].1 == Some(v) {
            self.stale[k] = true;
        }
    }

    fn sum(&mut self, g: &Graph, state: &PushState) -> f64 {
        let mut total = 0.0;
        for k in 0..self.best.len() {
            if self.stale[k] {
                let mut best = (0.0, None);
                for (&u, &x) in &state.residues[k] {
                    let ratio = x / g.degree(u) as f64;
                    if ratio > best.0 || (ratio == best.0 && best.1.is_some_and(|b| u < b)) {
                        best = (ratio, Some(u));
                    }
                }
                self.best[k] = best;
                self.stale[k] = false;
            }
            total += self.best[k].0;
        }
        total
    }
}

/// Budgeted push bounded to hops `< max_hops`.
///
/// Returns the state and whether `sum_k max_u r^(k)[u]/d(u) <= eps_r * delta`
/// held on exit.
pub fn hk_push_plus(
    g: &Graph,
    seed: NodeId,
    eps_r: f64,
    delta: f64,
    max_hops: usize,
    push_budget: u64,
    w: &PoissonWeights,
) -> Result<(PushState, bool)> {
    hk_push_plus_observed(g, seed, eps_r, delta, max_hops, push_budget, w, |_| {})
}

#[allow(clippy::too_many_arguments)]
pub fn hk_push_plus_observed<O: FnMut(&PushState)>(
    g: &Graph,
    seed: NodeId,
    eps_r: f64,
    delta: f64,
    max_hops: usize,
    push_budget: u64,
    w: &PoissonWeights,
    mut observe: O,
) -> Result<(PushState, bool)> {
    g.check_seed(seed)?;
    if max_hops < 1 {
        return Err(Error::param("hop cap K must be at least 1"));
    }
    if push_budget < 1 {
        return Err(Error::param("push budget must be at least 1"));
    }
    if !(eps_r > 0.0 && delta > 0.0) {
        return Err(Error::param("eps_r and delta must be positive"));
    }
    let eps_a = eps_r * delta;
    let threshold = eps_a / max_hops as f64;

    let mut state = PushState::start(seed, max_hops + 1);
    let mut tracker = RatioTracker::new(max_hops + 1);
    tracker.offer(0, seed, 1.0 / g.degree(seed) as f64);

    let mut queue: VecDeque<(NodeId, usize)> = VecDeque::new();
    let mut queued: FxHashSet<(NodeId, usize)> = FxHashSet::default();
    if 1.0 > threshold * g.degree(seed) as f64 {
        queue.push_back((seed, 0));
        queued.insert((seed, 0));
    }
    observe(&state);

    while let Some((v, k)) = queue.pop_front() {
        queued.remove(&(v, k));
        if state.residue(k, v) <= threshold * g.degree(v) as f64 {
            continue;
        }
        state.pushes_done += g.degree(v) as u64;
        if state.pushes_done >= push_budget || tracker.sum(g, &state) <= eps_a {
            break;
        }
        tracker.cleared(k, v);
        let next_hop = k + 1;
        push_entry(g, w, &mut state, v, k, |u, value| {
            let d = g.degree(u) as f64;
            tracker.offer(next_hop, u, value / d);
            if next_hop < max_hops && value > threshold * d && queued.insert((u, next_hop)) {
                queue.push_back((u, next_hop));
            }
        });
        observe(&state);
    }

    let converged = tracker.sum(g, &state) <= eps_a;
    Ok((state, converged))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{load_edge_list, LoadOptions};

    fn toy() -> Graph {
        let text = "s v1\ns v2\nv1 v2\nv1 v3\nv2 v4\nv2 v5\nv2 v6\nv2 v7\n";
        load_edge_list(text.as_bytes(), LoadOptions::default()).unwrap().0
    }

    #[test]
    fn no_push_when_threshold_not_exceeded() {
        let g = toy();
        let w = PoissonWeights::new(3.0).unwrap();
        let st = hk_push(&g, 0, 1.0, &w).unwrap();
        assert!(st.reserve.is_empty());
        assert_eq!(st.residue(0, 0), 1.0);
        assert_eq!(st.pushes_done, 0);
    }

    #[test]
    fn single_round_matches_hand_values() {
        let g = toy();
        let w = PoissonWeights::new(3.0).unwrap();
        // 1/d(s) = 0.5 > r_max = 0.4, but hop-1 ratios stay below it.
        let st = hk_push(&g, 0, 0.4, &w).unwrap();
        let e3 = 3.0f64.exp();
        assert!((st.reserve_of(0) - 1.0 / e3).abs() < 1e-15);
        let r1 = (e3 - 1.0) / (2.0 * e3);
        assert!((st.residue(1, 1) - r1).abs() < 1e-15);
        assert!((st.residue(1, 2) - r1).abs() < 1e-15);
        assert!((r1 - 0.475107).abs() < 1e-6);
        assert_eq!(st.pushes_done, 2);
    }

    #[test]
    fn mass_is_conserved() {
        let g = toy();
        let w = PoissonWeights::new(5.0).unwrap();
        for &r_max in &[0.3, 0.05, 1e-3, 1e-5] {
            let st = hk_push(&g, 0, r_max, &w).unwrap();
            let total = st.reserve_sum() + st.residue_sum();
            assert!((total - 1.0).abs() < 1e-12, "r_max={r_max} total={total}");
            for (k, v, x) in st.residue_entries() {
                assert!(x <= r_max * g.degree(v) as f64, "({v},{k}) above threshold");
            }
        }
    }

    #[test]
    fn isolated_seed_rejected() {
        let opts = LoadOptions {
            header: true,
            ..Default::default()
        };
        let g = load_edge_list("3 1\n0 1\n".as_bytes(), opts).unwrap().0;
        let w = PoissonWeights::new(3.0).unwrap();
        assert!(hk_push(&g, 0, 0.1, &w).is_ok());
        let iso = g.node("2").unwrap();
        assert!(hk_push(&g, iso, 0.1, &w).is_err());
        assert!(hk_push_plus(&g, iso, 0.5, 0.1, 2, 10, &w).is_err());
    }

    #[test]
    fn budget_of_one_stops_immediately() {
        let g = toy();
        let w = PoissonWeights::new(3.0).unwrap();
        let (st, converged) = hk_push_plus(&g, 0, 0.5, 0.01, 2, 1, &w).unwrap();
        assert!(!converged);
        assert!(st.reserve.is_empty());
        assert_eq!(st.residue(0, 0), 1.0);
    }

    #[test]
    fn ratio_tracker_matches_full_scan() {
        let g = toy();
        let w = PoissonWeights::new(3.0).unwrap();
        let mut checks = 0;
        let (st, converged) = hk_push_plus_observed(&g, 2, 0.5, 0.002, 6, 1_000_000, &w, |_| {
            checks += 1;
        })
        .unwrap();
        assert!(checks > 1);
        assert_eq!(converged, st.max_ratio_sum(&g) <= 0.5 * 0.002);
    }
}
