//! Meta-pattern mining and path instance enumeration.
//!
//! Patterns are closed-loop node-type sequences (both endpoints the target
//! type, length >= 3 nodes). Stochastic mining counts type sequences of
//! sliding windows over uniform random walks started at target nodes;
//! exhaustive mode counts all simple paths exactly and serves as the oracle.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{HeteroGraph, MetaPattern};
use crate::rng::{derive_idx, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MiningMode {
    /// Random-walk window counting.
    Stochastic,
    /// Exact simple-path enumeration (slow; used as the reference).
    Exhaustive,
}

#[derive(Clone, Debug)]
pub struct MiningConfig {
    /// Number of steps per walk (a walk visits `walk_length + 1` nodes).
    pub walk_length: usize,
    /// Maximum window size in nodes; windows of every size `3..=window` count.
    pub window: usize,
    /// Walks started per target node.
    pub walks_per_node: usize,
    /// How many top patterns to keep.
    pub top_k: usize,
    pub seed: u64,
    pub mode: MiningMode,
}

impl MiningConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window > self.walk_length + 1 {
            return Err(Error::BadWindow { window: self.window, walk_len: self.walk_length });
        }
        if self.walks_per_node == 0 {
            return Err(Error::BadConfig { what: "walks_per_node must be >= 1" });
        }
        if self.top_k == 0 {
            return Err(Error::BadConfig { what: "top_k must be >= 1" });
        }
        Ok(())
    }
}

/// Mine the `top_k` most frequent closed-loop type patterns for the target
/// type. Ties break by shorter pattern first, then lexicographic type order.
pub fn mine_meta_patterns(
    g: &HeteroGraph,
    target: usize,
    cfg: &MiningConfig,
) -> Result<Vec<MetaPattern>> {
    cfg.validate()?;
    if target >= g.node_types.len() {
        return Err(Error::NoTargetNodes { type_id: target });
    }
    let starts = g.nodes_of_type(target);
    if starts.is_empty() {
        return Err(Error::NoTargetNodes { type_id: target });
    }

    let counts = match cfg.mode {
        MiningMode::Stochastic => count_stochastic(g, target, &starts, cfg),
        MiningMode::Exhaustive => count_exhaustive(g, target, &starts, cfg.window),
    };

    let mut ranked: Vec<(Vec<usize>, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| {
        b.1.cmp(&a.1).then(a.0.len().cmp(&b.0.len())).then(a.0.cmp(&b.0))
    });
    Ok(ranked
        .into_iter()
        .take(cfg.top_k)
        .map(|(type_sequence, frequency)| MetaPattern { type_sequence, frequency })
        .collect())
}

fn count_stochastic(
    g: &HeteroGraph,
    target: usize,
    starts: &[usize],
    cfg: &MiningConfig,
) -> BTreeMap<Vec<usize>, u64> {
    let adj = g.adjacency();
    let mut counts: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    let mut walk: Vec<usize> = Vec::with_capacity(cfg.walk_length + 1);
    for &start in starts {
        // Per-start-node stream so the counts do not depend on iteration
        // order (or on how walks are distributed over workers).
        let mut rng = Rng::new(derive_idx(cfg.seed, "walk", start as u64));
        for _ in 0..cfg.walks_per_node {
            walk.clear();
            walk.push(start);
            let mut cur = start;
            for _ in 0..cfg.walk_length {
                let nbrs = &adj[cur];
                if nbrs.is_empty() {
                    break;
                }
                cur = nbrs[rng.below(nbrs.len())];
                walk.push(cur);
            }
            for size in 3..=cfg.window.min(walk.len()) {
                for off in 0..=(walk.len() - size) {
                    let wnd = &walk[off..off + size];
                    if g.node_type_of[wnd[0]] == target
                        && g.node_type_of[wnd[size - 1]] == target
                    {
                        let seq: Vec<usize> =
                            wnd.iter().map(|&v| g.node_type_of[v]).collect();
                        *counts.entry(seq).or_insert(0) += 1;
                    }
                }
            }
        }
    }
    counts
}

fn count_exhaustive(
    g: &HeteroGraph,
    target: usize,
    starts: &[usize],
    window: usize,
) -> BTreeMap<Vec<usize>, u64> {
    let adj = g.adjacency_dedup();
    let mut counts: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    let mut path: Vec<usize> = Vec::with_capacity(window);
    for &start in starts {
        path.clear();
        path.push(start);
        dfs_count(g, target, &adj, &mut path, window, &mut counts);
    }
    counts
}

fn dfs_count(
    g: &HeteroGraph,
    target: usize,
    adj: &[Vec<usize>],
    path: &mut Vec<usize>,
    window: usize,
    counts: &mut BTreeMap<Vec<usize>, u64>,
) {
    if path.len() == window {
        return;
    }
    let cur = *path.last().unwrap();
    for &nb in &adj[cur] {
        if path.contains(&nb) {
            continue; // simple paths only
        }
        path.push(nb);
        if path.len() >= 3 && g.node_type_of[nb] == target {
            let seq: Vec<usize> = path.iter().map(|&v| g.node_type_of[v]).collect();
            *counts.entry(seq).or_insert(0) += 1;
        }
        dfs_count(g, target, adj, path, window, counts);
        path.pop();
    }
}

/// Simple-path instances grouped by ordered target-node pair.
#[derive(Clone, Debug, PartialEq)]
pub struct PathInstanceSet {
    /// Per ordered pair (u, v): intermediate node id lists, in discovery
    /// order (depth-first, neighbors ascending), at most `cap` per pair.
    pub instances: BTreeMap<(usize, usize), Vec<Vec<usize>>>,
    pub cap: usize,
}

/// Enumerate, for every ordered pair of distinct target nodes, the simple
/// paths whose node-type sequence equals one of the mined patterns.
pub fn enumerate_instances(
    g: &HeteroGraph,
    patterns: &[MetaPattern],
    cap: usize,
) -> Result<PathInstanceSet> {
    if patterns.is_empty() {
        return Err(Error::EmptyInput { op: "enumerate_instances" });
    }
    if cap == 0 {
        return Err(Error::BadConfig { what: "instance cap must be >= 1" });
    }
    let full: BTreeSet<&[usize]> =
        patterns.iter().map(|p| p.type_sequence.as_slice()).collect();
    let mut prefixes: BTreeSet<&[usize]> = BTreeSet::new();
    for p in patterns {
        for len in 1..=p.type_sequence.len() {
            prefixes.insert(&p.type_sequence[..len]);
        }
    }
    let max_len = patterns.iter().map(|p| p.type_sequence.len()).max().unwrap();
    let target = patterns[0].type_sequence[0];

    let adj = g.adjacency_dedup();
    let mut out = PathInstanceSet { instances: BTreeMap::new(), cap };
    let mut path: Vec<usize> = Vec::with_capacity(max_len);
    let mut types: Vec<usize> = Vec::with_capacity(max_len);
    for start in g.nodes_of_type(target) {
        path.clear();
        types.clear();
        path.push(start);
        types.push(target);
        dfs_instances(g, &adj, &full, &prefixes, max_len, &mut path, &mut types, cap, &mut out);
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn dfs_instances(
    g: &HeteroGraph,
    adj: &[Vec<usize>],
    full: &BTreeSet<&[usize]>,
    prefixes: &BTreeSet<&[usize]>,
    max_len: usize,
    path: &mut Vec<usize>,
    types: &mut Vec<usize>,
    cap: usize,
    out: &mut PathInstanceSet,
) {
    if path.len() == max_len {
        return;
    }
    let cur = *path.last().unwrap();
    for &nb in &adj[cur] {
        if path.contains(&nb) {
            continue;
        }
        types.push(g.node_type_of[nb]);
        if !prefixes.contains(types.as_slice()) {
            types.pop();
            continue;
        }
        path.push(nb);
        if full.contains(types.as_slice()) {
            let pair = (path[0], nb);
            let list = out.instances.entry(pair).or_default();
            if list.len() < cap {
                list.push(path[1..path.len() - 1].to_vec());
            }
        }
        dfs_instances(g, adj, full, prefixes, max_len, path, types, cap, out);
        path.pop();
        types.pop();
    }
}
