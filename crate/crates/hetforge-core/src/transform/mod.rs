//! Semantic-preserving transformation of a typed graph onto its target type.
//!
//! Stages: feature padding/initialization, SVD alignment to a shared width,
//! meta-pattern mining, path instance enumeration, and homogenization (each
//! bundle of instances between two target nodes collapses into one edge whose
//! feature averages the aligned intermediate-node features). A type-blind
//! flattening constructor is provided as the ablation baseline.

mod mining;
mod svd;

pub use mining::{
    enumerate_instances, mine_meta_patterns, MiningConfig, MiningMode, PathInstanceSet,
};
pub use svd::svd_align;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{HeteroGraph, HomoGraph, MetaPattern};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AlignConfig {
    /// Shared feature width after alignment.
    pub d: usize,
}

impl AlignConfig {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::BadConfig { what: "alignment width must be >= 1" });
        }
        Ok(AlignConfig { d })
    }
}

/// Give every node type a feature matrix at least `d` wide: featureless
/// types get a one-hot identity, narrower matrices are right-padded with
/// zeros. Wider matrices pass through untouched (the SVD truncates later).
pub fn pad_and_init(g: &HeteroGraph, d: usize) -> BTreeMap<usize, Tensor> {
    let mut out = BTreeMap::new();
    for t in 0..g.node_types.len() {
        let n = g.node_type_of.iter().filter(|&&x| x == t).count();
        let base = match g.features.get(&t) {
            Some(m) => m.clone(),
            None => {
                let mut eye = Tensor::zeros(n, n);
                for i in 0..n {
                    eye.set(i, i, 1.0);
                }
                eye
            }
        };
        let padded = if base.cols() < d {
            let mut wide = Tensor::zeros(base.rows(), d);
            for r in 0..base.rows() {
                wide.row_mut(r)[..base.cols()].copy_from_slice(base.row(r));
            }
            wide
        } else {
            base
        };
        out.insert(t, padded);
    }
    out
}

/// Pad, initialize, and SVD-align every node type to width `d`.
pub fn align_features(g: &HeteroGraph, cfg: AlignConfig) -> Result<BTreeMap<usize, Tensor>> {
    let padded = pad_and_init(g, cfg.d);
    let mut out = BTreeMap::new();
    for (t, m) in padded {
        out.insert(t, svd_align(&m, cfg.d)?);
    }
    Ok(out)
}

/// Build the target-type homogeneous graph from mined path instances.
///
/// For each unordered pair of target nodes the instance lists of both
/// orientations are merged (reversed instances are canonicalized, exact
/// duplicates dropped, and the merged list sorted so the edge feature does
/// not depend on discovery order). The edge feature is the mean over
/// instances of the mean aligned feature of each instance's intermediate
/// nodes; both edge orientations share it. Target nodes left without any
/// pattern edge get a self-loop carrying their own feature row.
pub fn homogenize(
    g: &HeteroGraph,
    target: usize,
    aligned: &BTreeMap<usize, Tensor>,
    instances: &PathInstanceSet,
) -> Result<HomoGraph> {
    let targets = g.nodes_of_type(target);
    if targets.is_empty() {
        return Err(Error::NoTargetNodes { type_id: target });
    }
    let type_local = g.type_local_index();
    let target_feats = aligned.get(&target).ok_or(Error::MissingAligned { type_id: target })?;
    let d = target_feats.cols();

    let local: BTreeMap<usize, usize> =
        targets.iter().enumerate().map(|(i, &v)| (v, i)).collect();

    let mut x_v = Tensor::zeros(targets.len(), d);
    for (i, &v) in targets.iter().enumerate() {
        x_v.row_mut(i).copy_from_slice(target_feats.row(type_local[v]));
    }

    // Merge ordered-pair instance lists into unordered pairs.
    let mut merged: BTreeMap<(usize, usize), BTreeSet<Vec<usize>>> = BTreeMap::new();
    for ((u, v), list) in &instances.instances {
        let (Some(&lu), Some(&lv)) = (local.get(u), local.get(v)) else {
            continue; // endpoints outside the target set cannot occur by construction
        };
        if lu == lv {
            continue;
        }
        let key = (lu.min(lv), lu.max(lv));
        let entry = merged.entry(key).or_default();
        for inst in list {
            if lu < lv {
                entry.insert(inst.clone());
            } else {
                let mut rev = inst.clone();
                rev.reverse();
                entry.insert(rev);
            }
        }
    }

    let row_of = |node: usize| -> Result<&[f64]> {
        let t = g.node_type_of[node];
        let m = aligned.get(&t).ok_or(Error::MissingAligned { type_id: t })?;
        Ok(m.row(type_local[node]))
    };

    let mut edge_feat: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for ((a, b), insts) in &merged {
        let mut acc = alloc::vec![0.0; d];
        for inst in insts {
            let inv_k = 1.0 / inst.len() as f64;
            let mut inner = alloc::vec![0.0; d];
            for &node in inst {
                for (s, &f) in inner.iter_mut().zip(row_of(node)?) {
                    *s += f;
                }
            }
            for (a_, i_) in acc.iter_mut().zip(&inner) {
                *a_ += i_ * inv_k;
            }
        }
        let inv_n = 1.0 / insts.len() as f64;
        for v in &mut acc {
            *v *= inv_n;
        }
        edge_feat.insert((*a, *b), acc.clone());
        edge_feat.insert((*b, *a), acc);
    }

    // Self-loops for nodes without any pattern edge.
    let mut covered = alloc::vec![false; targets.len()];
    for &(u, v) in edge_feat.keys() {
        covered[u] = true;
        covered[v] = true;
    }
    for (i, done) in covered.iter().enumerate() {
        if !done {
            edge_feat.insert((i, i), x_v.row(i).to_vec());
        }
    }

    let edges: Vec<(usize, usize)> = edge_feat.keys().copied().collect();
    let mut x_e = Tensor::zeros(edges.len(), d);
    for (r, e) in edges.iter().enumerate() {
        x_e.row_mut(r).copy_from_slice(&edge_feat[e]);
    }

    HomoGraph::new(targets.iter().map(|&v| v as u64).collect(), x_v, edges, x_e)
}

#[derive(Clone, Debug)]
pub struct TransformConfig {
    pub align: AlignConfig,
    pub mining: MiningConfig,
    /// Max path instances retained per ordered node pair.
    pub instance_cap: usize,
}

/// Full pipeline: validate, align, mine, enumerate, homogenize.
pub fn transform(
    g: &HeteroGraph,
    target: usize,
    cfg: &TransformConfig,
) -> Result<(HomoGraph, Vec<MetaPattern>)> {
    g.validate()?;
    let aligned = align_features(g, cfg.align)?;
    let patterns = mine_meta_patterns(g, target, &cfg.mining)?;
    let homo = if patterns.is_empty() {
        // No closed loops at all: every target node becomes an isolated
        // self-loop node.
        let empty = PathInstanceSet { instances: BTreeMap::new(), cap: cfg.instance_cap };
        homogenize(g, target, &aligned, &empty)?
    } else {
        let instances = enumerate_instances(g, &patterns, cfg.instance_cap)?;
        homogenize(g, target, &aligned, &instances)?
    };
    Ok((homo, patterns))
}

/// Type-blind flattening baseline: every node kept, every edge kept untyped,
/// features zero-padded (or truncated) to width `d` with no SVD, and each
/// edge feature the mean of its endpoint features.
pub fn flatten_baseline(g: &HeteroGraph, d: usize) -> Result<HomoGraph> {
    g.validate()?;
    if d == 0 {
        return Err(Error::BadConfig { what: "alignment width must be >= 1" });
    }
    let padded = pad_and_init(g, d);
    let type_local = g.type_local_index();
    let n = g.n_nodes();
    let mut x_v = Tensor::zeros(n, d);
    for v in 0..n {
        let row = padded[&g.node_type_of[v]].row(type_local[v]);
        x_v.row_mut(v).copy_from_slice(&row[..d]);
    }

    let mut edge_set: BTreeSet<(usize, usize)> = BTreeSet::new();
    for &(u, v, _) in &g.edges {
        edge_set.insert((u, v));
    }
    let mut covered = alloc::vec![false; n];
    for &(u, v) in &edge_set {
        covered[u] = true;
        covered[v] = true;
    }
    for (v, done) in covered.iter().enumerate() {
        if !done {
            edge_set.insert((v, v));
        }
    }

    let edges: Vec<(usize, usize)> = edge_set.into_iter().collect();
    let mut x_e = Tensor::zeros(edges.len(), d);
    for (r, &(u, v)) in edges.iter().enumerate() {
        for ((e, &a), &b) in x_e.row_mut(r).iter_mut().zip(x_v.row(u)).zip(x_v.row(v)) {
            *e = 0.5 * (a + b);
        }
    }

    HomoGraph::new((0..n as u64).collect(), x_v, edges, x_e)
}
