//! Heterogeneous and homogeneous graph data models.
//!
//! A [`HeteroGraph`] is the raw typed input: dense node ids, per-node type
//! assignments, typed directed edges, and optional per-type feature matrices.
//! A [`HomoGraph`] is the transformed view over target-type nodes only, with
//! aligned node features and semantics-enriched edge features. Both are
//! immutable after construction and safe to share across threads for reading.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Typed graph: nodes 0..n with a type each, typed edges, per-type features.
#[derive(Clone, Debug, PartialEq)]
pub struct HeteroGraph {
    /// Node type names; `node_type_of` indexes into this list.
    pub node_types: Vec<String>,
    /// Edge type names.
    pub edge_types: Vec<String>,
    /// Type id per node; the node set is implicitly `0..node_type_of.len()`.
    pub node_type_of: Vec<usize>,
    /// Directed edges `(src, dst, edge_type)`. Undirected inputs are stored
    /// doubled so message passing stays uniform.
    pub edges: Vec<(usize, usize, usize)>,
    /// Per node type: a `|V_a| x d_a` feature matrix, rows in ascending node
    /// id order within the type. Types without features are absent.
    pub features: BTreeMap<usize, Tensor>,
}

impl HeteroGraph {
    pub fn n_nodes(&self) -> usize {
        self.node_type_of.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Node ids of the given type, ascending. Row `i` of that type's feature
    /// matrix belongs to the `i`-th id returned here.
    pub fn nodes_of_type(&self, type_id: usize) -> Vec<usize> {
        (0..self.n_nodes()).filter(|&v| self.node_type_of[v] == type_id).collect()
    }

    /// Per-node rank within its type (inverse of [`Self::nodes_of_type`]).
    pub fn type_local_index(&self) -> Vec<usize> {
        let mut counters = alloc::vec![0usize; self.node_types.len()];
        let mut out = Vec::with_capacity(self.n_nodes());
        for &t in &self.node_type_of {
            out.push(counters[t]);
            counters[t] += 1;
        }
        out
    }

    /// Out-neighbor lists over all edge types.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = alloc::vec![Vec::new(); self.n_nodes()];
        for &(u, v, _) in &self.edges {
            adj[u].push(v);
        }
        adj
    }

    /// Out-neighbor lists with duplicates removed and ids ascending; used by
    /// deterministic path enumeration.
    pub fn adjacency_dedup(&self) -> Vec<Vec<usize>> {
        let mut adj = self.adjacency();
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }

    /// Check every structural invariant; each violation has its own error.
    pub fn validate(&self) -> Result<()> {
        if self.node_types.len() + self.edge_types.len() <= 2 {
            return Err(Error::NotHeterogeneous {
                n_node_types: self.node_types.len(),
                n_edge_types: self.edge_types.len(),
            });
        }
        let n = self.n_nodes();
        for (v, &t) in self.node_type_of.iter().enumerate() {
            if t >= self.node_types.len() {
                let _ = v;
                return Err(Error::BadTypeId { kind: "node", id: t, n_types: self.node_types.len() });
            }
        }
        for (i, &(u, v, t)) in self.edges.iter().enumerate() {
            if u >= n {
                return Err(Error::DanglingEndpoint { edge_index: i, node: u, n_nodes: n });
            }
            if v >= n {
                return Err(Error::DanglingEndpoint { edge_index: i, node: v, n_nodes: n });
            }
            if t >= self.edge_types.len() {
                return Err(Error::BadTypeId { kind: "edge", id: t, n_types: self.edge_types.len() });
            }
        }
        for (&t, m) in &self.features {
            if t >= self.node_types.len() {
                return Err(Error::BadTypeId { kind: "node", id: t, n_types: self.node_types.len() });
            }
            let nodes = self.node_type_of.iter().filter(|&&x| x == t).count();
            if m.rows() != nodes {
                return Err(Error::FeatureRowMismatch {
                    type_name: self.node_types[t].clone(),
                    rows: m.rows(),
                    nodes,
                });
            }
        }
        Ok(())
    }
}

/// Validate a heterogeneous graph (free-function form of
/// [`HeteroGraph::validate`]).
pub fn validate(g: &HeteroGraph) -> Result<()> {
    g.validate()
}

/// Target-type-only graph with aligned node features and per-edge semantic
/// features. Edges are directed local-index pairs; the transformation emits
/// both orientations of every pattern edge plus self-loops for otherwise
/// isolated nodes, so every node has at least one in-edge.
#[derive(Clone, Debug, PartialEq)]
pub struct HomoGraph {
    /// Original ids of the retained nodes, ascending; position = local index.
    pub node_ids: Vec<u64>,
    /// `|V| x d` aligned node features.
    pub x_v: Tensor,
    /// Directed edges as local index pairs, lexicographically sorted.
    pub edges: Vec<(usize, usize)>,
    /// `|E| x d` edge features, row i belongs to `edges[i]`.
    pub x_e: Tensor,
}

impl HomoGraph {
    pub fn new(
        node_ids: Vec<u64>,
        x_v: Tensor,
        edges: Vec<(usize, usize)>,
        x_e: Tensor,
    ) -> Result<Self> {
        let g = HomoGraph { node_ids, x_v, edges, x_e };
        g.validate()?;
        Ok(g)
    }

    pub fn n_nodes(&self) -> usize {
        self.node_ids.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Feature width d (= edge feature width).
    pub fn dim(&self) -> usize {
        self.x_v.cols()
    }

    /// Out-neighbor lists (symmetric whenever the transform built the graph).
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = alloc::vec![Vec::new(); self.n_nodes()];
        for &(u, v) in &self.edges {
            adj[u].push(v);
        }
        adj
    }

    /// Local index of an original node id.
    pub fn local_of(&self, original: u64) -> Option<usize> {
        self.node_ids.binary_search(&original).ok()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.node_ids.len();
        if self.x_v.rows() != n {
            return Err(Error::NodeRowMismatch { ids: n, rows: self.x_v.rows() });
        }
        if self.x_e.rows() != self.edges.len() {
            return Err(Error::EdgeFeatureRowMismatch {
                rows: self.x_e.rows(),
                edges: self.edges.len(),
            });
        }
        if !self.edges.is_empty() && self.x_e.cols() != self.x_v.cols() {
            return Err(Error::EdgeFeatureWidth {
                node_dim: self.x_v.cols(),
                edge_dim: self.x_e.cols(),
            });
        }
        let mut seen = alloc::collections::BTreeSet::new();
        for (i, &(u, v)) in self.edges.iter().enumerate() {
            if u >= n {
                return Err(Error::DanglingEndpoint { edge_index: i, node: u, n_nodes: n });
            }
            if v >= n {
                return Err(Error::DanglingEndpoint { edge_index: i, node: v, n_nodes: n });
            }
            if !seen.insert((u, v)) {
                return Err(Error::DuplicateEdge { u, v });
            }
        }
        Ok(())
    }
}

/// A closed-loop node-type sequence with its mined occurrence count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetaPattern {
    /// Node type ids; first and last equal the target type, length >= 3.
    pub type_sequence: Vec<usize>,
    /// Occurrence count from mining.
    pub frequency: u64,
}

impl MetaPattern {
    /// Render as "Paper-Author-Paper" using the graph's type names.
    pub fn render(&self, node_types: &[String]) -> String {
        let mut out = String::new();
        for (i, &t) in self.type_sequence.iter().enumerate() {
            if i > 0 {
                out.push('-');
            }
            out.push_str(&node_types[t]);
        }
        out
    }
}
