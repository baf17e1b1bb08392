//! Crate-wide error type. Every violated invariant gets its own variant so
//! tests can assert on the exact failure.

use alloc::string::String;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    // ---- graph validation ----
    /// An edge endpoint does not name a valid node id.
    DanglingEndpoint { edge_index: usize, node: usize, n_nodes: usize },
    /// A node or edge carries a type id outside its name list.
    BadTypeId { kind: &'static str, id: usize, n_types: usize },
    /// Fewer than three node/edge types in total: the graph is not heterogeneous.
    NotHeterogeneous { n_node_types: usize, n_edge_types: usize },
    /// A per-type feature matrix has the wrong number of rows.
    FeatureRowMismatch { type_name: String, rows: usize, nodes: usize },
    /// Homogeneous graph: edge feature row count differs from the edge count.
    EdgeFeatureRowMismatch { rows: usize, edges: usize },
    /// Homogeneous graph: duplicate (u, v) entry.
    DuplicateEdge { u: usize, v: usize },
    /// Homogeneous graph: node feature width and edge feature width differ.
    EdgeFeatureWidth { node_dim: usize, edge_dim: usize },
    /// Node id list and feature row count disagree.
    NodeRowMismatch { ids: usize, rows: usize },

    // ---- transform ----
    /// The requested target type has no nodes (or does not exist).
    NoTargetNodes { type_id: usize },
    /// A mining window configuration violates 3 <= w <= L + 1.
    BadWindow { window: usize, walk_len: usize },
    /// A config field is out of its documented range.
    BadConfig { what: &'static str },
    /// A matrix fed to the SVD contains non-finite entries.
    NonFinite { op: &'static str },
    /// Requested alignment width exceeds the padded feature width.
    BadAlignDim { d: usize, cols: usize },
    /// An instance references an intermediate type with no aligned features.
    MissingAligned { type_id: usize },

    // ---- tensor engine ----
    /// Operand shapes are incompatible for the named primitive.
    ShapeMismatch { op: &'static str, lhs: (usize, usize), rhs: (usize, usize) },
    /// `backward` was called on a non-scalar value.
    NonScalarLoss { shape: (usize, usize) },
    /// Logarithm of a non-positive entry.
    LogDomain { value: f64 },
    /// A row index is out of bounds for the named primitive.
    RowIndex { op: &'static str, index: usize, rows: usize },
    /// An operation that needs at least one element got none.
    EmptyInput { op: &'static str },

    // ---- training ----
    /// A training loss became non-finite; carries the epoch for diagnosis.
    NonFiniteLoss { epoch: usize },
    /// Encoder/bundle dimensions do not match the graph; re-transform with a
    /// matching alignment width.
    DimMismatch { expected: usize, got: usize, what: &'static str },
    /// Prompt composition requires at least one source domain.
    NoSourcePrompts,
    /// A class has no support instances.
    MissingClass { class: usize },
    /// A class has too few labeled instances for the requested split.
    InsufficientInstances { class: usize, have: usize, need: usize },
    /// The frozen encoder changed during fine-tuning.
    BackboneChanged,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DanglingEndpoint { edge_index, node, n_nodes } => write!(
                f,
                "dangling endpoint: edge {edge_index} references node {node} but only {n_nodes} nodes exist"
            ),
            Error::BadTypeId { kind, id, n_types } => {
                write!(f, "{kind} type id {id} out of range (have {n_types} types)")
            }
            Error::NotHeterogeneous { n_node_types, n_edge_types } => write!(
                f,
                "not heterogeneous: {n_node_types} node types + {n_edge_types} edge types <= 2"
            ),
            Error::FeatureRowMismatch { type_name, rows, nodes } => write!(
                f,
                "feature rows != node count for type {type_name}: {rows} rows, {nodes} nodes"
            ),
            Error::EdgeFeatureRowMismatch { rows, edges } => {
                write!(f, "edge feature rows ({rows}) != edge count ({edges})")
            }
            Error::DuplicateEdge { u, v } => write!(f, "duplicate edge ({u}, {v})"),
            Error::EdgeFeatureWidth { node_dim, edge_dim } => {
                write!(f, "edge feature width {edge_dim} != node feature width {node_dim}")
            }
            Error::NodeRowMismatch { ids, rows } => {
                write!(f, "node id count ({ids}) != feature row count ({rows})")
            }
            Error::NoTargetNodes { type_id } => {
                write!(f, "no nodes of target type {type_id}")
            }
            Error::BadWindow { window, walk_len } => write!(
                f,
                "window size {window} outside 3..=walk_len+1 (walk_len = {walk_len})"
            ),
            Error::BadConfig { what } => write!(f, "invalid config: {what}"),
            Error::NonFinite { op } => write!(f, "non-finite entries in {op}"),
            Error::BadAlignDim { d, cols } => {
                write!(f, "alignment width {d} exceeds feature width {cols}")
            }
            Error::MissingAligned { type_id } => {
                write!(f, "no aligned features for intermediate type {type_id}")
            }
            Error::ShapeMismatch { op, lhs, rhs } => write!(
                f,
                "{op}: shape mismatch {}x{} vs {}x{}",
                lhs.0, lhs.1, rhs.0, rhs.1
            ),
            Error::NonScalarLoss { shape } => {
                write!(f, "backward requires a scalar loss, got {}x{}", shape.0, shape.1)
            }
            Error::LogDomain { value } => write!(f, "log of non-positive value {value}"),
            Error::RowIndex { op, index, rows } => {
                write!(f, "{op}: row index {index} out of bounds ({rows} rows)")
            }
            Error::EmptyInput { op } => write!(f, "{op}: empty input"),
            Error::NonFiniteLoss { epoch } => {
                write!(f, "non-finite loss at epoch {epoch}")
            }
            Error::DimMismatch { expected, got, what } => write!(
                f,
                "{what} dimension mismatch: expected {expected}, got {got}; \
                 re-run the transformation with a matching alignment width"
            ),
            Error::NoSourcePrompts => write!(f, "prompt composition needs at least one source"),
            Error::MissingClass { class } => write!(f, "class {class} has no support instances"),
            Error::InsufficientInstances { class, have, need } => write!(
                f,
                "class {class} has {have} labeled instances, needs at least {need}"
            ),
            Error::BackboneChanged => write!(f, "frozen encoder parameters changed"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T, E = Error> = core::result::Result<T, E>;
