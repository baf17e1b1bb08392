//! IO, file formats, and experiment orchestration around `hetforge-core`.
//!
//! - [`bundle`]: the on-disk heterogeneous graph bundle (schema.json +
//!   nodes.tsv + edges.tsv + optional per-type feature tables) and label
//!   files.
//! - [`homograph_file`]: versioned JSON for transformed homogeneous graphs.
//! - [`model_file`]: versioned JSON for pre-trained encoder bundles.
//! - [`report`]: experiment reports (JSON plus a text table).
//! - [`experiment`]: leave-one-out protocol, ablations, synthetic suites.
//! - [`cli`]: the `hetforge` command-line surface.

pub mod bundle;
pub mod cli;
pub mod experiment;
pub mod homograph_file;
pub mod model_file;
pub mod report;

mod error;

pub use error::{HetforgeError, Result};
