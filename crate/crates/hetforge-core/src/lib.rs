//! Core algorithms for cross-domain learning on heterogeneous graphs.
//!
//! The pipeline has three phases, each usable on its own:
//!
//! 1. **Transformation** ([`transform`]): a typed graph is rewritten onto its
//!    target node type. Features of every type are aligned to a common width
//!    by truncated SVD, frequent closed-loop type sequences (meta-patterns)
//!    are mined from random walks, and each bundle of matching path instances
//!    collapses into one edge whose feature vector averages the intermediate
//!    node features.
//! 2. **Pre-training** ([`pretrain`]): a shared message-passing encoder with
//!    per-domain prompt vectors is trained across several source domains with
//!    an infomax-style contrastive objective (bilinear discriminator between
//!    node embeddings and a corrupted-view global summary).
//! 3. **Adaptation** ([`adapt`]): the encoder is frozen; a softmax-weighted
//!    composition of the source prompts plus freshly learned open prompts is
//!    fine-tuned on a few labeled instances, and queries are classified by
//!    temperature-scaled cosine similarity to class prototypes.
//!
//! The crate is `no_std`-compatible (it allocates but performs no IO); file
//! formats, the CLI, and experiment orchestration live in the companion
//! `hetforge` crate. All randomness is drawn from [`rng`] so that fixed seeds
//! reproduce results bit for bit.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod adapt;
pub mod encoder;
pub mod error;
pub mod fewshot;
pub mod graph;
pub mod metrics;
pub mod pretrain;
pub mod rng;
pub mod synth;
pub mod tensor;
pub mod transform;

pub use error::{Error, Result};
pub use graph::{HeteroGraph, HomoGraph, MetaPattern};
pub use tensor::{Tape, Tensor, Var};
