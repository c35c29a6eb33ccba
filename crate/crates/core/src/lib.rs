//! Desk-scale experiments on spanning subgraphs of dense random graphs:
//! adversarial hosts, bandwidth labelings, regularity-style partitions,
//! spanning embeddings and near-perfect packings.

pub mod adversary;
pub mod bandwidth;
pub mod bits;
pub mod embedder;
pub mod error;
pub mod graphcore;
pub mod packing;
pub mod params;
pub mod probharness;
pub mod regularity;

pub use error::{Error, Result, StageFailure};
pub use graphcore::{Graph, VertexSet};
