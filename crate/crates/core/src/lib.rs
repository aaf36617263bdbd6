//! Region retrieval for whole-slide images.
//!
//! Slides arrive as grids of patch feature vectors. Each slide is cut into
//! spatially connected regions by adjacency-constrained agglomerative
//! clustering ([`graphcons`]); each region becomes a graph that a
//! hierarchical GCN with differentiable pooling and a tanh hash head encodes
//! into a short binary code ([`gcn`], trained in [`train`]). Codes go into a
//! Hamming-distance index ([`index`]) and retrieval quality is measured with
//! precision-based metrics ([`eval`]). [`pipeline`] wires the stages
//! together.

mod binio;

pub mod backprop;
pub mod config;
pub mod error;
pub mod eval;
pub mod gcn;
pub mod graphcons;
pub mod index;
pub mod ingest;
pub mod pipeline;
pub mod train;

pub use error::{Error, Result};
pub use gcn::{binarize, encode_graph, GcnHashParams, Mode, ModelDims};
pub use graphcons::{GraphLabel, TissueGraph};
pub use index::{hamming, BinaryCode, BinaryCodeIndex, RetrievalResult};
pub use ingest::{PatchAdjacency, PatchGrid, SyntheticSpec};
pub use train::{TrainConfig, TrainOutcome};
