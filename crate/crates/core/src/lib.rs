//! Multi-prototype sense embeddings induced from single-prototype word
//! embeddings.
//!
//! The pipeline builds a nearest-neighbor similarity graph over a word
//! embedding matrix ([`knn`]), clusters the ego-network of every word into
//! senses ([`wsi`]), averages member word vectors into sense vectors
//! ([`pooling`]) and uses those to label words in context ([`wsd`]).
//! [`eval`] scores the result against a gold sense inventory.

pub mod embedding;
pub mod error;
pub mod eval;
pub mod knn;
pub mod pooling;
pub mod synthetic;
pub mod wsd;
pub mod wsi;

pub use embedding::{cosine, EmbeddingMatrix, Format, VectorKind, VectorQueryOptions};
pub use error::{Error, Result};
pub use knn::{build_knn_graph, Neighbor, SimilarityGraph};
pub use pooling::{build_store, pool_sense, PoolingMode, SenseKey, SenseVectorStore};
pub use wsd::{disambiguate, DisambiguationRequest, DisambiguationResult, Strategy};
pub use wsi::{induce_inventory, InductionParams, SenseCluster, SenseInventory};
