//! Unsupervised ontology matching with optimal transport over label
//! embeddings.
//!
//! The pipeline has two stages. A global transport problem between the
//! label embeddings of two ontologies yields a coupling matrix, from which
//! candidate correspondences are read off ([`matching`]). Each candidate is
//! then rescored by a nested Wasserstein distance between the one-hop
//! contexts of its two elements, combined multiplicatively with string and
//! embedding similarities, and threshold-filtered into a one-to-one
//! alignment ([`refinement`]). [`evaluation`] scores alignments against
//! reference pairs and relates ontology-level Wasserstein similarity to
//! Jaccard overlap.

pub mod embeddings;
pub mod evaluation;
pub mod ground;
pub mod matching;
pub mod ontology;
pub mod pipeline;
pub mod refinement;
pub mod transport;

mod error;

pub use error::{Error, Result};
