//! Ground costs between label embeddings.
//!
//! An all-out-of-vocabulary label has no position in embedding space. Any
//! pair involving one is charged a penalty instead of a geometric distance:
//! the 99th-percentile entry among the pairs that do have geometry. Two
//! degenerate labels with identical tokens are the same string and cost 0.

use crate::embeddings::{embed_element, embed_with_synonyms, normalize_label};
use crate::embeddings::{ElementEmbedding, EmbeddingStore, SynonymMap};
use crate::ontology::{Ontology, OntologyElement, SUBCLASS_OF};
use crate::transport::{euclidean_cost, percentile, CostMatrix, TransportError};

pub const PENALTY_PERCENTILE: f64 = 99.0;

/// Penalty used when no pair in the matrix has geometry to take a
/// percentile from.
pub const FALLBACK_PENALTY: f64 = 1.0;

/// Cost between two embeddings under a fixed degenerate-pair penalty.
pub fn pair_cost(a: &ElementEmbedding, b: &ElementEmbedding, penalty: f64) -> f64 {
    match (a.is_degenerate(), b.is_degenerate()) {
        (false, false) => crate::transport::euclid(&a.mean_vector, &b.mean_vector),
        (true, true) if a.tokens == b.tokens => 0.0,
        _ => penalty,
    }
}

/// Euclidean cost matrix over mean vectors with degenerate rows and columns
/// replaced by the matrix's own 99th-percentile penalty.
pub fn label_cost_matrix(xs: &[&ElementEmbedding], ys: &[&ElementEmbedding]) -> Result<CostMatrix, TransportError> {
    let raw = euclidean_cost(
        &xs.iter().map(|e| e.mean_vector.as_slice()).collect::<Vec<_>>(),
        &ys.iter().map(|e| e.mean_vector.as_slice()).collect::<Vec<_>>(),
    )?;
    let any_degenerate = xs.iter().chain(ys).any(|e| e.is_degenerate());
    if !any_degenerate {
        return Ok(raw);
    }
    let geometric: Vec<f64> = cells(xs, ys)
        .filter(|&(i, j)| !xs[i].is_degenerate() && !ys[j].is_degenerate())
        .map(|(i, j)| raw.get(i, j))
        .collect();
    let penalty = percentile(&geometric, PENALTY_PERCENTILE).unwrap_or(FALLBACK_PENALTY);
    let values = cells(xs, ys).map(|(i, j)| {
        if xs[i].is_degenerate() || ys[j].is_degenerate() {
            pair_cost(xs[i], ys[j], penalty)
        } else {
            raw.get(i, j)
        }
    });
    CostMatrix::new(xs.len(), ys.len(), values.collect())
}

fn cells(xs: &[&ElementEmbedding], ys: &[&ElementEmbedding]) -> impl Iterator<Item = (usize, usize)> {
    let m = ys.len();
    (0..xs.len()).flat_map(move |i| (0..m).map(move |j| (i, j)))
}

/// Turns labels into embeddings, optionally substituting synonyms for
/// out-of-vocabulary tokens.
#[derive(Clone, Copy)]
pub struct Embedder<'a> {
    pub store: &'a EmbeddingStore,
    pub synonyms: Option<&'a SynonymMap>,
}

impl<'a> Embedder<'a> {
    pub fn new(store: &'a EmbeddingStore) -> Self {
        Embedder { store, synonyms: None }
    }

    pub fn with_synonyms(store: &'a EmbeddingStore, synonyms: &'a SynonymMap) -> Self {
        Embedder {
            store,
            synonyms: Some(synonyms),
        }
    }

    pub fn embed_label(&self, label: &str) -> ElementEmbedding {
        let tokens = normalize_label(label);
        match self.synonyms {
            Some(syn) => embed_with_synonyms(&tokens, self.store, syn),
            None => embed_element(&tokens, self.store),
        }
    }

    /// Embeds the label; if every token is out of vocabulary, the element's
    /// declared synonyms are tried in order.
    pub fn embed(&self, element: &OntologyElement) -> ElementEmbedding {
        let primary = self.embed_label(&element.label);
        if !primary.is_degenerate() {
            return primary;
        }
        element
            .synonyms
            .iter()
            .map(|s| self.embed_label(s))
            .find(|e| !e.is_degenerate())
            .unwrap_or(primary)
    }
}

/// An ontology with one embedding per element, aligned with
/// [`Ontology::elements`].
pub struct EmbeddedOntology<'a> {
    pub ontology: &'a Ontology,
    pub embeddings: Vec<ElementEmbedding>,
    /// Embedding of the `subClassOf` keyword's display tokens.
    pub subclass_of: ElementEmbedding,
}

impl<'a> EmbeddedOntology<'a> {
    pub fn new(ontology: &'a Ontology, embedder: &Embedder<'_>) -> Self {
        EmbeddedOntology {
            ontology,
            embeddings: ontology.elements().iter().map(|e| embedder.embed(e)).collect(),
            subclass_of: embedder.embed_label(SUBCLASS_OF),
        }
    }

    pub fn embedding(&self, iri: &str) -> Option<&ElementEmbedding> {
        self.ontology.position(iri).map(|i| &self.embeddings[i])
    }
}
