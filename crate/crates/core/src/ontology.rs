//! Ontology elements, triples, and one-hop context extraction.
//!
//! Ontologies are read from a JSON document:
//!
//! ```json
//! {
//!   "id": "conference",
//!   "elements": [
//!     {"iri": "conf#Presentation", "kind": "class", "label": "Presentation"},
//!     {"iri": "conf#hasSpeaker", "kind": "object_property", "label": "hasSpeaker"}
//!   ],
//!   "triples": [["conf#Presentation", "subClassOf", "conf#Conference_Event"]]
//! }
//! ```
//!
//! `kind` is one of `class`, `object_property`, `datatype_property`, or
//! `datatype`. Datatype elements stand in for literal types so every triple
//! links two elements; objects of datatype-property triples that are not
//! declared are added as datatype elements automatically.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Reserved predicate keyword for class hierarchy edges.
pub const SUBCLASS_OF: &str = "subClassOf";

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema violation at line {line}, column {column}: {message}")]
    Schema {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("element {index}: duplicate iri {iri:?}")]
    DuplicateIri { index: usize, iri: String },
    #[error("element {index}: empty iri")]
    EmptyIri { index: usize },
    #[error("triple {index}: {iri:?} is not a declared element")]
    DanglingReference { index: usize, iri: String },
    #[error("triple {index}: predicate {iri:?} is neither subClassOf nor a property")]
    InvalidPredicate { index: usize, iri: String },
    #[error("unknown element {0:?}")]
    UnknownElement(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Class,
    ObjectProperty,
    DatatypeProperty,
    Datatype,
}

impl ElementKind {
    pub fn is_property(self) -> bool {
        matches!(self, ElementKind::ObjectProperty | ElementKind::DatatypeProperty)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ElementKind::Class => "class",
            ElementKind::ObjectProperty => "object_property",
            ElementKind::DatatypeProperty => "datatype_property",
            ElementKind::Datatype => "datatype",
        }
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OntologyElement {
    pub iri: String,
    pub kind: ElementKind,
    pub label: String,
    pub synonyms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Predicate {
    SubClassOf,
    Property(String),
}

impl Predicate {
    fn parse(raw: &str) -> Predicate {
        if raw == SUBCLASS_OF {
            Predicate::SubClassOf
        } else {
            Predicate::Property(raw.to_string())
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            Predicate::SubClassOf => SUBCLASS_OF,
            Predicate::Property(iri) => iri,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub subject: String,
    pub predicate: Predicate,
    pub object: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// The focal element is the subject.
    Outgoing,
    /// The focal element is the object.
    Incoming,
}

/// A triple from an element's one-hop neighbourhood.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ContextTriple {
    pub subject: String,
    pub predicate: Predicate,
    pub object: String,
    pub direction: Direction,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ElementRecord {
    pub iri: String,
    pub kind: ElementKind,
    #[serde(default)]
    pub label: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub synonyms: Vec<String>,
}

/// Serialized form of an [`Ontology`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OntologyDocument {
    pub id: String,
    pub elements: Vec<ElementRecord>,
    #[serde(default)]
    pub triples: Vec<[String; 3]>,
}

#[derive(Debug, Clone)]
pub struct Ontology {
    id: String,
    elements: Vec<OntologyElement>,
    index: HashMap<String, usize>,
    triples: Vec<Triple>,
}

/// Local name of an iri: the part after the last `#`, `/`, or `:`.
pub fn local_fragment(iri: &str) -> &str {
    iri.rsplit(['#', '/', ':']).next().unwrap_or(iri)
}

impl Ontology {
    pub fn from_document(doc: OntologyDocument) -> Result<Self, OntologyError> {
        let mut elements = Vec::with_capacity(doc.elements.len());
        let mut index = HashMap::new();

        for (i, rec) in doc.elements.into_iter().enumerate() {
            if rec.iri.is_empty() {
                return Err(OntologyError::EmptyIri { index: i });
            }
            if index.contains_key(&rec.iri) {
                return Err(OntologyError::DuplicateIri { index: i, iri: rec.iri });
            }
            let label = if rec.label.trim().is_empty() {
                local_fragment(&rec.iri).to_string()
            } else {
                rec.label
            };
            index.insert(rec.iri.clone(), elements.len());
            elements.push(OntologyElement {
                iri: rec.iri,
                kind: rec.kind,
                label,
                synonyms: rec.synonyms,
            });
        }

        let mut seen = HashSet::new();
        let mut triples = Vec::with_capacity(doc.triples.len());
        for (i, [s, p, o]) in doc.triples.into_iter().enumerate() {
            if !index.contains_key(&s) {
                return Err(OntologyError::DanglingReference { index: i, iri: s });
            }
            let predicate = Predicate::parse(&p);
            let literal_allowed = match &predicate {
                Predicate::SubClassOf => false,
                Predicate::Property(iri) => match index.get(iri).map(|&k| elements[k].kind) {
                    Some(ElementKind::DatatypeProperty) => true,
                    Some(ElementKind::ObjectProperty) => false,
                    Some(_) => return Err(OntologyError::InvalidPredicate { index: i, iri: p }),
                    None => return Err(OntologyError::DanglingReference { index: i, iri: p }),
                },
            };
            if !index.contains_key(&o) {
                if !literal_allowed {
                    return Err(OntologyError::DanglingReference { index: i, iri: o });
                }
                index.insert(o.clone(), elements.len());
                elements.push(OntologyElement {
                    label: local_fragment(&o).to_string(),
                    iri: o.clone(),
                    kind: ElementKind::Datatype,
                    synonyms: Vec::new(),
                });
            }
            let triple = Triple {
                subject: s,
                predicate,
                object: o,
            };
            if seen.insert(triple.clone()) {
                triples.push(triple);
            }
        }

        Ok(Ontology {
            id: doc.id,
            elements,
            index,
            triples,
        })
    }

    pub fn parse(text: &str) -> Result<Self, OntologyError> {
        let doc: OntologyDocument = serde_json::from_str(text).map_err(|e| OntologyError::Schema {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::from_document(doc)
    }

    pub fn to_document(&self) -> OntologyDocument {
        OntologyDocument {
            id: self.id.clone(),
            elements: self
                .elements
                .iter()
                .map(|e| ElementRecord {
                    iri: e.iri.clone(),
                    kind: e.kind,
                    label: e.label.clone(),
                    synonyms: e.synonyms.clone(),
                })
                .collect(),
            triples: self
                .triples
                .iter()
                .map(|t| [t.subject.clone(), t.predicate.as_str().to_string(), t.object.clone()])
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("ontology document serializes")
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn elements(&self) -> &[OntologyElement] {
        &self.elements
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn element(&self, iri: &str) -> Option<&OntologyElement> {
        self.index.get(iri).map(|&i| &self.elements[i])
    }

    /// Index of `iri` in [`Ontology::elements`].
    pub fn position(&self, iri: &str) -> Option<usize> {
        self.index.get(iri).copied()
    }

    /// Elements of one kind, in document order.
    pub fn elements_of(&self, kind: ElementKind) -> impl Iterator<Item = &OntologyElement> {
        self.elements.iter().filter(move |e| e.kind == kind)
    }

    pub fn class_count(&self) -> usize {
        self.elements_of(ElementKind::Class).count()
    }

    /// Every triple with `iri` as subject or object, in document order.
    pub fn extract_context(&self, iri: &str) -> Result<Vec<ContextTriple>, OntologyError> {
        if !self.index.contains_key(iri) {
            return Err(OntologyError::UnknownElement(iri.to_string()));
        }
        Ok(self
            .triples
            .iter()
            .filter_map(|t| {
                let direction = if t.subject == iri {
                    Direction::Outgoing
                } else if t.object == iri {
                    Direction::Incoming
                } else {
                    return None;
                };
                Some(ContextTriple {
                    subject: t.subject.clone(),
                    predicate: t.predicate.clone(),
                    object: t.object.clone(),
                    direction,
                })
            })
            .collect())
    }
}

pub fn load_ontology(path: impl AsRef<Path>) -> Result<Ontology, OntologyError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| OntologyError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ontology::parse(&text)
}
