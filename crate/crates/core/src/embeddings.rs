//! Word-vector storage, label normalization, and element embeddings.
//!
//! Vectors are read from the plain-text word2vec/fastText layout: an optional
//! `<count> <dim>` header followed by one `<token> <v1> ... <vd>` row per
//! token. Labels are split into lowercase word tokens and embedded as the mean
//! of their in-vocabulary token vectors.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("embedding file contains no vectors")]
    Empty,
}

/// Immutable token → vector map with a fixed dimension.
#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    dimension: usize,
    index: HashMap<String, usize>,
    data: Vec<f64>,
}

impl EmbeddingStore {
    /// Builds a store from `(token, vector)` pairs. Later duplicates replace
    /// earlier ones.
    pub fn from_entries<I, S>(dimension: usize, entries: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        if dimension == 0 {
            return Err(EmbeddingError::Parse {
                line: 0,
                message: "dimension must be positive".into(),
            });
        }
        let mut store = EmbeddingStore {
            dimension,
            index: HashMap::new(),
            data: Vec::new(),
        };
        for (n, (token, vector)) in entries.into_iter().enumerate() {
            if vector.len() != dimension {
                return Err(EmbeddingError::Parse {
                    line: n + 1,
                    message: format!("expected {dimension} components, found {}", vector.len()),
                });
            }
            if vector.iter().any(|v| !v.is_finite()) {
                return Err(EmbeddingError::Parse {
                    line: n + 1,
                    message: "non-finite component".into(),
                });
            }
            store.insert(token.into(), &vector);
        }
        Ok(store)
    }

    fn insert(&mut self, token: String, vector: &[f64]) {
        match self.index.get(&token) {
            Some(&slot) => {
                let start = slot * self.dimension;
                self.data[start..start + self.dimension].copy_from_slice(vector);
            }
            None => {
                self.index.insert(token, self.index.len());
                self.data.extend_from_slice(vector);
            }
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn vocabulary_size(&self) -> usize {
        self.index.len()
    }

    /// Returns `None` for tokens that are not in the vocabulary.
    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index.get(token).map(|&slot| {
            let start = slot * self.dimension;
            &self.data[start..start + self.dimension]
        })
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }
}

/// Reads a word-vector text file. See [`parse_embeddings`].
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingStore, EmbeddingError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| EmbeddingError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_embeddings(&text)
}

/// Parses the word-vector text format, with or without a `<count> <dim>`
/// header. Headerless input takes its dimension from the first row.
pub fn parse_embeddings(text: &str) -> Result<EmbeddingStore, EmbeddingError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
        .peekable();

    let (first_no, first) = *lines.peek().ok_or(EmbeddingError::Empty)?;
    let first_fields: Vec<&str> = first.split_whitespace().collect();

    // The header's vocabulary count is not enforced: truncated dumps keep
    // the original header.
    let dimension = if first_fields.len() == 2 && first_fields.iter().all(|f| f.parse::<usize>().is_ok()) {
        lines.next();
        let dim: usize = first_fields[1].parse().unwrap_or(0);
        if dim == 0 {
            return Err(EmbeddingError::Parse {
                line: first_no,
                message: "header declares zero dimension".into(),
            });
        }
        dim
    } else if first_fields.len() < 2 {
        return Err(EmbeddingError::Parse {
            line: first_no,
            message: "malformed header or row".into(),
        });
    } else {
        first_fields.len() - 1
    };

    let mut store = EmbeddingStore {
        dimension,
        index: HashMap::new(),
        data: Vec::new(),
    };
    let mut row = Vec::with_capacity(dimension);
    for (line_no, line) in lines {
        let mut fields = line.split_whitespace();
        let token = fields.next().ok_or_else(|| EmbeddingError::Parse {
            line: line_no,
            message: "missing token".into(),
        })?;
        row.clear();
        for field in fields {
            let value: f64 = field.parse().map_err(|_| EmbeddingError::Parse {
                line: line_no,
                message: format!("invalid number {field:?}"),
            })?;
            if !value.is_finite() {
                return Err(EmbeddingError::Parse {
                    line: line_no,
                    message: format!("non-finite value {field:?}"),
                });
            }
            row.push(value);
        }
        if row.len() != dimension {
            return Err(EmbeddingError::Parse {
                line: line_no,
                message: format!("expected {dimension} components, found {}", row.len()),
            });
        }
        store.insert(token.to_string(), &row);
    }

    if store.vocabulary_size() == 0 {
        return Err(EmbeddingError::Empty);
    }
    Ok(store)
}

/// A label split into lowercase word tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelTokens {
    pub original: String,
    pub tokens: Vec<String>,
}

impl LabelTokens {
    /// Tokens joined by single spaces.
    pub fn joined(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Splits on `_`, `-`, whitespace, punctuation, and camelCase boundaries,
/// then lowercases. Stopwords are kept.
pub fn normalize_label(label: &str) -> LabelTokens {
    let chars: Vec<char> = label.chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();

    for (i, &c) in chars.iter().enumerate() {
        if !c.is_alphanumeric() {
            flush(&mut current, &mut tokens);
            continue;
        }
        if folds(c) && !current.is_empty() {
            let prev = chars[i - 1];
            let next_lower = chars.get(i + 1).is_some_and(|n| n.is_lowercase());
            // "hasSpeaker" splits before S; "XMLFile" splits before F.
            if prev.is_lowercase() || prev.is_numeric() || (folds(prev) && next_lower) {
                flush(&mut current, &mut tokens);
            }
        }
        current.extend(c.to_lowercase().filter(|l| l.is_alphanumeric()));
    }
    flush(&mut current, &mut tokens);

    LabelTokens {
        original: label.to_string(),
        tokens,
    }
}

/// Uppercase letters that lowercasing changes. Letters such as U+1D4A5 are
/// uppercase without a lowercase form and would otherwise split again after
/// lowercasing.
fn folds(c: char) -> bool {
    c.is_uppercase() && !c.to_lowercase().eq([c])
}

fn flush(current: &mut String, tokens: &mut Vec<String>) {
    if !current.is_empty() {
        tokens.push(std::mem::take(current));
    }
}

/// Optional token → replacement-tokens map applied to out-of-vocabulary
/// tokens before lookup.
#[derive(Debug, Clone, Default)]
pub struct SynonymMap {
    entries: HashMap<String, Vec<String>>,
}

impl SynonymMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, token: &str, replacement: &str) {
        let tokens = normalize_label(replacement).tokens;
        self.entries.insert(token.to_lowercase(), tokens);
    }

    pub fn get(&self, token: &str) -> Option<&[String]> {
        self.entries.get(token).map(Vec::as_slice)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Parses `token<TAB>replacement words` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, EmbeddingError> {
        let mut map = SynonymMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (token, replacement) = line.split_once('\t').ok_or_else(|| EmbeddingError::Parse {
                line: i + 1,
                message: "expected token<TAB>replacement".into(),
            })?;
            map.insert(token.trim(), replacement.trim());
        }
        Ok(map)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EmbeddingError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| EmbeddingError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }
}

/// Embedding of one label: the mean vector plus the per-token vectors it was
/// averaged from.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementEmbedding {
    pub tokens: Vec<String>,
    pub mean_vector: Vec<f64>,
    pub token_vectors: Vec<(String, Vec<f64>)>,
    pub oov_tokens: Vec<String>,
}

impl ElementEmbedding {
    /// True when no token was found in the store; the mean is then zero and
    /// carries no geometry.
    pub fn is_degenerate(&self) -> bool {
        self.token_vectors.is_empty()
    }
}

/// Averages the in-vocabulary token vectors.
pub fn embed_element(tokens: &LabelTokens, store: &EmbeddingStore) -> ElementEmbedding {
    embed_tokens(&tokens.tokens, store, None)
}

/// Like [`embed_element`], substituting synonyms for tokens the store lacks.
pub fn embed_with_synonyms(tokens: &LabelTokens, store: &EmbeddingStore, synonyms: &SynonymMap) -> ElementEmbedding {
    embed_tokens(&tokens.tokens, store, Some(synonyms))
}

fn embed_tokens(tokens: &[String], store: &EmbeddingStore, synonyms: Option<&SynonymMap>) -> ElementEmbedding {
    let dim = store.dimension();
    let mut token_vectors = Vec::new();
    let mut oov_tokens = Vec::new();

    for token in tokens {
        if let Some(v) = store.get(token) {
            token_vectors.push((token.clone(), v.to_vec()));
            continue;
        }
        let replaced = synonyms.and_then(|s| s.get(token)).map(|repl| {
            repl.iter()
                .filter_map(|r| store.get(r).map(|v| (r.clone(), v.to_vec())))
                .collect::<Vec<_>>()
        });
        match replaced {
            Some(found) if !found.is_empty() => token_vectors.extend(found),
            _ => oov_tokens.push(token.clone()),
        }
    }

    let mut mean_vector = vec![0.0; dim];
    if !token_vectors.is_empty() {
        // Summed in sorted token order so the mean does not depend on the
        // order tokens appear in the label.
        let mut order: Vec<usize> = (0..token_vectors.len()).collect();
        order.sort_by(|&a, &b| {
            token_vectors[a]
                .1
                .partial_cmp(&token_vectors[b].1)
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        for &i in &order {
            for (m, x) in mean_vector.iter_mut().zip(&token_vectors[i].1) {
                *m += x;
            }
        }
        let n = token_vectors.len() as f64;
        mean_vector.iter_mut().for_each(|m| *m /= n);
    }

    ElementEmbedding {
        tokens: tokens.to_vec(),
        mean_vector,
        token_vectors,
        oov_tokens,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn header_file_loads() {
        let store = parse_embeddings("2 3\npaper 1 0 0\nauthor 0 1 0\n").unwrap();
        assert_eq!(store.vocabulary_size(), 2);
        assert_eq!(store.dimension(), 3);
        assert_eq!(store.get("author"), Some(&[0.0, 1.0, 0.0][..]));
        assert!(store.get("topic").is_none());
    }

    #[test]
    fn headerless_file_infers_dimension() {
        let store = parse_embeddings("paper 1 0\nauthor 0.5 -1e-3\n").unwrap();
        assert_eq!(store.dimension(), 2);
        assert_eq!(store.vocabulary_size(), 2);
    }

    #[test]
    fn empty_file_is_an_error() {
        assert!(matches!(parse_embeddings(""), Err(EmbeddingError::Empty)));
        assert!(matches!(parse_embeddings("\n\n"), Err(EmbeddingError::Empty)));
        assert!(matches!(parse_embeddings("0 3\n"), Err(EmbeddingError::Empty)));
    }

    #[test]
    fn short_row_names_its_line() {
        let err = parse_embeddings("2 3\npaper 1 0 0\ntopic 1.0 2.0\n").unwrap_err();
        match err {
            EmbeddingError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_finite_rejected() {
        let err = parse_embeddings("paper 1 NaN\n").unwrap_err();
        assert!(matches!(err, EmbeddingError::Parse { line: 1, .. }));
        let err = parse_embeddings("a 1 2\nb inf 2\n").unwrap_err();
        assert!(matches!(err, EmbeddingError::Parse { line: 2, .. }));
    }

    #[test]
    fn garbage_number_rejected() {
        assert!(parse_embeddings("a 1 x\n").is_err());
    }

    #[test]
    fn normalization_examples() {
        assert_eq!(normalize_label("Accepted_Paper").tokens, toks(&["accepted", "paper"]));
        assert_eq!(normalize_label("hasSpeaker").tokens, toks(&["has", "speaker"]));
        assert!(normalize_label("").tokens.is_empty());
        assert_eq!(
            normalize_label("Paper-Presentation").tokens,
            toks(&["paper", "presentation"])
        );
        assert_eq!(normalize_label("isAbout").tokens, toks(&["is", "about"]));
        assert_eq!(normalize_label("XMLFile").tokens, toks(&["xml", "file"]));
        assert_eq!(
            normalize_label("  Conference  Event!").tokens,
            toks(&["conference", "event"])
        );
        assert_eq!(normalize_label("subClassOf").tokens, toks(&["sub", "class", "of"]));
        assert!(normalize_label("__--!!").tokens.is_empty());
    }

    #[test]
    fn accepted_paper_spellings_agree() {
        assert_eq!(
            normalize_label("Accepted_Paper").joined(),
            normalize_label("AcceptedPaper").joined()
        );
    }

    fn store3() -> EmbeddingStore {
        EmbeddingStore::from_entries(
            3,
            vec![("paper", vec![1.0, 0.0, 0.0]), ("accepted", vec![0.0, 2.0, 0.0])],
        )
        .unwrap()
    }

    #[test]
    fn embed_single_token() {
        let e = embed_element(&normalize_label("paper"), &store3());
        assert_eq!(e.mean_vector, vec![1.0, 0.0, 0.0]);
        assert!(e.oov_tokens.is_empty());
        assert!(!e.is_degenerate());
    }

    #[test]
    fn embed_two_token_average() {
        let e = embed_element(&normalize_label("Accepted_Paper"), &store3());
        assert_eq!(e.mean_vector, vec![0.5, 1.0, 0.0]);
    }

    #[test]
    fn embed_all_oov_is_degenerate() {
        let e = embed_element(&normalize_label("zzzz"), &store3());
        assert!(e.is_degenerate());
        assert_eq!(e.mean_vector, vec![0.0; 3]);
        assert_eq!(e.oov_tokens, toks(&["zzzz"]));
    }

    #[test]
    fn partial_oov_is_skipped() {
        let e = embed_element(&normalize_label("paper_zzzz"), &store3());
        assert_eq!(e.mean_vector, vec![1.0, 0.0, 0.0]);
        assert_eq!(e.oov_tokens, toks(&["zzzz"]));
    }

    #[test]
    fn synonyms_fill_oov_tokens() {
        let syn = SynonymMap::parse("# comment\narticle\tpaper\n").unwrap();
        let e = embed_with_synonyms(&normalize_label("Article"), &store3(), &syn);
        assert_eq!(e.mean_vector, vec![1.0, 0.0, 0.0]);
        assert!(e.oov_tokens.is_empty());
        assert!(SynonymMap::parse("no tab here").is_err());
    }

    #[test]
    fn from_entries_checks_arity() {
        assert!(EmbeddingStore::from_entries(2, vec![("a", vec![1.0])]).is_err());
        assert!(EmbeddingStore::from_entries(2, vec![("a", vec![1.0, f64::NAN])]).is_err());
    }
}
