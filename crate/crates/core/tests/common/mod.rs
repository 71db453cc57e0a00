#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ontomatch::embeddings::{parse_embeddings, EmbeddingStore};
use ontomatch::ontology::Ontology;
use ontomatch::transport::{CostMatrix, Marginal};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_cost(rng: &mut ChaCha8Rng, n: usize, m: usize) -> CostMatrix {
    CostMatrix::new(n, m, (0..n * m).map(|_| rng.gen::<f64>()).collect()).unwrap()
}

pub fn random_marginal(rng: &mut ChaCha8Rng, n: usize) -> Marginal {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    Marginal::new(w.into_iter().map(|x| x / s).collect()).unwrap()
}

/// Word-vector text with one random vector in `[-1, 1]^dim` per token.
pub fn embeddings_text(tokens: &[&str], dim: usize, seed: u64) -> String {
    let mut rng = rng(seed);
    let mut out = format!("{} {}\n", tokens.len(), dim);
    for t in tokens {
        out.push_str(t);
        for _ in 0..dim {
            write!(out, " {:.6}", rng.gen_range(-1.0..1.0)).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn store(tokens: &[&str], dim: usize, seed: u64) -> EmbeddingStore {
    parse_embeddings(&embeddings_text(tokens, dim, seed)).unwrap()
}

/// A JSON ontology document. Elements are `(iri, kind, label)`; triples are
/// `(subject, predicate, object)`.
pub fn ontology_json(id: &str, elements: &[(&str, &str, &str)], triples: &[(&str, &str, &str)]) -> String {
    let elements: Vec<_> = elements
        .iter()
        .map(|(iri, kind, label)| json!({"iri": iri, "kind": kind, "label": label}))
        .collect();
    let triples: Vec<_> = triples.iter().map(|(s, p, o)| json!([s, p, o])).collect();
    serde_json::to_string_pretty(&json!({"id": id, "elements": elements, "triples": triples})).unwrap()
}

pub fn ontology(id: &str, elements: &[(&str, &str, &str)], triples: &[(&str, &str, &str)]) -> Ontology {
    Ontology::parse(&ontology_json(id, elements, triples)).unwrap()
}

pub fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

pub type Rows = Vec<(&'static str, &'static str, &'static str)>;

/// Conference-style toy ontology: seven classes, three object properties.
pub fn conference() -> (Rows, Rows) {
    let elements = vec![
        ("c#Event", "class", "Event"),
        ("c#Presentation", "class", "Presentation"),
        ("c#Conference_Event", "class", "Conference_Event"),
        ("c#Person", "class", "Person"),
        ("c#Conference_Contributor", "class", "Conference_Contributor"),
        ("c#Accepted_Paper", "class", "Accepted_Paper"),
        ("c#Topic", "class", "Topic"),
        ("c#hasSpeaker", "object_property", "hasSpeaker"),
        ("c#isAbout", "object_property", "isAbout"),
        ("c#hasTopic", "object_property", "hasTopic"),
    ];
    let triples = vec![
        ("c#Conference_Event", "subClassOf", "c#Event"),
        ("c#Presentation", "subClassOf", "c#Conference_Event"),
        ("c#Conference_Contributor", "subClassOf", "c#Person"),
        ("c#Presentation", "c#hasSpeaker", "c#Conference_Contributor"),
        ("c#Presentation", "c#isAbout", "c#Accepted_Paper"),
        ("c#Accepted_Paper", "c#hasTopic", "c#Topic"),
    ];
    (elements, triples)
}

pub const CONFERENCE_TOKENS: &[&str] = &[
    "event",
    "presentation",
    "conference",
    "person",
    "contributor",
    "accepted",
    "paper",
    "topic",
    "has",
    "speaker",
    "is",
    "about",
    "sub",
    "class",
    "of",
];

/// Permutation-search optimum of a square uniform assignment problem.
pub fn brute_force_assignment(cost: &CostMatrix) -> f64 {
    let n = cost.rows();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    permutations(&mut perm, 0, &mut |p| {
        let total: f64 = p.iter().enumerate().map(|(i, &j)| cost.get(i, j)).sum();
        best = best.min(total / n as f64);
    });
    best
}

fn permutations(items: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// Textbook dynamic-programming edit distance over chars.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for i in 1..=a.len() {
        let mut cur = vec![i; b.len() + 1];
        for j in 1..=b.len() {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

/// Exhaustive-scan mutual nearest neighbours; ties resolve to lower indices.
pub fn brute_mnn(plan: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let n = plan.len();
    let m = plan[0].len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..m {
            let row_first = (0..m).all(|k| plan[i][k] < plan[i][j] || (plan[i][k] == plan[i][j] && k >= j));
            let col_first = (0..n).all(|k| plan[k][j] < plan[i][j] || (plan[k][j] == plan[i][j] && k >= i));
            if row_first && col_first {
                out.push((i, j));
            }
        }
    }
    out
}

/// Exhaustive-scan top-k: an entry is kept when fewer than `k` entries of
/// its row beat it, counting equal entries at lower columns as beating it.
pub fn brute_topk(plan: &[Vec<f64>], k: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, row) in plan.iter().enumerate() {
        for j in 0..row.len() {
            let ahead = (0..row.len())
                .filter(|&c| row[c] > row[j] || (row[c] == row[j] && c < j))
                .count();
            if ahead < k {
                out.push((i, j));
            }
        }
    }
    out
}

/// Pronounceable pseudo-words so every label normalizes to known tokens.
pub fn word(i: usize) -> String {
    const SYLLABLES: [&str; 16] = [
        "ka", "lo", "mi", "nu", "pe", "ra", "si", "to", "va", "ze", "bo", "du", "fe", "gi", "ho", "ju",
    ];
    let mut out = String::new();
    let mut n = i;
    loop {
        out.push_str(SYLLABLES[n % 16]);
        n /= 16;
        if n == 0 {
            break;
        }
    }
    out.push('x');
    out
}

/// Random ontology over `vocab`: class labels are one or two words, three
/// object properties, and `n_triples` random edges.
pub fn random_ontology_json(
    rng: &mut ChaCha8Rng,
    id: &str,
    n_classes: usize,
    n_triples: usize,
    vocab: &[String],
) -> String {
    let mut elements: Vec<(String, &str, String)> = (0..n_classes)
        .map(|i| {
            let a = &vocab[rng.gen_range(0..vocab.len())];
            let label = if rng.gen_bool(0.5) {
                format!("{a}_{}", vocab[rng.gen_range(0..vocab.len())])
            } else {
                format!("{a} {i}")
            };
            (format!("{id}#C{i}"), "class", label)
        })
        .collect();
    for p in 0..3 {
        elements.push((
            format!("{id}#p{p}"),
            "object_property",
            format!("has {}", vocab[p % vocab.len()]),
        ));
    }
    let preds: Vec<String> = ["subClassOf".to_string()]
        .into_iter()
        .chain((0..3).map(|p| format!("{id}#p{p}")))
        .collect();
    let triples: Vec<(String, String, String)> = (0..n_triples)
        .map(|_| {
            (
                format!("{id}#C{}", rng.gen_range(0..n_classes)),
                preds[rng.gen_range(0..preds.len())].clone(),
                format!("{id}#C{}", rng.gen_range(0..n_classes)),
            )
        })
        .collect();
    let e: Vec<(&str, &str, &str)> = elements.iter().map(|(a, b, c)| (a.as_str(), *b, c.as_str())).collect();
    let t: Vec<(&str, &str, &str)> = triples
        .iter()
        .map(|(a, b, c)| (a.as_str(), b.as_str(), c.as_str()))
        .collect();
    ontology_json(id, &e, &t)
}
