//! Precision/recall scoring, threshold sweeps, and ontology-level similarity.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use regex::Regex;

use crate::ground::{label_cost_matrix, Embedder};
use crate::ontology::{ElementKind, Ontology};
use crate::refinement::{filter_alignment, similarity, Alignment, ScoredCandidate};
use crate::transport::{uniform_marginal, SolverConfig, EXACT_SIZE_GUARD};
use crate::{Error, Result};

/// Number of thresholds in a sweep: 0.00, 0.01, …, 1.00.
pub const SWEEP_POINTS: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scope {
    ClassesOnly,
    #[default]
    All,
}

impl Scope {
    pub fn as_str(self) -> &'static str {
        match self {
            Scope::ClassesOnly => "classes_only",
            Scope::All => "all",
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classes_only" | "classes-only" => Ok(Scope::ClassesOnly),
            "all" => Ok(Scope::All),
            _ => Err(Error::Usage(format!("unknown scope {s:?}"))),
        }
    }
}

pub type Pair = (String, String);

/// True when both iris are classes of their respective ontologies.
pub fn is_class_pair(source: &Ontology, target: &Ontology, s: &str, t: &str) -> bool {
    let class = |o: &Ontology, iri: &str| o.element(iri).is_some_and(|e| e.kind == ElementKind::Class);
    class(source, s) && class(target, t)
}

/// Reference correspondences as a set of `(source_iri, target_iri)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReferenceAlignment {
    pub pairs: BTreeSet<Pair>,
    pub scope: Scope,
}

impl ReferenceAlignment {
    pub fn new(pairs: impl IntoIterator<Item = Pair>) -> Self {
        ReferenceAlignment {
            pairs: pairs.into_iter().collect(),
            scope: Scope::All,
        }
    }

    /// One pair per line, tab-separated; further columns are ignored.
    pub fn parse_tsv(text: &str, file: &str) -> Result<Self> {
        let mut pairs = BTreeSet::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            match (fields.next(), fields.next()) {
                (Some(s), Some(t)) if !s.is_empty() && !t.is_empty() => {
                    pairs.insert((s.to_string(), t.to_string()));
                }
                _ => {
                    return Err(Error::format(
                        file,
                        i + 1,
                        "expected tab-separated source and target iris",
                    ))
                }
            }
        }
        Ok(Self::new(pairs))
    }

    /// Equivalence (`=`) cells of an OAEI alignment document.
    pub fn parse_oaei_xml(text: &str) -> Self {
        let cell = Regex::new(r"(?s)<Cell\b[^>]*>(.*?)</Cell>").expect("valid regex");
        let entity1 = Regex::new(r#"<entity1\s+rdf:resource\s*=\s*["']([^"']*)["']"#).expect("valid regex");
        let entity2 = Regex::new(r#"<entity2\s+rdf:resource\s*=\s*["']([^"']*)["']"#).expect("valid regex");
        let relation = Regex::new(r"(?s)<relation>\s*(.*?)\s*</relation>").expect("valid regex");
        let pairs = cell.captures_iter(text).filter_map(|c| {
            let body = c.get(1)?.as_str();
            let rel = relation.captures(body).map(|r| r[1].to_string());
            if rel.as_deref().is_some_and(|r| r != "=") {
                return None;
            }
            let s = entity1.captures(body)?[1].to_string();
            let t = entity2.captures(body)?[1].to_string();
            Some((unescape(&s), unescape(&t)))
        });
        Self::new(pairs)
    }

    /// Reads a TSV file, or an OAEI XML file when the content starts with `<`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path.display(), e))?;
        if text.trim_start().starts_with('<') {
            Ok(Self::parse_oaei_xml(&text))
        } else {
            Self::parse_tsv(&text, &path.display().to_string())
        }
    }

    /// Keeps only class-to-class pairs when `scope` is classes-only.
    pub fn scoped(&self, scope: Scope, source: &Ontology, target: &Ontology) -> Self {
        let pairs = match scope {
            Scope::All => self.pairs.clone(),
            Scope::ClassesOnly => self
                .pairs
                .iter()
                .filter(|(s, t)| is_class_pair(source, target, s, t))
                .cloned()
                .collect(),
        };
        ReferenceAlignment { pairs, scope }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

fn unescape(s: &str) -> String {
    s.replace("&amp;", "&")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&apos;", "'")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub threshold: f64,
    pub true_positive: usize,
    pub predicted: usize,
    pub reference: usize,
}

impl EvalReport {
    /// Builds a report from counts. Precision is 1 with nothing predicted,
    /// recall is 1 with an empty reference.
    pub fn from_counts(true_positive: usize, predicted: usize, reference: usize, threshold: f64) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
        let precision = ratio(true_positive, predicted);
        let recall = ratio(true_positive, reference);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        EvalReport {
            precision,
            recall,
            f1,
            threshold,
            true_positive,
            predicted,
            reference,
        }
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "threshold {:.2}\tprecision {:.6}\trecall {:.6}\tf1 {:.6}\ttp {}\tpredicted {}\treference {}",
            self.threshold, self.precision, self.recall, self.f1, self.true_positive, self.predicted, self.reference
        )
    }
}

/// Set-based scoring of predicted pairs; duplicates count once.
pub fn evaluate_pairs<'p>(
    predicted: impl IntoIterator<Item = (&'p str, &'p str)>,
    reference: &ReferenceAlignment,
    threshold: f64,
) -> EvalReport {
    let predicted: BTreeSet<(&str, &str)> = predicted.into_iter().collect();
    let tp = predicted
        .iter()
        .filter(|(s, t)| reference.pairs.contains(&(s.to_string(), t.to_string())))
        .count();
    EvalReport::from_counts(tp, predicted.len(), reference.len(), threshold)
}

pub fn evaluate(alignment: &Alignment, reference: &ReferenceAlignment) -> EvalReport {
    evaluate_pairs(alignment.pairs(), reference, alignment.threshold)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub best: EvalReport,
    pub curve: Vec<EvalReport>,
}

/// Thresholds `0.00..=1.00` in steps of 0.01.
pub fn sweep_thresholds() -> impl Iterator<Item = f64> {
    (0..SWEEP_POINTS).map(|i| i as f64 / 100.0)
}

/// Filters and evaluates at every sweep threshold; the best report has the
/// highest F1, ties going to the lowest threshold.
pub fn threshold_sweep(scored: &[ScoredCandidate], reference: &ReferenceAlignment) -> Sweep {
    let thresholds: Vec<f64> = sweep_thresholds().collect();
    let curve: Vec<EvalReport> = thresholds
        .par_iter()
        .map(|&t| {
            let alignment = filter_alignment(scored, t, "").expect("sweep thresholds lie in [0, 1]");
            evaluate(&alignment, reference)
        })
        .collect();
    let mut best = curve[0];
    for r in &curve[1..] {
        if r.f1 > best.f1 {
            best = *r;
        }
    }
    Sweep { best, curve }
}

/// One `threshold precision recall f1` line per sweep point.
pub fn write_curve(curve: &[EvalReport]) -> String {
    curve
        .iter()
        .map(|r| format!("{:.2} {:.6} {:.6} {:.6}\n", r.threshold, r.precision, r.recall, r.f1))
        .collect()
}

/// `M / (S + T − M)`.
pub fn jaccard_similarity(n_source: usize, n_target: usize, n_matchings: usize) -> Result<f64> {
    if n_matchings > n_source.min(n_target) {
        return Err(Error::Invalid(format!(
            "{n_matchings} matchings exceed the smaller ontology ({n_source}, {n_target})"
        )));
    }
    let denominator = n_source + n_target - n_matchings;
    if denominator == 0 {
        return Err(Error::Invalid("jaccard similarity of two empty ontologies".into()));
    }
    Ok(n_matchings as f64 / denominator as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OntologySimilarity {
    pub wd: f64,
    pub ws: f64,
    pub converged: bool,
}

/// Transport distance between the two class-embedding sets under uniform
/// marginals, solved exactly when small enough.
pub fn ontology_similarity(
    source: &Ontology,
    target: &Ontology,
    embedder: &Embedder<'_>,
    solver: &SolverConfig,
) -> Result<OntologySimilarity> {
    let embed = |o: &Ontology| {
        o.elements_of(ElementKind::Class)
            .map(|e| embedder.embed(e))
            .collect::<Vec<_>>()
    };
    let xs = embed(source);
    let ys = embed(target);
    for (o, v) in [(source, &xs), (target, &ys)] {
        if v.is_empty() {
            return Err(Error::Invalid(format!("ontology {:?} has no classes", o.id())));
        }
    }
    let cost = label_cost_matrix(&xs.iter().collect::<Vec<_>>(), &ys.iter().collect::<Vec<_>>())?;
    let mu = uniform_marginal(xs.len())?;
    let nu = uniform_marginal(ys.len())?;
    let coupling = solver.solve_auto(&cost, &mu, &nu, EXACT_SIZE_GUARD)?;
    Ok(OntologySimilarity {
        wd: coupling.wd,
        ws: similarity(coupling.wd),
        converged: coupling.converged,
    })
}

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Invalid(format!("length mismatch: {} vs {}", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(Error::Invalid("pearson needs at least two points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Invalid("zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(s: &str, t: &str) -> Pair {
        (s.to_string(), t.to_string())
    }

    #[test]
    fn counts_example() {
        let reference = ReferenceAlignment::new((0..5).map(|i| pair(&format!("s{i}"), &format!("t{i}"))));
        let predicted = [("s0", "t0"), ("s1", "t1"), ("s2", "t2"), ("s3", "t9")];
        let r = evaluate_pairs(predicted, &reference, 0.0);
        assert_eq!(r.precision, 0.75);
        assert_eq!(r.recall, 0.6);
        assert!((r.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_prediction_conventions() {
        let reference = ReferenceAlignment::new([pair("a", "b")]);
        let r = evaluate_pairs([], &reference, 0.0);
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 0.0, 0.0));
        let disjoint = evaluate_pairs([("x", "y")], &reference, 0.0);
        assert_eq!((disjoint.precision, disjoint.recall, disjoint.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn jaccard_examples() {
        assert_eq!(jaccard_similarity(3, 4, 3).unwrap(), 0.75);
        assert_eq!(jaccard_similarity(7, 7, 7).unwrap(), 1.0);
        assert_eq!(jaccard_similarity(5, 5, 0).unwrap(), 0.0);
        assert!(jaccard_similarity(0, 0, 0).is_err());
        assert!(jaccard_similarity(2, 3, 4).is_err());
    }

    #[test]
    fn pearson_examples() {
        let xs = [1.0, 2.0, 4.0, 7.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        assert!((pearson(&xs, &ys).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((pearson(&xs, &neg).unwrap() + 1.0).abs() < 1e-12);
        assert!(pearson(&xs, &[1.0]).is_err());
        assert!(pearson(&[1.0, 1.0], &[0.0, 2.0]).is_err());
    }

    #[test]
    fn tsv_reference() {
        let r = ReferenceAlignment::parse_tsv("# h\na\tb\nc\td\t0.9\n\na\tb\n", "r.tsv").unwrap();
        assert_eq!(r.len(), 2);
        let err = ReferenceAlignment::parse_tsv("a b\n", "r.tsv").unwrap_err();
        assert!(err.to_string().starts_with("r.tsv:1:"));
    }

    #[test]
    fn oaei_reference_keeps_equivalences() {
        let xml = r##"<?xml version="1.0"?>
<rdf:RDF><Alignment>
  <map><Cell>
    <entity1 rdf:resource="http://a#Paper"/>
    <entity2 rdf:resource="http://b#Article"/>
    <relation>=</relation><measure>1.0</measure>
  </Cell></map>
  <map><Cell>
    <entity1 rdf:resource="http://a#Review"/>
    <entity2 rdf:resource="http://b#Document"/>
    <relation>&lt;</relation>
  </Cell></map>
  <map><Cell rdf:about="#c3">
    <entity1 rdf:resource='http://a#A&amp;B'/>
    <entity2 rdf:resource="http://b#AB"/>
    <relation>=</relation>
  </Cell></map>
</Alignment></rdf:RDF>"##;
        let r = ReferenceAlignment::parse_oaei_xml(xml);
        let expected: BTreeSet<Pair> = [
            pair("http://a#Paper", "http://b#Article"),
            pair("http://a#A&B", "http://b#AB"),
        ]
        .into_iter()
        .collect();
        assert_eq!(r.pairs, expected);
    }

    #[test]
    fn curve_has_101_lines() {
        let reference = ReferenceAlignment::new([pair("a", "b")]);
        let sweep = threshold_sweep(&[], &reference);
        let text = write_curve(&sweep.curve);
        assert_eq!(text.lines().count(), SWEEP_POINTS);
        assert!(text.starts_with("0.00 "));
        assert!(text.lines().last().unwrap().starts_with("1.00 "));
        assert_eq!(sweep.best.threshold, 0.0);
    }

    #[test]
    fn scope_parsing() {
        assert_eq!("classes_only".parse::<Scope>().unwrap(), Scope::ClassesOnly);
        assert_eq!("all".parse::<Scope>().unwrap(), Scope::All);
        assert!("props".parse::<Scope>().is_err());
    }
}
