//! Candidate rescoring with context Wasserstein distances.
//!
//! Each candidate gets four distances, each turned into a similarity in
//! `(0, 1]` by `e^{-x}`:
//!
//! * `string`: normalized Levenshtein distance between the normalized labels,
//! * `euclidean`: distance between the mean label embeddings,
//! * `label_wd`: transport distance between the two labels' token vectors,
//! * `local_wd`: the nested distance between the elements' one-hop contexts.
//!
//! The nested distance is computed in two steps. Every context triple is a
//! uniform distribution over three points (subject, predicate, object
//! embeddings); `pair_wd` is the transport distance between two such triples
//! under Euclidean ground cost. `local_wd` is then the transport distance
//! between the two contexts, uniform over their triples, with the `pair_wd`
//! matrix as ground cost.
//!
//! An [`Interaction`] names which similarities are multiplied into the final
//! score.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::embeddings::ElementEmbedding;
use crate::ground::{pair_cost, EmbeddedOntology, FALLBACK_PENALTY, PENALTY_PERCENTILE};
use crate::matching::{Candidate, CandidateRecord};
use crate::ontology::{ContextTriple, OntologyError, Predicate};
use crate::transport::{
    euclidean_cost, exact_ot, percentile, uniform_marginal, CostMatrix, SolverConfig, EXACT_SIZE_GUARD,
};
use crate::{Error, Result};

/// Contexts up to this many triples on both sides are solved exactly.
pub const EXACT_CONTEXT_LIMIT: usize = 12;

/// `e^{-x}`.
#[inline]
pub fn similarity(distance: f64) -> f64 {
    (-distance).exp()
}

/// Edit distance divided by the longer length, in characters; 0 for two
/// empty strings.
pub fn levenshtein_norm(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 0.0;
    }
    strsim::levenshtein(a, b) as f64 / longest as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Component {
    String,
    Euclidean,
    LabelWd,
    LocalWd,
}

impl Component {
    pub fn as_str(self) -> &'static str {
        match self {
            Component::String => "string",
            Component::Euclidean => "euclidean",
            Component::LabelWd => "label_wd",
            Component::LocalWd => "local_wd",
        }
    }

    fn parse(s: &str) -> Option<Component> {
        match s {
            "string" => Some(Component::String),
            "euclidean" => Some(Component::Euclidean),
            "label_wd" | "label-wd" => Some(Component::LabelWd),
            "local_wd" | "local-wd" | "context" => Some(Component::LocalWd),
            _ => None,
        }
    }
}

/// A named product of similarity components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interaction {
    name: String,
    components: Vec<Component>,
}

impl Interaction {
    pub const PRESETS: [(&'static str, &'static [Component]); 7] = [
        ("string-distance", &[Component::String]),
        ("string-context-distance", &[Component::String, Component::LocalWd]),
        ("euclidean-distance", &[Component::Euclidean]),
        (
            "euclidean-context-distance",
            &[Component::Euclidean, Component::LocalWd],
        ),
        ("label-wd-distance", &[Component::LabelWd]),
        ("label-wd-context-distance", &[Component::LabelWd, Component::LocalWd]),
        (
            "all-distance",
            &[
                Component::String,
                Component::Euclidean,
                Component::LabelWd,
                Component::LocalWd,
            ],
        ),
    ];

    pub fn string_context() -> Self {
        "string-context-distance".parse().expect("preset exists")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }
}

impl Default for Interaction {
    fn default() -> Self {
        Self::string_context()
    }
}

impl fmt::Display for Interaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl FromStr for Interaction {
    type Err = Error;

    /// A preset name, or components joined by `*` such as
    /// `euclidean*local_wd`.
    fn from_str(s: &str) -> Result<Self> {
        if let Some((name, comps)) = Self::PRESETS.iter().find(|(n, _)| *n == s) {
            return Ok(Interaction {
                name: name.to_string(),
                components: comps.to_vec(),
            });
        }
        let mut components = Vec::new();
        for part in s.split('*') {
            let c = Component::parse(part.trim()).ok_or_else(|| Error::Usage(format!("unknown metric {s:?}")))?;
            if !components.contains(&c) {
                components.push(c);
            }
        }
        components.sort();
        Ok(Interaction {
            name: components.iter().map(|c| c.as_str()).collect::<Vec<_>>().join("*"),
            components,
        })
    }
}

/// A candidate with every distance, similarity, and the final product.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCandidate {
    pub candidate: Candidate,
    pub string_distance: f64,
    pub euclidean_distance: f64,
    pub label_wd: f64,
    pub local_wd: f64,
    pub string_sim: f64,
    pub euclid_sim: f64,
    pub label_wd_sim: f64,
    pub local_wd_sim: f64,
    pub components: Vec<Component>,
    pub final_score: f64,
}

impl ScoredCandidate {
    pub fn component_sim(&self, c: Component) -> f64 {
        match c {
            Component::String => self.string_sim,
            Component::Euclidean => self.euclid_sim,
            Component::LabelWd => self.label_wd_sim,
            Component::LocalWd => self.local_wd_sim,
        }
    }
}

/// Three embeddings standing for a triple's subject, predicate, and object.
pub type TriplePoints<'e> = [&'e ElementEmbedding; 3];

/// Exact transport distance between two uniform 3-point distributions.
pub fn pair_wd(a: &TriplePoints<'_>, b: &TriplePoints<'_>, penalty: f64) -> f64 {
    let mut values = Vec::with_capacity(9);
    for x in a {
        for y in b {
            values.push(pair_cost(x, y, penalty));
        }
    }
    let cost = CostMatrix::new(3, 3, values).expect("pair costs are finite and non-negative");
    let u = uniform_marginal(3).expect("non-empty");
    exact_ot(&cost, &u, &u)
        .expect("3x3 problem is within the exact guard")
        .wd
}

/// Scores candidates between one source and one target ontology.
pub struct ContextScorer<'a> {
    source: &'a EmbeddedOntology<'a>,
    target: &'a EmbeddedOntology<'a>,
    penalty: f64,
    solver: SolverConfig,
    exact_context_limit: usize,
}

impl<'a> ContextScorer<'a> {
    pub fn new(source: &'a EmbeddedOntology<'a>, target: &'a EmbeddedOntology<'a>, solver: SolverConfig) -> Self {
        ContextScorer {
            source,
            target,
            penalty: degenerate_penalty(source, target),
            solver,
            exact_context_limit: EXACT_CONTEXT_LIMIT,
        }
    }

    /// Overrides the context size up to which `local_wd` is solved exactly.
    pub fn with_exact_context_limit(mut self, limit: usize) -> Self {
        self.exact_context_limit = limit;
        self
    }

    /// Cost charged for any pair involving an all-out-of-vocabulary label.
    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    fn element<'o>(onto: &'o EmbeddedOntology<'_>, iri: &str) -> Result<&'o ElementEmbedding> {
        onto.embedding(iri)
            .ok_or_else(|| OntologyError::UnknownElement(iri.to_string()).into())
    }

    fn triple_points<'o>(onto: &'o EmbeddedOntology<'_>, t: &ContextTriple) -> Result<TriplePoints<'o>> {
        let predicate = match &t.predicate {
            Predicate::SubClassOf => &onto.subclass_of,
            Predicate::Property(iri) => Self::element(onto, iri)?,
        };
        Ok([
            Self::element(onto, &t.subject)?,
            predicate,
            Self::element(onto, &t.object)?,
        ])
    }

    /// `pair_wd` between a source-side and a target-side triple.
    pub fn pair_wd(&self, s: &ContextTriple, t: &ContextTriple) -> Result<f64> {
        Ok(pair_wd(
            &Self::triple_points(self.source, s)?,
            &Self::triple_points(self.target, t)?,
            self.penalty,
        ))
    }

    /// Nested distance between two contexts; `fallback` is returned when
    /// either is empty.
    pub fn local_wd_between(&self, ctx_s: &[ContextTriple], ctx_t: &[ContextTriple], fallback: f64) -> Result<f64> {
        if ctx_s.is_empty() || ctx_t.is_empty() {
            return Ok(fallback);
        }
        let src: Vec<TriplePoints<'_>> = ctx_s
            .iter()
            .map(|t| Self::triple_points(self.source, t))
            .collect::<Result<_>>()?;
        let tgt: Vec<TriplePoints<'_>> = ctx_t
            .iter()
            .map(|t| Self::triple_points(self.target, t))
            .collect::<Result<_>>()?;
        let mut values = Vec::with_capacity(src.len() * tgt.len());
        for a in &src {
            for b in &tgt {
                values.push(pair_wd(a, b, self.penalty));
            }
        }
        let cost = CostMatrix::new(src.len(), tgt.len(), values)?;
        let mu = uniform_marginal(src.len())?;
        let nu = uniform_marginal(tgt.len())?;
        let coupling = if src.len() <= self.exact_context_limit && tgt.len() <= self.exact_context_limit {
            exact_ot(&cost, &mu, &nu)?
        } else {
            self.solver.sinkhorn(&cost, &mu, &nu)?
        };
        Ok(coupling.wd)
    }

    /// Nested distance between the contexts of a source and a target element,
    /// falling back to the label distance when either context is empty.
    pub fn local_wd(&self, source_iri: &str, target_iri: &str) -> Result<f64> {
        let ctx_s = self.source.ontology.extract_context(source_iri)?;
        let ctx_t = self.target.ontology.extract_context(target_iri)?;
        let fallback = self.euclidean_distance(source_iri, target_iri)?;
        self.local_wd_between(&ctx_s, &ctx_t, fallback)
    }

    pub fn euclidean_distance(&self, source_iri: &str, target_iri: &str) -> Result<f64> {
        Ok(pair_cost(
            Self::element(self.source, source_iri)?,
            Self::element(self.target, target_iri)?,
            self.penalty,
        ))
    }

    /// Transport distance between the two labels' token-vector sets, uniform
    /// over tokens. Labels without any in-vocabulary token use the mean-vector
    /// distance rule instead.
    pub fn label_wd(&self, a: &ElementEmbedding, b: &ElementEmbedding) -> Result<f64> {
        if a.is_degenerate() || b.is_degenerate() {
            return Ok(pair_cost(a, b, self.penalty));
        }
        let xs: Vec<&[f64]> = a.token_vectors.iter().map(|(_, v)| v.as_slice()).collect();
        let ys: Vec<&[f64]> = b.token_vectors.iter().map(|(_, v)| v.as_slice()).collect();
        let cost = euclidean_cost(&xs, &ys)?;
        let mu = uniform_marginal(xs.len())?;
        let nu = uniform_marginal(ys.len())?;
        Ok(self.solver.solve_auto(&cost, &mu, &nu, EXACT_SIZE_GUARD)?.wd)
    }

    /// Resolves a candidate row read from disk against both ontologies.
    pub fn resolve(&self, rec: &CandidateRecord) -> Result<Candidate> {
        let s = self
            .source
            .ontology
            .element(&rec.source_iri)
            .ok_or_else(|| OntologyError::UnknownElement(rec.source_iri.clone()))?;
        self.target
            .ontology
            .element(&rec.target_iri)
            .ok_or_else(|| OntologyError::UnknownElement(rec.target_iri.clone()))?;
        Ok(Candidate {
            source_iri: rec.source_iri.clone(),
            target_iri: rec.target_iri.clone(),
            kind: s.kind,
            coupling_mass: rec.coupling_mass,
            label_euclidean: self.euclidean_distance(&rec.source_iri, &rec.target_iri)?,
        })
    }

    pub fn score(&self, candidate: &Candidate, interaction: &Interaction) -> Result<ScoredCandidate> {
        let s = Self::element(self.source, &candidate.source_iri)?;
        let t = Self::element(self.target, &candidate.target_iri)?;
        let string_distance = levenshtein_norm(&s.tokens.join(" "), &t.tokens.join(" "));
        let euclidean_distance = pair_cost(s, t, self.penalty);
        let label_wd = self.label_wd(s, t)?;
        let local_wd = self.local_wd(&candidate.source_iri, &candidate.target_iri)?;

        let mut scored = ScoredCandidate {
            candidate: candidate.clone(),
            string_distance,
            euclidean_distance,
            label_wd,
            local_wd,
            string_sim: similarity(string_distance),
            euclid_sim: similarity(euclidean_distance),
            label_wd_sim: similarity(label_wd),
            local_wd_sim: similarity(local_wd),
            components: interaction.components().to_vec(),
            final_score: 1.0,
        };
        scored.final_score = interaction
            .components()
            .iter()
            .map(|&c| scored.component_sim(c))
            .product();
        Ok(scored)
    }
}

fn degenerate_penalty(source: &EmbeddedOntology<'_>, target: &EmbeddedOntology<'_>) -> f64 {
    let xs: Vec<&[f64]> = source
        .embeddings
        .iter()
        .chain([&source.subclass_of])
        .filter(|e| !e.is_degenerate())
        .map(|e| e.mean_vector.as_slice())
        .collect();
    let ys: Vec<&[f64]> = target
        .embeddings
        .iter()
        .chain([&target.subclass_of])
        .filter(|e| !e.is_degenerate())
        .map(|e| e.mean_vector.as_slice())
        .collect();
    euclidean_cost(&xs, &ys)
        .ok()
        .and_then(|c| percentile(c.values(), PENALTY_PERCENTILE))
        .unwrap_or(FALLBACK_PENALTY)
}

/// Scores every candidate in parallel; output order follows the input.
pub fn score_candidates(
    candidates: &[Candidate],
    scorer: &ContextScorer<'_>,
    interaction: &Interaction,
) -> Result<Vec<ScoredCandidate>> {
    candidates.par_iter().map(|c| scorer.score(c, interaction)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Correspondence {
    pub source_iri: String,
    pub target_iri: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub correspondences: Vec<Correspondence>,
    pub threshold: f64,
    pub metric_name: String,
}

impl Alignment {
    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.correspondences
            .iter()
            .map(|c| (c.source_iri.as_str(), c.target_iri.as_str()))
    }
}

/// Drops candidates scoring below `threshold`, then keeps a one-to-one
/// subset greedily by descending score (ties by source then target iri).
pub fn filter_alignment(scored: &[ScoredCandidate], threshold: f64, metric_name: &str) -> Result<Alignment> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Usage(format!("threshold {threshold} is outside [0, 1]")));
    }
    Ok(select_one_to_one(scored, threshold, metric_name))
}

pub(crate) fn select_one_to_one(scored: &[ScoredCandidate], threshold: f64, metric_name: &str) -> Alignment {
    let mut kept: Vec<&ScoredCandidate> = scored.iter().filter(|s| s.final_score >= threshold).collect();
    kept.sort_by(|a, b| {
        b.final_score
            .total_cmp(&a.final_score)
            .then_with(|| a.candidate.source_iri.cmp(&b.candidate.source_iri))
            .then_with(|| a.candidate.target_iri.cmp(&b.candidate.target_iri))
    });
    let mut used_source = HashSet::new();
    let mut used_target = HashSet::new();
    let mut correspondences = Vec::new();
    for s in kept {
        let c = &s.candidate;
        if used_source.contains(c.source_iri.as_str()) || used_target.contains(c.target_iri.as_str()) {
            continue;
        }
        used_source.insert(c.source_iri.as_str());
        used_target.insert(c.target_iri.as_str());
        correspondences.push(Correspondence {
            source_iri: c.source_iri.clone(),
            target_iri: c.target_iri.clone(),
            score: s.final_score,
        });
    }
    Alignment {
        correspondences,
        threshold,
        metric_name: metric_name.to_string(),
    }
}

/// Tab-separated `source target score` rows after `# key: value` headers.
/// The alignment's own metric and threshold replace any `metric` or
/// `threshold` entries in `header`.
pub fn write_alignment(alignment: &Alignment, header: &[(String, String)]) -> String {
    let mut out = String::from("# ontomatch alignment\n");
    out.push_str(&format!(
        "# metric: {}\n# threshold: {}\n",
        alignment.metric_name, alignment.threshold
    ));
    for (k, v) in header.iter().filter(|(k, _)| k != "metric" && k != "threshold") {
        out.push_str(&format!("# {k}: {v}\n"));
    }
    out.push_str("# columns: source_iri\ttarget_iri\tscore\n");
    for c in &alignment.correspondences {
        out.push_str(&format!("{}\t{}\t{:e}\n", c.source_iri, c.target_iri, c.score));
    }
    out
}

/// Reads alignment rows; the score column is optional.
pub fn parse_alignment(text: &str, file: &str) -> Result<Vec<Correspondence>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let score = match fields.len() {
            2 => 1.0,
            3 => fields[2]
                .parse()
                .map_err(|_| Error::format(file, i + 1, format!("invalid score {:?}", fields[2])))?,
            n => return Err(Error::format(file, i + 1, format!("expected 2 or 3 fields, found {n}"))),
        };
        out.push(Correspondence {
            source_iri: fields[0].to_string(),
            target_iri: fields[1].to_string(),
            score,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::ElementKind;

    #[test]
    fn levenshtein_examples() {
        assert_eq!(levenshtein_norm("paper", "paper"), 0.0);
        assert_eq!(levenshtein_norm("write", "writer"), 1.0 / 6.0);
        assert_eq!(levenshtein_norm("a", ""), 1.0);
        assert_eq!(levenshtein_norm("", ""), 0.0);
    }

    #[test]
    fn similarity_conversion() {
        assert_eq!(similarity(0.0), 1.0);
        assert!((similarity(0.47) - 0.625_002_7).abs() < 1e-6);
    }

    #[test]
    fn interaction_presets_and_custom() {
        let i: Interaction = "string-context-distance".parse().unwrap();
        assert_eq!(i.components(), &[Component::String, Component::LocalWd]);
        let custom: Interaction = "local_wd*euclidean".parse().unwrap();
        assert_eq!(custom.name(), "euclidean*local_wd");
        assert_eq!(custom.components(), &[Component::Euclidean, Component::LocalWd]);
        assert!("cosine".parse::<Interaction>().is_err());
        assert_eq!(Interaction::default().name(), "string-context-distance");
        for (name, _) in Interaction::PRESETS {
            assert_eq!(name.parse::<Interaction>().unwrap().name(), name);
        }
    }

    fn scored(src: &str, tgt: &str, score: f64) -> ScoredCandidate {
        ScoredCandidate {
            candidate: Candidate {
                source_iri: src.into(),
                target_iri: tgt.into(),
                kind: ElementKind::Class,
                coupling_mass: 0.0,
                label_euclidean: 0.0,
            },
            string_distance: 0.0,
            euclidean_distance: 0.0,
            label_wd: 0.0,
            local_wd: 0.0,
            string_sim: 1.0,
            euclid_sim: 1.0,
            label_wd_sim: 1.0,
            local_wd_sim: 1.0,
            components: vec![],
            final_score: score,
        }
    }

    #[test]
    fn one_to_one_keeps_best() {
        let s = vec![scored("a", "x", 0.8), scored("a", "y", 0.9)];
        let al = filter_alignment(&s, 0.5, "m").unwrap();
        assert_eq!(al.correspondences.len(), 1);
        assert_eq!(al.correspondences[0].target_iri, "y");
    }

    #[test]
    fn threshold_zero_keeps_all_disjoint() {
        let s = vec![scored("a", "x", 0.1), scored("b", "y", 0.0), scored("b", "x", 0.05)];
        let al = filter_alignment(&s, 0.0, "m").unwrap();
        assert_eq!(al.correspondences.len(), 2);
    }

    #[test]
    fn threshold_above_max_is_empty() {
        let s = vec![scored("a", "x", 1.0), scored("b", "y", 0.7)];
        let al = filter_alignment(&s, 1.0, "m").unwrap();
        assert_eq!(al.correspondences.len(), 1);
        let al = select_one_to_one(&s, 1.0 + 1e-9, "m");
        assert!(al.correspondences.is_empty());
    }

    #[test]
    fn threshold_outside_unit_interval() {
        assert!(matches!(filter_alignment(&[], 1.01, "m"), Err(Error::Usage(_))));
        assert!(filter_alignment(&[], -0.1, "m").is_err());
    }

    #[test]
    fn ties_break_lexicographically() {
        let s = vec![scored("b", "x", 0.5), scored("a", "x", 0.5)];
        let al = filter_alignment(&s, 0.0, "m").unwrap();
        assert_eq!(al.correspondences[0].source_iri, "a");
        assert_eq!(al.correspondences.len(), 1);
    }

    #[test]
    fn alignment_file_round_trip() {
        let al = filter_alignment(&[scored("a", "x", 0.75)], 0.3, "string-context-distance").unwrap();
        let text = write_alignment(&al, &[("epsilon".into(), "auto".into())]);
        assert!(text.contains("# metric: string-context-distance\n# threshold: 0.3\n"));
        let back = parse_alignment(&text, "a.tsv").unwrap();
        assert_eq!(back, al.correspondences);
        assert!(parse_alignment("a\n", "f").is_err());
        assert_eq!(parse_alignment("a\tb\n", "f").unwrap()[0].score, 1.0);
    }
}
