//! Global coupling between two ontologies and candidate extraction.
//!
//! Elements are partitioned by kind (classes, object properties, datatype
//! properties) and each partition is solved as its own transport problem over
//! mean label embeddings. Candidates are read off each coupling either as
//! mutual nearest neighbours or as the top-k targets of every source row.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::ground::{label_cost_matrix, EmbeddedOntology};
use crate::ontology::ElementKind;
use crate::transport::{inverse_min_distance_marginal, uniform_marginal, CostMatrix, Coupling, Side, SolverConfig};
use crate::{Error, Result};

/// Kinds that take part in matching, in output order.
pub const MATCHED_KINDS: [ElementKind; 3] = [
    ElementKind::Class,
    ElementKind::ObjectProperty,
    ElementKind::DatatypeProperty,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    Uniform,
    InverseMinDistance,
}

impl Weighting {
    pub fn as_str(self) -> &'static str {
        match self {
            Weighting::Uniform => "uniform",
            Weighting::InverseMinDistance => "inverse-min-distance",
        }
    }
}

impl FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Weighting::Uniform),
            "inverse-min-distance" | "inverse_min_distance" => Ok(Weighting::InverseMinDistance),
            other => Err(Error::Usage(format!("unknown weighting {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extraction {
    Mnn,
    TopK(usize),
}

impl Extraction {
    pub const DEFAULT_K: usize = 20;
}

impl Default for Extraction {
    fn default() -> Self {
        Extraction::TopK(Self::DEFAULT_K)
    }
}

impl fmt::Display for Extraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extraction::Mnn => f.write_str("mnn"),
            Extraction::TopK(k) => write!(f, "topk({k})"),
        }
    }
}

impl FromStr for Extraction {
    type Err = Error;

    /// Accepts `mnn`, `topk`, `topk(K)`, and `topK` forms such as `top20`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if lower == "mnn" {
            return Ok(Extraction::Mnn);
        }
        if lower == "topk" {
            return Ok(Extraction::default());
        }
        let k = lower
            .strip_prefix("topk(")
            .and_then(|r| r.strip_suffix(')'))
            .or_else(|| lower.strip_prefix("top"))
            .and_then(|k| k.parse::<usize>().ok())
            .filter(|&k| k > 0)
            .ok_or_else(|| Error::Usage(format!("unknown extraction {s:?}")))?;
        Ok(Extraction::TopK(k))
    }
}

/// One kind-partition of the global problem.
#[derive(Debug, Clone)]
pub struct PartitionCoupling {
    pub kind: ElementKind,
    pub source_iris: Vec<String>,
    pub target_iris: Vec<String>,
    pub cost: CostMatrix,
    pub coupling: Coupling,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedPartition {
    pub kind: ElementKind,
    pub source_count: usize,
    pub target_count: usize,
}

#[derive(Debug, Clone)]
pub struct GlobalCoupling {
    pub partitions: Vec<PartitionCoupling>,
    /// Kinds with no elements on one side; recorded rather than failing.
    pub skipped: Vec<SkippedPartition>,
}

/// Solves one transport problem per element kind.
pub fn global_couple(
    source: &EmbeddedOntology<'_>,
    target: &EmbeddedOntology<'_>,
    weighting: Weighting,
    solver: &SolverConfig,
) -> Result<GlobalCoupling> {
    let mut problems = Vec::new();
    let mut skipped = Vec::new();
    for kind in MATCHED_KINDS {
        let xs = members(source, kind);
        let ys = members(target, kind);
        if xs.is_empty() || ys.is_empty() {
            skipped.push(SkippedPartition {
                kind,
                source_count: xs.len(),
                target_count: ys.len(),
            });
            continue;
        }
        problems.push((kind, xs, ys));
    }
    if problems.is_empty() {
        return Err(Error::Invalid("no element kind is present in both ontologies".into()));
    }

    let partitions = problems
        .into_par_iter()
        .map(|(kind, xs, ys)| {
            let cost = label_cost_matrix(
                &xs.iter().map(|&i| &source.embeddings[i]).collect::<Vec<_>>(),
                &ys.iter().map(|&j| &target.embeddings[j]).collect::<Vec<_>>(),
            )?;
            let (mu, nu) = match weighting {
                Weighting::Uniform => (uniform_marginal(xs.len())?, uniform_marginal(ys.len())?),
                Weighting::InverseMinDistance => (
                    inverse_min_distance_marginal(&cost, Side::Source),
                    inverse_min_distance_marginal(&cost, Side::Target),
                ),
            };
            let coupling = solver.sinkhorn(&cost, &mu, &nu)?;
            Ok(PartitionCoupling {
                kind,
                source_iris: xs.iter().map(|&i| source.ontology.elements()[i].iri.clone()).collect(),
                target_iris: ys.iter().map(|&j| target.ontology.elements()[j].iri.clone()).collect(),
                cost,
                coupling,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(GlobalCoupling { partitions, skipped })
}

fn members(onto: &EmbeddedOntology<'_>, kind: ElementKind) -> Vec<usize> {
    onto.ontology
        .elements()
        .iter()
        .enumerate()
        .filter(|(_, e)| e.kind == kind)
        .map(|(i, _)| i)
        .collect()
}

/// Index of the first maximum; lower index wins ties.
fn argmax(values: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Cells that are simultaneously the maximum of their row and their column.
/// Returned in row order.
pub fn mnn_extract(plan: &Coupling) -> Vec<(usize, usize)> {
    let col_best: Vec<Option<usize>> = (0..plan.cols())
        .map(|j| argmax((0..plan.rows()).map(|i| plan.get(i, j))))
        .collect();
    (0..plan.rows())
        .filter_map(|i| {
            let j = argmax(plan.row(i).iter().copied())?;
            (col_best[j] == Some(i)).then_some((i, j))
        })
        .collect()
}

/// The `k` largest cells of every row, ordered by row then by descending
/// mass. Rows shorter than `k` return every column.
pub fn topk_extract(plan: &Coupling, k: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(plan.rows() * k.min(plan.cols()));
    let mut order: Vec<usize> = Vec::with_capacity(plan.cols());
    for i in 0..plan.rows() {
        let row = plan.row(i);
        order.clear();
        order.extend(0..plan.cols());
        // Stable sort keeps lower column indices first among equal entries.
        order.sort_by(|&a, &b| row[b].total_cmp(&row[a]));
        out.extend(order.iter().take(k).map(|&j| (i, j)));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub source_iri: String,
    pub target_iri: String,
    pub kind: ElementKind,
    /// The plan entry for this pair.
    pub coupling_mass: f64,
    /// Ground cost of the pair in the global problem.
    pub label_euclidean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub method: Extraction,
    pub source_onto: String,
    pub target_onto: String,
    pub candidates: Vec<Candidate>,
}

/// Applies `method` to every partition of `global`.
pub fn extract_candidates(
    global: &GlobalCoupling,
    method: Extraction,
    source_onto: &str,
    target_onto: &str,
) -> CandidateSet {
    let mut candidates = Vec::new();
    for part in &global.partitions {
        let cells = match method {
            Extraction::Mnn => mnn_extract(&part.coupling),
            Extraction::TopK(k) => topk_extract(&part.coupling, k),
        };
        candidates.extend(cells.into_iter().map(|(i, j)| Candidate {
            source_iri: part.source_iris[i].clone(),
            target_iri: part.target_iris[j].clone(),
            kind: part.kind,
            coupling_mass: part.coupling.get(i, j),
            label_euclidean: part.cost.get(i, j),
        }));
    }
    CandidateSet {
        method,
        source_onto: source_onto.to_string(),
        target_onto: target_onto.to_string(),
        candidates,
    }
}

/// Renders candidates as tab-separated `source target mass method` rows
/// after `# key: value` header lines.
pub fn write_candidates(set: &CandidateSet, header: &[(String, String)]) -> String {
    let mut out = String::from("# ontomatch candidates\n");
    for (k, v) in header {
        out.push_str(&format!("# {k}: {v}\n"));
    }
    out.push_str(&format!(
        "# source_onto: {}\n# target_onto: {}\n",
        set.source_onto, set.target_onto
    ));
    out.push_str("# columns: source_iri\ttarget_iri\tcoupling_mass\tmethod\n");
    for c in &set.candidates {
        out.push_str(&format!(
            "{}\t{}\t{:e}\t{}\n",
            c.source_iri, c.target_iri, c.coupling_mass, set.method
        ));
    }
    out
}

/// A candidate row as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateRecord {
    pub source_iri: String,
    pub target_iri: String,
    pub coupling_mass: f64,
    pub method: String,
}

pub fn parse_candidates(text: &str, file: &str) -> Result<Vec<CandidateRecord>> {
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::format(
                file,
                i + 1,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let coupling_mass: f64 = fields[2]
            .parse()
            .ok()
            .filter(|m: &f64| m.is_finite() && *m >= 0.0)
            .ok_or_else(|| Error::format(file, i + 1, format!("invalid coupling mass {:?}", fields[2])))?;
        records.push(CandidateRecord {
            source_iri: fields[0].to_string(),
            target_iri: fields[1].to_string(),
            coupling_mass,
            method: fields[3].to_string(),
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(rows: &[Vec<f64>]) -> Coupling {
        let n = rows.len();
        let m = rows[0].len();
        let cost = CostMatrix::new(n, m, vec![0.0; n * m]).unwrap();
        Coupling::new(&cost, rows.concat()).unwrap()
    }

    #[test]
    fn mnn_dominant_diagonal() {
        assert_eq!(
            mnn_extract(&plan(&[vec![0.4, 0.1], vec![0.1, 0.4]])),
            vec![(0, 0), (1, 1)]
        );
    }

    #[test]
    fn mnn_claimed_column() {
        assert_eq!(mnn_extract(&plan(&[vec![0.4, 0.35], vec![0.3, 0.2]])), vec![(0, 0)]);
    }

    #[test]
    fn mnn_single_cell() {
        assert_eq!(mnn_extract(&plan(&[vec![1.0]])), vec![(0, 0)]);
    }

    #[test]
    fn mnn_ties_prefer_lower_index() {
        assert_eq!(mnn_extract(&plan(&[vec![0.25, 0.25], vec![0.25, 0.25]])), vec![(0, 0)]);
    }

    #[test]
    fn topk_order_statistics() {
        let p = plan(&[vec![0.1, 0.5, 0.2, 0.3]]);
        assert_eq!(topk_extract(&p, 2), vec![(0, 1), (0, 3)]);
    }

    #[test]
    fn topk_saturates() {
        let p = plan(&[vec![0.1, 0.2], vec![0.3, 0.4]]);
        assert_eq!(topk_extract(&p, 5).len(), 4);
        assert_eq!(topk_extract(&p, 2).len(), 4);
    }

    #[test]
    fn topk_ties_prefer_lower_index() {
        let p = plan(&[vec![0.2, 0.3, 0.3, 0.2]]);
        assert_eq!(topk_extract(&p, 3), vec![(0, 1), (0, 2), (0, 0)]);
    }

    #[test]
    fn extraction_parsing() {
        assert_eq!("mnn".parse::<Extraction>().unwrap(), Extraction::Mnn);
        assert_eq!("topk".parse::<Extraction>().unwrap(), Extraction::TopK(20));
        assert_eq!("topk(3)".parse::<Extraction>().unwrap(), Extraction::TopK(3));
        assert_eq!("top20".parse::<Extraction>().unwrap(), Extraction::TopK(20));
        assert!("topk(0)".parse::<Extraction>().is_err());
        assert!("nearest".parse::<Extraction>().is_err());
        assert_eq!(Extraction::TopK(7).to_string(), "topk(7)");
    }

    #[test]
    fn candidate_file_round_trip() {
        let set = CandidateSet {
            method: Extraction::TopK(2),
            source_onto: "s".into(),
            target_onto: "t".into(),
            candidates: vec![Candidate {
                source_iri: "s#A".into(),
                target_iri: "t#B".into(),
                kind: ElementKind::Class,
                coupling_mass: 0.123456789,
                label_euclidean: 0.5,
            }],
        };
        let text = write_candidates(&set, &[("weighting".into(), "uniform".into())]);
        assert!(text.starts_with("# ontomatch candidates\n# weighting: uniform\n"));
        let recs = parse_candidates(&text, "c.tsv").unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].coupling_mass, 0.123456789);
        assert_eq!(recs[0].method, "topk(2)");
    }

    #[test]
    fn malformed_candidate_rows() {
        assert!(matches!(
            parse_candidates("a\tb\n", "f"),
            Err(Error::Format { line: 1, .. })
        ));
        assert!(parse_candidates("a\tb\tx\tmnn\n", "f").is_err());
        assert!(parse_candidates("# only header\n\n", "f").unwrap().is_empty());
    }
}
