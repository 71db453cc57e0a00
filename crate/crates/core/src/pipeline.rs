//! End-to-end runs behind the command-line subcommands.
//!
//! Every run returns its output as text whose header echoes the effective
//! configuration; identical configurations and inputs give identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::embeddings::{load_embeddings, EmbeddingStore, SynonymMap};
use crate::evaluation::{
    evaluate, evaluate_pairs, is_class_pair, jaccard_similarity, ontology_similarity, pearson, threshold_sweep,
    write_curve, EvalReport, ReferenceAlignment, Scope, Sweep,
};
use crate::ground::{EmbeddedOntology, Embedder};
use crate::matching::{
    extract_candidates, global_couple, parse_candidates, write_candidates, CandidateRecord, CandidateSet, Extraction,
    Weighting,
};
use crate::ontology::{load_ontology, ElementKind, Ontology};
use crate::refinement::{
    filter_alignment, parse_alignment, score_candidates, write_alignment, Alignment, ContextScorer, Interaction,
};
use crate::transport::SolverConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub embeddings_path: Option<PathBuf>,
    pub source_path: Option<PathBuf>,
    pub target_path: Option<PathBuf>,
    pub synonyms_path: Option<PathBuf>,
    pub weighting: Weighting,
    pub extraction: Extraction,
    pub metric: Interaction,
    pub threshold: Option<f64>,
    pub solver: SolverConfig,
    pub scope: Scope,
    pub seed: u64,
    /// Fail instead of warning when a solver stops at `max_iter`.
    pub strict: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            embeddings_path: None,
            source_path: None,
            target_path: None,
            synonyms_path: None,
            weighting: Weighting::Uniform,
            extraction: Extraction::default(),
            metric: Interaction::default(),
            threshold: None,
            solver: SolverConfig::default(),
            scope: Scope::All,
            seed: 0,
            strict: false,
        }
    }
}

fn show(path: &Option<PathBuf>) -> String {
    path.as_deref()
        .map_or_else(|| "-".to_string(), |p| p.display().to_string())
}

impl RunConfig {
    /// `(key, value)` pairs echoed at the top of every output.
    pub fn header(&self) -> Vec<(String, String)> {
        let mut h = vec![
            ("embeddings", show(&self.embeddings_path)),
            ("source", show(&self.source_path)),
            ("target", show(&self.target_path)),
        ];
        if self.synonyms_path.is_some() {
            h.push(("synonyms", show(&self.synonyms_path)));
        }
        h.extend([
            ("weighting", self.weighting.as_str().to_string()),
            ("extraction", self.extraction.to_string()),
            ("metric", self.metric.to_string()),
            (
                "threshold",
                self.threshold.map_or_else(|| "sweep".to_string(), |t| t.to_string()),
            ),
            (
                "epsilon",
                self.solver
                    .epsilon
                    .map_or_else(|| "auto".to_string(), |e| e.to_string()),
            ),
            ("max-iter", self.solver.max_iter.to_string()),
            ("tol", self.solver.tol.to_string()),
            ("scope", self.scope.to_string()),
            ("seed", self.seed.to_string()),
            ("strict", self.strict.to_string()),
        ]);
        h.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    fn require<'p>(path: &'p Option<PathBuf>, flag: &str) -> Result<&'p Path> {
        path.as_deref()
            .ok_or_else(|| Error::Usage(format!("--{flag} is required")))
    }

    fn check_threshold(&self) -> Result<()> {
        match self.threshold {
            Some(t) if !(0.0..=1.0).contains(&t) => Err(Error::Usage(format!("threshold {t} is outside [0, 1]"))),
            _ => Ok(()),
        }
    }
}

fn render_header(title: &str, header: &[(String, String)]) -> String {
    let mut out = format!("# ontomatch {title}\n");
    for (k, v) in header {
        out.push_str(&format!("# {k}: {v}\n"));
    }
    out
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path.display(), e))
}

/// Everything a matching run reads from disk.
pub struct Inputs {
    pub store: EmbeddingStore,
    pub synonyms: Option<SynonymMap>,
    pub source: Ontology,
    pub target: Ontology,
}

impl Inputs {
    pub fn load(config: &RunConfig) -> Result<Self> {
        let embeddings = RunConfig::require(&config.embeddings_path, "embeddings")?;
        let source = RunConfig::require(&config.source_path, "source")?;
        let target = RunConfig::require(&config.target_path, "target")?;
        Ok(Inputs {
            store: load_embeddings(embeddings)?,
            synonyms: config.synonyms_path.as_ref().map(SynonymMap::load).transpose()?,
            source: load_ontology(source)?,
            target: load_ontology(target)?,
        })
    }

    pub fn embedder(&self) -> Embedder<'_> {
        match &self.synonyms {
            Some(s) => Embedder::with_synonyms(&self.store, s),
            None => Embedder::new(&self.store),
        }
    }
}

/// Text output plus non-fatal diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub text: String,
    pub warnings: Vec<String>,
}

/// Global coupling and candidate extraction on loaded inputs.
pub fn match_inputs(inputs: &Inputs, config: &RunConfig) -> Result<(CandidateSet, Vec<String>)> {
    let embedder = inputs.embedder();
    let source = EmbeddedOntology::new(&inputs.source, &embedder);
    let target = EmbeddedOntology::new(&inputs.target, &embedder);
    let global = global_couple(&source, &target, config.weighting, &config.solver)?;

    let mut warnings = Vec::new();
    for skipped in global.skipped.iter().filter(|s| s.source_count + s.target_count > 0) {
        warnings.push(format!(
            "skipped {} partition ({} source, {} target elements)",
            skipped.kind, skipped.source_count, skipped.target_count
        ));
    }
    for part in &global.partitions {
        if !part.coupling.converged {
            let what = format!(
                "{} partition after {} iterations",
                part.kind, part.coupling.iterations_used
            );
            if config.strict {
                return Err(Error::NotConverged(what));
            }
            warnings.push(format!("solver did not converge for {what}"));
        }
    }
    let set = extract_candidates(&global, config.extraction, inputs.source.id(), inputs.target.id());
    Ok((set, warnings))
}

pub fn run_match(config: &RunConfig) -> Result<Output> {
    let inputs = Inputs::load(config)?;
    let (set, warnings) = match_inputs(&inputs, config)?;
    Ok(Output {
        text: write_candidates(&set, &config.header()),
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refined {
    pub alignment: Alignment,
    pub sweep: Option<Sweep>,
    pub report: Option<EvalReport>,
}

/// Scores candidate rows and filters them, at the configured threshold or
/// at the sweep's best threshold when only a reference is given.
pub fn refine_inputs(
    inputs: &Inputs,
    config: &RunConfig,
    records: &[CandidateRecord],
    reference: Option<&ReferenceAlignment>,
) -> Result<Refined> {
    config.check_threshold()?;
    if config.threshold.is_none() && reference.is_none() {
        return Err(Error::Usage("refine needs --threshold or --reference".into()));
    }
    let embedder = inputs.embedder();
    let source = EmbeddedOntology::new(&inputs.source, &embedder);
    let target = EmbeddedOntology::new(&inputs.target, &embedder);
    let scorer = ContextScorer::new(&source, &target, config.solver);
    let candidates = records.iter().map(|r| scorer.resolve(r)).collect::<Result<Vec<_>>>()?;
    let mut scored = score_candidates(&candidates, &scorer, &config.metric)?;
    if config.scope == Scope::ClassesOnly {
        scored.retain(|s| s.candidate.kind == ElementKind::Class);
    }

    let reference = reference.map(|r| r.scoped(config.scope, &inputs.source, &inputs.target));
    let sweep = reference.as_ref().map(|r| threshold_sweep(&scored, r));
    let threshold = match (config.threshold, &sweep) {
        (Some(t), _) => t,
        (None, Some(s)) => s.best.threshold,
        (None, None) => unreachable!("checked above"),
    };
    let alignment = filter_alignment(&scored, threshold, config.metric.name())?;
    let report = reference.as_ref().map(|r| evaluate(&alignment, r));
    Ok(Refined {
        alignment,
        sweep,
        report,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineOutput {
    pub alignment: String,
    pub report: Option<EvalReport>,
    /// Header plus the 101-point curve, when a reference was given.
    pub curve: Option<String>,
}

pub fn run_refine(config: &RunConfig, candidates: &Path, reference: Option<&Path>) -> Result<RefineOutput> {
    config.check_threshold()?;
    let records = parse_candidates(&read_text(candidates)?, &candidates.display().to_string())?;
    let reference = reference.map(ReferenceAlignment::load).transpose()?;
    let inputs = Inputs::load(config)?;
    let refined = refine_inputs(&inputs, config, &records, reference.as_ref())?;

    let mut header = config.header();
    header.push(("candidates".into(), candidates.display().to_string()));
    if let Some(r) = &refined.report {
        header.push(("f1".into(), format!("{:.6}", r.f1)));
    }
    let curve = refined.sweep.as_ref().map(|s| {
        let mut text = render_header("curve", &header);
        text.push_str(&format!("# best: {}\n", s.best));
        text.push_str(&write_curve(&s.curve));
        text
    });
    Ok(RefineOutput {
        alignment: write_alignment(&refined.alignment, &header),
        report: refined.report,
        curve,
    })
}

/// Scores an alignment file against a reference. Classes-only scope needs
/// the source and target ontologies to know element kinds.
pub fn run_eval(config: &RunConfig, alignment: &Path, reference: &Path) -> Result<Output> {
    let rows = parse_alignment(&read_text(alignment)?, &alignment.display().to_string())?;
    let mut gold = ReferenceAlignment::load(reference)?;
    let threshold = config.threshold.unwrap_or(0.0);
    let mut pairs: Vec<(&str, &str)> = rows
        .iter()
        .map(|c| (c.source_iri.as_str(), c.target_iri.as_str()))
        .collect();
    if config.scope == Scope::ClassesOnly {
        let source = load_ontology(RunConfig::require(&config.source_path, "source")?)?;
        let target = load_ontology(RunConfig::require(&config.target_path, "target")?)?;
        gold = gold.scoped(Scope::ClassesOnly, &source, &target);
        pairs.retain(|(s, t)| is_class_pair(&source, &target, s, t));
    }
    let report = evaluate_pairs(pairs, &gold, threshold);
    let header = [
        ("alignment".to_string(), alignment.display().to_string()),
        ("reference".to_string(), reference.display().to_string()),
        ("scope".to_string(), config.scope.to_string()),
    ];
    let mut text = render_header("eval", &header);
    text.push_str(&format!("{report}\n"));
    Ok(Output {
        text,
        warnings: Vec::new(),
    })
}

fn check_similarity_convergence(
    config: &RunConfig,
    case: &str,
    converged: bool,
    warnings: &mut Vec<String>,
) -> Result<()> {
    if converged {
        return Ok(());
    }
    if config.strict {
        return Err(Error::NotConverged(case.to_string()));
    }
    warnings.push(format!("solver did not converge for {case}"));
    Ok(())
}

/// Class-level Wasserstein distance and similarity of the two ontologies.
pub fn run_ontosim(config: &RunConfig) -> Result<Output> {
    let inputs = Inputs::load(config)?;
    let sim = ontology_similarity(&inputs.source, &inputs.target, &inputs.embedder(), &config.solver)?;
    let case = format!("{}-{}", inputs.source.id(), inputs.target.id());
    let mut warnings = Vec::new();
    check_similarity_convergence(config, &case, sim.converged, &mut warnings)?;
    let mut text = render_header("ontosim", &config.header());
    text.push_str("source\ttarget\twd\tws\n");
    text.push_str(&format!(
        "{}\t{}\t{:.6}\t{:.6}\n",
        inputs.source.id(),
        inputs.target.id(),
        sim.wd,
        sim.ws
    ));
    Ok(Output { text, warnings })
}

/// One correlation case: two ontologies and their reference alignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrelationCase {
    pub source: PathBuf,
    pub target: PathBuf,
    pub reference: PathBuf,
}

/// Reads `source<TAB>target<TAB>reference` lines; relative paths resolve
/// against the directory holding the cases file.
pub fn parse_cases(text: &str, file: &Path) -> Result<Vec<CorrelationCase>> {
    let base = file.parent().unwrap_or(Path::new(""));
    let name = file.display().to_string();
    let mut cases = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::format(
                &name,
                i + 1,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        }
        cases.push(CorrelationCase {
            source: base.join(fields[0]),
            target: base.join(fields[1]),
            reference: base.join(fields[2]),
        });
    }
    Ok(cases)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRow {
    pub case: String,
    pub wd: f64,
    pub ws: f64,
    pub jaccard: f64,
    pub converged: bool,
}

/// `ws` and class-level Jaccard similarity for one pair of ontologies.
pub fn correlation_row(
    source: &Ontology,
    target: &Ontology,
    reference: &ReferenceAlignment,
    embedder: &Embedder<'_>,
    solver: &SolverConfig,
) -> Result<CorrelationRow> {
    let sim = ontology_similarity(source, target, embedder, solver)?;
    let matched = reference.scoped(Scope::ClassesOnly, source, target).len();
    Ok(CorrelationRow {
        case: format!("{}-{}", source.id(), target.id()),
        wd: sim.wd,
        ws: sim.ws,
        jaccard: jaccard_similarity(source.class_count(), target.class_count(), matched)?,
        converged: sim.converged,
    })
}

/// Table of `(case, wd, ws, jaccard)` rows followed by the Pearson
/// coefficient between `ws` and `jaccard`.
pub fn run_correlate(config: &RunConfig, cases_file: &Path) -> Result<Output> {
    let cases = parse_cases(&read_text(cases_file)?, cases_file)?;
    let embeddings = RunConfig::require(&config.embeddings_path, "embeddings")?;
    let store = load_embeddings(embeddings)?;
    let synonyms = config.synonyms_path.as_ref().map(SynonymMap::load).transpose()?;
    let embedder = match &synonyms {
        Some(s) => Embedder::with_synonyms(&store, s),
        None => Embedder::new(&store),
    };
    let rows = cases
        .par_iter()
        .map(|c| {
            let source = load_ontology(&c.source)?;
            let target = load_ontology(&c.target)?;
            let reference = ReferenceAlignment::load(&c.reference)?;
            correlation_row(&source, &target, &reference, &embedder, &config.solver)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut warnings = Vec::new();
    for r in &rows {
        check_similarity_convergence(config, &r.case, r.converged, &mut warnings)?;
    }
    let ws: Vec<f64> = rows.iter().map(|r| r.ws).collect();
    let jaccard: Vec<f64> = rows.iter().map(|r| r.jaccard).collect();
    let pcc = pearson(&ws, &jaccard)?;

    let mut header = config.header();
    header.push(("cases".into(), cases_file.display().to_string()));
    let mut text = render_header("correlate", &header);
    text.push_str("case\twd\tws\tjaccard\n");
    for r in &rows {
        text.push_str(&format!("{}\t{:.6}\t{:.6}\t{:.6}\n", r.case, r.wd, r.ws, r.jaccard));
    }
    text.push_str(&format!("# pcc: {pcc:.6}\n"));
    Ok(Output { text, warnings })
}
