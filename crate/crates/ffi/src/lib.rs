//! C interface to the ontomatch matcher.
//!
//! Objects cross the boundary as opaque handles created by `om_*_load` or
//! `om_*_parse` and released with the matching `om_*_free`. Every fallible
//! call returns an [`OmStatus`]; on failure the message is available from
//! [`om_last_error_message`] on the same thread. Handles are immutable once
//! created and may be read from several threads at once.
//!
//! Strings passed in must be NUL-terminated UTF-8. Strings handed out are
//! owned by the library and stay valid as long as the handle they came from.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ontomatch::embeddings::{load_embeddings, parse_embeddings, EmbeddingStore};
use ontomatch::evaluation::ontology_similarity;
use ontomatch::ground::{EmbeddedOntology, Embedder};
use ontomatch::matching::{extract_candidates, global_couple, write_candidates, Candidate, Extraction, Weighting};
use ontomatch::ontology::{load_ontology, Ontology};
use ontomatch::refinement::{
    filter_alignment, levenshtein_norm, score_candidates, write_alignment, Alignment, ContextScorer, Interaction,
};
use ontomatch::transport::{exact_ot, sinkhorn, CostMatrix, Coupling, Marginal, SinkhornParams, SolverConfig};
use ontomatch::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// A bad option value, such as an unknown metric name.
    Usage = 3,
    /// Inputs that are well formed but cannot be matched.
    Invalid = 4,
    Embedding = 5,
    Ontology = 6,
    Format = 7,
    Io = 8,
    Transport = 9,
    NotConverged = 10,
    OutOfRange = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmWeighting {
    Uniform = 0,
    InverseMinDistance = 1,
}

/// Settings for [`om_match`]. Start from [`om_match_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmMatchOptions {
    pub weighting: OmWeighting,
    /// Candidates kept per source element; 0 selects mutual nearest neighbours.
    pub top_k: u32,
    /// Entropic regularization; 0 means 1% of the mean cost.
    pub epsilon: f64,
    pub max_iter: u32,
    pub tol: f64,
}

/// One candidate pair. The strings belong to the candidate set.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct OmCandidate {
    pub source_iri: *const c_char,
    pub target_iri: *const c_char,
    pub coupling_mass: f64,
    pub label_euclidean: f64,
}

/// One accepted correspondence. The strings belong to the alignment.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct OmCorrespondence {
    pub source_iri: *const c_char,
    pub target_iri: *const c_char,
    pub score: f64,
}

pub struct OmEmbeddings {
    store: EmbeddingStore,
}

pub struct OmOntology {
    ontology: Ontology,
}

pub struct OmCandidates {
    candidates: Vec<Candidate>,
    iris: Vec<(CString, CString)>,
    text: String,
}

pub struct OmAlignment {
    alignment: Alignment,
    iris: Vec<(CString, CString)>,
    text: String,
}

enum Failure {
    Null(&'static str),
    Utf8(&'static str),
    Range(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<ontomatch::transport::TransportError> for Failure {
    fn from(e: ontomatch::transport::TransportError) -> Self {
        Failure::Core(e.into())
    }
}

impl Failure {
    fn status(&self) -> OmStatus {
        match self {
            Failure::Null(_) => OmStatus::NullPointer,
            Failure::Utf8(_) => OmStatus::InvalidUtf8,
            Failure::Range(_) => OmStatus::OutOfRange,
            Failure::Core(e) => match e {
                Error::Usage(_) => OmStatus::Usage,
                Error::Invalid(_) => OmStatus::Invalid,
                Error::Embedding(_) => OmStatus::Embedding,
                Error::Ontology(_) => OmStatus::Ontology,
                Error::Format { .. } => OmStatus::Format,
                Error::Io { .. } => OmStatus::Io,
                Error::Transport(_) => OmStatus::Transport,
                Error::NotConverged(_) => OmStatus::NotConverged,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Null(what) => format!("{what} is null"),
            Failure::Utf8(what) => format!("{what} is not valid UTF-8"),
            Failure::Range(msg) => msg.clone(),
            Failure::Core(e) => e.to_string(),
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> OmStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => OmStatus::Ok,
        Ok(Err(failure)) => {
            set_last_error(failure.message());
            failure.status()
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            OmStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure::Utf8(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn c_string(s: &str) -> CString {
    CString::new(s).unwrap_or_else(|_| CString::new(s.replace('\0', " ")).unwrap())
}

unsafe fn free_box<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn om_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn om_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a word-vector text file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn om_embeddings_load(path: *const c_char, out: *mut *mut OmEmbeddings) -> OmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let store = load_embeddings(str_arg(path, "path")?).map_err(Error::from)?;
        *out = Box::into_raw(Box::new(OmEmbeddings { store }));
        Ok(())
    })
}

/// Parses word vectors from text already in memory.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn om_embeddings_parse(text: *const c_char, out: *mut *mut OmEmbeddings) -> OmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let store = parse_embeddings(str_arg(text, "text")?).map_err(Error::from)?;
        *out = Box::into_raw(Box::new(OmEmbeddings { store }));
        Ok(())
    })
}

/// Vector dimension, or 0 for a null handle.
///
/// # Safety
/// `embeddings` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn om_embeddings_dimension(embeddings: *const OmEmbeddings) -> usize {
    embeddings.as_ref().map_or(0, |e| e.store.dimension())
}

/// # Safety
/// `embeddings` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn om_embeddings_free(embeddings: *mut OmEmbeddings) {
    free_box(embeddings);
}

/// Loads an ontology JSON document.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn om_ontology_load(path: *const c_char, out: *mut *mut OmOntology) -> OmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let ontology = load_ontology(str_arg(path, "path")?).map_err(Error::from)?;
        *out = Box::into_raw(Box::new(OmOntology { ontology }));
        Ok(())
    })
}

/// Parses an ontology JSON document held in memory.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn om_ontology_parse(json: *const c_char, out: *mut *mut OmOntology) -> OmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let ontology = Ontology::parse(str_arg(json, "json")?).map_err(Error::from)?;
        *out = Box::into_raw(Box::new(OmOntology { ontology }));
        Ok(())
    })
}

/// Number of elements of every kind, or 0 for a null handle.
///
/// # Safety
/// `ontology` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn om_ontology_element_count(ontology: *const OmOntology) -> usize {
    ontology.as_ref().map_or(0, |o| o.ontology.elements().len())
}

/// Number of classes, or 0 for a null handle.
///
/// # Safety
/// `ontology` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn om_ontology_class_count(ontology: *const OmOntology) -> usize {
    ontology.as_ref().map_or(0, |o| o.ontology.class_count())
}

/// # Safety
/// `ontology` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn om_ontology_free(ontology: *mut OmOntology) {
    free_box(ontology);
}

#[no_mangle]
pub extern "C" fn om_match_options_default() -> OmMatchOptions {
    let solver = SolverConfig::default();
    OmMatchOptions {
        weighting: OmWeighting::Uniform,
        top_k: 20,
        epsilon: 0.0,
        max_iter: solver.max_iter as u32,
        tol: solver.tol,
    }
}

fn solver_config(epsilon: f64, max_iter: u32, tol: f64) -> Result<SolverConfig, Failure> {
    let defaults = SolverConfig::default();
    if epsilon < 0.0 || !epsilon.is_finite() {
        return Err(Failure::Range(format!(
            "epsilon must be finite and non-negative, got {epsilon}"
        )));
    }
    if tol < 0.0 || !tol.is_finite() {
        return Err(Failure::Range(format!(
            "tol must be finite and non-negative, got {tol}"
        )));
    }
    Ok(SolverConfig {
        epsilon: (epsilon > 0.0).then_some(epsilon),
        max_iter: if max_iter == 0 {
            defaults.max_iter
        } else {
            max_iter as usize
        },
        tol: if tol == 0.0 { defaults.tol } else { tol },
    })
}

/// Couples `source` and `target` and extracts candidate pairs.
///
/// # Safety
/// Handles must be live, `options` null (defaults) or readable, and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn om_match(
    embeddings: *const OmEmbeddings,
    source: *const OmOntology,
    target: *const OmOntology,
    options: *const OmMatchOptions,
    out: *mut *mut OmCandidates,
) -> OmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let store = &handle(embeddings, "embeddings")?.store;
        let (source, target) = (&handle(source, "source")?.ontology, &handle(target, "target")?.ontology);
        let opts = options.as_ref().copied().unwrap_or_else(|| om_match_options_default());
        let solver = solver_config(opts.epsilon, opts.max_iter, opts.tol)?;
        let weighting = match opts.weighting {
            OmWeighting::Uniform => Weighting::Uniform,
            OmWeighting::InverseMinDistance => Weighting::InverseMinDistance,
        };
        let extraction = match opts.top_k {
            0 => Extraction::Mnn,
            k => Extraction::TopK(k as usize),
        };

        let embedder = Embedder::new(store);
        let (es, et) = (
            EmbeddedOntology::new(source, &embedder),
            EmbeddedOntology::new(target, &embedder),
        );
        let global = global_couple(&es, &et, weighting, &solver)?;
        let set = extract_candidates(&global, extraction, source.id(), target.id());
        let header = [
            ("weighting".to_string(), weighting.as_str().to_string()),
            ("extraction".to_string(), extraction.to_string()),
        ];
        let text = write_candidates(&set, &header);
        let iris = set
            .candidates
            .iter()
            .map(|c| (c_string(&c.source_iri), c_string(&c.target_iri)))
            .collect();
        *out = Box::into_raw(Box::new(OmCandidates {
            candidates: set.candidates,
            iris,
            text,
        }));
        Ok(())
    })
}

/// Number of candidates, or 0 for a null handle.
///
/// # Safety
/// `candidates` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn om_candidates_len(candidates: *const OmCandidates) -> usize {
    candidates.as_ref().map_or(0, |c| c.candidates.len())
}

/// # Safety
/// `candidates` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn om_candidates_get(
    candidates: *const OmCandidates,
    index: usize,
    out: *mut OmCandidate,
) -> OmStatus {
    guard(|| {
        let set = handle(candidates, "candidates")?;
        let out = out_ptr(out, "out")?;
        let c = set.candidates.get(index).ok_or_else(|| {
            Failure::Range(format!(
                "index {index} out of range for {} candidates",
                set.candidates.len()
            ))
        })?;
        let (s, t) = &set.iris[index];
        *out = OmCandidate {
            source_iri: s.as_ptr(),
            target_iri: t.as_ptr(),
            coupling_mass: c.coupling_mass,
            label_euclidean: c.label_euclidean,
        };
        Ok(())
    })
}

/// Writes the candidate file that the command-line tool reads back.
///
/// # Safety
/// `candidates` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn om_candidates_write(candidates: *const OmCandidates, path: *const c_char) -> OmStatus {
    guard(|| {
        let set = handle(candidates, "candidates")?;
        let path = str_arg(path, "path")?;
        std::fs::write(path, &set.text).map_err(|source| Error::Io {
            path: path.to_string(),
            source,
        })?;
        Ok(())
    })
}

/// # Safety
/// `candidates` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn om_candidates_free(candidates: *mut OmCandidates) {
    free_box(candidates);
}

/// Scores candidates with `metric` (a preset name such as
/// `"string-context-distance"`, or null for the default) and keeps a
/// one-to-one set scoring at least `threshold`.
///
/// # Safety
/// Handles must be live, `metric` null or a NUL-terminated string, and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn om_refine(
    embeddings: *const OmEmbeddings,
    source: *const OmOntology,
    target: *const OmOntology,
    candidates: *const OmCandidates,
    metric: *const c_char,
    threshold: f64,
    out: *mut *mut OmAlignment,
) -> OmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let store = &handle(embeddings, "embeddings")?.store;
        let (source, target) = (&handle(source, "source")?.ontology, &handle(target, "target")?.ontology);
        let set = handle(candidates, "candidates")?;
        let interaction: Interaction = if metric.is_null() {
            Interaction::default()
        } else {
            str_arg(metric, "metric")?.parse()?
        };

        let embedder = Embedder::new(store);
        let (es, et) = (
            EmbeddedOntology::new(source, &embedder),
            EmbeddedOntology::new(target, &embedder),
        );
        let scorer = ContextScorer::new(&es, &et, SolverConfig::default());
        let scored = score_candidates(&set.candidates, &scorer, &interaction)?;
        let alignment = filter_alignment(&scored, threshold, interaction.name())?;
        let text = write_alignment(&alignment, &[]);
        let iris = alignment
            .correspondences
            .iter()
            .map(|c| (c_string(&c.source_iri), c_string(&c.target_iri)))
            .collect();
        *out = Box::into_raw(Box::new(OmAlignment { alignment, iris, text }));
        Ok(())
    })
}

/// Number of correspondences, or 0 for a null handle.
///
/// # Safety
/// `alignment` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn om_alignment_len(alignment: *const OmAlignment) -> usize {
    alignment.as_ref().map_or(0, |a| a.alignment.correspondences.len())
}

/// # Safety
/// `alignment` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn om_alignment_get(
    alignment: *const OmAlignment,
    index: usize,
    out: *mut OmCorrespondence,
) -> OmStatus {
    guard(|| {
        let al = handle(alignment, "alignment")?;
        let out = out_ptr(out, "out")?;
        let c = al.alignment.correspondences.get(index).ok_or_else(|| {
            Failure::Range(format!(
                "index {index} out of range for {} correspondences",
                al.alignment.correspondences.len()
            ))
        })?;
        let (s, t) = &al.iris[index];
        *out = OmCorrespondence {
            source_iri: s.as_ptr(),
            target_iri: t.as_ptr(),
            score: c.score,
        };
        Ok(())
    })
}

/// # Safety
/// `alignment` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn om_alignment_write(alignment: *const OmAlignment, path: *const c_char) -> OmStatus {
    guard(|| {
        let al = handle(alignment, "alignment")?;
        let path = str_arg(path, "path")?;
        std::fs::write(path, &al.text).map_err(|source| Error::Io {
            path: path.to_string(),
            source,
        })?;
        Ok(())
    })
}

/// # Safety
/// `alignment` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn om_alignment_free(alignment: *mut OmAlignment) {
    free_box(alignment);
}

/// Transport distance between the class sets of two ontologies and its
/// similarity `exp(-wd)`.
///
/// # Safety
/// Handles must be live and `wd`, `ws` writable.
#[no_mangle]
pub unsafe extern "C" fn om_ontology_similarity(
    embeddings: *const OmEmbeddings,
    source: *const OmOntology,
    target: *const OmOntology,
    wd: *mut f64,
    ws: *mut f64,
) -> OmStatus {
    guard(|| {
        let store = &handle(embeddings, "embeddings")?.store;
        let (source, target) = (&handle(source, "source")?.ontology, &handle(target, "target")?.ontology);
        let (wd, ws) = (out_ptr(wd, "wd")?, out_ptr(ws, "ws")?);
        let sim = ontology_similarity(source, target, &Embedder::new(store), &SolverConfig::default())?;
        *wd = sim.wd;
        *ws = sim.ws;
        Ok(())
    })
}

/// Edit distance between two strings divided by the longer length.
///
/// # Safety
/// `a` and `b` must be NUL-terminated strings and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn om_levenshtein_norm(a: *const c_char, b: *const c_char, out: *mut f64) -> OmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = levenshtein_norm(str_arg(a, "a")?, str_arg(b, "b")?);
        Ok(())
    })
}

struct Problem {
    cost: CostMatrix,
    mu: Marginal,
    nu: Marginal,
}

unsafe fn problem(
    cost: *const f64,
    rows: usize,
    cols: usize,
    mu: *const f64,
    nu: *const f64,
) -> Result<Problem, Failure> {
    let cells = rows
        .checked_mul(cols)
        .ok_or_else(|| Failure::Range(format!("{rows}x{cols} problem is too large")))?;
    Ok(Problem {
        cost: CostMatrix::new(rows, cols, slice_arg(cost, cells, "cost")?.to_vec())?,
        mu: Marginal::new(slice_arg(mu, rows, "mu")?.to_vec())?,
        nu: Marginal::new(slice_arg(nu, cols, "nu")?.to_vec())?,
    })
}

unsafe fn write_plan(coupling: &Coupling, plan: *mut f64, wd: *mut f64) -> Result<(), Failure> {
    if !plan.is_null() {
        std::slice::from_raw_parts_mut(plan, coupling.plan().len()).copy_from_slice(coupling.plan());
    }
    *out_ptr(wd, "wd")? = coupling.wd;
    Ok(())
}

/// Entropic transport between `mu` and `nu` under a row-major `rows × cols`
/// cost. `epsilon`, `max_iter` and `tol` of 0 select the defaults. `plan`
/// may be null; otherwise it receives `rows × cols` row-major values.
///
/// # Safety
/// `cost` must hold `rows × cols` values, `mu` `rows`, `nu` `cols`; `plan`
/// null or room for `rows × cols`; `wd` and `converged` writable.
#[no_mangle]
pub unsafe extern "C" fn om_sinkhorn(
    cost: *const f64,
    rows: usize,
    cols: usize,
    mu: *const f64,
    nu: *const f64,
    epsilon: f64,
    max_iter: u32,
    tol: f64,
    plan: *mut f64,
    wd: *mut f64,
    converged: *mut bool,
) -> OmStatus {
    guard(|| {
        let converged = out_ptr(converged, "converged")?;
        let p = problem(cost, rows, cols, mu, nu)?;
        let solver = solver_config(epsilon, max_iter, tol)?;
        let params: SinkhornParams = solver.params_for(&p.cost);
        let coupling = sinkhorn(&p.cost, &p.mu, &p.nu, &params)?;
        *converged = coupling.converged;
        write_plan(&coupling, plan, wd)
    })
}

/// Unregularized transport; refuses problems above 10,000 cells.
///
/// # Safety
/// Same layout requirements as [`om_sinkhorn`].
#[no_mangle]
pub unsafe extern "C" fn om_exact_ot(
    cost: *const f64,
    rows: usize,
    cols: usize,
    mu: *const f64,
    nu: *const f64,
    plan: *mut f64,
    wd: *mut f64,
) -> OmStatus {
    guard(|| {
        let p = problem(cost, rows, cols, mu, nu)?;
        let coupling = exact_ot(&p.cost, &p.mu, &p.nu)?;
        write_plan(&coupling, plan, wd)
    })
}
