#ifndef ONTOMATCH_H
#define ONTOMATCH_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum OmStatus {
  OM_STATUS_OK = 0,
  OM_STATUS_NULL_POINTER = 1,
  OM_STATUS_INVALID_UTF8 = 2,
  // A bad option value, such as an unknown metric name.
  OM_STATUS_USAGE = 3,
  // Inputs that are well formed but cannot be matched.
  OM_STATUS_INVALID = 4,
  OM_STATUS_EMBEDDING = 5,
  OM_STATUS_ONTOLOGY = 6,
  OM_STATUS_FORMAT = 7,
  OM_STATUS_IO = 8,
  OM_STATUS_TRANSPORT = 9,
  OM_STATUS_NOT_CONVERGED = 10,
  OM_STATUS_OUT_OF_RANGE = 11,
  OM_STATUS_PANIC = 12,
} OmStatus;

typedef enum OmWeighting {
  OM_WEIGHTING_UNIFORM = 0,
  OM_WEIGHTING_INVERSE_MIN_DISTANCE = 1,
} OmWeighting;

typedef struct OmAlignment OmAlignment;

typedef struct OmCandidates OmCandidates;

typedef struct OmEmbeddings OmEmbeddings;

typedef struct OmOntology OmOntology;

// Settings for [`om_match`]. Start from [`om_match_options_default`].
typedef struct OmMatchOptions {
  enum OmWeighting weighting;
  // Candidates kept per source element; 0 selects mutual nearest neighbours.
  uint32_t top_k;
  // Entropic regularization; 0 means 1% of the mean cost.
  double epsilon;
  uint32_t max_iter;
  double tol;
} OmMatchOptions;

// One candidate pair. The strings belong to the candidate set.
typedef struct OmCandidate {
  const char *source_iri;
  const char *target_iri;
  double coupling_mass;
  double label_euclidean;
} OmCandidate;

// One accepted correspondence. The strings belong to the alignment.
typedef struct OmCorrespondence {
  const char *source_iri;
  const char *target_iri;
  double score;
} OmCorrespondence;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next call into the library on the same thread.
const char *om_last_error_message(void);

// Library version as a static string.
const char *om_version(void);

// Loads a word-vector text file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a writable pointer.
enum OmStatus om_embeddings_load(const char *path, struct OmEmbeddings **out);

// Parses word vectors from text already in memory.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a writable pointer.
enum OmStatus om_embeddings_parse(const char *text, struct OmEmbeddings **out);

// Vector dimension, or 0 for a null handle.
//
// # Safety
// `embeddings` must be null or a live handle.
size_t om_embeddings_dimension(const struct OmEmbeddings *embeddings);

// # Safety
// `embeddings` must be null or a handle not yet freed.
void om_embeddings_free(struct OmEmbeddings *embeddings);

// Loads an ontology JSON document.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a writable pointer.
enum OmStatus om_ontology_load(const char *path, struct OmOntology **out);

// Parses an ontology JSON document held in memory.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a writable pointer.
enum OmStatus om_ontology_parse(const char *json, struct OmOntology **out);

// Number of elements of every kind, or 0 for a null handle.
//
// # Safety
// `ontology` must be null or a live handle.
size_t om_ontology_element_count(const struct OmOntology *ontology);

// Number of classes, or 0 for a null handle.
//
// # Safety
// `ontology` must be null or a live handle.
size_t om_ontology_class_count(const struct OmOntology *ontology);

// # Safety
// `ontology` must be null or a handle not yet freed.
void om_ontology_free(struct OmOntology *ontology);

struct OmMatchOptions om_match_options_default(void);

// Couples `source` and `target` and extracts candidate pairs.
//
// # Safety
// Handles must be live, `options` null (defaults) or readable, and `out`
// writable.
enum OmStatus om_match(const struct OmEmbeddings *embeddings,
                       const struct OmOntology *source,
                       const struct OmOntology *target,
                       const struct OmMatchOptions *options,
                       struct OmCandidates **out);

// Number of candidates, or 0 for a null handle.
//
// # Safety
// `candidates` must be null or a live handle.
size_t om_candidates_len(const struct OmCandidates *candidates);

// # Safety
// `candidates` must be a live handle and `out` writable.
enum OmStatus om_candidates_get(const struct OmCandidates *candidates,
                                size_t index,
                                struct OmCandidate *out);

// Writes the candidate file that the command-line tool reads back.
//
// # Safety
// `candidates` must be a live handle and `path` a NUL-terminated string.
enum OmStatus om_candidates_write(const struct OmCandidates *candidates, const char *path);

// # Safety
// `candidates` must be null or a handle not yet freed.
void om_candidates_free(struct OmCandidates *candidates);

// Scores candidates with `metric` (a preset name such as
// `"string-context-distance"`, or null for the default) and keeps a
// one-to-one set scoring at least `threshold`.
//
// # Safety
// Handles must be live, `metric` null or a NUL-terminated string, and
// `out` writable.
enum OmStatus om_refine(const struct OmEmbeddings *embeddings,
                        const struct OmOntology *source,
                        const struct OmOntology *target,
                        const struct OmCandidates *candidates,
                        const char *metric,
                        double threshold,
                        struct OmAlignment **out);

// Number of correspondences, or 0 for a null handle.
//
// # Safety
// `alignment` must be null or a live handle.
size_t om_alignment_len(const struct OmAlignment *alignment);

// # Safety
// `alignment` must be a live handle and `out` writable.
enum OmStatus om_alignment_get(const struct OmAlignment *alignment,
                               size_t index,
                               struct OmCorrespondence *out);

// # Safety
// `alignment` must be a live handle and `path` a NUL-terminated string.
enum OmStatus om_alignment_write(const struct OmAlignment *alignment, const char *path);

// # Safety
// `alignment` must be null or a handle not yet freed.
void om_alignment_free(struct OmAlignment *alignment);

// Transport distance between the class sets of two ontologies and its
// similarity `exp(-wd)`.
//
// # Safety
// Handles must be live and `wd`, `ws` writable.
enum OmStatus om_ontology_similarity(const struct OmEmbeddings *embeddings,
                                     const struct OmOntology *source,
                                     const struct OmOntology *target,
                                     double *wd,
                                     double *ws);

// Edit distance between two strings divided by the longer length.
//
// # Safety
// `a` and `b` must be NUL-terminated strings and `out` writable.
enum OmStatus om_levenshtein_norm(const char *a, const char *b, double *out);

// Entropic transport between `mu` and `nu` under a row-major `rows × cols`
// cost. `epsilon`, `max_iter` and `tol` of 0 select the defaults. `plan`
// may be null; otherwise it receives `rows × cols` row-major values.
//
// # Safety
// `cost` must hold `rows × cols` values, `mu` `rows`, `nu` `cols`; `plan`
// null or room for `rows × cols`; `wd` and `converged` writable.
enum OmStatus om_sinkhorn(const double *cost,
                          size_t rows,
                          size_t cols,
                          const double *mu,
                          const double *nu,
                          double epsilon,
                          uint32_t max_iter,
                          double tol,
                          double *plan,
                          double *wd,
                          bool *converged);

// Unregularized transport; refuses problems above 10,000 cells.
//
// # Safety
// Same layout requirements as [`om_sinkhorn`].
enum OmStatus om_exact_ot(const double *cost,
                          size_t rows,
                          size_t cols,
                          const double *mu,
                          const double *nu,
                          double *plan,
                          double *wd);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ONTOMATCH_H */
