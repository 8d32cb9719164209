#ifndef SIGAUG_H
#define SIGAUG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SigaugStatus {
  SIGAUG_STATUS_OK = 0,
  SIGAUG_STATUS_NULL_POINTER = 1,
  SIGAUG_STATUS_INVALID_ARGUMENT = 2,
  SIGAUG_STATUS_IO = 3,
  SIGAUG_STATUS_PARSE = 4,
  // The quantity is undefined for this input (for example no triangles).
  SIGAUG_STATUS_UNDEFINED = 5,
  SIGAUG_STATUS_RUNTIME = 6,
  SIGAUG_STATUS_PANIC = 7,
} SigaugStatus;

// Opaque signed graph handle.
typedef struct SigaugGraph SigaugGraph;

typedef struct SigaugEdge {
  size_t u;
  size_t v;
  // `1` or `-1`.
  int8_t sign;
} SigaugEdge;

typedef struct SigaugTriangleCounts {
  uint64_t balanced;
  uint64_t unbalanced;
} SigaugTriangleCounts;

typedef struct SigaugEdgeProfile {
  uint64_t balanced;
  uint64_t unbalanced;
  double local_degree;
  double difficulty;
} SigaugEdgeProfile;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the last failure on this thread, or an empty string.
// The pointer is valid until the next library call on the same thread.
const char *sigaug_last_error(void);

// Loads a dataset file into a symmetrized graph. `format` is
// `"rating-csv"`, `"sign-tsv"` or null to infer from the file name.
enum SigaugStatus sigaug_graph_load(const char *path, const char *format, struct SigaugGraph **out);

// Builds a graph from `len` undirected edges over nodes `0..num_nodes`.
enum SigaugStatus sigaug_graph_from_edges(size_t num_nodes,
                                          const struct SigaugEdge *edges,
                                          size_t len,
                                          struct SigaugGraph **out);

void sigaug_graph_free(struct SigaugGraph *graph);

// Node count, or 0 for a null handle.
size_t sigaug_graph_num_nodes(const struct SigaugGraph *graph);

// Undirected edge count, or 0 for a null handle.
size_t sigaug_graph_num_edges(const struct SigaugGraph *graph);

// `2 |E| / (n (n - 1))`.
enum SigaugStatus sigaug_graph_density(const struct SigaugGraph *graph, double *out);

enum SigaugStatus sigaug_graph_triangles(const struct SigaugGraph *graph,
                                         struct SigaugTriangleCounts *out);

// Fraction of balanced triangles; `Undefined` when there are none.
enum SigaugStatus sigaug_graph_balance_degree(const struct SigaugGraph *graph, double *out);

// Triangle profile of the existing edge `(u, v)`.
enum SigaugStatus sigaug_graph_edge_profile(const struct SigaugGraph *graph,
                                            size_t u,
                                            size_t v,
                                            struct SigaugEdgeProfile *out);

// Linear pacing `min(1, lambda0 + (1 - lambda0) t / big_t)`.
enum SigaugStatus sigaug_pacing(size_t t, double lambda0, size_t big_t, double *out);

// ROC AUC of `scores` against labels in {1, -1}; `Undefined` when one
// class is absent.
enum SigaugStatus sigaug_compute_auc(const double *scores,
                                     const int8_t *labels,
                                     size_t len,
                                     double *out);

// Runs an experiment on `dataset` (a known name or a path) with a JSON
// experiment configuration (null or `"{}"` for defaults) and returns the
// JSON report in `out_json`, to be freed with [`sigaug_string_free`].
enum SigaugStatus sigaug_run_experiment_json(const char *dataset,
                                             const char *config_json,
                                             char **out_json);

void sigaug_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SIGAUG_H */
