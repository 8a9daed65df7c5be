#ifndef FACTORKIT_H
#define FACTORKIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FkCommand {
  FK_COMMAND_FFACTOR = 0,
  FK_COMMAND_FFACTOR_MAX = 1,
  FK_COMMAND_BMATCH = 2,
  FK_COMMAND_SSSP = 3,
  FK_COMMAND_MAXFLOW = 4,
  FK_COMMAND_MINCOST = 5,
  FK_COMMAND_VERIFY = 6,
  FK_COMMAND_ORACLE = 7,
} FkCommand;

/**
 * Return codes. `Ok` through `Rejected` mirror the envelope statuses.
 */
typedef enum FkStatus {
  FK_STATUS_OK = 0,
  FK_STATUS_INFEASIBLE = 1,
  FK_STATUS_NEGATIVE_CYCLE = 2,
  FK_STATUS_PROBABILISTIC_FAILURE = 3,
  FK_STATUS_INPUT_ERROR = 4,
  FK_STATUS_BUDGET_EXCEEDED = 5,
  FK_STATUS_REJECTED = 6,
  FK_STATUS_NULL_POINTER = 7,
  FK_STATUS_OUT_OF_RANGE = 8,
  FK_STATUS_PANIC = 9,
} FkStatus;

/**
 * A multigraph with degree bounds and an optional sink.
 */
typedef struct FkGraph FkGraph;

/**
 * A solver result envelope.
 */
typedef struct FkResult FkResult;

/**
 * Solver options. `backend` is 0 for algebraic, 1 for the oracle.
 */
typedef struct FkFlags {
  uint64_t seed;
  uint32_t prime_bits;
  uint32_t backend;
  bool certify;
} FkFlags;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Default flags: seed 0, 31-bit primes, algebraic backend, no certificate.
 */
struct FkFlags fk_flags_default(void);

/**
 * New graph on `n` vertices with no edges and all degree bounds 0.
 */
struct FkGraph *fk_graph_new(size_t n);

/**
 * # Safety
 * `g` is null or a handle from [`fk_graph_new`] not yet freed.
 */
void fk_graph_free(struct FkGraph *g);

/**
 * Add an edge `uv` with `mult` copies of the given weights.
 *
 * # Safety
 * `g` is a live handle and `weights` points to `mult` readable values.
 */
enum FkStatus fk_graph_add_edge(struct FkGraph *g,
                                size_t u,
                                size_t v,
                                const int64_t *weights,
                                size_t mult);

/**
 * Set `f(v)` (or `b(v)`).
 *
 * # Safety
 * `g` is a live handle.
 */
enum FkStatus fk_graph_set_degree(struct FkGraph *g, size_t v, size_t f);

/**
 * Set the shortest-path sink.
 *
 * # Safety
 * `g` is a live handle.
 */
enum FkStatus fk_graph_set_sink(struct FkGraph *g, size_t t);

/**
 * Run a graph command (`Ffactor`, `FfactorMax`, `Bmatch`, `Sssp` or
 * `Oracle`) and store the result in `*out`, also on failure.
 *
 * # Safety
 * `g` is a live handle and `out` is writable.
 */
enum FkStatus fk_graph_solve(const struct FkGraph *g,
                             enum FkCommand command,
                             struct FkFlags flags,
                             struct FkResult **out);

/**
 * Run any command on an instance in the text file format. `envelope` is
 * the JSON envelope for `Verify` and may be null otherwise.
 *
 * # Safety
 * `instance` and a non-null `envelope` are NUL-terminated strings, and
 * `out` is writable.
 */
enum FkStatus fk_run(enum FkCommand command,
                     const char *instance,
                     const char *envelope,
                     struct FkFlags flags,
                     struct FkResult **out);

/**
 * # Safety
 * `r` is null or a result not yet freed.
 */
void fk_result_free(struct FkResult *r);

/**
 * # Safety
 * `r` is a live result.
 */
enum FkStatus fk_result_status(const struct FkResult *r);

/**
 * Diagnostic text, or null when there is none. The string lives as long
 * as the result.
 *
 * # Safety
 * `r` is a live result.
 */
const char *fk_result_message(const struct FkResult *r);

/**
 * Optimal weight, for weighted commands.
 *
 * # Safety
 * `r` is a live result and `out` is writable.
 */
enum FkStatus fk_result_weight(const struct FkResult *r, int64_t *out);

/**
 * Number of edge copies in the factor (0 when there is none).
 *
 * # Safety
 * `r` is a live result.
 */
size_t fk_result_factor_len(const struct FkResult *r);

/**
 * The `i`-th factor copy as edge index and copy index.
 *
 * # Safety
 * `r` is a live result; `edge` and `copy` are writable.
 */
enum FkStatus fk_result_factor_copy(const struct FkResult *r, size_t i, size_t *edge, size_t *copy);

/**
 * Shortest-path distance `d(v)` to the sink.
 *
 * # Safety
 * `r` is a live result and `out` is writable.
 */
enum FkStatus fk_result_distance(const struct FkResult *r, size_t v, int64_t *out);

/**
 * Flow value and cost, for flow commands.
 *
 * # Safety
 * `r` is a live result; `value` and `cost` are writable.
 */
enum FkStatus fk_result_flow(const struct FkResult *r, int64_t *value, int64_t *cost);

/**
 * The full envelope as JSON; release it with [`fk_string_free`].
 *
 * # Safety
 * `r` is a live result.
 */
char *fk_result_json(const struct FkResult *r);

/**
 * # Safety
 * `s` is null or a string from [`fk_result_json`] not yet freed.
 */
void fk_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FACTORKIT_H */
