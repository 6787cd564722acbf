#ifndef STFEM_H
#define STFEM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum StfemStatus {
  STFEM_STATUS_OK = 0,
  STFEM_STATUS_NULL_POINTER = 1,
  STFEM_STATUS_INVALID_ARGUMENT = 2,
  STFEM_STATUS_CONFIG = 3,
  STFEM_STATUS_MEMORY_GUARD = 4,
  STFEM_STATUS_NOT_DIAGONALIZABLE = 5,
  STFEM_STATUS_SOLVER_FAILURE = 6,
  STFEM_STATUS_IO = 7,
  STFEM_STATUS_PANIC = 8,
} StfemStatus;

// Run configuration (opaque).
typedef struct StfemConfig StfemConfig;

// Rows of a convergence study (opaque).
typedef struct StfemResults StfemResults;

// Discrete solution of one level (opaque).
typedef struct StfemSolution StfemSolution;

// One line of a convergence table. Orders of convergence are NaN where
// undefined (first level).
typedef struct StfemRow {
  size_t n;
  double hx;
  double ht;
  double l2;
  double eoc_l2;
  double h1;
  double eoc_h1;
  double solve_seconds;
  double kappa2;
} StfemRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *stfem_last_error_message(void);

// New configuration holding the defaults (square m = 32, T = 5, n_t = 64,
// level 0, fast diagonalization, one thread).
struct StfemConfig *stfem_config_new(void);

// Parses `key = value` text on top of the defaults.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer.
enum StfemStatus stfem_config_parse(const char *text, struct StfemConfig **out);

// Sets one configuration key; see the `harness` documentation for keys.
//
// # Safety
// `config` must come from this library; `key` and `value` must be
// NUL-terminated strings.
enum StfemStatus stfem_config_set(struct StfemConfig *config, const char *key, const char *value);

// Serialized configuration as a newly allocated string; release it with
// [`stfem_string_free`].
//
// # Safety
// `config` must come from this library and `out` must be valid.
enum StfemStatus stfem_config_serialize(const struct StfemConfig *config, char **out);

// # Safety
// `config` must come from this library or be null.
void stfem_config_free(struct StfemConfig *config);

// Runs levels `0..=levels` of the configured study.
//
// # Safety
// `config` must come from this library and `out` must be valid.
enum StfemStatus stfem_run_convergence(const struct StfemConfig *config, struct StfemResults **out);

// # Safety
// `results` must come from this library or be null.
size_t stfem_results_len(const struct StfemResults *results);

// # Safety
// `results` must come from this library and `row` must be valid.
enum StfemStatus stfem_results_row(const struct StfemResults *results,
                                   size_t index,
                                   struct StfemRow *row);

// Renders the rows as CSV (`csv != 0`) or as a table. Release the string
// with [`stfem_string_free`].
//
// # Safety
// `results` must come from this library and `out` must be valid.
enum StfemStatus stfem_results_emit(const struct StfemResults *results, int32_t csv, char **out);

// # Safety
// `results` must come from this library or be null.
void stfem_results_free(struct StfemResults *results);

// Solves a single refinement level.
//
// # Safety
// `config` must come from this library and `out` must be valid.
enum StfemStatus stfem_solve_level(const struct StfemConfig *config,
                                   size_t level,
                                   struct StfemSolution **out);

// Spatial (`n_x`) and temporal (`n_t`) unknown counts.
//
// # Safety
// `solution` must come from this library; `n_x` and `n_t` may be null.
enum StfemStatus stfem_solution_dims(const struct StfemSolution *solution,
                                     size_t *n_x,
                                     size_t *n_t);

// Table row of the solved level.
//
// # Safety
// `solution` must come from this library and `row` must be valid.
enum StfemStatus stfem_solution_row(const struct StfemSolution *solution, struct StfemRow *row);

// Copies the coefficients, temporal index outer, as interleaved
// `(re, im)` pairs into `buffer`, which must hold `2 * n_x * n_t` doubles.
//
// # Safety
// `solution` must come from this library and `buffer` must point to
// `len` writable doubles.
enum StfemStatus stfem_solution_coefficients(const struct StfemSolution *solution,
                                             double *buffer,
                                             size_t len);

// # Safety
// `solution` must come from this library or be null.
void stfem_solution_free(struct StfemSolution *solution);

// # Safety
// `s` must be a string returned by this library or null.
void stfem_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STFEM_H */
