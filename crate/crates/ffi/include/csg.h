#ifndef CSG_H
#define CSG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes. The nonzero values below 4 match the command-line exit codes.
typedef enum CsgStatus {
  CSG_STATUS_OK = 0,
  // Usage error, e.g. wrong objective kind or a bad argument.
  CSG_STATUS_FAILURE = 1,
  // The game document is malformed or violates a model invariant.
  CSG_STATUS_INVALID = 2,
  // A support enumeration exceeded its budget.
  CSG_STATUS_BUDGET = 3,
  CSG_STATUS_NULL_POINTER = 4,
  // A Rust panic was caught at the boundary.
  CSG_STATUS_PANIC = 5,
} CsgStatus;

// A parsed game with its objective.
typedef struct CsgGame CsgGame;

// A solver result, kept as rendered JSON plus exact per-state values.
typedef struct CsgResult CsgResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parses a game document. On success `*out` owns a new handle that must be
// released with [`csg_game_free`].
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum CsgStatus csg_game_from_json(const char *json, struct CsgGame **out);

// # Safety
// `game` must come from [`csg_game_from_json`] and not be used afterwards.
// Null is ignored.
void csg_game_free(struct CsgGame *game);

// Number of states, or 0 for a null handle.
//
// # Safety
// `game` must be null or a live handle.
uintptr_t csg_game_num_states(const struct CsgGame *game);

// Runs strategy improvement on a safety game. `max_iterations` of 0 keeps
// the default cap.
//
// # Safety
// `game` must be a live handle and `out` a valid pointer.
enum CsgStatus csg_solve_safety(const struct CsgGame *game,
                                uintptr_t max_iterations,
                                struct CsgResult **out);

// Interleaves lower and upper bounds until they are within `epsilon`
// (a rational such as `"1/1000"`). The exact values reported are the lower
// bounds.
//
// # Safety
// `game` must be a live handle, `epsilon` a NUL-terminated string and `out`
// a valid pointer.
enum CsgStatus csg_anytime(const struct CsgGame *game,
                           const char *epsilon,
                           uintptr_t max_iterations,
                           struct CsgResult **out);

// The result document as JSON. Owned by the result.
//
// # Safety
// `result` must be null or a live handle.
const char *csg_result_json(const struct CsgResult *result);

// Exact value of state `index` as `"p/q"`, or null when out of range.
// Owned by the result.
//
// # Safety
// `result` must be null or a live handle.
const char *csg_result_value(const struct CsgResult *result, uintptr_t index);

// # Safety
// `result` must come from a solve call and not be used afterwards. Null is
// ignored.
void csg_result_free(struct CsgResult *result);

// Message of the last failed call on this thread, or null. Valid until the
// next call into the library on this thread.
const char *csg_last_error(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CSG_H */
