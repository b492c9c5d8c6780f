#ifndef NOUGHTS_H
#define NOUGHTS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NoughtsStatus {
  NOUGHTS_STATUS_OK = 0,
  NOUGHTS_STATUS_NULL_POINTER = 1,
  NOUGHTS_STATUS_INVALID_ARGUMENT = 2,
  NOUGHTS_STATUS_IO = 3,
  NOUGHTS_STATUS_MODEL = 4,
  NOUGHTS_STATUS_TURN_VIOLATION = 5,
  NOUGHTS_STATUS_SESSION_CLOSED = 6,
  NOUGHTS_STATUS_INTERNAL = 7,
} NoughtsStatus;

// A loaded dialogue agent with its vocabulary and action model.
typedef struct NoughtsAgent NoughtsAgent;

// A loaded cell classifier.
typedef struct NoughtsPerception NoughtsPerception;

// One live game.
typedef struct NoughtsSession NoughtsSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Description of the last failure on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *noughts_last_error(void);

// Library version as a static string.
const char *noughts_version(void);

// Releases a string returned by this library.
//
// # Safety
// `s` must come from this library and not have been freed.
void noughts_string_free(char *s);

// Loads a saved classifier.
//
// # Safety
// `path` must be a nul-terminated string; `out` a valid pointer.
enum NoughtsStatus noughts_perception_load(const char *path, struct NoughtsPerception **out);

// Classifies one 40x40 raster of 8-bit intensities. `label_out` receives
// 0 (circle), 1 (cross) or 2 (nothing).
//
// # Safety
// `model` must be live; `pixels` must point to `len` bytes.
enum NoughtsStatus noughts_perception_classify(const struct NoughtsPerception *model,
                                               const uint8_t *pixels,
                                               uintptr_t len,
                                               int32_t *label_out);

// # Safety
// `model` must be null or come from [`noughts_perception_load`].
void noughts_perception_free(struct NoughtsPerception *model);

// Loads a saved agent with its vocabulary and action model.
//
// # Safety
// `path` must be a nul-terminated string; `out` a valid pointer.
enum NoughtsStatus noughts_agent_load(const char *path, struct NoughtsAgent **out);

// Greedy play against the built-in simulated user; writes the report as
// JSON.
//
// # Safety
// `agent` must be live; `json_out` a valid pointer.
enum NoughtsStatus noughts_agent_evaluate(const struct NoughtsAgent *agent,
                                          uint32_t games,
                                          uint64_t seed,
                                          char **json_out);

// # Safety
// `agent` must be null or come from [`noughts_agent_load`].
void noughts_agent_free(struct NoughtsAgent *agent);

// Opens a session; the agent's opening turns are available from
// [`noughts_session_events`]. The session keeps its own copies of both
// models.
//
// # Safety
// `perception` and `agent` must be live; `out` a valid pointer.
enum NoughtsStatus noughts_session_new(const struct NoughtsPerception *perception,
                                       const struct NoughtsAgent *agent,
                                       uint64_t seed,
                                       struct NoughtsSession **out);

// One raster tick for `cell` (0..8); writes `{committed, events}`.
//
// # Safety
// `session` must be live; `pixels` must point to `len` bytes.
enum NoughtsStatus noughts_session_submit_raster(struct NoughtsSession *session,
                                                 uint32_t cell,
                                                 const uint8_t *pixels,
                                                 uintptr_t len,
                                                 char **json_out);

// A typed user turn; pass NaN as `confidence` to sample it. Writes the
// emitted events as a JSON array.
//
// # Safety
// `session` must be live; `text` a nul-terminated string.
enum NoughtsStatus noughts_session_submit_utterance(struct NoughtsSession *session,
                                                    const char *text,
                                                    double confidence,
                                                    char **json_out);

// Writes `{session_id, board, turn, transcript_len, outcome, last_seq}`.
//
// # Safety
// `session` must be live; `json_out` a valid pointer.
enum NoughtsStatus noughts_session_snapshot(const struct NoughtsSession *session, char **json_out);

// Writes the events with sequence numbers above `after` as a JSON array.
//
// # Safety
// `session` must be live; `json_out` a valid pointer.
enum NoughtsStatus noughts_session_events(const struct NoughtsSession *session,
                                          uint64_t after,
                                          char **json_out);

// # Safety
// `session` must be null or come from [`noughts_session_new`].
void noughts_session_free(struct NoughtsSession *session);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NOUGHTS_H */
