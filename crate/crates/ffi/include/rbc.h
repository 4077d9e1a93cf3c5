#ifndef RBC_H
#define RBC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RbcError {
  RBC_ERROR_OK = 0,
  RBC_ERROR_NULL_POINTER = 1,
  RBC_ERROR_INVALID_UTF8 = 2,
  RBC_ERROR_INVALID_CONFIG = 3,
  RBC_ERROR_SIMULATION = 4,
  RBC_ERROR_PARSE = 5,
  RBC_ERROR_OUT_OF_RANGE = 6,
  RBC_ERROR_PANIC = 7,
} RbcError;

typedef enum RbcStatus {
  RBC_STATUS_SUSTAINED = 0,
  RBC_STATUS_UNVEILED = 1,
  RBC_STATUS_ABORTED = 2,
} RbcStatus;

/**
 * A finished session.
 */
typedef struct RbcSession RbcSession;

/**
 * A parsed transcript.
 */
typedef struct RbcTranscript RbcTranscript;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *rbc_last_error(void);

/**
 * Runs a session described by `config` (flat `key = value` text, may be
 * empty for the defaults) with Alice committing `bit`.
 *
 * # Safety
 * `config` must be a NUL-terminated string and `out` a writable pointer.
 */
enum RbcError rbc_session_run(const char *config, uint8_t bit, struct RbcSession **out);

/**
 * # Safety
 * `session` must come from [`rbc_session_run`] and not be freed yet.
 */
enum RbcError rbc_session_status(const struct RbcSession *session,
                                 enum RbcStatus *status,
                                 uint8_t *bit);

/**
 * Transcript text of `session`; free it with [`rbc_string_free`].
 *
 * # Safety
 * `session` must be live and `out` writable.
 */
enum RbcError rbc_session_transcript(const struct RbcSession *session, char **out);

/**
 * # Safety
 * `session` must come from [`rbc_session_run`] or be null.
 */
void rbc_session_free(struct RbcSession *session);

/**
 * # Safety
 * `text` must be NUL-terminated and `out` writable.
 */
enum RbcError rbc_transcript_parse(const char *text, struct RbcTranscript **out);

/**
 * Offline verification; `clean` is set to 1 when the transcript has no
 * causality violation, no failed check and no rejected unveiling.
 *
 * # Safety
 * `transcript` must be live; output pointers writable, `bit` may be null.
 */
enum RbcError rbc_transcript_verify(const struct RbcTranscript *transcript,
                                    uint8_t *clean,
                                    enum RbcStatus *status,
                                    uint8_t *bit);

/**
 * # Safety
 * `transcript` must come from [`rbc_transcript_parse`] or be null.
 */
void rbc_transcript_free(struct RbcTranscript *transcript);

/**
 * # Safety
 * `s` must come from this library or be null.
 */
void rbc_string_free(char *s);

/**
 * Success bound of the flip strategy for even `m`.
 *
 * # Safety
 * `out` must be writable.
 */
enum RbcError rbc_cheat_bound(uint64_t m, double *out);

/**
 * Exact bits per round at each site.
 *
 * # Safety
 * `site1` and `site2` must be writable.
 */
enum RbcError rbc_round_bits(uint64_t m, uint64_t digits, uint64_t *site1, uint64_t *site2);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* RBC_H */
