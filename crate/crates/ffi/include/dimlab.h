#ifndef DIMLAB_H
#define DIMLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DimlabStatus {
  DIMLAB_STATUS_OK = 0,
  DIMLAB_STATUS_NULL_POINTER = 1,
  DIMLAB_STATUS_INVALID_ARGUMENT = 2,
  DIMLAB_STATUS_IO = 3,
  DIMLAB_STATUS_GENERATOR = 4,
  DIMLAB_STATUS_CODEC = 5,
  DIMLAB_STATUS_DIMENSION = 6,
  DIMLAB_STATUS_EXTRACT = 7,
  DIMLAB_STATUS_BUFFER_TOO_SMALL = 8,
  DIMLAB_STATUS_PANIC = 9,
} DimlabStatus;

// Per-block record lengths from a decode.
typedef struct DimlabDecodeTrace DimlabDecodeTrace;

// A complexity estimator.
typedef struct DimlabOracle DimlabOracle;

// A finite bit sequence.
typedef struct DimlabSequence DimlabSequence;

// An exact ratio `numerator / denominator` with a positive denominator.
typedef struct DimlabRational {
  int64_t numerator;
  int64_t denominator;
} DimlabRational;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or null. Valid
// until the next failing call on the same thread.
const char *dimlab_last_error(void);

// Library version as a static NUL-terminated string.
const char *dimlab_version(void);

// Builds a sequence from `len` bytes, each 0 or 1.
//
// # Safety
// `bits` must point to `len` readable bytes (or be null when `len` is 0).
enum DimlabStatus dimlab_sequence_from_bits(const uint8_t *bits,
                                            size_t len,
                                            struct DimlabSequence **out);

// Generates `n` bits from a JSON generator spec such as
// `{"kind":"dilute","alpha":"1/2","seed":7}`.
//
// # Safety
// `spec_json` must be a NUL-terminated string; `out` must be writable.
enum DimlabStatus dimlab_sequence_generate(const char *spec_json,
                                           uint64_t n,
                                           struct DimlabSequence **out);

// Reads a `.seq` file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum DimlabStatus dimlab_sequence_read(const char *path, struct DimlabSequence **out);

// Writes a `.seq` file.
//
// # Safety
// `seq` must be a live handle and `path` a NUL-terminated string.
enum DimlabStatus dimlab_sequence_write(const struct DimlabSequence *seq, const char *path);

// Number of bits in `seq`; 0 for null.
//
// # Safety
// `seq` must be null or a live handle.
uint64_t dimlab_sequence_len(const struct DimlabSequence *seq);

// Copies the bits of `seq` into `buf` as 0/1 bytes. Fails with
// `BUFFER_TOO_SMALL` when `cap` is less than the length.
//
// # Safety
// `buf` must point to `cap` writable bytes.
enum DimlabStatus dimlab_sequence_copy_bits(const struct DimlabSequence *seq,
                                            uint8_t *buf,
                                            size_t cap);

// # Safety
// `seq` must be null or a handle not yet freed.
void dimlab_sequence_free(struct DimlabSequence *seq);

// The compressor proxy with default settings.
struct DimlabOracle *dimlab_oracle_proxy(void);

// Exact search over the toy machine, capped at `max_program_len` bits and
// `budget` steps per query.
struct DimlabOracle *dimlab_oracle_exact(uint64_t max_program_len, uint64_t budget);

// # Safety
// `oracle` must be null or a handle not yet freed.
void dimlab_oracle_free(struct DimlabOracle *oracle);

// Complexity estimate of the first `n` bits of `seq`. A null `oracle`
// selects the proxy. `confirmed` (optional) is set to 0 when the value
// is only an upper bound.
//
// # Safety
// Handles must be live; `bits` must be writable; `confirmed` may be null.
enum DimlabStatus dimlab_complexity(const struct DimlabSequence *seq,
                                    uint64_t n,
                                    const struct DimlabOracle *oracle,
                                    uint64_t *bits,
                                    uint8_t *confirmed);

// Tail minimum and maximum of `C(S[0..n]) / n` over the geometric grid
// from `grid_start` with ratio `grid_ratio`, up to the sequence length.
// A `tail_start` of 0 selects the default.
//
// # Safety
// Handles must be live; `dim_h` and `dim_p` must be writable.
enum DimlabStatus dimlab_profile(const struct DimlabSequence *seq,
                                 const struct DimlabOracle *oracle,
                                 uint64_t grid_start,
                                 struct DimlabRational grid_ratio,
                                 uint64_t tail_start,
                                 struct DimlabRational *dim_h,
                                 struct DimlabRational *dim_p);

// Block-codes `seq` through the block holding bit `n - 1`. The sequence
// must contain every bit of that block.
//
// # Safety
// Handles must be live; `out` must be writable.
enum DimlabStatus dimlab_encode(const struct DimlabSequence *seq,
                                uint64_t n,
                                const struct DimlabOracle *oracle,
                                struct DimlabSequence **out);

// Decodes the first `n` bits from a record stream. `trace` is optional.
//
// # Safety
// Handles must be live; `out` must be writable; `trace` may be null.
enum DimlabStatus dimlab_decode(const struct DimlabSequence *records,
                                uint64_t n,
                                const struct DimlabOracle *oracle,
                                struct DimlabSequence **out,
                                struct DimlabDecodeTrace **trace);

// Record-stream bits read before output bit `m - 1` was known; 0 for
// `m = 0`.
//
// # Safety
// `trace` must be live and `usage` writable.
enum DimlabStatus dimlab_decode_trace_usage(const struct DimlabDecodeTrace *trace,
                                            uint64_t m,
                                            uint64_t *usage);

// Number of records in the trace.
//
// # Safety
// `trace` must be null or live.
uint64_t dimlab_decode_trace_blocks(const struct DimlabDecodeTrace *trace);

// # Safety
// `trace` must be null or a handle not yet freed.
void dimlab_decode_trace_free(struct DimlabDecodeTrace *trace);

// Runs the extractor on `seq` with loss `epsilon`, stopping once
// `target_n` source bits are covered. `overrides_json` (optional) holds
// parameter overrides; `report_json` (optional) receives the report,
// released with `dimlab_string_free`.
//
// # Safety
// Handles must be live; strings NUL-terminated; `out` writable.
enum DimlabStatus dimlab_extract(const struct DimlabSequence *seq,
                                 struct DimlabRational epsilon,
                                 uint64_t target_n,
                                 const struct DimlabOracle *oracle,
                                 const char *overrides_json,
                                 struct DimlabSequence **out,
                                 char **report_json);

// Releases a string returned by this library.
//
// # Safety
// `s` must be null or a string from this library not yet freed.
void dimlab_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DIMLAB_H */
