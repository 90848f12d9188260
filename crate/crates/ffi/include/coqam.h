#ifndef COQAM_H
#define COQAM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result codes.
 */
typedef enum CoqamStatus {
  COQAM_STATUS_OK = 0,
  COQAM_STATUS_NULL_POINTER = 1,
  COQAM_STATUS_INVALID_ARGUMENT = 2,
  COQAM_STATUS_DIMENSION_MISMATCH = 3,
  COQAM_STATUS_NUMERICAL = 4,
  COQAM_STATUS_PANIC = 5,
} CoqamStatus;

/*
 Orthogonality condition family.
 */
typedef enum CoqamFamily {
  COQAM_FAMILY_OQAM_OFDM = 0,
  COQAM_FAMILY_WCP_COQAM = 1,
} CoqamFamily;

/*
 Lattice parameters (opaque).
 */
typedef struct CoqamParams CoqamParams;

/*
 Prototype pulse (opaque).
 */
typedef struct CoqamPulse CoqamPulse;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread, or NULL. The pointer is
 valid until the next failing call on the same thread.
 */
const char *coqam_last_error(void);

/*
 Create lattice parameters with `k` subcarriers, `m` slots and a cyclic
 prefix of `cp_len` samples.

 # Safety
 `out` must be a valid pointer to writable storage for one handle.
 */
enum CoqamStatus coqam_params_new(size_t k, size_t m, size_t cp_len, struct CoqamParams **out);

/*
 Samples per frame, `N = K * M`; zero for a null handle.

 # Safety
 `params` must be null or a live handle.
 */
size_t coqam_params_n(const struct CoqamParams *params);

/*
 # Safety
 `params` must be null or a handle from `coqam_params_new` not yet freed.
 */
void coqam_params_free(struct CoqamParams *params);

/*
 Unit-energy Gaussian pulse with width parameter `beta`.

 # Safety
 `params` must be a live handle and `out` valid for one write.
 */
enum CoqamStatus coqam_pulse_gaussian(const struct CoqamParams *params,
                                      double beta,
                                      struct CoqamPulse **out);

/*
 Unit-energy raised-cosine pulse.

 # Safety
 `params` must be a live handle and `out` valid for one write.
 */
enum CoqamStatus coqam_pulse_raised_cosine(const struct CoqamParams *params,
                                           double rolloff,
                                           struct CoqamPulse **out);

/*
 Rectangular pulse over the first `K` samples.

 # Safety
 `params` must be a live handle and `out` valid for one write.
 */
enum CoqamStatus coqam_pulse_rectangular(const struct CoqamParams *params, struct CoqamPulse **out);

/*
 Pulse from `len` caller-supplied taps (copied).

 # Safety
 `taps` must point to `len` readable doubles and `out` be valid for one write.
 */
enum CoqamStatus coqam_pulse_from_taps(const double *taps, size_t len, struct CoqamPulse **out);

/*
 Orthogonalize `pulse` for the lattice; the result is a new handle.

 # Safety
 Handles must be live and `out` valid for one write.
 */
enum CoqamStatus coqam_pulse_orthogonalize(const struct CoqamParams *params,
                                           const struct CoqamPulse *pulse,
                                           struct CoqamPulse **out);

/*
 Number of taps; zero for a null handle.

 # Safety
 `pulse` must be null or a live handle.
 */
size_t coqam_pulse_len(const struct CoqamPulse *pulse);

/*
 Copy the taps into `buf`, which must hold exactly `coqam_pulse_len` values.

 # Safety
 `pulse` must be live and `buf` valid for `len` writes.
 */
enum CoqamStatus coqam_pulse_copy_taps(const struct CoqamPulse *pulse, double *buf, size_t len);

/*
 # Safety
 `pulse` must be null or a handle not yet freed.
 */
void coqam_pulse_free(struct CoqamPulse *pulse);

/*
 Evaluate one family of orthogonality conditions. Writes the largest
 residual and whether it is within `tol` (1 or 0).

 # Safety
 Handles must be live; the output pointers valid for one write each.
 */
enum CoqamStatus coqam_check(const struct CoqamParams *params,
                             const struct CoqamPulse *pulse,
                             enum CoqamFamily family,
                             double tol,
                             double *max_residual,
                             int *pass);

/*
 Synthesize one CP-free WCP-COQAM frame. `grid` holds `2 * N` real
 symbols (`K` rows of `2M` columns); `samples` receives `N` interleaved
 complex samples (`2 * N` doubles).

 # Safety
 `grid` must be readable for `grid_len` doubles and `samples` writable for
 `samples_len` doubles.
 */
enum CoqamStatus coqam_synth_wcp(const struct CoqamParams *params,
                                 const struct CoqamPulse *pulse,
                                 const double *grid,
                                 size_t grid_len,
                                 double *samples,
                                 size_t samples_len);

/*
 Matched-filter demodulation of `N` interleaved complex samples into a
 `K x 2M` real grid.

 # Safety
 `samples` must be readable for `samples_len` doubles and `grid` writable
 for `grid_len` doubles.
 */
enum CoqamStatus coqam_mf_receive_wcp(const struct CoqamParams *params,
                                      const struct CoqamPulse *pulse,
                                      const double *samples,
                                      size_t samples_len,
                                      double *grid,
                                      size_t grid_len);

/*
 Gray-coded QPSK symbol error rate over AWGN at `es_n0_db`.
 */
double coqam_theoretical_qpsk_ser(double es_n0_db);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COQAM_H */
