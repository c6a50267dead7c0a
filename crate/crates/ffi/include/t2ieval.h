#ifndef T2IEVAL_H
#define T2IEVAL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every `t2i_*` call.
typedef enum T2iStatus {
  T2I_STATUS_OK = 0,
  T2I_STATUS_NULL_POINTER = 1,
  T2I_STATUS_INVALID_ARGUMENT = 2,
  T2I_STATUS_SHAPE_MISMATCH = 3,
  T2I_STATUS_NUMERICAL_ERROR = 4,
  T2I_STATUS_IO_ERROR = 5,
  T2I_STATUS_FORMAT_ERROR = 6,
  T2I_STATUS_PANIC = 7,
} T2iStatus;

// Gaussian statistics of a feature distribution.
typedef struct T2iStats T2iStats;

// Output of `t2i_compute_cmd`.
typedef struct T2iCmdReport {
  double dis_fr;
  double dis_fl;
  double dis_rl;
  double itdis;
  double cmd;
  // Set when the matching distance needed the ridge fallback.
  bool regularized_fr;
  bool regularized_fl;
  bool regularized_rl;
} T2iCmdReport;

// Recall percentages at K = 1, 5, 10, in that order.
typedef struct T2iRecall {
  double image_to_text[3];
  double text_to_image[3];
} T2iRecall;

// Copies the calling thread's last error message into `buf` (NUL
// terminated, truncated to `len`). Returns the untruncated message length
// plus one; the message is empty after a successful call.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t t2i_last_error_message(char *buf, size_t len);

// NUL-terminated library version; static storage.
const char *t2i_version(void);

// Estimates statistics of `rows × dim` embeddings.
//
// # Safety
// `data` must point to `rows * dim` doubles; `out` must be writable.
enum T2iStatus t2i_stats_estimate(const double *data,
                                  size_t rows,
                                  size_t dim,
                                  struct T2iStats **out);

// Builds statistics from a mean of length `dim` and a `dim × dim`
// covariance.
//
// # Safety
// `mean` and `cov` must point to `dim` and `dim * dim` doubles.
enum T2iStatus t2i_stats_from_parts(uint64_t n,
                                    const double *mean,
                                    const double *cov,
                                    size_t dim,
                                    struct T2iStats **out);

// Reads a `.stats` file.
//
// # Safety
// `file` must be a NUL-terminated string; `out` must be writable.
enum T2iStatus t2i_stats_load(const char *file, struct T2iStats **out);

// Writes a `.stats` file.
//
// # Safety
// `stats_handle` must be a live handle; `file` a NUL-terminated string.
enum T2iStatus t2i_stats_save(const struct T2iStats *stats_handle, const char *file);

// Statistics of the union of two disjoint sample sets.
//
// # Safety
// `a` and `b` must be live handles; `out` must be writable.
enum T2iStatus t2i_stats_merge(const struct T2iStats *a,
                               const struct T2iStats *b,
                               struct T2iStats **out);

// Releases a handle. Null is ignored.
//
// # Safety
// `stats` must be null or a handle not yet freed.
void t2i_stats_free(struct T2iStats *stats);

// Feature dimension, or 0 for a null handle.
//
// # Safety
// `stats` must be null or a live handle.
size_t t2i_stats_dim(const struct T2iStats *stats);

// Sample count, or 0 for a null handle.
//
// # Safety
// `stats` must be null or a live handle.
uint64_t t2i_stats_count(const struct T2iStats *stats);

// Copies the mean (`dim` doubles) and covariance (`dim * dim` doubles,
// row-major). Either output may be null to skip it.
//
// # Safety
// `stats_handle` must be a live handle; non-null outputs must have room
// for the sizes above.
enum T2iStatus t2i_stats_copy(const struct T2iStats *stats_handle, double *mean, double *cov);

// Fréchet distance between two Gaussians.
//
// # Safety
// `a` and `b` must be live handles; `out` must be writable.
enum T2iStatus t2i_frechet_distance(const struct T2iStats *a,
                                    const struct T2iStats *b,
                                    double *out);

// Cross Model Distance of generated (`f`), real (`r`) and text (`l`)
// statistics.
//
// # Safety
// The handles must be live; `out` must be writable.
enum T2iStatus t2i_compute_cmd(const struct T2iStats *f,
                               const struct T2iStats *r,
                               const struct T2iStats *l,
                               struct T2iCmdReport *out);

// Contrastive losses of an `m × m` score matrix (rows are images).
//
// # Safety
// `scores_data` must point to `m * m` doubles; `l1` and `l2` must be writable.
enum T2iStatus t2i_contrastive_loss(const double *scores_data,
                                    size_t m,
                                    double gamma,
                                    double *l1,
                                    double *l2);

// Recall@1/5/10 in both directions for an `m × m` score matrix whose
// diagonal holds the true pairs.
//
// # Safety
// `scores_data` must point to `m * m` doubles; `out` must be writable.
enum T2iStatus t2i_rank_retrieval(const double *scores_data, size_t m, struct T2iRecall *out);

// Principal square root of a symmetric PSD `d × d` matrix.
//
// # Safety
// `matrix` must point to `d * d` doubles and `out` to `d * d` writable
// doubles.
enum T2iStatus t2i_sqrtm_psd(const double *matrix, size_t d, double *out);

#endif  /* T2IEVAL_H */
