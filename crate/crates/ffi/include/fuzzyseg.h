#ifndef FUZZYSEG_H
#define FUZZYSEG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FsAlgorithm {
  FS_ALGORITHM_FCM = 0,
  FS_ALGORITHM_MFCM = 1,
  FS_ALGORITHM_PCM = 2,
  FS_ALGORITHM_FPCM = 3,
} FsAlgorithm;

typedef enum FsStatus {
  FS_STATUS_OK = 0,
  FS_STATUS_INVALID_ARGUMENT = 1,
  FS_STATUS_SOLVER_ERROR = 2,
  FS_STATUS_IO_ERROR = 3,
  FS_STATUS_NULL_POINTER = 4,
  FS_STATUS_PANIC = 5,
} FsStatus;

// Grayscale image with intensities in `[0, 1]`.
typedef struct FsImage FsImage;

// Outcome of `fs_segment`.
typedef struct FsResult FsResult;

// Run parameters; start from `fs_params_default()` and override fields.
typedef struct FsParams {
  enum FsAlgorithm algorithm;
  uint32_t clusters;
  double m;
  double eta_exp;
  double epsilon;
  uint32_t max_iter;
  uint64_t seed;
  double lambda;
  uint32_t r_l;
  uint32_t r_s;
  uint32_t r_p;
  double h;
  double k;
} FsParams;

// Percent indices plus the confusion counts.
typedef struct FsEvalReport {
  double similarity;
  double false_positive_ratio;
  double false_negative_ratio;
  uint64_t tp;
  uint64_t fp;
  uint64_t fn_;
  uint64_t tn;
} FsEvalReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

struct FsParams fs_params_default(void);

// Message of the last failed call on this thread, or NULL. The pointer stays
// valid until the next failing call on the same thread.
const char *fs_last_error_message(void);

// Copies `width * height` row-major intensities into a new image.
//
// # Safety
// `intensities` must point to `width * height` readable doubles and `out`
// must be a valid pointer to write the handle to.
enum FsStatus fs_image_new(size_t width,
                           size_t height,
                           const double *intensities,
                           struct FsImage **out);

// Reads a P5 PGM or 8-bit grayscale PNG.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum FsStatus fs_image_read(const char *path, struct FsImage **out);

// # Safety
// `image` must be NULL or a handle from `fs_image_new`/`fs_image_read` not yet freed.
void fs_image_free(struct FsImage *image);

// # Safety
// `image` must be a live image handle.
size_t fs_image_width(const struct FsImage *image);

// # Safety
// `image` must be a live image handle.
size_t fs_image_height(const struct FsImage *image);

// Segments `image`; on success `*out` receives a result handle.
//
// # Safety
// `image` must be a live image handle, `params` a valid pointer, `out` writable.
enum FsStatus fs_segment(const struct FsImage *image,
                         const struct FsParams *params,
                         struct FsResult **out);

// # Safety
// `result` must be NULL or a handle from `fs_segment` not yet freed.
void fs_result_free(struct FsResult *result);

// # Safety
// `result` must be a live result handle.
size_t fs_result_clusters(const struct FsResult *result);

// # Safety
// `result` must be a live result handle.
size_t fs_result_points(const struct FsResult *result);

// # Safety
// `result` must be a live result handle.
size_t fs_result_iterations(const struct FsResult *result);

// # Safety
// `result` must be a live result handle.
bool fs_result_converged(const struct FsResult *result);

// Final objective value, NaN when unavailable.
//
// # Safety
// `result` must be a live result handle.
double fs_result_objective(const struct FsResult *result);

// Copies the per-pixel labels; `len` must equal `fs_result_points`.
//
// # Safety
// `result` must be a live result handle and `out` must hold `len` u32 values.
enum FsStatus fs_result_labels(const struct FsResult *result, uint32_t *out, size_t len);

// Copies the `clusters × points` membership matrix, row-major.
//
// # Safety
// `result` must be a live result handle and `out` must hold `len` doubles.
enum FsStatus fs_result_membership(const struct FsResult *result, double *out, size_t len);

// Scores a binary segmentation against a reference; nonzero bytes are object.
//
// # Safety
// `seg` and `gt` must each hold `width * height` bytes and `out` must be writable.
enum FsStatus fs_evaluate(const uint8_t *seg,
                          const uint8_t *gt,
                          size_t width,
                          size_t height,
                          struct FsEvalReport *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FUZZYSEG_H */
