/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef AITV_H
#define AITV_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum AitvStatus {
  AITV_STATUS_OK = 0,
  AITV_STATUS_NULL_POINTER = 1,
  AITV_STATUS_INVALID_ARGUMENT = 2,
  AITV_STATUS_SHAPE_MISMATCH = 3,
  AITV_STATUS_SOLVER_FAILURE = 4,
  AITV_STATUS_IO_ERROR = 5,
  AITV_STATUS_BUFFER_TOO_SMALL = 6,
  AITV_STATUS_PANIC = 7,
} AitvStatus;

typedef enum AitvRegularizer {
  AITV_REGULARIZER_AITV = 0,
  AITV_REGULARIZER_TV = 1,
} AitvRegularizer;

// Opaque grayscale image.
typedef struct AitvImage AitvImage;

// Opaque solver output.
typedef struct AitvResult AitvResult;

// Plain-data mirror of the solver configuration.
typedef struct AitvSolverConfig {
  double lambda;
  double alpha;
  double beta0;
  double sigma;
  double epsilon;
  uint32_t max_iters;
  // One of the `AitvRegularizer` values.
  uint32_t regularizer;
  double beta_cap;
} AitvSolverConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or NULL. The pointer
// stays valid until the next failing call on the same thread.
const char *aitv_last_error_message(void);

// Static NUL-terminated version string.
const char *aitv_version(void);

// Fills `out` with the default configuration.
//
// # Safety
// `out` must be NULL or point to writable memory for one `AitvSolverConfig`.
enum AitvStatus aitv_solver_config_default(struct AitvSolverConfig *out);

// Copies `rows * cols` row-major values into a new image.
//
// # Safety
// `data` must point to `rows * cols` readable doubles; `out` must be writable.
enum AitvStatus aitv_image_new(size_t rows,
                               size_t cols,
                               const double *data,
                               struct AitvImage **out);

// Reads a grayscale PNG, binary PGM, or flat float file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum AitvStatus aitv_image_read(const char *path, struct AitvImage **out);

// Writes the image; `.png`/`.pgm` paths get an 8-bit preview scaled by
// `255 / dynamic_range`, other paths the flat float format.
//
// # Safety
// `image` must be a live handle and `path` a NUL-terminated string.
enum AitvStatus aitv_image_write(const struct AitvImage *image,
                                 const char *path,
                                 double dynamic_range);

// # Safety
// `image` must be NULL or a live handle.
size_t aitv_image_rows(const struct AitvImage *image);

// # Safety
// `image` must be NULL or a live handle.
size_t aitv_image_cols(const struct AitvImage *image);

// Copies the row-major pixels into `out`, which holds `len` doubles.
//
// # Safety
// `image` must be a live handle and `out` must have room for `len` doubles.
enum AitvStatus aitv_image_copy_data(const struct AitvImage *image, double *out, size_t len);

// # Safety
// `image` must be NULL or a handle not yet freed.
void aitv_image_free(struct AitvImage *image);

// # Safety
// `image` must be a live handle; `out` must be writable.
enum AitvStatus aitv_rescale_to_peak(const struct AitvImage *image,
                                     double peak,
                                     struct AitvImage **out);

// Independent Poisson draw per pixel with the pixel as mean; reproducible
// for a given `seed`.
//
// # Safety
// `mean` must be a live handle; `out` must be writable.
enum AitvStatus aitv_poisson_corrupt(const struct AitvImage *mean,
                                     uint64_t seed,
                                     struct AitvImage **out);

// Runs the ADMM solver on `noisy`. A NULL `config` selects the defaults.
//
// # Safety
// `noisy` must be a live handle, `config` NULL or valid, `out` writable.
enum AitvStatus aitv_denoise(const struct AitvImage *noisy,
                             const struct AitvSolverConfig *config,
                             struct AitvResult **out);

// Borrowed view of the denoised image, valid while `result` lives.
//
// # Safety
// `result` must be NULL or a live handle.
const struct AitvImage *aitv_result_image(const struct AitvResult *result);

// # Safety
// `result` must be NULL or a live handle.
size_t aitv_result_iterations(const struct AitvResult *result);

// # Safety
// `result` must be NULL or a live handle.
bool aitv_result_converged(const struct AitvResult *result);

// # Safety
// `result` must be NULL or a live handle.
double aitv_result_wall_time_seconds(const struct AitvResult *result);

// Copies the per-iteration relative change of `u`. Its length equals
// `aitv_result_iterations`.
//
// # Safety
// `result` must be a live handle and `out` must have room for `len` doubles.
enum AitvStatus aitv_result_copy_rel_change_history(const struct AitvResult *result,
                                                    double *out,
                                                    size_t len);

// # Safety
// `result` must be NULL or a handle not yet freed. Image views obtained from
// it become dangling.
void aitv_result_free(struct AitvResult *result);

// PSNR in dB; `+inf` for identical images.
//
// # Safety
// `u` and `reference` must be live handles; `out` must be writable.
enum AitvStatus aitv_psnr(const struct AitvImage *u,
                          const struct AitvImage *reference,
                          double dynamic_range,
                          double *out);

// Mean SSIM with an 11x11 Gaussian window.
//
// # Safety
// `u` and `reference` must be live handles; `out` must be writable.
enum AitvStatus aitv_ssim(const struct AitvImage *u,
                          const struct AitvImage *reference,
                          double dynamic_range,
                          double *out);

// Proximal map of `||.||_1 - alpha ||.||_2` with step `beta` on a vector of
// length `n`. `x` and `out` may alias.
//
// # Safety
// `x` and `out` must each point to `n` doubles.
enum AitvStatus aitv_prox_l1_minus_l2(const double *x,
                                      size_t n,
                                      double alpha,
                                      double beta,
                                      double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AITV_H */
