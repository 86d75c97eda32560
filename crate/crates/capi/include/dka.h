/* C ABI for the deep-kernel asymptotics library. */

#ifndef DKA_H
#define DKA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Centering selector for sampling.
 */
typedef enum DkaCentering {
  DKA_CENTERING_NORTH_POLE = 0,
  DKA_CENTERING_SPHERICAL_AVERAGE = 1,
} DkaCentering;

/**
 * Regime tags mirrored as plain integers.
 */
typedef enum DkaRegime {
  DKA_REGIME_LOW_DISORDER = 0,
  DKA_REGIME_SPARSE = 1,
  DKA_REGIME_HIGH_DISORDER = 2,
} DkaRegime;

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum DkaStatus {
  DKA_STATUS_OK = 0,
  /**
   * A parameter lies outside its admissible domain.
   */
  DKA_STATUS_INVALID_ARGUMENT = 1,
  /**
   * Numeric evaluation failed.
   */
  DKA_STATUS_NUMERIC_ERROR = 2,
  /**
   * The operation is undefined in the kernel's regime.
   */
  DKA_STATUS_REGIME_ERROR = 3,
  /**
   * A required pointer was null.
   */
  DKA_STATUS_NULL_POINTER = 4,
  /**
   * Internal panic caught at the boundary.
   */
  DKA_STATUS_PANIC = 5,
} DkaStatus;

/**
 * Opaque point-configuration handle.
 */
typedef struct DkaConfig DkaConfig;

/**
 * Opaque kernel handle.
 */
typedef struct DkaKernel DkaKernel;

/**
 * Opaque rate-model handle (limit covariance matrix + decomposition).
 */
typedef struct DkaRateModel DkaRateModel;

/**
 * Flattened regime report.
 *
 * `has_fit`, `has_h`, `has_t_star` gate the validity of the corresponding
 * value fields; `symmetry_is_pair` is 1 when the unit set is {-1, 1}.
 */
typedef struct DkaRegimeInfo {
  double kprime1;
  enum DkaRegime regime;
  int32_t symmetry_is_pair;
  int32_t has_fit;
  double c;
  double rho;
  double fit_r_squared;
  int32_t has_h;
  double h;
  int32_t has_t_star;
  double t_star;
} DkaRegimeInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message into `buf` (NUL-terminated, truncated to
 * `len`). Returns the full message length in bytes, excluding the NUL.
 */
size_t dka_last_error_message(char *buf, size_t len);

/**
 * Library version string length copy, mirroring `dka_last_error_message`.
 */
size_t dka_version(char *buf, size_t len);

/**
 * Arc-cosine (ReLU) kernel.
 */
enum DkaStatus dka_kernel_relu(struct DkaKernel **out);

/**
 * Exponential-family kernel sqrt(gamma / (gamma + 1 - t^2)).
 */
enum DkaStatus dka_kernel_exponential(double gamma, struct DkaKernel **out);

/**
 * Identity kernel.
 */
enum DkaStatus dka_kernel_linear(struct DkaKernel **out);

/**
 * Kernel from nonnegative power-series coefficients (renormalized).
 */
enum DkaStatus dka_kernel_hermite(const double *coeffs, size_t len, struct DkaKernel **out);

/**
 * Release a kernel handle.
 */
void dka_kernel_free(struct DkaKernel *kernel);

/**
 * Evaluate kappa(t).
 */
enum DkaStatus dka_kernel_eval(const struct DkaKernel *kernel, double t, double *out);

/**
 * Evaluate the depth-L composition kappa_L(t).
 */
enum DkaStatus dka_kernel_iterate(const struct DkaKernel *kernel,
                                  double t,
                                  uint64_t depth,
                                  double *out);

/**
 * kappa'(1).
 */
enum DkaStatus dka_kernel_derivative_at_one(const struct DkaKernel *kernel, double *out);

/**
 * Classify the kernel's regime and flatten the report.
 */
enum DkaStatus dka_classify(const struct DkaKernel *kernel, struct DkaRegimeInfo *out);

/**
 * Point configuration from row-major coordinates (m rows of dim+1 each);
 * rows are normalized onto the sphere.
 */
enum DkaStatus dka_config_new(size_t dim, const double *coords, size_t m, struct DkaConfig **out);

/**
 * m i.i.d. uniform points on S^dim, deterministic in the seed.
 */
enum DkaStatus dka_config_uniform(size_t dim, size_t m, uint64_t seed, struct DkaConfig **out);

/**
 * Release a configuration handle.
 */
void dka_config_free(struct DkaConfig *config);

/**
 * Number of points.
 */
enum DkaStatus dka_config_len(const struct DkaConfig *config, size_t *out);

/**
 * Copy the m x m Gram matrix (row-major) into `out`.
 */
enum DkaStatus dka_config_gram(const struct DkaConfig *config, double *out);

/**
 * Limit covariance matrix of the North-Pole-centered sequence at the
 * configuration. Fails in the high-disorder regime.
 */
enum DkaStatus dka_rate_model_b1(const struct DkaKernel *kernel,
                                 const struct DkaConfig *config,
                                 struct DkaRateModel **out);

/**
 * Limit covariance matrix of the spherical-average-centered sequence.
 */
enum DkaStatus dka_rate_model_b2(const struct DkaKernel *kernel,
                                 const struct DkaConfig *config,
                                 struct DkaRateModel **out);

/**
 * Release a rate-model handle.
 */
void dka_rate_model_free(struct DkaRateModel *model);

/**
 * Copy the m x m limit matrix (row-major) into `out`.
 */
enum DkaStatus dka_rate_model_matrix(const struct DkaRateModel *model, double *out);

/**
 * Quadratic-form rate value at `y` (length m). `finite` is 0 when the
 * argument leaves the range of the matrix, in which case `value` is +inf.
 */
enum DkaStatus dka_rate_eval(const struct DkaRateModel *model,
                             const double *y,
                             size_t len,
                             double *value,
                             int32_t *finite);

/**
 * Draw n exact joint Gaussian samples of the centered field at depth
 * `depth` into `out` (row-major n x m). Deterministic in the seed.
 */
enum DkaStatus dka_sample(const struct DkaKernel *kernel,
                          const struct DkaConfig *config,
                          uint64_t depth,
                          enum DkaCentering centering,
                          size_t n,
                          uint64_t seed,
                          double *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* DKA_H */
