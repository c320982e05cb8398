#ifndef LEL_H
#define LEL_H

#include <stdbool.h>
#include <stddef.h>

typedef enum {
  LEL_STATUS_OK = 0,
  LEL_STATUS_NULL_POINTER = 1,
  LEL_STATUS_INVALID_ARGUMENT = 2,
  LEL_STATUS_VALIDATION = 3,
  LEL_STATUS_NUMERICAL = 4,
  LEL_STATUS_PANIC = 5,
} LelStatus;

/**
 * Opaque generator handle.
 */
typedef struct LelGenerator LelGenerator;

/**
 * Opaque trajectory handle.
 */
typedef struct LelTrajectory LelTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Loads `builtin:<name>[?query]` or a JSON generator file.
 *
 * # Safety
 * `spec` must be a NUL-terminated string; `handle` must be writable.
 */
LelStatus lel_generator_load(const char *spec, LelGenerator **handle);

/**
 * Parses generator JSON text; CSV references resolve against the working directory.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `handle` must be writable.
 */
LelStatus lel_generator_from_json(const char *json, LelGenerator **handle);

/**
 * # Safety
 * `handle` must come from a `lel_generator_*` constructor or be null.
 */
void lel_generator_free(LelGenerator *handle);

/**
 * # Safety
 * Pointers must be valid.
 */
LelStatus lel_generator_dim(const LelGenerator *g, size_t *dim);

/**
 * # Safety
 * Pointers must be valid; `sigma` holds 2n² doubles.
 */
LelStatus lel_generator_stationary(const LelGenerator *g, double *sigma);

/**
 * # Safety
 * Pointers must be valid.
 */
LelStatus lel_spectral_gap(const LelGenerator *g, double *gap);

/**
 * # Safety
 * Pointers must be valid.
 */
LelStatus lel_check_primitive(const LelGenerator *g, bool *primitive);

/**
 * Raw trace-norm residual of sandwiched Rényi detailed balance at `alpha`.
 *
 * # Safety
 * Pointers must be valid.
 */
LelStatus lel_srd_residual(const LelGenerator *g, double alpha, double *residual);

/**
 * # Safety
 * Pointers must be valid.
 */
LelStatus lel_kms_residual(const LelGenerator *g, double *residual);

/**
 * # Safety
 * Pointers must be valid.
 */
LelStatus lel_gns_residual(const LelGenerator *g, double *residual);

/**
 * D̃_α(ρ‖σ) for finite α > 0.
 *
 * # Safety
 * `rho` and `sigma` hold 2n² doubles; `value` must be writable.
 */
LelStatus lel_sandwiched_renyi(size_t n,
                               const double *rho,
                               const double *sigma,
                               double alpha,
                               double *value);

/**
 * Rényi Fisher information of `rho` relative to the generator's stationary state.
 *
 * # Safety
 * `rho` holds 2n² doubles for the generator dimension n; pointers must be valid.
 */
LelStatus lel_fisher_information(const LelGenerator *g,
                                 const double *rho,
                                 double alpha,
                                 double *value);

/**
 * Relative residual of L†ρ against the metric gradient of D̃_α.
 *
 * # Safety
 * `rho` holds 2n² doubles for the generator dimension n; pointers must be valid.
 */
LelStatus lel_gradient_flow_residual(const LelGenerator *g,
                                     const double *rho,
                                     double alpha,
                                     double *residual);

/**
 * Integrates ρ̇ = L†ρ to `t_end`. `dt ≤ 0` picks a step automatically;
 * every `record_every`-th state is kept (0 is treated as 1).
 *
 * # Safety
 * `rho0` holds 2n² doubles for the generator dimension n; pointers must be valid.
 */
LelStatus lel_trajectory_new(const LelGenerator *g,
                             const double *rho0,
                             double t_end,
                             double dt,
                             size_t record_every,
                             LelTrajectory **handle);

/**
 * # Safety
 * `handle` must come from `lel_trajectory_new` or be null.
 */
void lel_trajectory_free(LelTrajectory *handle);

/**
 * # Safety
 * Pointers must be valid.
 */
LelStatus lel_trajectory_len(const LelTrajectory *t, size_t *len);

/**
 * # Safety
 * Pointers must be valid.
 */
LelStatus lel_trajectory_time(const LelTrajectory *t, size_t i, double *time);

/**
 * # Safety
 * `state` holds 2n² doubles; pointers must be valid.
 */
LelStatus lel_trajectory_state(const LelTrajectory *t, size_t i, double *state);

/**
 * Message for the last failing call on this thread; valid until the next failing call.
 */
const char *lel_last_error_message(void);

const char *lel_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LEL_H */
