#ifndef RHSIM_H
#define RHSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RhsimIntegrator {
  RHSIM_INTEGRATOR_EXPLICIT_EULER = 0,
  RHSIM_INTEGRATOR_SYMPLECTIC_EULER = 1,
  RHSIM_INTEGRATOR_EXPLICIT_MIDPOINT = 2,
  RHSIM_INTEGRATOR_RK4 = 3,
  RHSIM_INTEGRATOR_RK6 = 4,
} RhsimIntegrator;

/**
 * Result code of every exported function.
 */
typedef enum RhsimStatus {
  RHSIM_STATUS_OK = 0,
  RHSIM_STATUS_NULL_POINTER = 1,
  RHSIM_STATUS_INVALID_ARGUMENT = 2,
  RHSIM_STATUS_PARSE_ERROR = 3,
  RHSIM_STATUS_MODEL_ERROR = 4,
  RHSIM_STATUS_DYNAMICS_ERROR = 5,
  RHSIM_STATUS_INTEGRATION_ERROR = 6,
  RHSIM_STATUS_PANIC = 7,
} RhsimStatus;

/**
 * A built kinematic tree.
 */
typedef struct RhsimModel RhsimModel;

/**
 * A running simulation with its own state and joint commands.
 */
typedef struct RhsimSim RhsimSim;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parse a `.robot` document and build its kinematic tree.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer. On
 * success `*out` receives a handle to release with [`rhsim_model_free`].
 */
enum RhsimStatus rhsim_model_from_robot_text(const char *text, struct RhsimModel **out);

/**
 * # Safety
 * `model` must be null or a handle from [`rhsim_model_from_robot_text`]
 * not already freed.
 */
void rhsim_model_free(struct RhsimModel *model);

/**
 * Number of generalized coordinates, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live model handle.
 */
size_t rhsim_model_dof(const struct RhsimModel *model);

/**
 * Joint accelerations `qdd` from `q`, `qd` and joint forces `tau`, under
 * gravity of magnitude `g` along −z.
 *
 * # Safety
 * `model` must be live; the vectors must each hold `dof` doubles.
 */
enum RhsimStatus rhsim_forward_dynamics(const struct RhsimModel *model,
                                        const double *q,
                                        const double *qd,
                                        const double *tau,
                                        double g,
                                        double *out_qdd);

/**
 * Joint forces `tau` that produce accelerations `qdd`.
 *
 * # Safety
 * As for [`rhsim_forward_dynamics`].
 */
enum RhsimStatus rhsim_inverse_dynamics(const struct RhsimModel *model,
                                        const double *q,
                                        const double *qd,
                                        const double *qdd,
                                        double g,
                                        double *out_tau);

/**
 * Joint-space inertia matrix at `q`, written row-major into `out_h`.
 *
 * # Safety
 * `q` must hold `dof` doubles and `out_h` room for `dof * dof`.
 */
enum RhsimStatus rhsim_mass_matrix(const struct RhsimModel *model, const double *q, double *out_h);

/**
 * Start a simulation at rest at `q = 0`. `dt` is the frame length and
 * each frame takes `substeps` integrator steps. Actuation gains are the
 * engine defaults for gravity `g`.
 *
 * # Safety
 * `model` must be live and `out` valid. The simulator keeps its own
 * reference to the model, so the model may be freed first.
 */
enum RhsimStatus rhsim_sim_new(const struct RhsimModel *model,
                               enum RhsimIntegrator integrator,
                               double dt,
                               size_t substeps,
                               double g,
                               struct RhsimSim **out);

/**
 * # Safety
 * `sim` must be null or a live handle from [`rhsim_sim_new`].
 */
void rhsim_sim_free(struct RhsimSim *sim);

/**
 * Hold joint `joint` at command `value`, clamped to [−1, 1], until changed.
 *
 * # Safety
 * `sim` must be live.
 */
enum RhsimStatus rhsim_sim_set_command(struct RhsimSim *sim, size_t joint, double value);

/**
 * Advance one frame. On failure the state is the last finite one.
 *
 * # Safety
 * `sim` must be live.
 */
enum RhsimStatus rhsim_sim_step(struct RhsimSim *sim);

/**
 * Copy out the current time and coordinates. Any output may be null.
 *
 * # Safety
 * `sim` must be live; non-null `out_q` and `out_qd` must hold `dof` doubles.
 */
enum RhsimStatus rhsim_sim_state(const struct RhsimSim *sim,
                                 double *out_t,
                                 double *out_q,
                                 double *out_qd);

/**
 * Total mechanical energy of the current state, potential measured from z = 0.
 *
 * # Safety
 * `sim` must be live and `out_e` valid.
 */
enum RhsimStatus rhsim_sim_energy(const struct RhsimSim *sim, double *out_e);

/**
 * Message for the last failed call on this thread, or null after a
 * success. Valid until the next call into this library on the same thread.
 */
const char *rhsim_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RHSIM_H */
