#ifndef TROTLAB_H
#define TROTLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Number of generalized coordinates in `trotlab_env_state`.
#define TROTLAB_NUM_DOF 11

// Observation length of the direct and structured policies.
#define TROTLAB_OBSERVATION_DIM 26

// Result of every call.
typedef enum TrotlabStatus {
  TROTLAB_STATUS_OK = 0,
  TROTLAB_STATUS_NULL_POINTER = 1,
  TROTLAB_STATUS_INVALID_ARGUMENT = 2,
  TROTLAB_STATUS_DIMENSION_MISMATCH = 3,
  TROTLAB_STATUS_NON_FINITE_STATE = 4,
  TROTLAB_STATUS_IO = 5,
  TROTLAB_STATUS_PARSE = 6,
  TROTLAB_STATUS_CONFIG = 7,
  TROTLAB_STATUS_PANIC = 8,
} TrotlabStatus;

// Simulated robot with its episode clock and random stream.
typedef struct TrotlabEnv TrotlabEnv;

// Trained policy loaded from a checkpoint file.
typedef struct TrotlabPolicy TrotlabPolicy;

// Outcome of one control step.
typedef struct TrotlabStep {
  double reward;
  double com_velocity;
  // Summed mean mechanical power of the joints (W).
  double power;
  bool terminated;
  bool truncated;
  bool failure;
} TrotlabStep;

// Pose and velocity summary of the body.
typedef struct TrotlabBodyState {
  double time;
  double x;
  double height;
  double pitch;
  double forward_velocity;
} TrotlabBodyState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the message of the last failed call on this thread into `buf`,
// NUL-terminated and truncated to `len` bytes. Returns the full message
// length excluding the terminator.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t trotlab_last_error(char *buf, size_t len);

// Action length of a policy kind (0 direct, 1 structured, 2 highly
// structured), or 0 for an unknown kind.
size_t trotlab_action_dim(uint8_t kind);

// Creates an environment for `kind` with the default configuration and
// resets it with a desired speed drawn from `seed`.
//
// # Safety
// `out` must be a valid pointer.
enum TrotlabStatus trotlab_env_new(uint8_t kind, uint64_t seed, struct TrotlabEnv **out);

// Like [`trotlab_env_new`] with the configuration read from a TOML file.
//
// # Safety
// `config_path` must be a NUL-terminated string and `out` a valid pointer.
enum TrotlabStatus trotlab_env_from_config(const char *config_path,
                                           uint8_t kind,
                                           uint64_t seed,
                                           struct TrotlabEnv **out);

// # Safety
// `env` must be null or a handle from this library not yet freed.
void trotlab_env_free(struct TrotlabEnv *env);

// Restarts the episode at desired speed `v_d` with a fresh initial perturbation.
//
// # Safety
// `env` must be a live handle.
enum TrotlabStatus trotlab_env_reset(struct TrotlabEnv *env, double v_d);

// Changes the desired speed without resetting.
//
// # Safety
// `env` must be a live handle.
enum TrotlabStatus trotlab_env_set_desired_velocity(struct TrotlabEnv *env, double v_d);

// Advances one control step with a normalized action in `[-1, 1]` and a
// horizontal force `fx` (N) on the body.
//
// # Safety
// `env` must be a live handle, `action` must point to `len` doubles and
// `out` must be null or valid.
enum TrotlabStatus trotlab_env_step(struct TrotlabEnv *env,
                                    const double *action,
                                    size_t len,
                                    double fx,
                                    struct TrotlabStep *out);

// Writes the current observation (`TROTLAB_OBSERVATION_DIM` values).
//
// # Safety
// `env` must be a live handle and `obs` must point to `len` doubles.
enum TrotlabStatus trotlab_env_observation(const struct TrotlabEnv *env, double *obs, size_t len);

// Writes the generalized positions and velocities (`TROTLAB_NUM_DOF` each).
//
// # Safety
// `env` must be a live handle; `q` and `qdot` must each point to `len` doubles.
enum TrotlabStatus trotlab_env_state(const struct TrotlabEnv *env,
                                     double *q,
                                     double *qdot,
                                     size_t len);

// # Safety
// `env` must be a live handle and `out` valid.
enum TrotlabStatus trotlab_env_body(const struct TrotlabEnv *env, struct TrotlabBodyState *out);

// Loads a checkpoint written by the trainer.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum TrotlabStatus trotlab_policy_load(const char *path, struct TrotlabPolicy **out);

// # Safety
// `policy` must be null or a handle from this library not yet freed.
void trotlab_policy_free(struct TrotlabPolicy *policy);

// Policy kind code of a loaded checkpoint, or 255 for a null handle.
//
// # Safety
// `policy` must be null or a live handle.
uint8_t trotlab_policy_kind(const struct TrotlabPolicy *policy);

// Creates an environment with the checkpoint's own configuration.
//
// # Safety
// `policy` must be a live handle and `out` a valid pointer.
enum TrotlabStatus trotlab_policy_env_new(const struct TrotlabPolicy *policy,
                                          uint64_t seed,
                                          struct TrotlabEnv **out);

// Writes the policy's noise-free action for the environment's current state.
//
// # Safety
// `policy` and `env` must be live handles and `action` must point to `len` doubles.
enum TrotlabStatus trotlab_policy_act(const struct TrotlabPolicy *policy,
                                      const struct TrotlabEnv *env,
                                      double *action,
                                      size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TROTLAB_H */
