#ifndef RELAYNET_H
#define RELAYNET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum RelaynetStatus {
  RELAYNET_STATUS_OK = 0,
  RELAYNET_STATUS_NULL_POINTER = 1,
  RELAYNET_STATUS_INVALID_ARGUMENT = 2,
  RELAYNET_STATUS_CONFIG = 3,
  RELAYNET_STATUS_IO = 4,
  // A conic subproblem did not reach an optimal solution.
  RELAYNET_STATUS_SOLVER = 5,
  // Linear algebra or program construction failed.
  RELAYNET_STATUS_NUMERICAL = 6,
  // The library panicked; the handle arguments should be considered lost.
  RELAYNET_STATUS_PANIC = 7,
} RelaynetStatus;

typedef enum RelaynetMode {
  RELAYNET_MODE_ONE_WAY = 0,
  RELAYNET_MODE_TWO_WAY = 1,
} RelaynetMode;

typedef enum RelaynetAlgorithm {
  RELAYNET_ALGORITHM_ITERATIVE = 0,
  RELAYNET_ALGORITHM_SIMPLIFIED = 1,
  RELAYNET_ALGORITHM_NAF = 2,
} RelaynetAlgorithm;

// One channel realization drawn for a configuration.
typedef struct RelaynetChannels RelaynetChannels;

// System parameters: antenna counts, streams, power budgets, noise.
typedef struct RelaynetConfig RelaynetConfig;

// A transceiver design together with its per-user MSE.
typedef struct RelaynetDesign RelaynetDesign;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or an empty string after a
// successful one. The pointer stays valid until the next library call on the
// same thread.
const char *relaynet_last_error(void);

// Library version as a static NUL-terminated string.
const char *relaynet_version(void);

// Builds a configuration with identical pairs. Powers are in dB; both noise
// variances start at 1.
//
// # Safety
// `out` must be a valid pointer to writable storage for a handle.
enum RelaynetStatus relaynet_config_uniform(enum RelaynetMode mode,
                                            size_t pairs,
                                            size_t n_s,
                                            size_t n_r,
                                            size_t n_d,
                                            size_t n_b,
                                            double p_s_db,
                                            double p_r_db,
                                            struct RelaynetConfig **out);

// Reads a configuration file in the `key = value` format used by the CLI.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum RelaynetStatus relaynet_config_load(const char *path, struct RelaynetConfig **out);

// Sets every source budget to `p_s_db`.
//
// # Safety
// `cfg` must be a live handle from this library.
enum RelaynetStatus relaynet_config_set_source_power_db(struct RelaynetConfig *cfg, double p_s_db);

// Sets the relay and destination noise variances.
//
// # Safety
// `cfg` must be a live handle from this library.
enum RelaynetStatus relaynet_config_set_noise(struct RelaynetConfig *cfg,
                                              double sigma2_r,
                                              double sigma2_d);

// Number of receiving users: K one-way, 2K two-way.
//
// # Safety
// `cfg` must be a live handle; `out` must be writable.
enum RelaynetStatus relaynet_config_users(const struct RelaynetConfig *cfg, size_t *out);

// # Safety
// `cfg` must be null or a handle from this library not yet freed.
void relaynet_config_free(struct RelaynetConfig *cfg);

// Draws Rayleigh channels for `cfg`; the same seed gives the same channels.
//
// # Safety
// `cfg` must be a live handle; `out` must be writable.
enum RelaynetStatus relaynet_channels_generate(const struct RelaynetConfig *cfg,
                                               uint64_t seed,
                                               struct RelaynetChannels **out);

// # Safety
// `ch` must be null or a handle from this library not yet freed.
void relaynet_channels_free(struct RelaynetChannels *ch);

// Runs one design algorithm on one channel realization. The algorithm runs in
// the configuration's mode.
//
// # Safety
// `cfg` and `ch` must be live handles; `out` must be writable.
enum RelaynetStatus relaynet_design_compute(const struct RelaynetConfig *cfg,
                                            const struct RelaynetChannels *ch,
                                            enum RelaynetAlgorithm algorithm,
                                            struct RelaynetDesign **out);

// Copies the per-user MSE into `out`, which must hold at least as many
// entries as there are users.
//
// # Safety
// `design` must be a live handle; `out` must point to `len` writable values.
enum RelaynetStatus relaynet_design_user_mse(const struct RelaynetDesign *design,
                                             double *out,
                                             size_t len);

// Largest per-user MSE divided by that user's stream count.
//
// # Safety
// `design` must be a live handle; `out` must be writable.
enum RelaynetStatus relaynet_design_worst_nmse(const struct RelaynetDesign *design, double *out);

// Alternating passes (iterative), inner rounds (simplified) or 0 (NAF).
//
// # Safety
// `design` must be a live handle; `out` must be writable.
enum RelaynetStatus relaynet_design_iterations(const struct RelaynetDesign *design, size_t *out);

// Relay matrix shape.
//
// # Safety
// `design` must be a live handle; `rows` and `cols` must be writable.
enum RelaynetStatus relaynet_design_relay_shape(const struct RelaynetDesign *design,
                                                size_t *rows,
                                                size_t *cols);

// Copies the relay matrix in row-major order, real and imaginary parts in
// separate buffers of `len >= rows * cols` entries.
//
// # Safety
// `design` must be a live handle; `re` and `im` must each point to `len`
// writable values.
enum RelaynetStatus relaynet_design_relay_matrix(const struct RelaynetDesign *design,
                                                 double *re,
                                                 double *im,
                                                 size_t len);

// # Safety
// `design` must be null or a handle from this library not yet freed.
void relaynet_design_free(struct RelaynetDesign *design);

// Runs an NMSE sweep over `p_s_db` and returns the CSV text the CLI would
// write. `workers` = 0 uses one thread per core. Free the string with
// [`relaynet_string_free`].
//
// # Safety
// `cfg` must be a live handle; `algorithms` and `p_s_db` must point to
// `n_algorithms` and `n_points` values; `out_csv` must be writable.
enum RelaynetStatus relaynet_sweep_mse_csv(const struct RelaynetConfig *cfg,
                                           const enum RelaynetAlgorithm *algorithms,
                                           size_t n_algorithms,
                                           const double *p_s_db,
                                           size_t n_points,
                                           size_t trials,
                                           uint64_t seed,
                                           size_t workers,
                                           char **out_csv);

// # Safety
// `s` must be null or a string returned by this library not yet freed.
void relaynet_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RELAYNET_H */
