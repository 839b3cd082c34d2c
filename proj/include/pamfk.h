/* pamfk — discrete Feynman-Kac engine for the lattice parabolic Anderson
 * model driven by a fractional Brownian sheet.
 *
 * C API of the shared library. All functions return pamfk_status; outputs go
 * through pointers. A human-readable message for the last failure on the
 * calling thread is available via pamfk_last_error(). Opaque handles own
 * their storage and must be released with the matching *_free call.
 */
#ifndef PAMFK_H
#define PAMFK_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pamfk_status {
  PAMFK_OK = 0,
  PAMFK_ERR_INVALID = 2,  /* bad arguments or config */
  PAMFK_ERR_CAPACITY = 3, /* a documented budget cap was exceeded */
  PAMFK_ERR_NUMERICAL = 4,/* factorization/quadrature failure */
  PAMFK_ERR_IO = 5        /* file system failure */
} pamfk_status;

/* Hurst pair (time, space), time step h (space step is 2*sqrt(h)) and the
 * covariance coefficient convention: 0 uses the derived 2^(2H*-2) constant,
 * nonzero reproduces the printed 2^(4H*-2) one. */
typedef struct pamfk_params {
  double hurst_time;
  double hurst_space;
  double time_step;
  int paper_coeff;
} pamfk_params;

typedef enum pamfk_ic { PAMFK_IC_FLAT = 0, PAMFK_IC_DELTA = 1 } pamfk_ic;

typedef enum pamfk_backend {
  PAMFK_BACKEND_ENUMERATE = 0,
  PAMFK_BACKEND_TRANSFER_MATRIX = 1,
  PAMFK_BACKEND_MONTE_CARLO = 2
} pamfk_backend;

typedef enum pamfk_polymer_variant {
  PAMFK_POLYMER_FREE = 0,
  PAMFK_POLYMER_BRIDGE = 1
} pamfk_polymer_variant;

typedef struct pamfk_noise pamfk_noise;  /* sampled noise grid */
typedef struct pamfk_env pamfk_env;      /* sampled polymer environment */

const char* pamfk_version(void);

/* Message of the most recent failure on this thread; empty string if none. */
const char* pamfk_last_error(void);

/* ---- covariance primitives ---- */

pamfk_status pamfk_interval_inner(double a, double b, double c, double d, double hurst,
                                  double* out);

pamfk_status pamfk_wh_covariance(const pamfk_params* params, long dm, long dn, double* out);

/* Direct numerical evaluation of the covariance integral (H, H* > 1/2). */
pamfk_status pamfk_wh_covariance_quadrature(const pamfk_params* params, long dm, long dn,
                                            double tol, double* out);

/* ---- walk primitives ---- */

pamfk_status pamfk_srw_pmf(long m, long n, double* out);
pamfk_status pamfk_bridge_step_prob(int k, int pos, int m, int end, double* out);
pamfk_status pamfk_heat_kernel(double t, double x, double* out);
pamfk_status pamfk_llt_error(long m, double* out);

/* ---- noise grids ---- */

pamfk_status pamfk_noise_sample(const pamfk_params* params, int slabs, int cell_lo,
                                int cell_hi, uint64_t seed, pamfk_noise** out);
pamfk_status pamfk_noise_value(const pamfk_noise* grid, int m, int n, double* out);
/* Exact aggregation of a step-h/4 grid to step h. */
pamfk_status pamfk_noise_aggregate(const pamfk_noise* fine, pamfk_noise** out);
void pamfk_noise_free(pamfk_noise* grid);

/* ---- Feynman-Kac values and moments ---- */

/* u_h(m, n) for one realization. out_se receives the Monte Carlo standard
 * error (untouched otherwise); mc_* are ignored by exact backends. */
pamfk_status pamfk_solve(const pamfk_params* params, pamfk_ic ic, pamfk_backend backend,
                         int m, long n, const pamfk_noise* grid, uint64_t mc_paths,
                         uint64_t mc_seed, double* out_value, double* out_se);

/* E[u_A u_B] over the shared noise; legs may sit on 4^j-nested levels. */
pamfk_status pamfk_pair_moment(const pamfk_params* params_a, int m_a, long n_a,
                               const pamfk_params* params_b, int m_b, long n_b, pamfk_ic ic,
                               pamfk_backend backend, uint64_t mc_pairs, uint64_t mc_seed,
                               double* out_value, double* out_se);

pamfk_status pamfk_chaos_second_moment(const pamfk_params* params, pamfk_ic ic,
                                       int chaos_order, int m, long n, double* out);

pamfk_status pamfk_density_gap(const pamfk_params* params, double t, double x, double* out);

/* ---- polymer reinterpretation ---- */

pamfk_status pamfk_env_sample(const pamfk_params* params, int m, uint64_t seed,
                              pamfk_env** out);
pamfk_status pamfk_env_value(const pamfk_env* env, long j, long s, double* out);
void pamfk_env_free(pamfk_env* env);

pamfk_status pamfk_partition(const pamfk_env* env, pamfk_polymer_variant variant,
                             const pamfk_params* params, pamfk_backend backend,
                             uint64_t mc_paths, uint64_t mc_seed, double* out);

/* (E[Z_m^2], E[u_{1/m}(1,0)^2]) computed along independent routes. */
pamfk_status pamfk_match_moments(const pamfk_params* params, int m, double* out_lhs,
                                 double* out_rhs);

pamfk_status pamfk_wasserstein(const double* a, size_t n_a, const double* b, size_t n_b,
                               double p, double* out);

/* ---- study runner ---- */

/* Executes one JSON-configured study; writes the CSV and manifest. See the
 * README for the config schema. threads < 1 means 1; seed_override applies
 * when has_seed_override is nonzero. On success *summary_out (if non-NULL)
 * receives a malloc'd one-line summary; free with pamfk_string_free. */
pamfk_status pamfk_run(const char* config_json, int has_seed_override,
                       uint64_t seed_override, int threads, int force, char** summary_out);

void pamfk_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* PAMFK_H */
