#include "pamfk.h"

#include <cstring>
#include <string>

#include "pamfk/analysis.hpp"
#include "pamfk/chaos.hpp"
#include "pamfk/noise.hpp"
#include "pamfk/polymer.hpp"
#include "pamfk/runner.hpp"
#include "pamfk/solver.hpp"
#include "pamfk/walk.hpp"

namespace {

thread_local std::string g_last_error;

pamfk_status to_status(const pamfk::Error& e) {
  switch (e.code()) {
    case pamfk::ErrorCode::InvalidArgument: return PAMFK_ERR_INVALID;
    case pamfk::ErrorCode::Capacity: return PAMFK_ERR_CAPACITY;
    case pamfk::ErrorCode::Numerical: return PAMFK_ERR_NUMERICAL;
    case pamfk::ErrorCode::Io: return PAMFK_ERR_IO;
  }
  return PAMFK_ERR_INVALID;
}

template <typename Fn>
pamfk_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return PAMFK_OK;
  } catch (const pamfk::Error& e) {
    g_last_error = e.what();
    return to_status(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PAMFK_ERR_INVALID;
  }
}

pamfk::ModelParams from_c(const pamfk_params* p) {
  if (!p) pamfk::fail_invalid("params pointer is NULL");
  pamfk::ModelParams out;
  out.hurst_time = p->hurst_time;
  out.hurst_space = p->hurst_space;
  out.h = p->time_step;
  out.paper_coeff = p->paper_coeff != 0;
  out.validate();
  return out;
}

pamfk::solver::Ic from_c(pamfk_ic ic) {
  return ic == PAMFK_IC_DELTA ? pamfk::solver::Ic::Delta : pamfk::solver::Ic::Flat;
}

pamfk::solver::Backend from_c(pamfk_backend b) {
  switch (b) {
    case PAMFK_BACKEND_ENUMERATE: return pamfk::solver::Backend::Enumerate;
    case PAMFK_BACKEND_TRANSFER_MATRIX: return pamfk::solver::Backend::TransferMatrix;
    case PAMFK_BACKEND_MONTE_CARLO: return pamfk::solver::Backend::MonteCarlo;
  }
  pamfk::fail_invalid("unknown backend enum value");
}

template <typename T>
void require_out(T* out) {
  if (!out) pamfk::fail_invalid("output pointer is NULL");
}

}  // namespace

struct pamfk_noise {
  pamfk::noise::NoiseGrid grid;
};

struct pamfk_env {
  pamfk::polymer::PolymerEnv env;
};

extern "C" {

const char* pamfk_version(void) { return pamfk::runner::kVersion; }

const char* pamfk_last_error(void) { return g_last_error.c_str(); }

pamfk_status pamfk_interval_inner(double a, double b, double c, double d, double hurst,
                                  double* out) {
  return guarded([&] {
    require_out(out);
    *out = pamfk::noise::interval_inner(a, b, c, d, hurst);
  });
}

pamfk_status pamfk_wh_covariance(const pamfk_params* params, long dm, long dn, double* out) {
  return guarded([&] {
    require_out(out);
    *out = pamfk::noise::wh_covariance(from_c(params), dm, dn);
  });
}

pamfk_status pamfk_wh_covariance_quadrature(const pamfk_params* params, long dm, long dn,
                                            double tol, double* out) {
  return guarded([&] {
    require_out(out);
    *out = pamfk::noise::quadrature_oracle(from_c(params), dm, dn, tol);
  });
}

pamfk_status pamfk_srw_pmf(long m, long n, double* out) {
  return guarded([&] {
    require_out(out);
    *out = pamfk::walk::srw_pmf(m, n);
  });
}

pamfk_status pamfk_bridge_step_prob(int k, int pos, int m, int end, double* out) {
  return guarded([&] {
    require_out(out);
    *out = pamfk::walk::bridge_step_prob(k, pos, m, end);
  });
}

pamfk_status pamfk_heat_kernel(double t, double x, double* out) {
  return guarded([&] {
    require_out(out);
    *out = pamfk::chaos::heat_kernel(t, x);
  });
}

pamfk_status pamfk_llt_error(long m, double* out) {
  return guarded([&] {
    require_out(out);
    *out = pamfk::analysis::llt_error(m);
  });
}

pamfk_status pamfk_noise_sample(const pamfk_params* params, int slabs, int cell_lo,
                                int cell_hi, uint64_t seed, pamfk_noise** out) {
  return guarded([&] {
    require_out(out);
    auto grid = pamfk::noise::sample_field(from_c(params), slabs, cell_lo, cell_hi, seed);
    *out = new pamfk_noise{std::move(grid)};
  });
}

pamfk_status pamfk_noise_value(const pamfk_noise* grid, int m, int n, double* out) {
  return guarded([&] {
    require_out(out);
    if (!grid) pamfk::fail_invalid("noise handle is NULL");
    *out = grid->grid.at(m, n);
  });
}

pamfk_status pamfk_noise_aggregate(const pamfk_noise* fine, pamfk_noise** out) {
  return guarded([&] {
    require_out(out);
    if (!fine) pamfk::fail_invalid("noise handle is NULL");
    *out = new pamfk_noise{pamfk::noise::refine_aggregate(fine->grid)};
  });
}

void pamfk_noise_free(pamfk_noise* grid) { delete grid; }

pamfk_status pamfk_solve(const pamfk_params* params, pamfk_ic ic, pamfk_backend backend,
                         int m, long n, const pamfk_noise* grid, uint64_t mc_paths,
                         uint64_t mc_seed, double* out_value, double* out_se) {
  return guarded([&] {
    require_out(out_value);
    if (!grid) pamfk::fail_invalid("noise handle is NULL");
    pamfk::solver::SolveRequest req;
    req.ic = from_c(ic);
    req.backend = from_c(backend);
    req.m = m;
    req.n = n;
    req.mc_paths = mc_paths;
    req.mc_seed = mc_seed;
    const auto res = pamfk::solver::solve(req, grid->grid, from_c(params));
    *out_value = res.value;
    if (out_se && res.se) *out_se = *res.se;
  });
}

pamfk_status pamfk_pair_moment(const pamfk_params* params_a, int m_a, long n_a,
                               const pamfk_params* params_b, int m_b, long n_b, pamfk_ic ic,
                               pamfk_backend backend, uint64_t mc_pairs, uint64_t mc_seed,
                               double* out_value, double* out_se) {
  return guarded([&] {
    require_out(out_value);
    pamfk::solver::SolveRequest ra, rb;
    ra.ic = rb.ic = from_c(ic);
    ra.backend = rb.backend = from_c(backend);
    ra.m = m_a;
    ra.n = n_a;
    rb.m = m_b;
    rb.n = n_b;
    ra.mc_paths = rb.mc_paths = mc_pairs;
    ra.mc_seed = rb.mc_seed = mc_seed;
    const auto res =
        pamfk::solver::pair_moment(ra, from_c(params_a), rb, from_c(params_b));
    *out_value = res.value;
    if (out_se && res.se) *out_se = *res.se;
  });
}

pamfk_status pamfk_chaos_second_moment(const pamfk_params* params, pamfk_ic ic,
                                       int chaos_order, int m, long n, double* out) {
  return guarded([&] {
    require_out(out);
    *out = pamfk::chaos::chaos_second_moment(from_c(params), from_c(ic), chaos_order, m, n);
  });
}

pamfk_status pamfk_density_gap(const pamfk_params* params, double t, double x, double* out) {
  return guarded([&] {
    require_out(out);
    *out = pamfk::analysis::density_gap(from_c(params), t, x);
  });
}

pamfk_status pamfk_env_sample(const pamfk_params* params, int m, uint64_t seed,
                              pamfk_env** out) {
  return guarded([&] {
    require_out(out);
    *out = new pamfk_env{pamfk::polymer::sample_env(m, from_c(params), seed)};
  });
}

pamfk_status pamfk_env_value(const pamfk_env* env, long j, long s, double* out) {
  return guarded([&] {
    require_out(out);
    if (!env) pamfk::fail_invalid("environment handle is NULL");
    *out = env->env.at(j, s);
  });
}

void pamfk_env_free(pamfk_env* env) { delete env; }

pamfk_status pamfk_partition(const pamfk_env* env, pamfk_polymer_variant variant,
                             const pamfk_params* params, pamfk_backend backend,
                             uint64_t mc_paths, uint64_t mc_seed, double* out) {
  return guarded([&] {
    require_out(out);
    if (!env) pamfk::fail_invalid("environment handle is NULL");
    const auto variant_cpp = variant == PAMFK_POLYMER_BRIDGE
                                 ? pamfk::polymer::Variant::Bridge
                                 : pamfk::polymer::Variant::Free;
    *out = pamfk::polymer::partition(env->env, variant_cpp, from_c(params), from_c(backend),
                                     mc_paths, mc_seed)
               .value;
  });
}

pamfk_status pamfk_match_moments(const pamfk_params* params, int m, double* out_lhs,
                                 double* out_rhs) {
  return guarded([&] {
    require_out(out_lhs);
    require_out(out_rhs);
    const auto [lhs, rhs] = pamfk::polymer::match_moments(m, from_c(params));
    *out_lhs = lhs;
    *out_rhs = rhs;
  });
}

pamfk_status pamfk_wasserstein(const double* a, size_t n_a, const double* b, size_t n_b,
                               double p, double* out) {
  return guarded([&] {
    require_out(out);
    if (!a || !b) pamfk::fail_invalid("sample pointers must not be NULL");
    *out = pamfk::polymer::wasserstein_p({a, n_a}, {b, n_b}, p);
  });
}

pamfk_status pamfk_run(const char* config_json, int has_seed_override,
                       uint64_t seed_override, int threads, int force, char** summary_out) {
  return guarded([&] {
    if (!config_json) pamfk::fail_invalid("config_json is NULL");
    pamfk::runner::RunOptions opts;
    if (has_seed_override) opts.seed_override = seed_override;
    opts.threads = threads < 1 ? 1 : threads;
    opts.force = force != 0;
    const auto outcome = pamfk::runner::run_config(config_json, opts);
    if (summary_out) {
      *summary_out = static_cast<char*>(std::malloc(outcome.summary.size() + 1));
      if (*summary_out) std::memcpy(*summary_out, outcome.summary.c_str(),
                                    outcome.summary.size() + 1);
    }
  });
}

void pamfk_string_free(char* s) { std::free(s); }

}  // extern "C"
