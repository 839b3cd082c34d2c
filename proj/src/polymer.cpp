#include "pamfk/polymer.hpp"

#include <algorithm>
#include <cmath>

#include "pamfk/linalg.hpp"
#include "pamfk/noise.hpp"
#include "pamfk/parallel.hpp"
#include "pamfk/rng.hpp"
#include "pamfk/walk.hpp"

namespace pamfk::polymer {

double omega_cov(long m1, long n1, long m2, long n2, const ModelParams& params) {
  params.validate();
  if (!PolymerEnv::on_lattice(m1, n1) || !PolymerEnv::on_lattice(m2, n2))
    fail_invalid("omega_cov points must lie on the even-sum lattice");
  return noise::increment_corr(m1 - m2, params.hurst_time) *
         noise::increment_corr(floor_div2(n1) - floor_div2(n2), params.hurst_space);
}

PolymerEnv sample_env(int m, const ModelParams& params, uint64_t seed) {
  params.validate();
  if (m < 1) fail_invalid("sample_env requires m >= 1");
  PolymerEnv env;
  env.m = m;
  env.params = params;
  env.seed = seed;
  env.values.resize(static_cast<size_t>(m) * (m + 3) / 2);

  if (params.white_time() && params.white_space()) {
    // Distinct reachable sites are uncorrelated with unit variance.
    for (long j = 1; j <= m; ++j)
      for (long s = -j; s <= j; s += 2)
        env.values[env.index(j, s)] = rng::normal(seed, j, rng::key_signed(s));
    return env;
  }

  if (params.white_time()) {
    // Rows are independent; within a row the covariance is a Toeplitz
    // Gamma* sequence over floor(s/2).
    for (long j = 1; j <= m; ++j) {
      const size_t dim = j + 1;
      std::vector<double> cov(dim * dim);
      for (size_t a = 0; a < dim; ++a)
        for (size_t b = 0; b < dim; ++b)
          cov[a * dim + b] = noise::increment_corr(static_cast<long>(a) - static_cast<long>(b),
                                                   params.hurst_space);
      const auto l = linalg::cholesky_with_jitter(std::move(cov), dim);
      std::vector<double> z(dim);
      for (size_t a = 0; a < dim; ++a)
        z[a] = rng::normal(seed, j, rng::key_signed(static_cast<long>(2 * a) - j));
      const auto row = linalg::lower_matvec(l, dim, z);
      for (long s = -j; s <= j; s += 2) env.values[env.index(j, s)] = row[(s + j) / 2];
    }
    return env;
  }

  const size_t dim = env.values.size();
  std::vector<std::pair<long, long>> sites(dim);
  for (long j = 1; j <= m; ++j)
    for (long s = -j; s <= j; s += 2) sites[env.index(j, s)] = {j, s};
  std::vector<double> cov(dim * dim);
  for (size_t a = 0; a < dim; ++a)
    for (size_t b = 0; b <= a; ++b) {
      const double v =
          omega_cov(sites[a].first, sites[a].second, sites[b].first, sites[b].second, params);
      cov[a * dim + b] = v;
      cov[b * dim + a] = v;
    }
  const auto l = linalg::cholesky_with_jitter(std::move(cov), dim);
  std::vector<double> z(dim);
  for (size_t a = 0; a < dim; ++a)
    z[a] = rng::normal(seed, sites[a].first, rng::key_signed(sites[a].second));
  env.values = linalg::lower_matvec(l, dim, z);
  return env;
}

double partition_kappa(int m, const ModelParams& params) {
  const double c = std::pow(2.0, params.paper_coeff ? 2.0 * params.hurst_space - 1.0
                                                    : params.hurst_space - 1.0);
  const double expo = -0.5 * (2.0 * params.hurst_time + params.hurst_space - 1.0);
  return c * std::pow(static_cast<double>(m), expo);
}

namespace {

struct GammaTables {
  std::vector<double> time, space;  // index by |d|, d in 0..m
  int m;
  double t(long d) const { return time[d < 0 ? -d : d]; }
  double s(long d) const { return space[d < 0 ? -d : d]; }
};

GammaTables gamma_tables(int m, const ModelParams& params) {
  GammaTables g;
  g.m = m;
  g.time.resize(m + 1);
  g.space.resize(m + 1);
  for (int d = 0; d <= m; ++d) {
    g.time[d] = noise::increment_corr(d, params.hurst_time);
    g.space[d] = noise::increment_corr(d, params.hurst_space);
  }
  return g;
}

// Var^omega of sum_j omega(j, S_j) along one path.
double env_variance(const GammaTables& g, const int* pos, int m) {
  double v = 0.0;
  for (int j = 1; j <= m; ++j) {
    v += 1.0;  // Gamma(0) Gamma*(0)
    const long cj = floor_div2(pos[j]);
    for (int j2 = j + 1; j2 <= m; ++j2)
      v += 2.0 * g.t(j2 - j) * g.s(cj - floor_div2(pos[j2]));
  }
  return v;
}

double env_sum(const PolymerEnv& env, const int* pos, int m) {
  double e = 0.0;
  for (int j = 1; j <= m; ++j) e += env.at(j, pos[j]);
  return e;
}

void mc_positions(int m, uint64_t seed, uint64_t idx, int* pos) {
  pos[0] = 0;
  for (int r = 1; r <= m; ++r)
    pos[r] = pos[r - 1] + (rng::uniform(seed, idx, 7, r) < 0.5 ? 1 : -1);
}

void mc_bridge(int m, int end, uint64_t seed, uint64_t idx, int* pos) {
  pos[0] = 0;
  for (int k = 0; k < m; ++k) {
    const double up = walk::bridge_step_prob(k, pos[k], m, end);
    pos[k + 1] = pos[k] + (rng::uniform(seed, idx, 8, k + 1) < up ? 1 : -1);
  }
}

}  // namespace

PartitionResult partition(const PolymerEnv& env, Variant variant, const ModelParams& params,
                          solver::Backend backend, uint64_t mc_paths, uint64_t mc_seed) {
  params.validate();
  const int m = env.m;
  const double kappa = partition_kappa(m, params);
  const double kappa_v = 0.5 * kappa * kappa;
  const bool bridge = variant == Variant::Bridge;
  const int end = bridge ? walk::tau(m) : 0;
  const double pref =
      bridge ? 0.5 * std::sqrt(static_cast<double>(m)) * walk::srw_pmf(m, end) : 1.0;

  if (backend == solver::Backend::TransferMatrix) {
    if (!params.white_time())
      fail_invalid("the partition transfer matrix requires white time (H = 1/2)");
    // Var^omega is m for every path, so the Wick factor splits per step.
    std::vector<double> amp(2 * m + 1, 0.0), next(2 * m + 1, 0.0);
    amp[m] = 1.0;
    for (int j = 1; j <= m; ++j) {
      std::fill(next.begin(), next.end(), 0.0);
      for (int ip = m - j; ip <= m + j; ++ip) {
        const int p = ip - m;
        if (parity(p) != parity(j)) continue;
        double in = 0.0;
        if (ip > 0) in += 0.5 * amp[ip - 1];
        if (ip + 1 <= 2 * m) in += 0.5 * amp[ip + 1];
        if (in != 0.0) next[ip] = in * std::exp(kappa * env.at(j, p) - kappa_v);
      }
      std::swap(amp, next);
    }
    if (!bridge) {
      std::vector<double> level(amp.begin(), amp.end());
      while (level.size() > 1) {
        std::vector<double> up((level.size() + 1) / 2);
        for (size_t i = 0; i < up.size(); ++i)
          up[i] = 2 * i + 1 < level.size() ? level[2 * i] + level[2 * i + 1] : level[2 * i];
        level = std::move(up);
      }
      return {level[0], std::nullopt};
    }
    return {pref * amp[end + m] / walk::srw_pmf(m, end), std::nullopt};
  }

  const GammaTables tables = gamma_tables(m, params);
  if (backend == solver::Backend::Enumerate) {
    if (m > walk::kEnumerationCap)
      fail_capacity("partition enumeration is capped at m <= 24; use Monte Carlo");
    const uint64_t total = uint64_t{1} << m;
    const uint64_t chunk = std::max<uint64_t>(1, total >> 8);
    const double sum = par::reduce_chunks(total, chunk, [&](uint64_t lo, uint64_t hi) {
      std::vector<int> pos(m + 1);
      double acc = 0.0;
      for (uint64_t bits = lo; bits < hi; ++bits) {
        pos[0] = 0;
        for (int r = 1; r <= m; ++r)
          pos[r] = pos[r - 1] + (((bits >> (r - 1)) & 1u) ? 1 : -1);
        if (bridge && pos[m] != end) continue;
        acc += std::exp(kappa * env_sum(env, pos.data(), m) -
                        kappa_v * env_variance(tables, pos.data(), m));
      }
      return acc;
    });
    const double mean = bridge ? std::ldexp(sum, -m) / walk::srw_pmf(m, end)
                               : std::ldexp(sum, -m);
    return {pref * mean, std::nullopt};
  }

  if (mc_paths < 2) fail_invalid("Monte Carlo needs at least 2 paths");
  const uint64_t chunk = std::max<uint64_t>(1, mc_paths >> 8);
  auto [s, s2] = par::reduce_chunks2(mc_paths, chunk, [&](uint64_t lo, uint64_t hi) {
    std::vector<int> pos(m + 1);
    double acc = 0.0, acc2 = 0.0;
    for (uint64_t idx = lo; idx < hi; ++idx) {
      if (bridge)
        mc_bridge(m, end, mc_seed, idx, pos.data());
      else
        mc_positions(m, mc_seed, idx, pos.data());
      const double val = std::exp(kappa * env_sum(env, pos.data(), m) -
                                  kappa_v * env_variance(tables, pos.data(), m));
      acc += val;
      acc2 += val * val;
    }
    return std::pair<double, double>{acc, acc2};
  });
  const double n = static_cast<double>(mc_paths);
  const double mean = s / n;
  const double se = std::sqrt(std::max(0.0, s2 / n - mean * mean) / (n - 1.0));
  return {pref * mean, pref * se};
}

std::pair<double, double> match_moments(int m, const ModelParams& params) {
  params.validate();
  if (m < 1 || 2 * m > walk::kEnumerationCap)
    fail_capacity("match_moments is capped at m <= 12 (double path enumeration)");

  const GammaTables tables = gamma_tables(m, params);
  const double kappa2 = partition_kappa(m, params) * partition_kappa(m, params);

  // E[Z_m^2] by enumeration over independent path pairs: the environment
  // integrates to exp(kappa^2 Cov(sum_j omega(j,S_j), sum_j omega(j,S'_j))).
  const uint64_t total = uint64_t{1} << m;
  std::vector<std::vector<int>> paths(total);
  for (uint64_t bits = 0; bits < total; ++bits) {
    paths[bits].resize(m + 1);
    paths[bits][0] = 0;
    for (int r = 1; r <= m; ++r)
      paths[bits][r] = paths[bits][r - 1] + (((bits >> (r - 1)) & 1u) ? 1 : -1);
  }
  const uint64_t chunk = std::max<uint64_t>(1, total >> 8);
  const double lhs_sum = par::reduce_chunks(total, chunk, [&](uint64_t lo, uint64_t hi) {
    double acc = 0.0;
    for (uint64_t a = lo; a < hi; ++a) {
      const int* pa = paths[a].data();
      for (uint64_t b = 0; b < total; ++b) {
        const int* pb = paths[b].data();
        double cov = 0.0;
        for (int j = 1; j <= m; ++j) {
          const long cj = floor_div2(pa[j]);
          for (int j2 = 1; j2 <= m; ++j2)
            cov += tables.t(j - j2) * tables.s(cj - floor_div2(pb[j2]));
        }
        acc += std::exp(kappa2 * cov);
      }
    }
    return acc;
  });
  const double lhs = std::ldexp(lhs_sum, -2 * m);

  ModelParams fk = params;
  fk.h = 1.0 / m;
  solver::SolveRequest req;
  req.ic = solver::Ic::Flat;
  req.m = m;
  req.n = 0;
  req.backend = solver::Backend::Enumerate;
  const double rhs = solver::pair_moment(req, fk, req, fk).value;
  return {lhs, rhs};
}

double wasserstein_p(std::span<const double> a, std::span<const double> b, double p) {
  if (a.empty() || b.empty()) fail_invalid("wasserstein_p needs nonempty samples");
  if (!(p >= 1.0)) fail_invalid("wasserstein_p needs p >= 1");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const size_t k = std::max(sa.size(), sb.size());
  double acc = 0.0;
  for (size_t i = 0; i < k; ++i) {
    const double u = (i + 0.5) / k;
    const double qa = sa[std::min(sa.size() - 1, static_cast<size_t>(u * sa.size()))];
    const double qb = sb[std::min(sb.size() - 1, static_cast<size_t>(u * sb.size()))];
    acc += std::pow(std::fabs(qa - qb), p);
  }
  return std::pow(acc / k, 1.0 / p);
}

}  // namespace pamfk::polymer
