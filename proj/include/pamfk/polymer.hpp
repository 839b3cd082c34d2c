#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "pamfk/common.hpp"
#include "pamfk/solver.hpp"

namespace pamfk::polymer {

/// Correlation of the polymer environment: Gamma(m1-m2) * Gamma*(floor(n1/2)
/// - floor(n2/2)); both points must sit on the even-sum lattice.
double omega_cov(long m1, long n1, long m2, long n2, const ModelParams& params);

/// Gaussian environment on the walk-reachable sites {(j, s): 1 <= j <= m,
/// |s| <= j, j + s even}.
struct PolymerEnv {
  int m = 0;
  ModelParams params;
  uint64_t seed = 0;
  std::vector<double> values;

  static bool on_lattice(long j, long s) { return parity(j + s) == 0; }
  size_t index(long j, long s) const {
    if (j < 1 || j > m || s < -j || s > j || !on_lattice(j, s))
      fail_invalid("environment site off the reachable lattice");
    // Row j holds j+1 sites; rows stacked in order.
    const size_t row_start = static_cast<size_t>(j - 1) * (j + 2) / 2;
    return row_start + static_cast<size_t>((s + j) / 2);
  }
  double at(long j, long s) const { return values[index(j, s)]; }
};

PolymerEnv sample_env(int m, const ModelParams& params, uint64_t seed);

enum class Variant { Free, Bridge };

/// Scaling constants of the Wick-renormalized partition function: kappa =
/// c m^{-(2H+H*-1)/2} with c = 2^(H*-1) under the derived convention and
/// 2^(2H*-1) under the printed one.
double partition_kappa(int m, const ModelParams& params);

struct PartitionResult {
  double value = 0.0;
  std::optional<double> se;
};

/// Wick-renormalized partition function of one environment realization.
/// Free walks or the bridge pinned at tau(m) with its pmf prefactor.
PartitionResult partition(const PolymerEnv& env, Variant variant, const ModelParams& params,
                          solver::Backend backend = solver::Backend::Enumerate,
                          uint64_t mc_paths = 100000, uint64_t mc_seed = 1);

/// Second-moment identity with the lattice Feynman-Kac solution at h = 1/m:
/// returns (E[Z_m^2] by environment enumeration, E[u_{1/m}(1,0)^2] by the
/// solver's pair moment).
std::pair<double, double> match_moments(int m, const ModelParams& params);

/// 1-D empirical p-Wasserstein distance via quantile coupling.
double wasserstein_p(std::span<const double> a, std::span<const double> b, double p);

}  // namespace pamfk::polymer
