#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include "pamfk/common.hpp"
#include "pamfk/noise.hpp"
#include "pamfk/walk.hpp"

namespace pamfk::solver {

enum class Ic { Flat, Delta };
enum class Backend { Enumerate, TransferMatrix, MonteCarlo };

struct SolveRequest {
  Ic ic = Ic::Flat;
  int m = 1;
  long n = 0;
  Backend backend = Backend::Enumerate;
  uint64_t mc_paths = 100000;
  uint64_t mc_seed = 1;
};

struct SolveResult {
  double value = 0.0;
  std::optional<double> se;   // Monte Carlo only
  uint64_t saturated = 0;     // wick_exp overflow count
};

/// exp(z - v/2); overflow saturates to +inf and bumps the counter.
double wick_exp(double z, double v, uint64_t* saturated = nullptr);

/// (x_sum, v) of one path: the realized noise sum along the visited cells
/// and its path variance. v depends on the path only, not the realization.
std::pair<double, double> path_statistics(const walk::WalkPath& path,
                                          const noise::NoiseGrid& noise, long n);

/// Discrete Feynman-Kac value u_h(m, n) for one noise realization.
SolveResult solve(const SolveRequest& req, const noise::NoiseGrid& noise,
                  const ModelParams& params);

struct PairResult {
  double value = 0.0;
  std::optional<double> se;
};

/// E over the noise of u_A * u_B, both legs on the same continuum sheet.
/// Supports equal or 4^j-nested time steps. Exact by path-pair enumeration
/// or, in white time, by a synchronized two-walk transfer matrix; Monte
/// Carlo otherwise.
PairResult pair_moment(const SolveRequest& req_a, const ModelParams& params_a,
                       const SolveRequest& req_b, const ModelParams& params_b);

/// Shared plumbing for pair moments and chaos sums: the coupling
/// Q(path_a, path_b) = Cov(X_a, X_b) of the two Wick exponents.
class PairCoupling {
 public:
  PairCoupling(const SolveRequest& req_a, const ModelParams& params_a,
               const SolveRequest& req_b, const ModelParams& params_b);

  double q(const int* pos_a, const int* pos_b) const;  // positions S_1..S_m
  int ma() const { return ma_; }
  int mb() const { return mb_; }

 private:
  friend PairResult pair_moment(const SolveRequest&, const ModelParams&,
                                const SolveRequest&, const ModelParams&);
  int ma_, mb_;
  long na_, nb_;
  std::vector<double> time_step_;   // [ra][rb], walk-step indexed
  std::vector<double> space_;       // [ca-ca_lo][cb-cb_lo]
  long ca_lo_, cb_lo_;
  int cw_b_;
};

}  // namespace pamfk::solver
