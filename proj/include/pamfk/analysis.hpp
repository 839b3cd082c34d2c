#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pamfk/common.hpp"
#include "pamfk/solver.hpp"

namespace pamfk::analysis {

/// sup over n with the parity of m of |G(m,n) - 2 p_m(n)|.
double llt_error(long m);

/// Squared spatial-space distance between the parity-corrected lattice
/// density at resolution h and the heat kernel at time t. tau_sign picks the
/// +- variant; both give the same value by the pmf's symmetry.
double density_gap(const ModelParams& params, double t, double x = 0.0, int tau_sign = -1);

/// Ordinary least squares of log(err2) on log(h); returns (slope, intercept).
std::pair<double, double> estimate_order(std::span<const std::pair<double, double>> pairs);

enum class RateMethod { ExactPair, MonteCarlo };

struct RateLevel {
  int level;
  double h;
  double err2;
  RateMethod method;
  std::optional<double> se;
};

struct RateReport {
  std::vector<RateLevel> levels;  // measured levels 0..L-2, reference is L-1
  double slope = 0.0;
  double intercept = 0.0;
  double theory_slope = 0.0;
  std::optional<double> slope_se;
};

/// Self-convergence study over the ladder h_l = h0 4^-l with the finest
/// level standing in for the continuum solution:
/// err2(l) = E[(u_{h_l} - u_{h_{L-1}})^2] via nested-grid pair moments.
RateReport rate_study(solver::Ic ic, const ModelParams& base, int levels, double t, double x,
                      RateMethod method, uint64_t mc_pairs, uint64_t seed);

struct HolderRow {
  std::string kind;  // "time" or "space"
  double separation;
  double mean_sq;
  double se;
};

struct HolderReport {
  std::vector<HolderRow> rows;
  double t_exponent = 0.0, t_exponent_se = 0.0;
  double x_exponent = 0.0, x_exponent_se = 0.0;
};

/// Empirical E|u_h(t',x') - u_h(t,x)|^2 over noise seeds for dyadic lattice
/// separations, with fitted scaling exponents. Diagnostic only.
HolderReport holder_scan(const ModelParams& params, double t, double x, int separations,
                         int noise_samples, uint64_t seed);

}  // namespace pamfk::analysis
