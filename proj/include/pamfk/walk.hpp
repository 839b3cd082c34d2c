#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pamfk/common.hpp"

namespace pamfk::walk {

inline constexpr int kEnumerationCap = 24;

/// P(S_m = n) for the simple random walk. Exact 128-bit binomials for
/// m <= 60, log-gamma beyond.
double srw_pmf(long m, long n);

/// Alternating indicator: 0 for even n, 1 for odd n.
inline int tau(long n) { return parity(n); }

struct WalkPath {
  std::vector<int8_t> steps;    // +-1, length m
  std::vector<int> positions;   // S_0..S_m, S_0 = 0

  static WalkPath from_bits(int m, uint32_t bits) {
    WalkPath p;
    p.steps.resize(m);
    p.positions.resize(m + 1);
    p.positions[0] = 0;
    for (int k = 0; k < m; ++k) {
      const int s = (bits >> k) & 1u ? 1 : -1;
      p.steps[k] = static_cast<int8_t>(s);
      p.positions[k + 1] = p.positions[k] + s;
    }
    return p;
  }
};

/// All 2^m step sequences, each carrying weight 2^-m. Single consumer;
/// independent instances may run concurrently.
class PathEnumeration {
 public:
  explicit PathEnumeration(int m);
  bool next(WalkPath& out);
  uint64_t total() const { return total_; }

 private:
  int m_;
  uint64_t total_, cursor_ = 0;
};

/// P(S_{k+1} = pos + 1 | S_k = pos, S_m = end) for the walk bridge.
double bridge_step_prob(int k, int pos, int m, int end);

/// Exact bridge draw by sequential application of bridge_step_prob.
WalkPath sample_bridge(int m, int end, uint64_t seed);

/// Lattice index vectors of Eqs. mapping continuum points to walk pmf
/// arguments: sorts s (stably), prepends (0,0) and appends (t,x), and
/// applies the parity correction so each y-index sits in the walk's state
/// space.
struct KernelPoint {
  int k = 0;
  std::vector<long> s_frak;  // length k+1, indices 0..k
  std::vector<long> y_frak;
};

KernelPoint lattice_indices(double t, double x, std::span<const double> s,
                            std::span<const double> y, const ModelParams& params);

}  // namespace pamfk::walk
