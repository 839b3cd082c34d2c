#include "pamfk/walk.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pamfk/rng.hpp"

namespace pamfk::walk {

namespace {

double binomial_exact(long m, long k) {
  // Multiplicative formula; every intermediate quotient is integral.
  __int128 c = 1;
  for (long i = 1; i <= k; ++i) {
    c = c * (m - k + i) / i;
  }
  return static_cast<double>(c);
}

}  // namespace

double srw_pmf(long m, long n) {
  if (m < 0) fail_invalid("srw_pmf requires m >= 0");
  if (n < -m || n > m || parity(m) != parity(n)) return 0.0;
  const long k = (m + n) / 2;
  if (m <= 60) return std::ldexp(binomial_exact(m, k), static_cast<int>(-m));
  const double lg = std::lgamma(static_cast<double>(m + 1)) -
                    std::lgamma(static_cast<double>(k + 1)) -
                    std::lgamma(static_cast<double>(m - k + 1)) -
                    static_cast<double>(m) * std::log(2.0);
  return std::exp(lg);
}

PathEnumeration::PathEnumeration(int m) : m_(m) {
  if (m < 1) fail_invalid("path enumeration requires m >= 1");
  if (m > kEnumerationCap)
    fail_capacity("path enumeration is capped at m <= 24 (2^24 paths); use the Monte Carlo "
                  "backend for longer walks");
  total_ = uint64_t{1} << m;
}

bool PathEnumeration::next(WalkPath& out) {
  if (cursor_ >= total_) return false;
  out = WalkPath::from_bits(m_, static_cast<uint32_t>(cursor_));
  ++cursor_;
  return true;
}

double bridge_step_prob(int k, int pos, int m, int end) {
  if (k < 0 || k >= m) fail_invalid("bridge_step_prob requires 0 <= k < m");
  const int remaining = m - k;
  if (std::abs(end - pos) > remaining || parity(end - pos) != parity(remaining))
    fail_invalid("bridge endpoint unreachable from the given state");
  const double denom = srw_pmf(remaining, end - pos);
  return 0.5 * srw_pmf(remaining - 1, end - pos - 1) / denom;
}

WalkPath sample_bridge(int m, int end, uint64_t seed) {
  if (m < 1) fail_invalid("sample_bridge requires m >= 1");
  if (std::abs(end) > m || parity(end) != parity(m))
    fail_invalid("bridge endpoint unreachable: |end| <= m with matching parity required");
  WalkPath p;
  p.steps.resize(m);
  p.positions.resize(m + 1);
  p.positions[0] = 0;
  int pos = 0;
  for (int k = 0; k < m; ++k) {
    const double up = bridge_step_prob(k, pos, m, end);
    const int s = rng::uniform(seed, 0x6272696467655f31ULL, k) < up ? 1 : -1;
    p.steps[k] = static_cast<int8_t>(s);
    pos += s;
    p.positions[k + 1] = pos;
  }
  return p;
}

KernelPoint lattice_indices(double t, double x, std::span<const double> s,
                            std::span<const double> y, const ModelParams& params) {
  params.validate();
  if (s.size() != y.size()) fail_invalid("lattice_indices needs matching s and y lengths");
  const int k = static_cast<int>(s.size());
  const double h = params.h;
  const double w = params.space_step();

  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return s[a] < s[b]; });

  // Floor maps of the chain (0,0), sorted points, (t,x).
  std::vector<long> fs(k + 2), fy(k + 2);
  fs[0] = 0;
  fy[0] = 0;
  for (int i = 0; i < k; ++i) {
    fs[i + 1] = static_cast<long>(std::floor(s[order[i]] / h));
    fy[i + 1] = static_cast<long>(std::floor(y[order[i]] / w));
  }
  const long mt = static_cast<long>(std::floor(t / h));
  fs[k + 1] = mt;
  fy[k + 1] = static_cast<long>(std::floor(x / w));

  KernelPoint out;
  out.k = k;
  out.s_frak.resize(k + 1);
  out.y_frak.resize(k + 1);
  for (int i = 0; i <= k; ++i) {
    out.s_frak[i] = fs[i + 1] - fs[i];
    out.y_frak[i] = 2 * (fy[i + 1] - fy[i]) + tau(mt - fs[i + 1]) - tau(mt - fs[i]);
  }
  return out;
}

}  // namespace pamfk::walk
