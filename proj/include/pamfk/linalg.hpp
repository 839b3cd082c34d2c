#pragma once

#include <cstddef>
#include <vector>

#include "pamfk/common.hpp"

namespace pamfk::linalg {

/// In-place lower Cholesky of a dense symmetric matrix (row-major n x n).
/// Retries once with a 1e-12 relative diagonal jitter, then fails loudly;
/// increment covariances are positive definite in exact arithmetic, so the
/// jitter only absorbs rounding.
inline std::vector<double> cholesky_with_jitter(std::vector<double> a, size_t n) {
  auto attempt = [n](std::vector<double> m) -> std::vector<double> {
    for (size_t j = 0; j < n; ++j) {
      double d = m[j * n + j];
      for (size_t k = 0; k < j; ++k) d -= m[j * n + k] * m[j * n + k];
      if (!(d > 0.0)) return {};
      const double root = std::sqrt(d);
      m[j * n + j] = root;
      for (size_t i = j + 1; i < n; ++i) {
        double s = m[i * n + j];
        for (size_t k = 0; k < j; ++k) s -= m[i * n + k] * m[j * n + k];
        m[i * n + j] = s / root;
      }
    }
    for (size_t j = 0; j < n; ++j)
      for (size_t i = 0; i < j; ++i) m[i * n + j] = 0.0;
    return m;
  };

  std::vector<double> out = attempt(a);
  if (!out.empty()) return out;
  for (size_t j = 0; j < n; ++j) a[j * n + j] *= 1.0 + 1e-12;
  out = attempt(std::move(a));
  if (!out.empty()) return out;
  fail_numerical("covariance factorization failed: matrix not numerically positive definite");
}

inline std::vector<double> lower_matvec(const std::vector<double>& l, size_t n,
                                        const std::vector<double>& z) {
  std::vector<double> out(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (size_t k = 0; k <= i; ++k) s += l[i * n + k] * z[k];
    out[i] = s;
  }
  return out;
}

}  // namespace pamfk::linalg
