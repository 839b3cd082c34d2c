#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pamfk/common.hpp"

namespace pamfk::noise {

/// <1_[a,b], 1_[c,d]> in the Hurst-K Hilbert space of one variable.
/// K > 1/2: fBm increment covariance closed form; K = 1/2: overlap length.
double interval_inner(double a, double b, double c, double d, double hurst);

/// Increment correlation of fBm on unit cells shifted by d:
/// equals interval_inner(|d|, |d|+1, 0, 1, K).
double increment_corr(long d, double hurst);

/// Cov(W_h(m, n), W_h(m+dm, n+dn)). Equals kappa^2 * Gamma(dm) * Gamma*(dn)
/// with kappa^2 = 2^(2H*-2) h^(2H+H*-1); params.paper_coeff scales by 2^(2H*)
/// to reproduce the printed 2^(4H*-2) constant instead.
double wh_covariance(const ModelParams& params, long dm, long dn);

/// Direct numerical evaluation of the covariance's displayed double-double
/// integral (colored case only, H and H* > 1/2), absolute error <= tol.
/// Convention-free: always returns the value of the integral itself.
double quadrature_oracle(const ModelParams& params, long dm, long dn, double tol);

struct NoiseGrid {
  ModelParams params;
  int m_count = 0;    // time slabs 1..m_count
  int n_lo = 0, n_hi = -1;
  uint64_t seed = 0;
  std::vector<double> values;  // row-major (m-1)*width + (n-n_lo)
  std::string provenance;

  int width() const { return n_hi - n_lo + 1; }
  bool covers(long m, long n) const {
    return m >= 1 && m <= m_count && n >= n_lo && n <= n_hi;
  }
  double at(long m, long n) const {
    if (!covers(m, n)) fail_invalid("noise grid does not cover the requested cell");
    return values[static_cast<size_t>(m - 1) * width() + (n - n_lo)];
  }
};

/// One realization of {W_h(m, n)} on the window via the dense symmetric
/// square root of the window covariance; bit-identical for a given seed.
NoiseGrid sample_field(const ModelParams& params, int m_count, int n_lo, int n_hi,
                       uint64_t seed);

/// Exact aggregation of a nested fine grid (step h/4) to step h:
/// W_h(m, n) = 1/2 * sum over the 4x2 block of fine entries.
NoiseGrid refine_aggregate(const NoiseGrid& fine);

}  // namespace pamfk::noise
