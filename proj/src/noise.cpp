#include "pamfk/noise.hpp"

#include <cmath>

#include "pamfk/linalg.hpp"
#include "pamfk/quad.hpp"
#include "pamfk/rng.hpp"

namespace pamfk::noise {

double interval_inner(double a, double b, double c, double d, double hurst) {
  if (!(a < b) || !(c < d)) fail_invalid("interval_inner requires a < b and c < d");
  if (!(hurst >= 0.5) || !(hurst < 1.0)) fail_invalid("interval_inner requires K in [0.5, 1)");
  if (hurst == 0.5) return std::max(0.0, std::min(b, d) - std::max(a, c));
  const double e = 2.0 * hurst;
  auto pw = [e](double u) { return std::pow(std::fabs(u), e); };
  return 0.5 * (pw(d - a) + pw(c - b) - pw(c - a) - pw(d - b));
}

double increment_corr(long d, double hurst) {
  if (hurst == 0.5) return d == 0 ? 1.0 : 0.0;
  const double e = 2.0 * hurst;
  const double ad = static_cast<double>(d < 0 ? -d : d);
  return 0.5 * (std::pow(ad + 1.0, e) + std::pow(std::fabs(ad - 1.0), e) - 2.0 * std::pow(ad, e));
}

double wh_covariance(const ModelParams& params, long dm, long dn) {
  params.validate();
  const double h = params.h;
  const double w = params.space_step();
  const double adm = static_cast<double>(dm < 0 ? -dm : dm);
  const double adn = static_cast<double>(dn < 0 ? -dn : dn);
  const double tfac = interval_inner(0.0, h, adm * h, (adm + 1.0) * h, params.hurst_time);
  const double sfac = interval_inner(0.0, w, adn * w, (adn + 1.0) * w, params.hurst_space);
  double v = tfac * sfac / (4.0 * h);
  if (params.paper_coeff) v *= std::pow(2.0, 2.0 * params.hurst_space);
  return v;
}

namespace {

// int over [0, width] x [off, off+width] of C_K |t-s|^(2K-2), numerically.
// The kernel is singular on the diagonal (off = 0) and at the touching corner
// (off = width); both are panel edges with dyadic refinement.
double cell_pair_integral(double width, double off, double hurst, double tol) {
  const double ck = hurst * (2.0 * hurst - 1.0);
  const double expo = 2.0 * hurst - 2.0;
  auto inner = [&](double t) {
    auto f = [&](double s) { return std::pow(std::fabs(t - s), expo); };
    std::vector<double> splits;
    if (t > off && t < off + width) splits.push_back(t);
    return quad::integrate(f, off, off + width, tol / (4.0 * width), splits);
  };
  std::vector<double> outer_splits;
  if (off < width) outer_splits.push_back(off);  // overlapping cells: kink at t = off
  const double val = quad::integrate(inner, 0.0, width, tol / (2.0 * ck), outer_splits);
  return ck * val;
}

}  // namespace

double quadrature_oracle(const ModelParams& params, long dm, long dn, double tol) {
  params.validate();
  if (!(params.hurst_time > 0.5) || !(params.hurst_space > 0.5))
    fail_invalid("quadrature_oracle needs the colored case H > 1/2 and H* > 1/2");
  if (!(tol > 0.0)) fail_invalid("quadrature_oracle needs tol > 0");
  const double h = params.h;
  const double w = params.space_step();
  const double adm = static_cast<double>(dm < 0 ? -dm : dm);
  const double adn = static_cast<double>(dn < 0 ? -dn : dn);
  // Split the requested tolerance between the two factors.
  const double tpart = cell_pair_integral(h, adm * h, params.hurst_time, tol * h);
  const double spart = cell_pair_integral(w, adn * w, params.hurst_space, tol * w);
  return tpart * spart / (4.0 * h);
}

NoiseGrid sample_field(const ModelParams& params, int m_count, int n_lo, int n_hi,
                       uint64_t seed) {
  params.validate();
  if (m_count < 1) fail_invalid("sample_field requires at least one time slab");
  if (n_lo > n_hi) fail_invalid("sample_field requires n_lo <= n_hi");

  NoiseGrid grid;
  grid.params = params;
  grid.m_count = m_count;
  grid.n_lo = n_lo;
  grid.n_hi = n_hi;
  grid.seed = seed;
  grid.provenance = "sampled";
  const size_t width = static_cast<size_t>(n_hi - n_lo + 1);
  const size_t dim = static_cast<size_t>(m_count) * width;
  grid.values.resize(dim);

  std::vector<double> z(dim);
  for (int m = 1; m <= m_count; ++m)
    for (int n = n_lo; n <= n_hi; ++n)
      z[(m - 1) * width + (n - n_lo)] =
          rng::normal(seed, rng::key_signed(m), rng::key_signed(n));

  if (params.white_time() && params.white_space()) {
    const double sd = std::sqrt(wh_covariance(params, 0, 0));
    for (size_t i = 0; i < dim; ++i) grid.values[i] = sd * z[i];
    return grid;
  }

  std::vector<double> cov(dim * dim);
  for (size_t r = 0; r < dim; ++r) {
    const long mr = static_cast<long>(r / width), nr = static_cast<long>(r % width);
    for (size_t c = 0; c <= r; ++c) {
      const long mc = static_cast<long>(c / width), nc = static_cast<long>(c % width);
      const double v = wh_covariance(params, mr - mc, nr - nc);
      cov[r * dim + c] = v;
      cov[c * dim + r] = v;
    }
  }
  const std::vector<double> l = linalg::cholesky_with_jitter(std::move(cov), dim);
  grid.values = linalg::lower_matvec(l, dim, z);
  return grid;
}

NoiseGrid refine_aggregate(const NoiseGrid& fine) {
  if (fine.m_count % 4 != 0)
    fail_invalid("refine_aggregate needs a fine grid whose slab count is a multiple of 4");
  const int m_count = fine.m_count / 4;
  // Coarse space cell n aggregates fine cells 2n and 2n+1.
  const int lo = static_cast<int>(std::ceil(fine.n_lo / 2.0));
  const int hi = static_cast<int>(std::floor((fine.n_hi - 1) / 2.0));
  if (lo > hi) fail_invalid("refine_aggregate: fine window too narrow for one coarse cell");

  NoiseGrid coarse;
  coarse.params = fine.params;
  coarse.params.h = fine.params.h * 4.0;
  coarse.m_count = m_count;
  coarse.n_lo = lo;
  coarse.n_hi = hi;
  coarse.seed = fine.seed;
  coarse.provenance = "aggregated";
  coarse.values.resize(static_cast<size_t>(m_count) * coarse.width());
  for (int m = 1; m <= m_count; ++m) {
    for (int n = lo; n <= hi; ++n) {
      double s = 0.0;
      for (int mf = 4 * (m - 1) + 1; mf <= 4 * m; ++mf)
        for (int nf = 2 * n; nf <= 2 * n + 1; ++nf) s += fine.at(mf, nf);
      coarse.values[static_cast<size_t>(m - 1) * coarse.width() + (n - lo)] = 0.5 * s;
    }
  }
  return coarse;
}

}  // namespace pamfk::noise
