#include "pamfk/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "pamfk/chaos.hpp"
#include "pamfk/noise.hpp"
#include "pamfk/rng.hpp"
#include "pamfk/walk.hpp"

namespace pamfk::analysis {

double llt_error(long m) {
  if (m < 1) fail_invalid("llt_error requires m >= 1");
  double worst = 0.0;
  for (long n = -m; n <= m; n += 2) {
    const double diff =
        std::fabs(walk::srw_pmf(m, n) - 2.0 * chaos::heat_kernel(static_cast<double>(m),
                                                                 static_cast<double>(n)));
    worst = std::max(worst, diff);
  }
  return worst;
}

double density_gap(const ModelParams& params, double t, double x, int tau_sign) {
  params.validate();
  if (!(t > 0.0)) fail_invalid("density_gap requires t > 0");
  if (tau_sign != 1 && tau_sign != -1) fail_invalid("tau_sign must be +1 or -1");
  const long mt = static_cast<long>(std::floor(t / params.h));
  const long fx = static_cast<long>(std::floor(x / params.space_step()));
  const chaos::Gaussian f{t, x};
  const chaos::LatticeDensity g{params.h, mt, fx, tau_sign};
  const double ff = chaos::hstar_inner(f, f, params);
  const double fg = chaos::hstar_inner(f, g, params);
  const double gg = chaos::hstar_inner(g, g, params);
  return ff - 2.0 * fg + gg;
}

std::pair<double, double> estimate_order(std::span<const std::pair<double, double>> pairs) {
  if (pairs.size() < 2) fail_invalid("estimate_order needs at least two (h, err2) pairs");
  double sx = 0.0, sy = 0.0;
  for (const auto& [h, e] : pairs) {
    if (!(h > 0.0) || !(e > 0.0)) fail_invalid("estimate_order needs positive h and err2");
    sx += std::log(h);
    sy += std::log(e);
  }
  const double mx = sx / pairs.size(), my = sy / pairs.size();
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [h, e] : pairs) {
    const double dx = std::log(h) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(e) - my);
  }
  if (!(sxx > 0.0)) fail_invalid("estimate_order needs at least two distinct h values");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

namespace {

solver::PairResult level_moment(solver::Ic ic, const ModelParams& pa, int ma, long na,
                                const ModelParams& pb, int mb, long nb, RateMethod method,
                                uint64_t mc_pairs, uint64_t mc_seed) {
  solver::SolveRequest ra, rb;
  ra.ic = rb.ic = ic;
  ra.m = ma;
  ra.n = na;
  rb.m = mb;
  rb.n = nb;
  if (method == RateMethod::MonteCarlo) {
    ra.backend = rb.backend = solver::Backend::MonteCarlo;
    ra.mc_paths = rb.mc_paths = mc_pairs;
    ra.mc_seed = rb.mc_seed = mc_seed;
  } else if (pa.white_time()) {
    ra.backend = rb.backend = solver::Backend::TransferMatrix;
  } else if (ma + mb <= walk::kEnumerationCap) {
    ra.backend = rb.backend = solver::Backend::Enumerate;
  } else {
    fail_capacity("ExactPair with colored time needs enumeration-feasible walk lengths; "
                  "use the MonteCarlo method instead");
  }
  return solver::pair_moment(ra, pa, rb, pb);
}

}  // namespace

RateReport rate_study(solver::Ic ic, const ModelParams& base, int levels, double t, double x,
                      RateMethod method, uint64_t mc_pairs, uint64_t seed) {
  base.validate();
  if (levels < 2) fail_invalid("rate_study needs at least two levels");
  if (!(t > 0.0)) fail_invalid("rate_study requires t > 0");

  std::vector<ModelParams> params(levels);
  std::vector<int> ms(levels);
  std::vector<long> ns(levels);
  for (int l = 0; l < levels; ++l) {
    params[l] = base;
    params[l].h = base.h * std::pow(4.0, -l);
    const double ml = std::floor(t / params[l].h);
    if (ml < 1.0) fail_invalid("rate_study level has floor(t/h) < 1; enlarge t or h0");
    ms[l] = static_cast<int>(ml);
    ns[l] = static_cast<long>(std::floor(x / params[l].space_step()));
  }

  const int ref = levels - 1;
  RateReport report;
  report.theory_slope = std::min(2.0 * base.hurst_time + base.hurst_space - 1.0, 1.0);

  for (int l = 0; l < ref; ++l) {
    // Independent seed streams per (level, term) keep the three estimates
    // uncorrelated, so the quoted error bars compose by quadrature.
    const auto pll = level_moment(ic, params[l], ms[l], ns[l], params[l], ms[l], ns[l], method,
                                  mc_pairs, rng::mix(seed, l, 0));
    const auto plr = level_moment(ic, params[l], ms[l], ns[l], params[ref], ms[ref], ns[ref],
                                  method, mc_pairs, rng::mix(seed, l, 1));
    const auto prr = level_moment(ic, params[ref], ms[ref], ns[ref], params[ref], ms[ref],
                                  ns[ref], method, mc_pairs, rng::mix(seed, l, 2));
    const double err2 = pll.value - 2.0 * plr.value + prr.value;
    RateLevel row{l, params[l].h, err2, method, std::nullopt};
    if (method == RateMethod::MonteCarlo) {
      const double se = std::sqrt(pll.se.value() * pll.se.value() +
                                  4.0 * plr.se.value() * plr.se.value() +
                                  prr.se.value() * prr.se.value());
      row.se = se;
    }
    if (!(err2 > 0.0))
      fail_numerical("rate_study measured a nonpositive squared error at level " +
                     std::to_string(l) + "; increase mc_paths");
    report.levels.push_back(row);
  }

  std::vector<std::pair<double, double>> pts;
  for (const auto& r : report.levels) pts.emplace_back(r.h, r.err2);
  const auto [slope, intercept] = estimate_order(pts);
  report.slope = slope;
  report.intercept = intercept;

  if (method == RateMethod::MonteCarlo) {
    double mx = 0.0;
    for (const auto& r : report.levels) mx += std::log(r.h);
    mx /= report.levels.size();
    double sxx = 0.0;
    for (const auto& r : report.levels) {
      const double dx = std::log(r.h) - mx;
      sxx += dx * dx;
    }
    double var = 0.0;
    for (const auto& r : report.levels) {
      const double c = (std::log(r.h) - mx) / sxx;
      const double rel = r.se.value() / r.err2;
      var += c * c * rel * rel;
    }
    report.slope_se = std::sqrt(var);
  }
  return report;
}

HolderReport holder_scan(const ModelParams& params, double t, double x, int separations,
                         int noise_samples, uint64_t seed) {
  params.validate();
  if (separations < 2 || separations > 8) fail_invalid("holder_scan needs 2..8 separations");
  if (noise_samples < 8) fail_invalid("holder_scan needs at least 8 noise samples");
  const double h = params.h;
  const double w = params.space_step();
  const int m0 = static_cast<int>(std::floor(t / h));
  const long n0 = static_cast<long>(std::floor(x / w));
  if (m0 < 1) fail_invalid("holder_scan requires floor(t/h) >= 1");
  const int max_dt = 1 << (separations - 1);
  const int m_max = m0 + max_dt;

  const bool transfer = params.white_time();
  if (!transfer && m_max > walk::kEnumerationCap)
    fail_capacity("holder_scan with colored time needs floor(t/h) + 2^(separations-1) <= 24");

  const long pad = m_max + max_dt + 2;
  std::vector<double> sq_t(separations, 0.0), sq_t2(separations, 0.0);
  std::vector<double> sq_x(separations, 0.0), sq_x2(separations, 0.0);

  for (int it = 0; it < noise_samples; ++it) {
    const noise::NoiseGrid grid = noise::sample_field(params, m_max, n0 - pad, n0 + pad,
                                                      rng::mix(seed, it));
    solver::SolveRequest req;
    req.ic = solver::Ic::Flat;
    req.backend = transfer ? solver::Backend::TransferMatrix : solver::Backend::Enumerate;
    auto value_at = [&](int m, long n) {
      req.m = m;
      req.n = n;
      return solver::solve(req, grid, params).value;
    };
    const double base_val = value_at(m0, n0);
    for (int j = 0; j < separations; ++j) {
      const int step = 1 << j;
      const double dt_val = value_at(m0 + step, n0);
      const double dd = dt_val - base_val;
      sq_t[j] += dd * dd;
      sq_t2[j] += dd * dd * dd * dd;
      const double dx_val = value_at(m0, n0 + step);
      const double dx = dx_val - base_val;
      sq_x[j] += dx * dx;
      sq_x2[j] += dx * dx * dx * dx;
    }
  }

  HolderReport report;
  auto fit = [&](const std::vector<double>& s, const std::vector<double>& s2,
                 const std::string& kind, double unit, double& expo, double& expo_se) {
    std::vector<std::pair<double, double>> pts;
    std::vector<double> rel_se;
    for (int j = 0; j < separations; ++j) {
      const double mean = s[j] / noise_samples;
      const double var = std::max(0.0, s2[j] / noise_samples - mean * mean);
      const double se = std::sqrt(var / (noise_samples - 1.0));
      const double sep = unit * (1 << j);
      report.rows.push_back(HolderRow{kind, sep, mean, se});
      pts.emplace_back(sep, mean);
      rel_se.push_back(mean > 0.0 ? se / mean : 0.0);
    }
    const auto [slope, intercept] = estimate_order(pts);
    (void)intercept;
    expo = slope;
    double mx = 0.0;
    for (const auto& p : pts) mx += std::log(p.first);
    mx /= pts.size();
    double sxx = 0.0;
    for (const auto& p : pts) sxx += (std::log(p.first) - mx) * (std::log(p.first) - mx);
    double var = 0.0;
    for (size_t j = 0; j < pts.size(); ++j) {
      const double c = (std::log(pts[j].first) - mx) / sxx;
      var += c * c * rel_se[j] * rel_se[j];
    }
    expo_se = std::sqrt(var);
  };
  fit(sq_t, sq_t2, "time", h, report.t_exponent, report.t_exponent_se);
  fit(sq_x, sq_x2, "space", w, report.x_exponent, report.x_exponent_se);
  return report;
}

}  // namespace pamfk::analysis
