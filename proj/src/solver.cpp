#include "pamfk/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <vector>

#include "pamfk/parallel.hpp"
#include "pamfk/rng.hpp"

namespace pamfk::solver {

namespace {

constexpr double kExpOverflow = 709.0;

long delta_endpoint(int m, long n) { return walk::tau(m) - 2 * n; }

double delta_prefactor(const ModelParams& params, int m, long n) {
  // Eq.-level discrepancy: the prefactor pmf must share the bridge endpoint's
  // parity, so the argument is 2n - tau(m), not n - tau(m).
  return walk::srw_pmf(m, 2 * n - walk::tau(m)) / (2.0 * std::sqrt(params.h));
}

// Visited-cell covariance table of one leg: cov[dr][dc - dc_lo] with
// dr = |step difference| in 0..m-1, dc the cell difference in [-(m), m].
struct SelfCoupling {
  int m;
  std::vector<double> table;
  long dc_lo, dc_hi;

  SelfCoupling(const ModelParams& params, int m_in) : m(m_in) {
    dc_lo = -m;
    dc_hi = m;
    table.resize(static_cast<size_t>(m) * (dc_hi - dc_lo + 1));
    for (int dr = 0; dr < m; ++dr)
      for (long dc = dc_lo; dc <= dc_hi; ++dc)
        table[static_cast<size_t>(dr) * (dc_hi - dc_lo + 1) + (dc - dc_lo)] =
            noise::wh_covariance(params, dr, dc);
  }
  double at(int dr, long dc) const {
    return table[static_cast<size_t>(dr) * (dc_hi - dc_lo + 1) + (dc - dc_lo)];
  }

  // v = Var^W of the Wick exponent along the path's visited cells.
  double path_variance(const int* pos) const {
    double v = 0.0;
    for (int r = 1; r <= m; ++r) {
      const long cr = floor_div2(pos[r]);
      v += at(0, 0);
      for (int r2 = r + 1; r2 <= m; ++r2) v += 2.0 * at(r2 - r, cr - floor_div2(pos[r2]));
    }
    return v;
  }
};

void fill_positions(int m, uint32_t bits, int* pos) {
  pos[0] = 0;
  for (int r = 1; r <= m; ++r) pos[r] = pos[r - 1] + (((bits >> (r - 1)) & 1u) ? 1 : -1);
}

void positions_from_mc(int m, uint64_t seed, uint64_t idx, uint64_t leg, int* pos) {
  pos[0] = 0;
  for (int r = 1; r <= m; ++r)
    pos[r] = pos[r - 1] + (rng::uniform(seed, idx, leg, r) < 0.5 ? 1 : -1);
}

void bridge_from_mc(int m, int end, uint64_t seed, uint64_t idx, uint64_t leg, int* pos) {
  pos[0] = 0;
  for (int k = 0; k < m; ++k) {
    const double up = walk::bridge_step_prob(k, pos[k], m, end);
    pos[k + 1] = pos[k] + (rng::uniform(seed, idx, leg, k + 1) < up ? 1 : -1);
  }
}

// x_sum of one path against a realization; slab i pairs with step m+1-i.
double realized_sum(const noise::NoiseGrid& noise, int m, long n, const int* pos) {
  double x = 0.0;
  for (int r = 1; r <= m; ++r) x += noise.at(m + 1 - r, floor_div2(pos[r]) + n);
  return x;
}

void check_window(const noise::NoiseGrid& noise, const SolveRequest& req) {
  if (noise.m_count < req.m || !noise.covers(1, req.n - req.m) ||
      !noise.covers(1, req.n + req.m))
    fail_invalid("noise window does not cover the reachable cells [n-m, n+m] x [1, m]");
}

SolveResult solve_enumerate(const SolveRequest& req, const noise::NoiseGrid& noise,
                            const ModelParams& params) {
  if (req.m > walk::kEnumerationCap)
    fail_capacity("enumeration is capped at m <= 24; use the Monte Carlo backend");
  const int m = req.m;
  const SelfCoupling self(params, m);
  const uint64_t total = uint64_t{1} << m;
  const uint64_t chunk = std::max<uint64_t>(1, total >> 8);

  std::atomic<uint64_t> saturated{0};
  double value = 0.0;
  if (req.ic == Ic::Flat) {
    value = par::reduce_chunks(total, chunk, [&](uint64_t lo, uint64_t hi) {
      std::vector<int> pos(m + 1);
      double acc = 0.0;
      uint64_t sat = 0;
      for (uint64_t bits = lo; bits < hi; ++bits) {
        fill_positions(m, static_cast<uint32_t>(bits), pos.data());
        const double x = realized_sum(noise, m, req.n, pos.data());
        const double v = self.path_variance(pos.data());
        acc += wick_exp(x, v, &sat);
      }
      saturated += sat;
      return acc;
    });
    value = std::ldexp(value, -m);
  } else {
    const double pref = delta_prefactor(params, m, req.n);
    if (pref == 0.0) return SolveResult{0.0, std::nullopt, 0};
    const long end = delta_endpoint(m, req.n);
    const double pmf = walk::srw_pmf(m, end);
    value = par::reduce_chunks(total, chunk, [&](uint64_t lo, uint64_t hi) {
      std::vector<int> pos(m + 1);
      double acc = 0.0;
      uint64_t sat = 0;
      for (uint64_t bits = lo; bits < hi; ++bits) {
        fill_positions(m, static_cast<uint32_t>(bits), pos.data());
        if (pos[m] != end) continue;
        const double x = realized_sum(noise, m, req.n, pos.data());
        const double v = self.path_variance(pos.data());
        acc += wick_exp(x, v, &sat);
      }
      saturated += sat;
      return acc;
    });
    value = pref * std::ldexp(value, -m) / pmf;
  }
  return SolveResult{value, std::nullopt, saturated.load()};
}

SolveResult solve_transfer(const SolveRequest& req, const noise::NoiseGrid& noise,
                           const ModelParams& params) {
  if (!params.white_time())
    fail_invalid("the transfer-matrix backend requires white time (H = 1/2)");
  const int m = req.m;
  const double v1 = noise::wh_covariance(params, 0, 0);
  // Forward dynamic program over walk positions; per-step Wick factor
  // exp(W_h(m+1-r, cell) - v1/2) since the path variance is m*v1 in white time.
  std::vector<double> amp(2 * m + 1, 0.0), next(2 * m + 1, 0.0);
  amp[m] = 1.0;  // position 0 at offset m
  uint64_t saturated = 0;
  for (int r = 1; r <= m; ++r) {
    std::fill(next.begin(), next.end(), 0.0);
    for (int ip = m - r; ip <= m + r; ++ip) {
      const int p = ip - m;
      if (parity(p) != parity(r)) continue;
      double in = 0.0;
      if (ip > 0) in += 0.5 * amp[ip - 1];
      if (ip + 1 <= 2 * m) in += 0.5 * amp[ip + 1];
      if (in == 0.0) continue;
      const double wv = noise.at(m + 1 - r, floor_div2(p) + req.n);
      const double e = wv - 0.5 * v1;
      double factor;
      if (e > kExpOverflow) {
        factor = std::numeric_limits<double>::infinity();
        ++saturated;
      } else {
        factor = std::exp(e);
      }
      next[ip] = in * factor;
    }
    std::swap(amp, next);
  }
  if (req.ic == Ic::Flat) {
    // Fixed-shape pairwise reduction over positions.
    std::vector<double> level;
    level.reserve(amp.size());
    for (double a : amp) level.push_back(a);
    while (level.size() > 1) {
      std::vector<double> up((level.size() + 1) / 2);
      for (size_t i = 0; i < up.size(); ++i)
        up[i] = 2 * i + 1 < level.size() ? level[2 * i] + level[2 * i + 1] : level[2 * i];
      level = std::move(up);
    }
    return SolveResult{level[0], std::nullopt, saturated};
  }
  const double pref = delta_prefactor(params, m, req.n);
  if (pref == 0.0) return SolveResult{0.0, std::nullopt, 0};
  const long end = delta_endpoint(m, req.n);
  const double bridge_exp = amp[end + m] / walk::srw_pmf(m, end);
  return SolveResult{pref * bridge_exp, std::nullopt, saturated};
}

SolveResult solve_mc(const SolveRequest& req, const noise::NoiseGrid& noise,
                     const ModelParams& params) {
  const int m = req.m;
  if (req.mc_paths < 2) fail_invalid("Monte Carlo needs at least 2 paths");
  const SelfCoupling self(params, m);
  const bool delta = req.ic == Ic::Delta;
  double pref = 1.0;
  long end = 0;
  if (delta) {
    pref = delta_prefactor(params, m, req.n);
    if (pref == 0.0) return SolveResult{0.0, 0.0, 0};
    end = delta_endpoint(m, req.n);
  }
  std::atomic<uint64_t> saturated{0};
  const uint64_t chunk = std::max<uint64_t>(1, req.mc_paths >> 8);
  auto [s, s2] = par::reduce_chunks2(req.mc_paths, chunk, [&](uint64_t lo, uint64_t hi) {
    std::vector<int> pos(m + 1);
    double acc = 0.0, acc2 = 0.0;
    uint64_t sat = 0;
    for (uint64_t idx = lo; idx < hi; ++idx) {
      if (delta)
        bridge_from_mc(m, static_cast<int>(end), req.mc_seed, idx, 0, pos.data());
      else
        positions_from_mc(m, req.mc_seed, idx, 0, pos.data());
      const double x = realized_sum(noise, m, req.n, pos.data());
      const double v = self.path_variance(pos.data());
      const double val = wick_exp(x, v, &sat);
      acc += val;
      acc2 += val * val;
    }
    saturated += sat;
    return std::pair<double, double>{acc, acc2};
  });
  const double n = static_cast<double>(req.mc_paths);
  const double mean = s / n;
  const double var = std::max(0.0, s2 / n - mean * mean);
  const double se = std::sqrt(var / (n - 1.0));
  return SolveResult{pref * mean, pref * se, saturated.load()};
}

}  // namespace

double wick_exp(double z, double v, uint64_t* saturated) {
  if (!(v >= 0.0)) fail_invalid("wick_exp requires a nonnegative variance");
  const double e = z - 0.5 * v;
  if (e > kExpOverflow) {
    if (saturated) ++*saturated;
    return std::numeric_limits<double>::infinity();
  }
  return std::exp(e);
}

std::pair<double, double> path_statistics(const walk::WalkPath& path,
                                          const noise::NoiseGrid& noise, long n) {
  const int m = static_cast<int>(path.steps.size());
  if (static_cast<int>(path.positions.size()) != m + 1)
    fail_invalid("path_statistics: inconsistent path");
  const SelfCoupling self(noise.params, m);
  const double x = realized_sum(noise, m, n, path.positions.data());
  return {x, self.path_variance(path.positions.data())};
}

SolveResult solve(const SolveRequest& req, const noise::NoiseGrid& noise,
                  const ModelParams& params) {
  params.validate();
  if (req.m < 1) fail_invalid("solve requires m >= 1");
  if (params.h != noise.params.h || params.hurst_time != noise.params.hurst_time ||
      params.hurst_space != noise.params.hurst_space ||
      params.paper_coeff != noise.params.paper_coeff)
    fail_invalid("solve: params disagree with the noise grid's params");
  check_window(noise, req);
  switch (req.backend) {
    case Backend::Enumerate: return solve_enumerate(req, noise, params);
    case Backend::TransferMatrix: return solve_transfer(req, noise, params);
    case Backend::MonteCarlo: return solve_mc(req, noise, params);
  }
  fail_invalid("unknown backend");
}

PairCoupling::PairCoupling(const SolveRequest& req_a, const ModelParams& params_a,
                           const SolveRequest& req_b, const ModelParams& params_b) {
  ma_ = req_a.m;
  mb_ = req_b.m;
  na_ = req_a.n;
  nb_ = req_b.n;
  const double ha = params_a.h, hb = params_b.h;
  const double wa = params_a.space_step(), wb = params_b.space_step();
  const double hurst_t = params_a.hurst_time, hurst_s = params_a.hurst_space;
  const double norm = 1.0 / (4.0 * std::sqrt(ha * hb));
  const double coeff_scale =
      params_a.paper_coeff ? std::pow(2.0, 2.0 * hurst_s) : 1.0;

  // Walk-step indexed time couplings: step r of a leg reads noise slab
  // m+1-r, i.e. the forward window [(m-r)h, (m+1-r)h).
  time_step_.resize(static_cast<size_t>(ma_) * mb_);
  for (int ra = 1; ra <= ma_; ++ra) {
    const double a0 = (ma_ - ra) * ha, a1 = a0 + ha;
    for (int rb = 1; rb <= mb_; ++rb) {
      const double b0 = (mb_ - rb) * hb, b1 = b0 + hb;
      time_step_[static_cast<size_t>(ra - 1) * mb_ + (rb - 1)] =
          norm * coeff_scale * noise::interval_inner(a0, a1, b0, b1, hurst_t);
    }
  }

  ca_lo_ = na_ - (ma_ / 2 + 1);
  const long ca_hi = na_ + ma_ / 2 + 1;
  cb_lo_ = nb_ - (mb_ / 2 + 1);
  const long cb_hi = nb_ + mb_ / 2 + 1;
  cw_b_ = static_cast<int>(cb_hi - cb_lo_ + 1);
  space_.resize(static_cast<size_t>(ca_hi - ca_lo_ + 1) * cw_b_);
  for (long ca = ca_lo_; ca <= ca_hi; ++ca)
    for (long cb = cb_lo_; cb <= cb_hi; ++cb)
      space_[static_cast<size_t>(ca - ca_lo_) * cw_b_ + (cb - cb_lo_)] =
          noise::interval_inner(ca * wa, (ca + 1) * wa, cb * wb, (cb + 1) * wb, hurst_s);
}

double PairCoupling::q(const int* pos_a, const int* pos_b) const {
  double total = 0.0;
  for (int ra = 1; ra <= ma_; ++ra) {
    const long ca = floor_div2(pos_a[ra]) + na_;
    const double* trow = &time_step_[static_cast<size_t>(ra - 1) * mb_];
    const double* srow = &space_[static_cast<size_t>(ca - ca_lo_) * cw_b_];
    for (int rb = 1; rb <= mb_; ++rb)
      total += trow[rb - 1] * srow[floor_div2(pos_b[rb]) + nb_ - cb_lo_];
  }
  return total;
}

namespace {

struct LegInfo {
  bool delta;
  double pref = 1.0;
  int end = 0;
  double end_pmf = 1.0;
};

LegInfo leg_info(const SolveRequest& req, const ModelParams& params) {
  LegInfo info{req.ic == Ic::Delta};
  if (info.delta) {
    info.pref = delta_prefactor(params, req.m, req.n);
    info.end = static_cast<int>(delta_endpoint(req.m, req.n));
    info.end_pmf = walk::srw_pmf(req.m, info.end);
  }
  return info;
}

PairResult pair_enumerate(const SolveRequest& req_a, const ModelParams& params_a,
                          const SolveRequest& req_b, const ModelParams& params_b) {
  if (req_b.m > req_a.m)  // tabulate the shorter leg
    return pair_enumerate(req_b, params_b, req_a, params_a);
  const int ma = req_a.m, mb = req_b.m;
  if (ma + mb > walk::kEnumerationCap)
    fail_capacity("path-pair enumeration is capped at 2^24 pairs; use Monte Carlo");
  const PairCoupling coupling(req_a, params_a, req_b, params_b);
  const LegInfo la = leg_info(req_a, params_a), lb = leg_info(req_b, params_b);
  if (la.pref == 0.0 || lb.pref == 0.0) return PairResult{0.0, std::nullopt};

  // Tabulate the inner leg's admissible paths and positions.
  const uint64_t total_b = uint64_t{1} << mb;
  std::vector<int> pos_b_flat;
  std::vector<uint32_t> keep_b;
  {
    std::vector<int> pos(mb + 1);
    for (uint64_t bits = 0; bits < total_b; ++bits) {
      fill_positions(mb, static_cast<uint32_t>(bits), pos.data());
      if (lb.delta && pos[mb] != lb.end) continue;
      keep_b.push_back(static_cast<uint32_t>(bits));
      pos_b_flat.insert(pos_b_flat.end(), pos.begin(), pos.end());
    }
  }
  const uint64_t total_a = uint64_t{1} << ma;
  const uint64_t chunk = std::max<uint64_t>(1, total_a >> 8);
  double sum = par::reduce_chunks(total_a, chunk, [&](uint64_t lo, uint64_t hi) {
    std::vector<int> pos_a(ma + 1);
    double acc = 0.0;
    for (uint64_t bits = lo; bits < hi; ++bits) {
      fill_positions(ma, static_cast<uint32_t>(bits), pos_a.data());
      if (la.delta && pos_a[ma] != la.end) continue;
      double inner = 0.0;
      for (size_t j = 0; j < keep_b.size(); ++j)
        inner += std::exp(coupling.q(pos_a.data(), &pos_b_flat[j * (mb + 1)]));
      acc += inner;
    }
    return acc;
  });
  double value = std::ldexp(sum, -(ma + mb));
  if (la.delta) value *= la.pref / la.end_pmf;
  if (lb.delta) value *= lb.pref / lb.end_pmf;
  return PairResult{value, std::nullopt};
}

// Synchronized two-walk transfer matrix, white time. Leg a is the coarser
// (or equal) level; the horizons must tile exactly.
PairResult pair_transfer(const SolveRequest& req_a, const ModelParams& params_a,
                         const SolveRequest& req_b, const ModelParams& params_b) {
  if (!params_a.white_time())
    fail_invalid("the synchronized pair transfer matrix requires white time (H = 1/2)");
  const int ma = req_a.m, mb = req_b.m;
  if (mb % ma != 0)
    fail_invalid("pair transfer matrix needs nested levels (fine step count divisible by coarse)");
  const int ratio = mb / ma;
  const double hz_a = ma * params_a.h, hz_b = mb * params_b.h;
  if (std::fabs(hz_a - hz_b) > 1e-9 * std::max(hz_a, hz_b))
    fail_invalid("pair transfer matrix needs aligned horizons m_a*h_a = m_b*h_b");

  const LegInfo la = leg_info(req_a, params_a), lb = leg_info(req_b, params_b);
  if (la.pref == 0.0 || lb.pref == 0.0) return PairResult{0.0, std::nullopt};

  // White time couples coarse step r with exactly the fine steps in its
  // backward window; the per-pair weight is h_b/(4 sqrt(h_a h_b)) times the
  // space inner product of the visited cells.
  const double coef = (params_a.paper_coeff ? std::pow(2.0, 2.0 * params_a.hurst_space) : 1.0) *
                      params_b.h / (4.0 * std::sqrt(params_a.h * params_b.h));
  const double wa = params_a.space_step(), wb = params_b.space_step();
  const int wa_n = 2 * ma + 1, wb_n = 2 * mb + 1;

  // exp factor per (coarse position, fine position) pair.
  std::vector<double> fexp(static_cast<size_t>(wa_n) * wb_n);
  for (int ia = 0; ia < wa_n; ++ia) {
    const long ca = floor_div2(ia - ma) + req_a.n;
    for (int ib = 0; ib < wb_n; ++ib) {
      const long cb = floor_div2(ib - mb) + req_b.n;
      const double inner = noise::interval_inner(ca * wa, (ca + 1) * wa, cb * wb,
                                                 (cb + 1) * wb, params_a.hurst_space);
      fexp[static_cast<size_t>(ia) * wb_n + ib] = std::exp(coef * inner);
    }
  }

  std::vector<double> amp(static_cast<size_t>(wa_n) * wb_n, 0.0);
  amp[static_cast<size_t>(ma) * wb_n + mb] = 1.0;
  std::vector<double> tmp(wb_n);
  for (int r = 1; r <= ma; ++r) {
    // Coarse transition.
    std::vector<double> stepped(static_cast<size_t>(wa_n) * wb_n, 0.0);
    for (int ia = 0; ia < wa_n; ++ia) {
      double* dst = &stepped[static_cast<size_t>(ia) * wb_n];
      if (ia > 0) {
        const double* src = &amp[static_cast<size_t>(ia - 1) * wb_n];
        for (int ib = 0; ib < wb_n; ++ib) dst[ib] += 0.5 * src[ib];
      }
      if (ia + 1 < wa_n) {
        const double* src = &amp[static_cast<size_t>(ia + 1) * wb_n];
        for (int ib = 0; ib < wb_n; ++ib) dst[ib] += 0.5 * src[ib];
      }
    }
    // Fine transitions within the window, weighted per new fine position.
    for (int ia = 0; ia < wa_n; ++ia) {
      const int a = ia - ma;
      if (std::abs(a) > r || parity(a) != parity(r)) continue;
      double* v = &stepped[static_cast<size_t>(ia) * wb_n];
      const double* fx = &fexp[static_cast<size_t>(ia) * wb_n];
      for (int rr = 1; rr <= ratio; ++rr) {
        std::fill(tmp.begin(), tmp.end(), 0.0);
        for (int ib = 0; ib < wb_n; ++ib) {
          if (v[ib] == 0.0) continue;
          if (ib > 0) tmp[ib - 1] += 0.5 * v[ib];
          if (ib + 1 < wb_n) tmp[ib + 1] += 0.5 * v[ib];
        }
        for (int ib = 0; ib < wb_n; ++ib) tmp[ib] *= fx[ib];
        std::copy(tmp.begin(), tmp.end(), v);
      }
    }
    amp = std::move(stepped);
  }

  double value;
  if (!la.delta && !lb.delta) {
    // Pairwise-tree total over the final states.
    std::vector<double> level(amp.begin(), amp.end());
    while (level.size() > 1) {
      std::vector<double> up((level.size() + 1) / 2);
      for (size_t i = 0; i < up.size(); ++i)
        up[i] = 2 * i + 1 < level.size() ? level[2 * i] + level[2 * i + 1] : level[2 * i];
      level = std::move(up);
    }
    value = level[0];
  } else if (la.delta && lb.delta) {
    value = amp[static_cast<size_t>(la.end + ma) * wb_n + (lb.end + mb)] /
            (la.end_pmf * lb.end_pmf) * la.pref * lb.pref;
  } else {
    fail_invalid("pair transfer matrix requires both legs to share the initial condition");
  }
  return PairResult{value, std::nullopt};
}

PairResult pair_mc(const SolveRequest& req_a, const ModelParams& params_a,
                   const SolveRequest& req_b, const ModelParams& params_b) {
  const int ma = req_a.m, mb = req_b.m;
  const uint64_t count = req_a.mc_paths;
  if (count < 2) fail_invalid("Monte Carlo needs at least 2 path pairs");
  const PairCoupling coupling(req_a, params_a, req_b, params_b);
  const LegInfo la = leg_info(req_a, params_a), lb = leg_info(req_b, params_b);
  if (la.pref == 0.0 || lb.pref == 0.0) return PairResult{0.0, 0.0};
  const uint64_t seed = req_a.mc_seed;
  const uint64_t chunk = std::max<uint64_t>(1, count >> 8);
  auto [s, s2] = par::reduce_chunks2(count, chunk, [&](uint64_t lo, uint64_t hi) {
    std::vector<int> pa(ma + 1), pb(mb + 1);
    double acc = 0.0, acc2 = 0.0;
    for (uint64_t idx = lo; idx < hi; ++idx) {
      if (la.delta)
        bridge_from_mc(ma, la.end, seed, idx, 0, pa.data());
      else
        positions_from_mc(ma, seed, idx, 0, pa.data());
      if (lb.delta)
        bridge_from_mc(mb, lb.end, seed, idx, 1, pb.data());
      else
        positions_from_mc(mb, seed, idx, 1, pb.data());
      const double val = std::exp(coupling.q(pa.data(), pb.data()));
      acc += val;
      acc2 += val * val;
    }
    return std::pair<double, double>{acc, acc2};
  });
  const double n = static_cast<double>(count);
  const double scale = la.pref * lb.pref;
  const double mean = s / n;
  const double se = std::sqrt(std::max(0.0, s2 / n - mean * mean) / (n - 1.0));
  return PairResult{scale * mean, scale * se};
}

}  // namespace

PairResult pair_moment(const SolveRequest& req_a, const ModelParams& params_a,
                       const SolveRequest& req_b, const ModelParams& params_b) {
  params_a.validate();
  params_b.validate();
  if (params_a.hurst_time != params_b.hurst_time ||
      params_a.hurst_space != params_b.hurst_space ||
      params_a.paper_coeff != params_b.paper_coeff)
    fail_invalid("pair_moment legs must share the underlying continuum noise");
  if (req_a.ic != req_b.ic)
    fail_invalid("pair_moment legs must share the initial condition");
  if (req_a.backend != req_b.backend)
    fail_invalid("pair_moment legs must agree on the backend");

  // Equal steps or nested by a power of 4 (space cells then nest too).
  const double ratio = std::max(params_a.h, params_b.h) / std::min(params_a.h, params_b.h);
  const double l4 = std::log(ratio) / std::log(4.0);
  if (std::fabs(l4 - std::round(l4)) > 1e-9)
    fail_invalid("pair_moment requires time steps equal or nested by a power of 4");

  // Order the legs coarse-first for the transfer backend.
  const bool swap = params_b.h > params_a.h;
  const SolveRequest& ra = swap ? req_b : req_a;
  const SolveRequest& rb = swap ? req_a : req_b;
  const ModelParams& pa = swap ? params_b : params_a;
  const ModelParams& pb = swap ? params_a : params_b;

  switch (req_a.backend) {
    case Backend::Enumerate: return pair_enumerate(ra, pa, rb, pb);
    case Backend::TransferMatrix: return pair_transfer(ra, pa, rb, pb);
    case Backend::MonteCarlo: return pair_mc(ra, pa, rb, pb);
  }
  fail_invalid("unknown backend");
}

}  // namespace pamfk::solver
