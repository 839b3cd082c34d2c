#include "pamfk/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "pamfk/linalg.hpp"
#include "pamfk/noise.hpp"
#include "pamfk/quad.hpp"
#include "pamfk/walk.hpp"

namespace pamfk::chaos {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Integral of p_t(x - y) over y in [a, b].
double gauss_cell_l2(double t, double x, double a, double b) {
  const double rt = std::sqrt(t);
  return normal_cdf((b - x) / rt) - normal_cdf((a - x) / rt);
}

struct SortedChain {
  // Sorted times plus horizon data; delta chains carry the leading factor
  // from the origin.
  bool delta;
  int k;
  double t, x, h, w;
  long mt, fx;
  std::vector<double> s;       // sorted, size k
  std::vector<double> dt;      // gaps: dt[j] = s_{j+1} - s_j, j = 0..k (s_0 = 0, s_{k+1} = t)
  std::vector<long> sfrak;     // lattice gaps, indices 0..k
  std::vector<int> tau_shift;  // additive tau correction of factor j
};

SortedChain make_chain(const KernelSpec& spec, std::span<const double> s, bool require_interior) {
  spec.params.validate();
  if (spec.k < 1 || spec.k > kKernelOrderCap) fail_invalid("kernel order k must lie in 1..6");
  if (static_cast<int>(s.size()) != spec.k) fail_invalid("expected k time points");
  if (!(spec.t > 0.0)) fail_invalid("kernel horizon t must be positive");

  SortedChain c;
  c.delta = spec.ic == solver::Ic::Delta;
  c.k = spec.k;
  c.t = spec.t;
  c.x = spec.x;
  c.h = spec.params.h;
  c.w = spec.params.space_step();
  c.mt = static_cast<long>(std::floor(spec.t / c.h));
  c.fx = static_cast<long>(std::floor(spec.x / c.w));
  c.s.assign(s.begin(), s.end());
  std::sort(c.s.begin(), c.s.end());
  if (require_interior) {
    if (!(c.s.front() > 0.0) || !(c.s.back() < spec.t))
      fail_invalid("kernel time points must lie in (0, t)");
    for (int j = 0; j + 1 < c.k; ++j)
      if (!(c.s[j] < c.s[j + 1])) fail_invalid("coincident kernel times are rejected");
  }

  c.dt.resize(c.k + 1);
  c.sfrak.resize(c.k + 1);
  c.tau_shift.resize(c.k + 1);
  std::vector<long> fs(c.k + 2);
  fs[0] = 0;
  for (int j = 1; j <= c.k; ++j) fs[j] = static_cast<long>(std::floor(c.s[j - 1] / c.h));
  fs[c.k + 1] = c.mt;
  for (int j = 0; j <= c.k; ++j) {
    const double lo = j == 0 ? 0.0 : c.s[j - 1];
    const double hi = j == c.k ? c.t : c.s[j];
    c.dt[j] = hi - lo;
    c.sfrak[j] = fs[j + 1] - fs[j];
    c.tau_shift[j] = walk::tau(c.mt - fs[j + 1]) - walk::tau(c.mt - fs[j]);
  }
  return c;
}

// Walk pmf factor of the lattice chain between consecutive cells.
double g_step(const SortedChain& c, int j, long cell_from, long cell_to) {
  return walk::srw_pmf(c.sfrak[j], 2 * (cell_to - cell_from) + c.tau_shift[j]);
}

// Reachable cell window shared by every coordinate.
std::pair<long, long> cell_window(const SortedChain& c) {
  const long pad = c.mt + 2;
  return {c.fx - pad, c.fx + pad};
}

// ---- colored-space spectral pieces ----

// |xi|^(1-2H*) moment against a Gaussian: int_0^inf e^(-a xi^2) xi^(1-2K) dxi.
double gaussian_weight_integral(double a, double hurst) {
  return 0.5 * std::tgamma(1.0 - hurst) * std::pow(a, hurst - 1.0);
}

// <p_t1(x1-.), p_t2(x2-.)> in the colored space.
double gauss_gauss_colored(double t1, double x1, double t2, double x2, double hurst,
                           double tol) {
  const double cs = spectral_constant(hurst);
  const double a = 0.5 * (t1 + t2);
  const double dx = x1 - x2;
  if (dx == 0.0) return cs / kTwoPi * 2.0 * gaussian_weight_integral(a, hurst);
  auto f = [&](double xi) {
    return std::exp(-a * xi * xi) * std::cos(xi * dx) * std::pow(xi, 1.0 - 2.0 * hurst);
  };
  return cs / kTwoPi * 2.0 * quad::integrate_decaying(f, 0.0, 1.0 / std::sqrt(a), tol / cs);
}

// <p_t(x-.), 1_[a,b]> in the colored space.
double gauss_cell_colored(double t, double x, double a, double b, double hurst, double tol) {
  const double cs = spectral_constant(hurst);
  auto f = [&](double xi) {
    return std::exp(-0.5 * t * xi * xi) * (std::sin(xi * (b - x)) - std::sin(xi * (a - x))) *
           std::pow(xi, -2.0 * hurst);
  };
  return cs / M_PI * quad::integrate_decaying(f, 0.0, 1.0 / std::sqrt(0.5 * t), tol / cs);
}

// int over [a,b] of C_K |y - z|^(2K-2) dz, closed form.
double cell_kernel_primitive(double y, double a, double b, double hurst) {
  auto f = [hurst](double u) {
    const double e = 2.0 * hurst - 1.0;
    return (u >= 0 ? 1.0 : -1.0) * std::pow(std::fabs(u), e);
  };
  return hurst * (f(y - a) - f(y - b));
}

// ---- Gaussian-Gaussian block of kernel_diff_norm ----

// Covariance matrix of the chain seen as a Gaussian vector: flat chains are
// time-reversed Brownian points, delta chains are bridge points.
std::vector<double> chain_covariance(const SortedChain& c) {
  const int k = c.k;
  std::vector<double> sig(static_cast<size_t>(k) * k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      const double lo = std::min(c.s[i], c.s[j]), hi = std::max(c.s[i], c.s[j]);
      sig[static_cast<size_t>(i) * k + j] = c.delta ? lo * (c.t - hi) / c.t : c.t - hi;
    }
  return sig;
}

double min_eigenvalue(const std::vector<double>& sig, int k) {
  // Inverse power iteration through the Cholesky factor.
  std::vector<double> l = linalg::cholesky_with_jitter(sig, k);
  std::vector<double> v(k, 1.0 / std::sqrt(static_cast<double>(k)));
  double lambda = 0.0;
  for (int it = 0; it < 200; ++it) {
    // Solve L L^T w = v.
    std::vector<double> w(v);
    for (int i = 0; i < k; ++i) {
      double s = w[i];
      for (int j = 0; j < i; ++j) s -= l[static_cast<size_t>(i) * k + j] * w[j];
      w[i] = s / l[static_cast<size_t>(i) * k + i];
    }
    for (int i = k - 1; i >= 0; --i) {
      double s = w[i];
      for (int j = i + 1; j < k; ++j) s -= l[static_cast<size_t>(j) * k + i] * w[j];
      w[i] = s / l[static_cast<size_t>(i) * k + i];
    }
    double norm = 0.0;
    for (double u : w) norm += u * u;
    norm = std::sqrt(norm);
    lambda = 1.0 / norm;
    for (int i = 0; i < k; ++i) v[i] = w[i] / norm;
  }
  return lambda;
}

// Quadrature axis for the spectral weight |xi|^(1-2K): symmetric geometric
// panels refined dyadically toward the singular origin; the innermost sliver
// [0, eps) is integrated analytically (one node at its weight centroid).
struct SpectralAxis {
  std::vector<double> node, weight;  // weight includes |xi|^(1-2K)
};

SpectralAxis spectral_axis(double span, double hurst, int dyadic_panels) {
  SpectralAxis ax;
  const auto& rule = quad::gl16();
  const double alpha = 1.0 - 2.0 * hurst;  // in (-1, 0]
  const double eps = span * std::ldexp(1.0, -dyadic_panels);
  for (int side : {-1, 1}) {
    // analytic sliver
    const double mass = std::pow(eps, 2.0 - 2.0 * hurst) / (2.0 - 2.0 * hurst);
    const double centroid = eps * (2.0 - 2.0 * hurst) / (3.0 - 2.0 * hurst);
    ax.node.push_back(side * centroid);
    ax.weight.push_back(mass);
    double lo = eps;
    for (int p = 0; p < dyadic_panels; ++p) {
      const double hi = std::min(span, 2.0 * lo);
      const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
      for (size_t i = 0; i < rule.x.size(); ++i) {
        const double xi = mid + half * rule.x[i];
        ax.node.push_back(side * xi);
        ax.weight.push_back(rule.w[i] * half * std::pow(xi, alpha));
      }
      lo = hi;
    }
  }
  return ax;
}

// (cs / (2 pi))^k * int over R^k of e^(-xi' Sigma xi) prod |xi_i|^(1-2K);
// k = 1 is closed-form, k = 2, 3 use the tensor spectral grid.
double ff_colored(const std::vector<double>& sig, int k, double hurst) {
  const double cs = spectral_constant(hurst);
  if (k == 1) return cs / kTwoPi * 2.0 * gaussian_weight_integral(sig[0], hurst);

  const double lmin = min_eigenvalue(sig, k);
  const double span = 8.0 / std::sqrt(lmin);
  const SpectralAxis ax = spectral_axis(span, hurst, 14);
  const size_t n = ax.node.size();
  double total = 0.0;
  if (k == 2) {
    const double s00 = sig[0], s01 = sig[1], s11 = sig[3];
    for (size_t i = 0; i < n; ++i) {
      const double x0 = ax.node[i];
      const double q0 = s00 * x0 * x0;
      const double lin = 2.0 * s01 * x0;
      double acc = 0.0;
      for (size_t j = 0; j < n; ++j) {
        const double x1 = ax.node[j];
        acc += ax.weight[j] * std::exp(-(q0 + lin * x1 + s11 * x1 * x1));
      }
      total += ax.weight[i] * acc;
    }
  } else {
    const double s00 = sig[0], s01 = sig[1], s02 = sig[2];
    const double s11 = sig[4], s12 = sig[5], s22 = sig[8];
    for (size_t i = 0; i < n; ++i) {
      const double x0 = ax.node[i];
      for (size_t j = 0; j < n; ++j) {
        const double x1 = ax.node[j];
        const double q01 = s00 * x0 * x0 + 2.0 * s01 * x0 * x1 + s11 * x1 * x1;
        const double lin = 2.0 * (s02 * x0 + s12 * x1);
        double acc = 0.0;
        for (size_t l = 0; l < n; ++l) {
          const double x2 = ax.node[l];
          acc += ax.weight[l] * std::exp(-(q01 + lin * x2 + s22 * x2 * x2));
        }
        total += ax.weight[i] * ax.weight[j] * acc;
      }
    }
  }
  return std::pow(cs / kTwoPi, k) * total;
}

// ---- Gaussian-cell block: sequential chain integration ----

// Shared fixed grid over the cell window extended by the Gaussian reach.
// Panel edges are aligned with the lattice cell boundaries so the cell
// indicators and kernel primitives stay smooth inside every panel.
struct Grid {
  std::vector<double> nodes, weights;
};

Grid composite_grid(std::vector<double> edges, double max_panel) {
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  const auto& rule = quad::gl16();
  Grid g;
  for (size_t e = 0; e + 1 < edges.size(); ++e) {
    const double len = edges[e + 1] - edges[e];
    if (!(len > 0.0)) continue;
    const int sub = std::min(64, std::max(1, static_cast<int>(std::ceil(len / max_panel))));
    for (int p = 0; p < sub; ++p) {
      const double a = edges[e] + len * p / sub, b = edges[e] + len * (p + 1) / sub;
      const double m = 0.5 * (a + b), c = 0.5 * (b - a);
      for (size_t i = 0; i < rule.x.size(); ++i) {
        g.nodes.push_back(m + c * rule.x[i]);
        g.weights.push_back(rule.w[i] * c);
      }
    }
  }
  return g;
}

}  // namespace

double spectral_constant(double hurst) {
  if (!(hurst > 0.5) || !(hurst < 1.0)) fail_invalid("spectral constant needs K in (0.5, 1)");
  return hurst * (2.0 * hurst - 1.0) * 2.0 * std::tgamma(2.0 * hurst - 1.0) *
         std::sin(M_PI * (1.0 - hurst));
}

double heat_kernel(double t, double x) {
  if (!(t > 0.0)) fail_invalid("heat_kernel requires t > 0");
  return std::exp(-x * x / (2.0 * t)) / std::sqrt(kTwoPi * t);
}

double f_kernel(const KernelSpec& spec, std::span<const double> s, std::span<const double> y) {
  if (s.size() != y.size()) fail_invalid("f_kernel needs matching s and y lengths");
  SortedChain c = make_chain(spec, s, /*require_interior=*/true);

  // Re-sort y jointly with s.
  std::vector<int> order(spec.k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return s[a] < s[b]; });
  std::vector<double> ys(spec.k + 2);
  ys[0] = 0.0;
  for (int j = 0; j < spec.k; ++j) ys[j + 1] = y[order[j]];
  ys[spec.k + 1] = spec.x;

  double prod = 1.0;
  const int j0 = c.delta ? 0 : 1;
  for (int j = j0; j <= c.k; ++j) prod *= heat_kernel(c.dt[j], ys[j + 1] - ys[j]);
  return prod;
}

double g_kernel(const KernelSpec& spec, std::span<const double> s, std::span<const double> y) {
  if (s.size() != y.size()) fail_invalid("g_kernel needs matching s and y lengths");
  SortedChain c = make_chain(spec, s, /*require_interior=*/false);
  for (double v : s)
    if (!(v >= 0.0) || !(v < c.mt * c.h))
      fail_invalid("g_kernel time points must lie in [0, floor(t/h)*h)");
  const walk::KernelPoint kp = walk::lattice_indices(spec.t, spec.x, s, y, spec.params);
  const int j0 = c.delta ? 0 : 1;
  double prod = 1.0;
  for (int j = j0; j <= c.k; ++j) prod *= walk::srw_pmf(kp.s_frak[j], kp.y_frak[j]);
  const int factors = c.delta ? c.k + 1 : c.k;
  return prod / std::pow(2.0 * std::sqrt(spec.params.h), factors);
}

double hstar_inner(const HstarFn& f, const HstarFn& g, const ModelParams& params, double tol) {
  params.validate();
  const bool white = params.white_space();
  const double hurst = params.hurst_space;

  auto cells_of = [](const LatticeDensity& l) {
    // Nonzero cells of (1/(2vh)) G(m, 2(n - c) + sign*tau(m)).
    std::vector<std::pair<long, double>> cells;
    const double w = 2.0 * std::sqrt(l.h);
    const int t = walk::tau(l.m);
    for (long c = l.n - l.m / 2 - 2; c <= l.n + l.m / 2 + 2; ++c) {
      const double v = walk::srw_pmf(l.m, 2 * (l.n - c) + l.tau_sign * t) / w;
      if (v != 0.0) cells.emplace_back(c, v);
    }
    return cells;
  };

  if (std::holds_alternative<Gaussian>(f) && std::holds_alternative<Gaussian>(g)) {
    const auto& a = std::get<Gaussian>(f);
    const auto& b = std::get<Gaussian>(g);
    if (white) return heat_kernel(a.t + b.t, a.x - b.x);
    return gauss_gauss_colored(a.t, a.x, b.t, b.x, hurst, tol);
  }
  if (std::holds_alternative<LatticeDensity>(f) && std::holds_alternative<LatticeDensity>(g)) {
    const auto& a = std::get<LatticeDensity>(f);
    const auto& b = std::get<LatticeDensity>(g);
    const double wa = 2.0 * std::sqrt(a.h), wb = 2.0 * std::sqrt(b.h);
    double total = 0.0;
    for (const auto& [ca, va] : cells_of(a))
      for (const auto& [cb, vb] : cells_of(b))
        total += va * vb *
                 noise::interval_inner(ca * wa, (ca + 1) * wa, cb * wb, (cb + 1) * wb, hurst);
    return total;
  }
  // Mixed Gaussian x lattice.
  const auto& gs = std::holds_alternative<Gaussian>(f) ? std::get<Gaussian>(f) : std::get<Gaussian>(g);
  const auto& lt = std::holds_alternative<LatticeDensity>(f) ? std::get<LatticeDensity>(f)
                                                             : std::get<LatticeDensity>(g);
  const double w = 2.0 * std::sqrt(lt.h);
  const auto cells = cells_of(lt);
  double total = 0.0;
  for (const auto& [c, v] : cells) {
    const double a = c * w, b = (c + 1) * w;
    total += v * (white ? gauss_cell_l2(gs.t, gs.x, a, b)
                        : gauss_cell_colored(gs.t, gs.x, a, b, hurst, tol / cells.size()));
  }
  return total;
}

namespace {

// ---- kernel_diff_norm blocks ----

double ff_white(const SortedChain& c) {
  double prod = 1.0;
  const int j0 = c.delta ? 0 : 1;
  for (int j = j0; j <= c.k; ++j) prod *= heat_kernel(2.0 * c.dt[j], 0.0);
  if (c.delta) prod *= heat_kernel(0.5 * c.t, c.x);
  return prod;
}

double ff_block(const SortedChain& c, double hurst, double tol) {
  (void)tol;
  if (hurst == 0.5) return ff_white(c);
  const std::vector<double> sig = chain_covariance(c);
  double val = ff_colored(sig, c.k, hurst);
  if (c.delta) {
    const double px = heat_kernel(c.t, c.x);
    val *= px * px;
  }
  return val;
}

double gg_block(const SortedChain& c, double hurst) {
  // Exact pair sum over the two lattice chains, coupled per coordinate.
  const auto [c_lo, c_hi] = cell_window(c);
  const int ncells = static_cast<int>(c_hi - c_lo + 1);
  const double w = c.w;
  const double norm = 1.0 / std::pow(2.0 * std::sqrt(c.h), c.delta ? c.k + 1 : c.k);

  // inner(cell_i, cell_j) table
  std::vector<double> inner(static_cast<size_t>(ncells) * ncells);
  for (int i = 0; i < ncells; ++i)
    for (int j = 0; j < ncells; ++j)
      inner[static_cast<size_t>(i) * ncells + j] = noise::interval_inner(
          (c_lo + i) * w, (c_lo + i + 1) * w, (c_lo + j) * w, (c_lo + j + 1) * w, hurst);

  // Joint DP over the cell pair (b_j, b'_j). Initial weights: flat chains
  // start free (weight 1 at every cell via the j=1 factor), delta chains
  // start from the origin cell through the leading factor.
  std::vector<double> amp(static_cast<size_t>(ncells) * ncells, 0.0);
  // Seed: weight of reaching (b_1, b'_1).
  for (int i = 0; i < ncells; ++i) {
    const double wa = c.delta ? g_step(c, 0, 0, c_lo + i) : 1.0;
    if (wa == 0.0) continue;
    for (int j = 0; j < ncells; ++j) {
      const double wb = c.delta ? g_step(c, 0, 0, c_lo + j) : 1.0;
      if (wb == 0.0) continue;
      amp[static_cast<size_t>(i) * ncells + j] = wa * wb;
    }
  }
  // Chain through coordinates 1..k, multiplying the per-coordinate coupling
  // then stepping both lattice chains.
  double total = 0.0;
  std::vector<double> next(amp.size());
  for (int coord = 1; coord <= c.k; ++coord) {
    // couple coordinate `coord`
    for (int i = 0; i < ncells; ++i)
      for (int j = 0; j < ncells; ++j)
        amp[static_cast<size_t>(i) * ncells + j] *= inner[static_cast<size_t>(i) * ncells + j];
    if (coord == c.k) {
      // close both chains onto the horizon cell fx
      double acc = 0.0;
      for (int i = 0; i < ncells; ++i) {
        const double wa = g_step(c, c.k, c_lo + i, c.fx);
        if (wa == 0.0) continue;
        for (int j = 0; j < ncells; ++j) {
          const double wb = g_step(c, c.k, c_lo + j, c.fx);
          if (wb == 0.0) continue;
          acc += amp[static_cast<size_t>(i) * ncells + j] * wa * wb;
        }
      }
      total = acc;
    } else {
      std::fill(next.begin(), next.end(), 0.0);
      for (int i2 = 0; i2 < ncells; ++i2)
        for (int j2 = 0; j2 < ncells; ++j2) {
          double acc = 0.0;
          for (int i = 0; i < ncells; ++i) {
            const double wa = g_step(c, coord, c_lo + i, c_lo + i2);
            if (wa == 0.0) continue;
            for (int j = 0; j < ncells; ++j) {
              const double wb = g_step(c, coord, c_lo + j, c_lo + j2);
              if (wb == 0.0) continue;
              acc += amp[static_cast<size_t>(i) * ncells + j] * wa * wb;
            }
          }
          next[static_cast<size_t>(i2) * ncells + j2] = acc;
        }
      std::swap(amp, next);
    }
  }
  return total * norm * norm;
}

double fg_block_impl(const SortedChain& c, double hurst, double tol) {
  const bool white = hurst == 0.5;
  const auto [c_lo, c_hi] = cell_window(c);
  const int ncells = static_cast<int>(c_hi - c_lo + 1);
  const double w = c.w;
  const double norm = 1.0 / std::pow(2.0 * std::sqrt(c.h), c.delta ? c.k + 1 : c.k);

  // Fixed composite grid covering the cells plus the Gaussian reach.
  const double reach = 6.0 * std::sqrt(c.t) + std::fabs(c.x) + 2.0 * w;
  const double lo = std::min(c_lo * w, -reach), hi = std::max((c_hi + 1) * w, reach);
  std::vector<double> edges{lo, hi};
  for (long cell = c_lo; cell <= c_hi + 1; ++cell) {
    const double e = cell * w;
    if (e > lo && e < hi) edges.push_back(e);
  }
  double min_dt = c.t;
  for (int j = c.delta ? 0 : 1; j <= c.k; ++j) min_dt = std::min(min_dt, c.dt[j]);
  const double max_panel = 0.75 * std::sqrt(min_dt);
  const Grid grid = composite_grid(std::move(edges), max_panel);
  const size_t gn = grid.nodes.size();
  (void)tol;

  // Phi[cell][node]: accumulated chain value after integrating coordinates
  // < coord, as a function of y_coord evaluated on the grid; the cell index
  // is the lattice chain's current cell b_coord.
  std::vector<double> phi(static_cast<size_t>(ncells) * gn);
  // Seed at coordinate 1: f-side leading factor times g-side leading weight,
  // coupled through cell c1's indicator (white) or kernel primitive (colored).
  for (int i = 0; i < ncells; ++i) {
    const double glead = c.delta ? g_step(c, 0, 0, c_lo + i) : 1.0;
    const double a = (c_lo + i) * w, b = a + w;
    for (size_t p = 0; p < gn; ++p) {
      const double y = grid.nodes[p];
      double weight;
      if (white)
        weight = (y >= a && y < b) ? 1.0 : 0.0;
      else
        weight = cell_kernel_primitive(y, a, b, hurst);
      const double flead = c.delta ? heat_kernel(c.dt[0], y) : 1.0;
      phi[static_cast<size_t>(i) * gn + p] = glead * flead * weight;
    }
  }

  std::vector<double> next(phi.size());
  for (int coord = 2; coord <= c.k; ++coord) {
    std::fill(next.begin(), next.end(), 0.0);
    // B[node] per new cell: sum over previous cells of transition weight times
    // the integral over y_{coord-1}.
    // First integrate each previous row against the heat kernel.
    // integral_to_node[i][p] = int p_dt(y_p - y') phi[i][y'] dy'
    std::vector<double> integ(static_cast<size_t>(ncells) * gn, 0.0);
    const double dt = c.dt[coord - 1];
    for (int i = 0; i < ncells; ++i) {
      const double* src = &phi[static_cast<size_t>(i) * gn];
      double* dst = &integ[static_cast<size_t>(i) * gn];
      for (size_t p = 0; p < gn; ++p) {
        double acc = 0.0;
        for (size_t q2 = 0; q2 < gn; ++q2)
          acc += grid.weights[q2] * heat_kernel(dt, grid.nodes[p] - grid.nodes[q2]) * src[q2];
        dst[p] = acc;
      }
    }
    for (int i2 = 0; i2 < ncells; ++i2) {
      const double a = (c_lo + i2) * w, b = a + w;
      for (size_t p = 0; p < gn; ++p) {
        const double y = grid.nodes[p];
        double weight;
        if (white)
          weight = (y >= a && y < b) ? 1.0 : 0.0;
        else
          weight = cell_kernel_primitive(y, a, b, hurst);
        if (weight == 0.0) continue;
        double acc = 0.0;
        for (int i = 0; i < ncells; ++i) {
          const double tw = g_step(c, coord - 1, c_lo + i, c_lo + i2);
          if (tw != 0.0) acc += tw * integ[static_cast<size_t>(i) * gn + p];
        }
        next[static_cast<size_t>(i2) * gn + p] = acc * weight;
      }
    }
    std::swap(phi, next);
  }

  // Close the chain: integrate the final coordinate against the tail factors.
  double total = 0.0;
  for (int i = 0; i < ncells; ++i) {
    const double gw = g_step(c, c.k, c_lo + i, c.fx);
    if (gw == 0.0) continue;
    const double* src = &phi[static_cast<size_t>(i) * gn];
    double acc = 0.0;
    for (size_t p = 0; p < gn; ++p)
      acc += grid.weights[p] * heat_kernel(c.dt[c.k], c.x - grid.nodes[p]) * src[p];
    total += gw * acc;
  }
  return total * norm;
}

}  // namespace

double f_norm2(const KernelSpec& spec, std::span<const double> s) {
  if (spec.k > kDiffNormOrderCap)
    fail_capacity("f_norm2 is capped at k <= 3 (tensor quadrature budget)");
  SortedChain c = make_chain(spec, s, /*require_interior=*/true);
  return ff_block(c, spec.params.hurst_space, 1e-8);
}

double kernel_diff_norm(const KernelSpec& spec, std::span<const double> s) {
  if (spec.k > kDiffNormOrderCap)
    fail_capacity("kernel_diff_norm is capped at k <= 3 (tensor quadrature budget)");
  SortedChain c = make_chain(spec, s, /*require_interior=*/true);
  const double hurst = spec.params.hurst_space;
  const double tol = 1e-8;
  const double ff = ff_block(c, hurst, tol);
  const double fg = fg_block_impl(c, hurst, tol);
  const double gg = gg_block(c, hurst);
  return ff - 2.0 * fg + gg;
}

double chaos_second_moment(const ModelParams& params, solver::Ic ic, int chaos_order, int m,
                           long n) {
  params.validate();
  if (chaos_order < 0 || chaos_order > kChaosOrderCap)
    fail_capacity("chaos_second_moment is capped at K <= 4");
  if (m < 1 || m > kChaosStepCap) fail_capacity("chaos_second_moment is capped at m <= 8");

  solver::SolveRequest req;
  req.ic = ic;
  req.m = m;
  req.n = n;
  const solver::PairCoupling coupling(req, params, req, params);

  double pref = 1.0;
  long end = 0;
  const bool delta = ic == solver::Ic::Delta;
  if (delta) {
    pref = walk::srw_pmf(m, 2 * n - walk::tau(m)) / (2.0 * std::sqrt(params.h));
    if (pref == 0.0) return 0.0;
    end = walk::tau(m) - 2 * n;
  }

  const uint64_t total = uint64_t{1} << m;
  std::vector<std::vector<int>> pos_all;
  pos_all.reserve(total);
  for (uint64_t bits = 0; bits < total; ++bits) {
    std::vector<int> pos(m + 1);
    pos[0] = 0;
    for (int r = 1; r <= m; ++r) pos[r] = pos[r - 1] + (((bits >> (r - 1)) & 1u) ? 1 : -1);
    if (delta && pos[m] != end) continue;
    pos_all.push_back(std::move(pos));
  }

  double sum = 0.0;
  for (const auto& pa : pos_all)
    for (const auto& pb : pos_all) {
      const double q = coupling.q(pa.data(), pb.data());
      double term = 1.0, series = 1.0;
      for (int k = 1; k <= chaos_order; ++k) {
        term *= q / k;
        series += term;
      }
      sum += series;
    }
  const double count = delta ? walk::srw_pmf(m, end) * std::ldexp(1.0, m) : std::ldexp(1.0, m);
  const double mean = sum / (count * count);
  return pref * pref * mean;
}

}  // namespace pamfk::chaos
