#include "pamfk/chaos.hpp"

#include <cmath>
#include <doctest.h>
#include <functional>

#include "pamfk/noise.hpp"
#include "pamfk/rng.hpp"
#include "pamfk/solver.hpp"
#include "pamfk/walk.hpp"

using namespace pamfk;
using chaos::Gaussian;
using chaos::heat_kernel;
using chaos::KernelSpec;
using chaos::LatticeDensity;

namespace {

// Test-side oracle: plain adaptive Simpson, independent of the library's
// Gauss-Legendre machinery.
double simpson(const std::function<double(double)>& f, double a, double b, double tol,
               int depth = 24) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fb = f(b), fm = f(m);
  std::function<double(double, double, double, double, double, double, int)> rec =
      [&](double lo, double hi, double flo, double fhi, double fmid, double acc,
          int d) -> double {
    const double mid = 0.5 * (lo + hi);
    const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
    const double flm = f(lm), frm = f(rm);
    const double left = (mid - lo) / 6.0 * (flo + 4 * flm + fmid);
    const double right = (hi - mid) / 6.0 * (fmid + 4 * frm + fhi);
    if (d <= 0 || std::fabs(left + right - acc) < 15 * tol)
      return left + right + (left + right - acc) / 15.0;
    return rec(lo, mid, flo, fmid, flm, left, d - 1) +
           rec(mid, hi, fmid, fhi, frm, right, d - 1);
  };
  const double whole = (b - a) / 6.0 * (fa + 4 * fm + fb);
  return rec(a, b, fa, fb, fm, whole, depth);
}

ModelParams make_params(double ht, double hs, double h) {
  ModelParams p;
  p.hurst_time = ht;
  p.hurst_space = hs;
  p.h = h;
  return p;
}

KernelSpec make_spec(solver::Ic ic, int k, double t, double x, const ModelParams& p) {
  KernelSpec s;
  s.ic = ic;
  s.k = k;
  s.t = t;
  s.x = x;
  s.params = p;
  return s;
}

// The lattice density as a plain function of y, for quadrature oracles.
double lattice_density_at(const ModelParams& p, long m, long fx, int sign, double y) {
  const double w = p.space_step();
  const long cell = static_cast<long>(std::floor(y / w));
  return walk::srw_pmf(m, 2 * (fx - cell) + sign * walk::tau(m)) / w;
}

}  // namespace

TEST_CASE("heat kernel basics") {
  CHECK(heat_kernel(1, 0) == doctest::Approx(1.0 / std::sqrt(2 * M_PI)));
  CHECK_THROWS_AS(heat_kernel(0, 0), Error);
  CHECK_THROWS_AS(heat_kernel(-1, 1), Error);

  // scaling property on randomized inputs
  for (int i = 0; i < 300; ++i) {
    const double t = 0.05 + rng::uniform(3, i, 0) * 4.0;
    const double x = (rng::uniform(3, i, 1) - 0.5) * 6.0;
    const double h = 0.05 + rng::uniform(3, i, 2) * 2.0;
    const double lhs = heat_kernel(t, x);
    const double rhs = heat_kernel(t / h, x / std::sqrt(h)) / std::sqrt(h);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-14));
  }
}

TEST_CASE("heat kernel factorization identity") {
  CHECK(heat_kernel(1, 0) * heat_kernel(1, 0) == doctest::Approx(1.0 / (2 * M_PI)));
  for (int i = 0; i < 1000; ++i) {
    const double s = 0.05 + rng::uniform(8, i, 0) * 3.0;
    const double t = 0.05 + rng::uniform(8, i, 1) * 3.0;
    const double x = (rng::uniform(8, i, 2) - 0.5) * 4.0;
    const double y = (rng::uniform(8, i, 3) - 0.5) * 4.0;
    const double lhs = heat_kernel(s, x - y) * heat_kernel(t, y);
    const double rhs =
        heat_kernel(s * t / (s + t), t / (s + t) * x - y) * heat_kernel(s + t, x);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("continuum kernel values") {
  const ModelParams p = make_params(0.5, 0.5, 0.25);
  const double s1[] = {0.5};
  const double y0[] = {0.0};
  CHECK(chaos::f_kernel(make_spec(solver::Ic::Flat, 1, 1, 0, p), s1, y0) ==
        doctest::Approx(1.0 / std::sqrt(M_PI)));
  CHECK(chaos::f_kernel(make_spec(solver::Ic::Delta, 1, 1, 0, p), s1, y0) ==
        doctest::Approx(1.0 / M_PI));

  // symmetry under joint permutation
  const double s3[] = {0.2, 0.5, 0.8};
  const double y3[] = {0.3, -0.2, 0.9};
  const double s3r[] = {0.8, 0.5, 0.2};
  const double y3r[] = {0.9, -0.2, 0.3};
  const auto spec3 = make_spec(solver::Ic::Flat, 3, 1, 0.4, p);
  CHECK(chaos::f_kernel(spec3, s3, y3) == doctest::Approx(chaos::f_kernel(spec3, s3r, y3r)));

  // coincident times rejected
  const double bad_s[] = {0.5, 0.5};
  const double bad_y[] = {0.0, 0.1};
  CHECK_THROWS_AS(chaos::f_kernel(make_spec(solver::Ic::Flat, 2, 1, 0, p), bad_s, bad_y),
                  Error);
}

TEST_CASE("lattice kernel values") {
  const ModelParams p = make_params(0.5, 0.5, 0.25);
  const auto spec = make_spec(solver::Ic::Flat, 1, 1, 0, p);
  const double s[] = {0.3};
  const double y[] = {0.6};
  CHECK(chaos::g_kernel(spec, s, y) == doctest::Approx(0.375));

  // piecewise constant within one space cell (width 1 here)
  const double y2[] = {0.2};
  CHECK(chaos::g_kernel(spec, s, y2) == doctest::Approx(0.375));

  // integrates to one in y for fixed s
  double mass = 0.0;
  const double w = p.space_step();
  for (long c = -8; c <= 8; ++c) {
    const double yy[] = {(c + 0.5) * w};
    mass += chaos::g_kernel(spec, s, yy) * w;
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("white-space inner products") {
  const ModelParams p = make_params(0.5, 0.5, 0.25);
  CHECK(chaos::hstar_inner(Gaussian{1.0, 0.0}, Gaussian{1.0, 0.0}, p) ==
        doctest::Approx(1.0 / (2 * std::sqrt(M_PI))));
  // single-cell lattice density at floor(t/h) = 0 has norm 1/(2 sqrt h)
  CHECK(chaos::hstar_inner(LatticeDensity{0.25, 0, 0, -1}, LatticeDensity{0.25, 0, 0, -1},
                           p) == doctest::Approx(1.0));
  // mixed block vs direct quadrature
  const LatticeDensity lat{0.25, 4, 0, -1};
  const double direct = simpson(
      [&](double y) { return heat_kernel(1.0, -y) * lattice_density_at(p, 4, 0, -1, y); },
      -6, 6, 1e-12);
  CHECK(chaos::hstar_inner(Gaussian{1.0, 0.0}, lat, p) ==
        doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("colored inner products match brute-force quadrature") {
  const ModelParams p = make_params(0.5, 0.75, 0.25);
  const double cstar = chaos::spectral_constant(0.75);
  CHECK(cstar == doctest::Approx(0.9399856029866251).epsilon(1e-12));

  // cell-cell spectral consistency is inherited from interval_inner; check
  // the Gaussian norm against the 2-D real-space integral oracle.
  const double t = 1.0;
  const double ck = 0.75 * 0.5;
  auto inner_y = [&](double y) {
    return simpson(
        [&](double z) {
          const double d = std::fabs(y - z);
          return d < 1e-9 ? 0.0 : heat_kernel(t, z) * std::pow(d, 2 * 0.75 - 2.0);
        },
        -8, 8, 1e-10);
  };
  const double brute = ck * simpson([&](double y) { return heat_kernel(t, y) * inner_y(y); },
                                    -8, 8, 1e-8);
  const double lib = chaos::hstar_inner(Gaussian{t, 0.0}, Gaussian{t, 0.0}, p);
  CHECK(lib == doctest::Approx(brute).epsilon(1e-6));

  // off-center Gaussian pair against the same oracle
  auto inner_y2 = [&](double y) {
    return simpson(
        [&](double z) {
          const double d = std::fabs(y - z);
          return d < 1e-9 ? 0.0 : heat_kernel(0.7, 0.4 - z) * std::pow(d, -0.5);
        },
        -8, 8, 1e-10);
  };
  const double brute2 =
      ck * simpson([&](double y) { return heat_kernel(t, y) * inner_y2(y); }, -8, 8, 1e-8);
  CHECK(chaos::hstar_inner(Gaussian{t, 0.0}, Gaussian{0.7, 0.4}, p) ==
        doctest::Approx(brute2).epsilon(1e-5));

  // Gaussian-cell spectral route vs real-space oracle
  const double a = 0.5, b = 1.5;
  const double brute_cell = ck * simpson(
                                [&](double z) {
                                  return simpson(
                                      [&](double y) {
                                        const double d = std::fabs(y - z);
                                        return d < 1e-9 ? 0.0
                                                        : heat_kernel(t, y) *
                                                              std::pow(d, -0.5);
                                      },
                                      -9, 9, 1e-10);
                                },
                                a, b, 1e-8);
  LatticeDensity cell{p.h, 0, 0, -1};  // single cell [0, 2sqrt(h)) = [0,1)
  // use a custom cell via interval scaling: cell [0.5,1.5) is not a lattice
  // cell here, so check against the library's lattice cell [0,1) instead.
  const double brute_cell01 = ck * simpson(
                                  [&](double z) {
                                    return simpson(
                                        [&](double y) {
                                          const double d = std::fabs(y - z);
                                          return d < 1e-9 ? 0.0
                                                          : heat_kernel(t, y) *
                                                                std::pow(d, -0.5);
                                        },
                                        -9, 9, 1e-10);
                                  },
                                  0.0, 1.0, 1e-8);
  (void)brute_cell;
  (void)a;
  (void)b;
  CHECK(chaos::hstar_inner(Gaussian{t, 0.0}, cell, p) ==
        doctest::Approx(brute_cell01).epsilon(1e-5));
}

TEST_CASE("Gaussian norm bound over time") {
  // white: ||p_t||^2 * t^(1-H*) = 1/(2 sqrt(pi)) for all t
  const ModelParams white = make_params(0.5, 0.5, 0.25);
  for (double t : {1e-3, 0.1, 1.0, 10.0}) {
    const double v = chaos::hstar_inner(Gaussian{t, 0.0}, Gaussian{t, 0.0}, white) *
                     std::sqrt(t);
    CHECK(v <= 1.0);
    CHECK(v == doctest::Approx(1.0 / (2 * std::sqrt(M_PI))).epsilon(1e-12));
  }
  // colored: the scaled norm is constant in t (pinned value)
  const ModelParams colored = make_params(0.5, 0.75, 0.25);
  const double pinned = 0.5424034067370289;  // t = 1 value of ||p_t||^2
  for (double t : {1e-3, 0.1, 1.0, 10.0}) {
    const double v = chaos::hstar_inner(Gaussian{t, 0.0}, Gaussian{t, 0.0}, colored) *
                     std::pow(t, 1.0 - 0.75);
    CHECK(v == doctest::Approx(pinned).epsilon(1e-8));
  }
}

TEST_CASE("lattice density norm bound over time") {
  for (double hs : {0.5, 0.75}) {
    for (double h : {0.25, 0.0625}) {
      const ModelParams p = make_params(0.5, hs, h);
      for (double t : {h, 4 * h, 1.0, 10.0}) {
        const long mt = static_cast<long>(std::floor(t / h));
        const LatticeDensity lat{h, mt, 0, -1};
        const double v =
            chaos::hstar_inner(lat, lat, p) * std::pow(t, 1.0 - hs);
        CHECK(v < 2.0);  // Lemma-level boundedness at desk scale
        CHECK(v > 0.0);
      }
    }
  }
}

TEST_CASE("kernel difference norm: white k=1 against quadrature") {
  const ModelParams p = make_params(0.5, 0.5, 0.25);
  const auto spec = make_spec(solver::Ic::Flat, 1, 1, 0, p);
  const double s[] = {0.5};
  // oracle: direct 1-D integral of the squared difference
  const long mt = 4;
  const long sfloor = 2;  // floor(0.5/0.25)
  const double direct = simpson(
      [&](double y) {
        const double w = p.space_step();
        const long cell = static_cast<long>(std::floor(y / w));
        const int shift = walk::tau(mt - mt) - walk::tau(mt - sfloor);
        const double g =
            walk::srw_pmf(mt - sfloor, 2 * (0 - cell) + shift) / w;
        const double f = heat_kernel(0.5, -y);
        return (f - g) * (f - g);
      },
      -7, 7, 1e-12);
  CHECK(chaos::kernel_diff_norm(spec, s) == doctest::Approx(direct).epsilon(1e-8));
}

TEST_CASE("kernel difference norm: colored k=1 against quadrature") {
  const ModelParams p = make_params(0.5, 0.75, 0.25);
  const auto spec = make_spec(solver::Ic::Flat, 1, 1, 0, p);
  const double s[] = {0.5};
  const double ck = 0.75 * 0.5;
  auto diff = [&](double y) {
    const double w = p.space_step();
    const long cell = static_cast<long>(std::floor(y / w));
    const long sfloor = 2;
    const int shift = walk::tau(0) - walk::tau(4 - sfloor);
    const double g = walk::srw_pmf(4 - sfloor, 2 * (0 - cell) + shift) / w;
    return heat_kernel(0.5, -y) - g;
  };
  auto inner_y = [&](double y) {
    return simpson(
        [&](double z) {
          const double d = std::fabs(y - z);
          return d < 1e-9 ? 0.0 : diff(z) * std::pow(d, -0.5);
        },
        -8, 8, 1e-10);
  };
  const double brute =
      ck * simpson([&](double y) { return diff(y) * inner_y(y); }, -8, 8, 1e-7);
  CHECK(chaos::kernel_diff_norm(spec, s) == doctest::Approx(brute).epsilon(2e-5));
}

TEST_CASE("kernel difference norm: white k=2 against a 2-D oracle") {
  const ModelParams p = make_params(0.5, 0.5, 0.25);
  const auto spec = make_spec(solver::Ic::Flat, 2, 1, 0, p);
  const double s[] = {0.3, 0.7};
  auto f2 = [&](double y1, double y2) {
    return heat_kernel(0.4, y2 - y1) * heat_kernel(0.3, -y2);
  };
  auto g2 = [&](double y1, double y2) {
    const double sv[] = {0.3, 0.7};
    const double yv[] = {y1, y2};
    return chaos::g_kernel(spec, sv, yv);
  };
  const double direct = simpson(
      [&](double y1) {
        return simpson(
            [&](double y2) {
              const double d = f2(y1, y2) - g2(y1, y2);
              return d * d;
            },
            -6, 6, 1e-10);
      },
      -6, 6, 1e-7);
  CHECK(chaos::kernel_diff_norm(spec, s) == doctest::Approx(direct).epsilon(1e-6));
}

TEST_CASE("kernel difference norm: delta k=1 blocks") {
  const ModelParams p = make_params(0.5, 0.5, 0.25);
  const auto spec = make_spec(solver::Ic::Delta, 1, 1, 0, p);
  const double s[] = {0.5};
  const double direct = simpson(
      [&](double y) {
        const double w = p.space_step();
        const long cell = static_cast<long>(std::floor(y / w));
        const long sfloor = 2;
        const int shift0 = walk::tau(4 - sfloor) - walk::tau(4);
        const int shift1 = walk::tau(0) - walk::tau(4 - sfloor);
        const double g = walk::srw_pmf(sfloor, 2 * cell + shift0) *
                         walk::srw_pmf(4 - sfloor, 2 * (0 - cell) + shift1) / (w * w);
        const double f = heat_kernel(0.5, y) * heat_kernel(0.5, -y);
        return (f - g) * (f - g);
      },
      -7, 7, 1e-12);
  CHECK(chaos::kernel_diff_norm(spec, s) == doctest::Approx(direct).epsilon(1e-7));
}

TEST_CASE("kernel difference norm decreases under refinement") {
  for (double hs : {0.5, 0.75}) {
    for (auto ic : {solver::Ic::Flat, solver::Ic::Delta}) {
      const double s1[] = {0.5};
      const double coarse = chaos::kernel_diff_norm(
          make_spec(ic, 1, 1, 0, make_params(0.5, hs, 0.25)), s1);
      const double fine = chaos::kernel_diff_norm(
          make_spec(ic, 1, 1, 0, make_params(0.5, hs, 0.0625)), s1);
      CHECK(coarse > 0.0);
      CHECK(fine > 0.0);
      CHECK(fine < coarse);
    }
  }
  // k = 2 and 3 stay nonnegative
  const ModelParams p = make_params(0.5, 0.75, 0.25);
  const double s2[] = {0.3, 0.7};
  CHECK(chaos::kernel_diff_norm(make_spec(solver::Ic::Flat, 2, 1, 0, p), s2) > 0.0);
  const double s3[] = {0.2, 0.5, 0.8};
  CHECK(chaos::kernel_diff_norm(make_spec(solver::Ic::Flat, 3, 1, 0, p), s3) >= 0.0);
  const double s4[] = {0.1, 0.3, 0.6, 0.9};
  CHECK_THROWS_AS(
      chaos::kernel_diff_norm(make_spec(solver::Ic::Flat, 4, 1, 0, p), s4), Error);
}

TEST_CASE("continuum kernel norm obeys the product bound") {
  // ||f_k(s,.)||^2 <= C^k prod (s_{i+1}-s_i)^{H*-1}; the observed constant is
  // pinned and its stability asserted.
  const double pinned_white = 0.29;   // sup over the sample grid, H* = 0.5
  const double pinned_colored = 0.55; // H* = 0.75
  for (int trial = 0; trial < 40; ++trial) {
    const int k = 1 + static_cast<int>(rng::uniform(61, trial, 0) * 3);
    std::vector<double> s(k);
    double prev = 0.0;
    for (int i = 0; i < k; ++i) {
      prev += 0.05 + rng::uniform(61, trial, i + 1) * (0.9 - prev) / (k - i + 1);
      s[i] = prev;
    }
    for (double hs : {0.5, 0.75}) {
      const ModelParams p = make_params(0.5, hs, 0.25);
      const double norm = chaos::f_norm2(make_spec(solver::Ic::Flat, k, 1, 0, p), s);
      double bound = 1.0;
      std::vector<double> gaps;
      for (int i = 0; i < k; ++i)
        gaps.push_back((i + 1 < k ? s[i + 1] : 1.0) - s[i]);
      for (double g : gaps) bound *= std::pow(g, hs - 1.0);
      const double c = hs == 0.5 ? pinned_white : pinned_colored;
      CHECK(norm <= std::pow(c, k) * bound * 1.0001);
    }
  }
}

TEST_CASE("chaos second moments") {
  const ModelParams p = make_params(0.5, 0.5, 0.25);
  CHECK(chaos::chaos_second_moment(p, solver::Ic::Flat, 0, 4, 0) == doctest::Approx(1.0));

  // monotone nondecreasing in the truncation order
  double prev = 0.0;
  for (int order = 0; order <= 4; ++order) {
    const double v = chaos::chaos_second_moment(p, solver::Ic::Flat, order, 4, 0);
    CHECK(v >= prev);
    prev = v;
  }

  // within the exponential tail of the exact second moment
  solver::SolveRequest req;
  req.ic = solver::Ic::Flat;
  req.m = 4;
  req.n = 0;
  const double exact = solver::pair_moment(req, p, req, p).value;
  CHECK(std::fabs(chaos::chaos_second_moment(p, solver::Ic::Flat, 4, 4, 0) - exact) <
        0.02 * exact);

  // delta zeroth term is the squared prefactor
  const double pref = walk::srw_pmf(4, -walk::tau(4)) / (2 * std::sqrt(p.h));
  CHECK(chaos::chaos_second_moment(p, solver::Ic::Delta, 0, 4, 0) ==
        doctest::Approx(pref * pref));

  CHECK_THROWS_AS(chaos::chaos_second_moment(p, solver::Ic::Flat, 5, 4, 0), Error);
  CHECK_THROWS_AS(chaos::chaos_second_moment(p, solver::Ic::Flat, 4, 9, 0), Error);
}
