#include "pamfk/quad.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "pamfk/common.hpp"

namespace pamfk::quad {

GaussLegendre::GaussLegendre(int n) : x(n), w(n) {
  // Newton iteration on Legendre polynomials, roots come in +- pairs.
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::fabs(dz) < 1e-16) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
  }
}

const GaussLegendre& gl16() {
  static const GaussLegendre rule(16);
  return rule;
}

double gl_panel(const Fn& f, double a, double b) {
  const auto& rule = gl16();
  const double c = 0.5 * (b - a), m = 0.5 * (a + b);
  double s = 0.0;
  for (size_t i = 0; i < rule.x.size(); ++i) s += rule.w[i] * f(m + c * rule.x[i]);
  return s * c;
}

namespace {

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

Panel make_panel(const Fn& f, double a, double b) {
  const double whole = gl_panel(f, a, b);
  const double mid = 0.5 * (a + b);
  const double refined = gl_panel(f, a, mid) + gl_panel(f, mid, b);
  return Panel{a, b, refined, std::fabs(refined - whole)};
}

}  // namespace

double integrate(const Fn& f, double a, double b, double abs_tol,
                 const std::vector<double>& splits, int max_panels) {
  if (!(b > a)) return 0.0;
  std::vector<double> edges{a, b};
  for (double s : splits)
    if (s > a && s < b) edges.push_back(s);
  std::sort(edges.begin(), edges.end());

  std::priority_queue<Panel> heap;
  double total = 0.0, err = 0.0;
  for (size_t i = 0; i + 1 < edges.size(); ++i) {
    if (edges[i + 1] <= edges[i]) continue;
    Panel p = make_panel(f, edges[i], edges[i + 1]);
    total += p.value;
    err += p.error;
    heap.push(p);
  }
  int panels = static_cast<int>(heap.size());
  while (err > abs_tol && !heap.empty()) {
    if (panels >= max_panels)
      fail_numerical("quadrature did not reach the requested tolerance within the panel budget");
    Panel p = heap.top();
    heap.pop();
    total -= p.value;
    err -= p.error;
    const double mid = 0.5 * (p.a + p.b);
    if (mid <= p.a || mid >= p.b) {
      // Interval exhausted at machine precision; accept its estimate.
      total += p.value;
      continue;
    }
    for (const Panel& half : {make_panel(f, p.a, mid), make_panel(f, mid, p.b)}) {
      total += half.value;
      err += half.error;
      heap.push(half);
      ++panels;
    }
  }
  return total;
}

double integrate_decaying(const Fn& f, double a, double decay_scale, double abs_tol,
                          const std::vector<double>& splits) {
  // Cover [a, a + 12*scale] adaptively, then geometric panels until negligible.
  const double core_end = a + 12.0 * decay_scale;
  double total = integrate(f, a, core_end, 0.5 * abs_tol, splits);
  double lo = core_end, width = 8.0 * decay_scale;
  for (int i = 0; i < 60; ++i) {
    const double contrib = integrate(f, lo, lo + width, 0.125 * abs_tol);
    total += contrib;
    if (std::fabs(contrib) < 0.25 * abs_tol) return total;
    lo += width;
    width *= 2.0;
  }
  fail_numerical("tail of improper integral did not decay within the panel budget");
}

}  // namespace pamfk::quad
