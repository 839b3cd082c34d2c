#pragma once

#include <functional>
#include <vector>

namespace pamfk::quad {

using Fn = std::function<double(double)>;

/// Nodes/weights of the n-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
  std::vector<double> x, w;
  explicit GaussLegendre(int n);
};

const GaussLegendre& gl16();

/// Fixed Gauss-Legendre pass over [a, b].
double gl_panel(const Fn& f, double a, double b);

/// Adaptive bisection with GL16 panels until the global absolute-error
/// estimate drops below `abs_tol`. `splits` seeds panel edges (diagonal
/// singularities, kinks). Integrable endpoint singularities are handled by
/// the dyadic refinement; throws Error(Numerical) when the panel budget runs
/// out first.
double integrate(const Fn& f, double a, double b, double abs_tol,
                 const std::vector<double>& splits = {}, int max_panels = 20000);

/// Integral over [a, infinity) of a function with (at least) Gaussian-type
/// decay beyond `decay_scale`: maps panels geometrically until the tail
/// contribution is below tolerance.
double integrate_decaying(const Fn& f, double a, double decay_scale, double abs_tol,
                          const std::vector<double>& splits = {});

}  // namespace pamfk::quad
