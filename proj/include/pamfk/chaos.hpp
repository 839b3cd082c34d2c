#pragma once

#include <span>
#include <variant>
#include <vector>

#include "pamfk/common.hpp"
#include "pamfk/solver.hpp"

namespace pamfk::chaos {

/// Gaussian density p_t(x) = exp(-x^2/(2t)) / sqrt(2 pi t).
double heat_kernel(double t, double x);

struct KernelSpec {
  solver::Ic ic = solver::Ic::Flat;
  int k = 1;
  double t = 1.0;
  double x = 0.0;
  ModelParams params;
};

inline constexpr int kKernelOrderCap = 6;
inline constexpr int kDiffNormOrderCap = 3;
inline constexpr int kChaosOrderCap = 4;
inline constexpr int kChaosStepCap = 8;

/// Continuum chaos kernel: product of heat kernels over the sorted chain.
/// Flat multiplies the k factors up to the horizon; Delta adds the leading
/// factor from the origin.
double f_kernel(const KernelSpec& spec, std::span<const double> s, std::span<const double> y);

/// Lattice chaos kernel: the matching product of walk pmfs, piecewise
/// constant on lattice cells.
double g_kernel(const KernelSpec& spec, std::span<const double> s, std::span<const double> y);

/// Function shapes admitted by hstar_inner.
struct Gaussian {
  double t;  // time parameter
  double x;  // center: the function is p_t(x - .)
};
struct LatticeDensity {
  double h;
  long m;        // slab count
  long n;        // center cell
  int tau_sign;  // +1 or -1: G(m, 2(n - floor(./w)) +- tau(m))
};
using HstarFn = std::variant<Gaussian, LatticeDensity>;

/// Inner product in the spatial Hilbert space: L^2 when H* = 1/2 (closed
/// forms), spectral quadrature against c_{H*} |xi|^(1-2H*) when colored.
double hstar_inner(const HstarFn& f, const HstarFn& g, const ModelParams& params,
                   double tol = 1e-8);

/// Spectral constant of the colored space kernel: the Fourier transform of
/// C_K |x|^(2K-2) is spectral_constant(K) |xi|^(1-2K).
double spectral_constant(double hurst);

/// || f_k(s,.) ||^2 over the k-fold spatial tensor space. k <= 3.
double f_norm2(const KernelSpec& spec, std::span<const double> s);

/// || f_k(s,.) - g_{h,k}(s,.) ||^2 over the k-fold spatial tensor space,
/// for strictly sorted s. k <= 3.
double kernel_diff_norm(const KernelSpec& spec, std::span<const double> s);

/// Second moment of u_h truncated at chaos order K: sum over k <= K of the
/// squared kernel norms (1/k!) ||g_k||^2 plus the squared zeroth term,
/// evaluated as exact finite lattice sums over path pairs.
double chaos_second_moment(const ModelParams& params, solver::Ic ic, int chaos_order, int m,
                           long n);

}  // namespace pamfk::chaos
