#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace pamfk {

enum class ErrorCode {
  InvalidArgument = 2,
  Capacity = 3,
  Numerical = 4,
  Io = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail_invalid(const std::string& what) {
  throw Error(ErrorCode::InvalidArgument, what);
}
[[noreturn]] inline void fail_capacity(const std::string& what) {
  throw Error(ErrorCode::Capacity, what);
}
[[noreturn]] inline void fail_numerical(const std::string& what) {
  throw Error(ErrorCode::Numerical, what);
}

/// Hurst pair, time step and covariance-coefficient convention.
///
/// The space step is always 2*sqrt(h). `paper_coeff` switches the cell
/// covariance constant from the derived 2^(2H*-2) to the printed 2^(4H*-2);
/// see noise.hpp.
struct ModelParams {
  double hurst_time = 0.5;   // H, white time at 0.5
  double hurst_space = 0.5;  // H*, white space at 0.5
  double h = 0.25;           // time step, > 0
  bool paper_coeff = false;

  double space_step() const { return 2.0 * std::sqrt(h); }

  void validate() const {
    if (!(hurst_time >= 0.5) || !(hurst_time < 1.0))
      fail_invalid("hurst_time must lie in [0.5, 1), got " + std::to_string(hurst_time));
    if (!(hurst_space >= 0.5) || !(hurst_space < 1.0))
      fail_invalid("hurst_space must lie in [0.5, 1), got " + std::to_string(hurst_space));
    if (!(h > 0.0)) fail_invalid("time step h must be positive, got " + std::to_string(h));
  }

  bool white_time() const { return hurst_time == 0.5; }
  bool white_space() const { return hurst_space == 0.5; }

  ModelParams refined(int factor4 = 1) const {
    ModelParams p = *this;
    for (int i = 0; i < factor4; ++i) p.h /= 4.0;
    return p;
  }
};

inline long floor_div2(long v) { return v >= 0 ? v / 2 : -((-v + 1) / 2); }

inline int parity(long n) { return static_cast<int>(((n % 2) + 2) % 2); }

}  // namespace pamfk
