#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sips {

namespace detail {

// sin(pi*u) for u in [0,1], exactly zero at both ends. Folding at 1/2 keeps
// the symmetry sin(pi*u) = sin(pi*(1-u)) down to the last bit that 1-u allows.
inline double sin_pi(double u) {
  if (u > 0.5) u = 1.0 - u;
  return std::sin(std::numbers::pi * u);
}

// sin(2*pi*u) for u in [0,1], exactly zero at 0, 1/2 and 1.
inline double sin_2pi(double u) {
  if (u >= 0.5) return -sin_2pi(u - 0.5);
  if (u > 0.25) u = 0.5 - u;
  return std::sin(2.0 * std::numbers::pi * u);
}

}  // namespace detail

/// Interpolation noise schedule gamma(t) = c*sin^2(pi*t) together with the
/// training noise offset a. Both parameters are dimensionless and
/// nonnegative; gamma vanishes at t=0 and t=1 and is symmetric about 1/2.
struct NoiseSchedule {
  double c = 0.5;
  double a = 0.1;

  NoiseSchedule() = default;
  NoiseSchedule(double c_, double a_) : c(c_), a(a_) {
    if (!(c >= 0.0) || !(a >= 0.0))
      throw std::invalid_argument("NoiseSchedule: c and a must be nonnegative");
  }

  static void check_time(double t) {
    if (!(t >= 0.0 && t <= 1.0))
      throw std::domain_error("NoiseSchedule: t must lie in [0,1]");
  }

  /// gamma(t) = c*sin^2(pi*t)
  double gamma(double t) const {
    check_time(t);
    const double s = detail::sin_pi(t);
    return c * s * s;
  }

  /// gamma'(t) = c*pi*sin(2*pi*t)
  double gamma_dot(double t) const {
    check_time(t);
    return c * std::numbers::pi * detail::sin_2pi(t);
  }

  /// Training noise level a + gamma(t).
  double training_sigma(double t) const { return a + gamma(t); }
};

}  // namespace sips
