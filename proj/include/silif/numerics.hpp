#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <complex>

#include "silif/errors.hpp"

namespace silif {

using Complex64 = std::complex<double>;

// eigenvalues of a real 2x2 matrix, ordered by (re, im) descending.
// uses the mean/half-discriminant form: with m = (a11+a22)/2 and
// q = ((a11-a22)/2)^2 + a12*a21, the pair is m +- sqrt(q). for the
// antisymmetric layout [[x, -y], [y, x]] this evaluates q = -y*y and
// sqrt(y*y) = |y| without cancellation, so the result is exact.
inline std::array<Complex64, 2> eig_2x2(const Eigen::Matrix2d& m) {
  if (!m.allFinite()) throw NumericError("eig_2x2: matrix has nan or inf entries");
  const double mean = (m(0, 0) + m(1, 1)) / 2.0;
  const double half_diff = (m(0, 0) - m(1, 1)) / 2.0;
  const double q = half_diff * half_diff + m(0, 1) * m(1, 0);
  if (q >= 0.0) {
    const double r = std::sqrt(q);
    return {Complex64(mean + r, 0.0), Complex64(mean - r, 0.0)};
  }
  const double r = std::sqrt(-q);
  return {Complex64(mean, r), Complex64(mean, -r)};
}

// zero-order-hold discretization of a diagonal continuous pair (a, b) at
// step dt: a_bar = exp(a*dt), b_bar = (a_bar - 1)/a * b. a = 0 makes the
// second form singular and is rejected rather than silently linearized.
inline std::pair<Complex64, Complex64> zoh_discretize_diag(Complex64 a, Complex64 b,
                                                           double dt) {
  if (!(dt > 0.0)) throw ParameterRangeError("zoh_discretize_diag: dt must be > 0");
  if (a == Complex64(0.0, 0.0))
    throw SingularTransitionError("zoh_discretize_diag: a = 0 has no ZOH form");
  if (!std::isfinite(a.real()) || !std::isfinite(a.imag()) ||
      !std::isfinite(b.real()) || !std::isfinite(b.imag()))
    throw NumericError("zoh_discretize_diag: non-finite input");
  const Complex64 a_bar = std::exp(a * dt);
  const Complex64 b_bar = (a_bar - 1.0) / a * b;
  return {a_bar, b_bar};
}

}  // namespace silif
