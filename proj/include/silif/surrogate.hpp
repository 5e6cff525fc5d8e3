#pragma once

#include <cmath>

#include "silif/errors.hpp"

namespace silif {

// spike threshold; fixed across all models, never trained
inline constexpr double kTheta = 1.0;

// boxcar pseudo-derivative for the non-differentiable spike. the backward
// pass uses `scale` wherever |v - theta| <= width and zero elsewhere, so the
// integral over v is 2*width*scale.
struct SurrogateSpec {
  double width = 0.5;
  double scale = 0.5;
};

template <typename S>
inline S surrogate_derivative(S v, const SurrogateSpec& spec, S theta) {
  if (!(spec.width > 0.0)) throw ParameterRangeError("surrogate: width must be > 0");
  if (spec.scale < 0.0) throw ParameterRangeError("surrogate: scale must be >= 0");
  return std::abs(v - theta) <= static_cast<S>(spec.width)
             ? static_cast<S>(spec.scale)
             : S(0);
}

// relaxed spike used by the finite-difference harness: the hard step is
// replaced by a clamped ramp rising 0 -> 1 over [theta-width, theta+width].
// its slope 1/(2*width) is also the exact derivative the backward pass must
// use in this mode, so reverse-mode gradients are checkable numerically.
template <typename S>
inline S relaxed_spike(S v, double width, S theta) {
  const S lo = theta - static_cast<S>(width);
  const S x = (v - lo) / static_cast<S>(2.0 * width);
  return x < S(0) ? S(0) : (x > S(1) ? S(1) : x);
}

template <typename S>
inline S relaxed_spike_derivative(S v, double width, S theta) {
  return std::abs(v - theta) <= static_cast<S>(width)
             ? static_cast<S>(1.0 / (2.0 * width))
             : S(0);
}

}  // namespace silif
