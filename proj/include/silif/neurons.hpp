#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <vector>

#include "silif/numerics.hpp"
#include "silif/rng.hpp"
#include "silif/surrogate.hpp"

// scalar reference dynamics for all neuron models. the batched layers in
// layers.hpp perform the same arithmetic in the same order over arrays, so
// a single-neuron network must agree with these step functions bit for bit.

namespace silif {

template <typename T>
inline T clamp_val(T v, T lo, T hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

// ---------------------------------------------------------------------------
// SiLIF: adaptive LIF with decays driven through a log-rate, log-step
// reparametrization. alpha = exp(-exp(lambda_log) * exp(dt_log)) keeps every
// decay inside (0, 1) for finite parameters.

struct SiLifParams {
  double lambda_alpha_log = 0.0;
  double lambda_beta_log = 0.0;
  double dt_log = 0.0;
  double a = 0.0;  // subthreshold coupling u -> w
  double b = 0.0;  // spike-triggered adaptation jump
  double a_min = 0.0, a_max = 1.0;
  double b_min = 0.0, b_max = 2.0;
};

struct NeuronState {
  double u = 0.0;
  double w = 0.0;
  double s = 0.0;
};

inline std::pair<double, double> silif_decays(const SiLifParams& p) {
  const double dt = std::exp(p.dt_log);
  const double alpha = std::exp(-std::exp(p.lambda_alpha_log) * dt);
  const double beta = std::exp(-std::exp(p.lambda_beta_log) * dt);
  return {alpha, beta};
}

// one loop body: w first (from the previous u and s), then u against the
// fresh w, then the threshold test
inline NeuronState silif_step(const SiLifParams& p, const NeuronState& st,
                              double input, double theta = kTheta) {
  const auto [alpha, beta] = silif_decays(p);
  const double a = clamp_val(p.a, p.a_min, p.a_max);
  const double b = clamp_val(p.b, p.b_min, p.b_max);
  NeuronState out;
  out.w = beta * st.w + a * st.u + b * st.s;
  out.u = alpha * (st.u - st.s) + (1.0 - alpha) * (input - out.w);
  out.s = out.u >= theta ? 1.0 : 0.0;
  return out;
}

struct SiLifInitRanges {
  double lambda_min = 1.0 / 25.0;  // decay rates at dt0 = 1 land in
  double lambda_max = 1.0 / 5.0;   // [exp(-1/5), exp(-1/25)]
  double a_min = 0.0, a_max = 1.0;
  double b_min = 0.0, b_max = 2.0;
  double dt0 = 1.0;
};

inline std::vector<SiLifParams> init_silif(Rng& rng, int n,
                                           const SiLifInitRanges& r = {}) {
  if (n < 0) throw ParameterRangeError("init_silif: n must be >= 0");
  if (!(r.lambda_min > 0.0) || !(r.lambda_min <= r.lambda_max) || !(r.dt0 > 0.0))
    throw ParameterRangeError("init_silif: bad lambda or dt0 range");
  std::vector<SiLifParams> out(static_cast<std::size_t>(n));
  for (auto& p : out) {
    p.lambda_alpha_log = std::log(rng.uniform(r.lambda_min, r.lambda_max));
    p.lambda_beta_log = std::log(rng.uniform(r.lambda_min, r.lambda_max));
    p.a = rng.uniform(r.a_min, r.a_max);
    p.b = rng.uniform(r.b_min, r.b_max);
    p.dt_log = std::log(r.dt0);
    p.a_min = r.a_min;
    p.a_max = r.a_max;
    p.b_min = r.b_min;
    p.b_max = r.b_max;
  }
  return out;
}

// ---------------------------------------------------------------------------
// C-SiLIF: single complex state, diagonal transition alpha = exp(lambda*dt)
// with lambda = -exp(lambda_real_log) + i*lambda_img. the readout gain is a
// frozen 2, i.e. the spike condition compares 2*Re(u) against theta.

struct CSiLifParams {
  double lambda_real_log = std::log(0.5);
  double lambda_img = std::numbers::pi;
  double dt_log = 0.0;
  double b = 1.0;  // real input gain, drives only Re(u)
};

inline constexpr double kCsilifReadoutGain = 2.0;

struct CSiLifState {
  Complex64 u{0.0, 0.0};
  double s = 0.0;
};

inline Complex64 csilif_alpha(const CSiLifParams& p) {
  const double dt = std::exp(p.dt_log);
  const Complex64 lambda(-std::exp(p.lambda_real_log), p.lambda_img);
  return std::exp(lambda * dt);
}

inline CSiLifState csilif_step(const CSiLifParams& p, const CSiLifState& st,
                               double input, double theta = kTheta) {
  const Complex64 alpha = csilif_alpha(p);
  CSiLifState out;
  out.u = alpha * (st.u - 0.5 * st.s) + p.b * input;
  out.s = kCsilifReadoutGain * out.u.real() >= theta ? 1.0 : 0.0;
  return out;
}

inline std::vector<CSiLifParams> init_csilif(Rng& rng, int n, double dt_min,
                                             double dt_max) {
  if (n < 0) throw ParameterRangeError("init_csilif: n must be >= 0");
  if (!(dt_min > 0.0) || !(dt_min <= dt_max))
    throw ParameterRangeError("init_csilif: need 0 < dt_min <= dt_max");
  std::vector<CSiLifParams> out(static_cast<std::size_t>(n));
  for (auto& p : out) {
    p.lambda_real_log = std::log(0.5);
    p.lambda_img = std::numbers::pi;
    p.dt_log = std::log(rng.log_uniform(dt_min, dt_max));
    p.b = rng.uniform(0.0, 1.0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// AdLIF: the raw adaptive LIF. both state variables update from the previous
// step's values, and the reset is a subtractive -theta * s.

struct AdLifParams {
  double alpha = 0.9;
  double beta = 0.9;
  double a = 0.0;
  double b = 0.0;
  double alpha_min = 0.36, alpha_max = 0.96;
  double beta_min = 0.36, beta_max = 0.98;
  double a_min = -1.0, a_max = 1.0;  // [0, 1] for the constrained variant
  double b_min = 0.0, b_max = 2.0;
};

inline AdLifParams cadlif_defaults() {
  AdLifParams p;
  p.a_min = 0.0;
  return p;
}

inline NeuronState adlif_step(const AdLifParams& p, const NeuronState& st,
                              double input, double theta = kTheta) {
  const double alpha = clamp_val(p.alpha, p.alpha_min, p.alpha_max);
  const double beta = clamp_val(p.beta, p.beta_min, p.beta_max);
  const double a = clamp_val(p.a, p.a_min, p.a_max);
  const double b = clamp_val(p.b, p.b_min, p.b_max);
  NeuronState out;
  out.u = alpha * st.u + (1.0 - alpha) * (input - st.w) - theta * st.s;
  out.w = beta * st.w + a * st.u + b * st.s;
  out.s = out.u >= theta ? 1.0 : 0.0;
  return out;
}

inline std::vector<AdLifParams> init_adlif(Rng& rng, int n,
                                           bool constrain_a = false) {
  if (n < 0) throw ParameterRangeError("init_adlif: n must be >= 0");
  std::vector<AdLifParams> out(static_cast<std::size_t>(n),
                               constrain_a ? cadlif_defaults() : AdLifParams{});
  for (auto& p : out) {
    p.alpha = rng.uniform(p.alpha_min, p.alpha_max);
    p.beta = rng.uniform(p.beta_min, p.beta_max);
    p.a = rng.uniform(p.a_min, p.a_max);
    p.b = rng.uniform(p.b_min, p.b_max);
  }
  return out;
}

// ---------------------------------------------------------------------------
// RF: resonate-and-fire with a forward-Euler complex oscillator. the
// discrete transition is 1 + dt*(alpha_real + i*alpha_img); nothing in the
// parametrization keeps its magnitude below 1.

struct RfParams {
  double alpha_real = -0.5;
  double alpha_img = 1.0;
  double dt = 0.04;
};

struct RfState {
  Complex64 u{0.0, 0.0};
  double s = 0.0;
};

inline RfState rf_step(const RfParams& p, const RfState& st, double input,
                       double theta = kTheta) {
  const Complex64 alpha(p.alpha_real, p.alpha_img);
  RfState out;
  out.u = st.u + p.dt * (alpha * st.u + input) - theta * st.s;
  out.s = out.u.real() >= theta ? 1.0 : 0.0;
  return out;
}

inline Complex64 rf_transition(const RfParams& p) {
  return Complex64(1.0 + p.dt * p.alpha_real, p.dt * p.alpha_img);
}

inline std::vector<RfParams> init_rf(Rng& rng, int n, double dt = 0.04) {
  if (n < 0) throw ParameterRangeError("init_rf: n must be >= 0");
  if (!(dt > 0.0)) throw ParameterRangeError("init_rf: dt must be > 0");
  std::vector<RfParams> out(static_cast<std::size_t>(n));
  for (auto& p : out) {
    p.alpha_real = rng.uniform(-1.0, -0.1);
    p.alpha_img = rng.uniform(0.0, std::numbers::pi);
    p.dt = dt;
  }
  return out;
}

// ---------------------------------------------------------------------------
// subthreshold state-space export: x_t = a_bar x_{t-1} + b_bar i_t,
// y_t = c_bar x_t + d_bar i_t with x = [u; w].

struct SsmMatrices {
  Eigen::Matrix2d a_bar;
  Eigen::Vector2d b_bar;
  Eigen::RowVector2d c_bar;
  double d_bar = 0.0;
};

// AdLIF updates u and w simultaneously from the previous state, so the rows
// read directly off the update equations.
inline SsmMatrices subthreshold_matrices(const AdLifParams& p) {
  const double alpha = clamp_val(p.alpha, p.alpha_min, p.alpha_max);
  const double beta = clamp_val(p.beta, p.beta_min, p.beta_max);
  const double a = clamp_val(p.a, p.a_min, p.a_max);
  SsmMatrices m;
  m.a_bar << alpha, alpha - 1.0, a, beta;
  m.b_bar << 1.0 - alpha, 0.0;
  m.c_bar << 1.0, 0.0;
  m.d_bar = 0.0;
  return m;
}

// SiLIF updates w before u within a step, so u's row must fold the fresh w
// back into the previous state: u_t depends on u_{t-1} through both alpha
// and -(1-alpha)*a, and on w_{t-1} through -(1-alpha)*beta.
inline SsmMatrices subthreshold_matrices(const SiLifParams& p) {
  const auto [alpha, beta] = silif_decays(p);
  const double a = clamp_val(p.a, p.a_min, p.a_max);
  SsmMatrices m;
  m.a_bar << alpha - (1.0 - alpha) * a, -(1.0 - alpha) * beta, a, beta;
  m.b_bar << 1.0 - alpha, 0.0;
  m.c_bar << 1.0, 0.0;
  m.d_bar = 0.0;
  return m;
}

// analysis-side transition matrix shared by SiLIF and AdLIF spectra: the
// coupled form [[alpha, alpha-1], [a, beta]] whose discriminant
// (alpha-beta)^2 + 4a(alpha-1) separates integrators from resonators.
inline Eigen::Matrix2d coupled_transition(double alpha, double beta, double a) {
  Eigen::Matrix2d m;
  m << alpha, alpha - 1.0, a, beta;
  return m;
}

inline std::vector<double> ssm_run(const SsmMatrices& m,
                                   const std::vector<double>& input,
                                   Eigen::Vector2d x0 = Eigen::Vector2d::Zero()) {
  std::vector<double> y;
  y.reserve(input.size());
  Eigen::Vector2d x = x0;
  for (double i_t : input) {
    x = m.a_bar * x + m.b_bar * i_t;
    y.push_back(m.c_bar * x + m.d_bar * i_t);
  }
  return y;
}

}  // namespace silif
