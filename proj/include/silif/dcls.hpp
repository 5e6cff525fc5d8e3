#pragma once

#include <cmath>
#include <iostream>
#include <vector>

#include "silif/layers.hpp"
#include "silif/tape.hpp"

// learned per-synapse delays. a synapse with delay d reads its input d steps
// late; during training d is real-valued and the read is softened by a
// gaussian over integer lags so d receives gradient, at eval the delay is
// rounded and applied as an exact shift.

namespace silif {

// gaussian kernel over the tap positions of a delay line of length t_d + 1.
// position p corresponds to lag t_d - 1 - p, so the last position reaches one
// step into the future; it is part of the normalization mass but the causal
// evaluation below never reads it.
template <typename S>
Arr<S> dcls_kernel(S delay, S sigma, int t_d) {
  if (!(sigma > S(0))) throw ParameterRangeError("dcls kernel requires sigma > 0");
  if (t_d < 1) throw ParameterRangeError("dcls kernel requires t_d >= 1");
  Arr<S> k(t_d + 1);
  const S inv = S(1) / (S(2) * sigma * sigma);
  S z = S(0);
  for (int p = 0; p <= t_d; ++p) {
    const S lag = static_cast<S>(t_d - 1 - p);
    k(p) = std::exp(-(lag - delay) * (lag - delay) * inv);
    z += k(p);
  }
  k /= z;
  return k;
}

// anneals the kernel width from t_d/2 down to 0.5 across the first quarter of
// the run, then holds
inline double sigma_schedule(int epoch, int epochs, int t_d) {
  const double s0 = t_d / 2.0;
  const double quarter = epochs / 4.0;
  if (quarter <= 0.0 || epoch >= quarter) return 0.5;
  return s0 + (0.5 - s0) * (epoch / quarter);
}

template <typename S>
class DclsLayer : public Module<S> {
 public:
  DclsLayer(std::string name, Eigen::Index in, Eigen::Index out, int t_d,
            Rng& weight_rng, Rng& delay_rng)
      : name_(std::move(name)), in_(in), out_(out), t_d_(t_d) {
    if (t_d < 1) throw ParameterRangeError(name_ + ": t_d must be >= 1");
    const S bound = static_cast<S>(1.0 / std::sqrt(static_cast<double>(in)));
    w_.resize(out, in);
    d_.resize(out, in);
    for (Eigen::Index r = 0; r < out; ++r)
      for (Eigen::Index c = 0; c < in; ++c)
        w_(r, c) = static_cast<S>(weight_rng.uniform(-bound, bound));
    for (Eigen::Index r = 0; r < out; ++r)
      for (Eigen::Index c = 0; c < in; ++c)
        d_(r, c) = static_cast<S>(delay_rng.uniform(0.0, static_cast<double>(t_d)));
    gw_ = Mat<S>::Zero(out, in);
    gd_ = Mat<S>::Zero(out, in);
    sigma_ = t_d / 2.0;
  }

  void set_sigma(double sigma) {
    if (!(sigma > 0.0)) throw ParameterRangeError(name_ + ": sigma must be > 0");
    sigma_ = sigma;
  }
  double sigma() const { return sigma_; }

  Mat<S> forward(const Mat<S>& x, Pass<S>& pass) override {
    if (x.cols() != in_) throw ShapeError(name_ + ": input width mismatch");
    clamp_delays();
    record_projection(pass.trace, proj_slot_, count_nonzeros(x), x.size());
    const Eigen::Index batch = pass.batch, steps = pass.steps;

    if (pass.mode == Mode::Eval) {
      // integer shifts, grouped so synapses sharing a rounded delay form one product
      Mat<S> y = Mat<S>::Zero(x.rows(), out_);
      for (int dd = 0; dd <= t_d_; ++dd) {
        Mat<S> wd = (d_.array().round() == static_cast<S>(dd))
                        .select(w_, Mat<S>::Zero(out_, in_));
        if ((wd.array() != S(0)).count() == 0) continue;
        const Eigen::Index span = steps - dd;
        if (span <= 0) continue;
        y.bottomRows(span * batch).noalias() +=
            x.topRows(span * batch) * wd.transpose();
      }
      if (pass.tape != nullptr) pass.tape->template push<Cache>(this).eval_only = true;
      return y;
    }

    Mat<S> y = Mat<S>::Zero(x.rows(), out_);
    const std::vector<Mat<S>> kernels = lag_kernels();
    for (int q = 0; q < t_d_; ++q) {
      const Eigen::Index span = steps - q;
      if (span <= 0) break;
      Mat<S> wq = w_.cwiseProduct(kernels[static_cast<std::size_t>(q)]);
      y.bottomRows(span * batch).noalias() += x.topRows(span * batch) * wq.transpose();
    }
    if (pass.tape != nullptr) {
      Cache& c = pass.tape->template push<Cache>(this);
      c.x = x;
      c.batch = batch;
      c.steps = steps;
    }
    return y;
  }

  Mat<S> backward(void* cache, const Mat<S>& gy) override {
    auto* c = static_cast<Cache*>(cache);
    if (c->eval_only) throw ReuseError(name_ + ": eval pass holds no gradients");
    const Eigen::Index batch = c->batch, steps = c->steps;
    const std::vector<Mat<S>> kernels = lag_kernels();
    const S inv_var = static_cast<S>(1.0 / (sigma_ * sigma_));

    // phi = sum over the normalization domain of kappa_r * (r - d) / sigma^2
    Mat<S> phi = Mat<S>::Zero(out_, in_);
    for (int r = -1; r < t_d_; ++r) {
      Mat<S> kr = kernel_at(static_cast<S>(r));
      phi.array() += kr.array() * (static_cast<S>(r) - d_.array()) * inv_var;
    }

    Mat<S> gx = Mat<S>::Zero(gy.rows(), in_);
    for (int q = 0; q < t_d_; ++q) {
      const Eigen::Index span = steps - q;
      if (span <= 0) break;
      const Mat<S>& kq = kernels[static_cast<std::size_t>(q)];
      Mat<S> m = gy.bottomRows(span * batch).transpose() * c->x.topRows(span * batch);
      gw_ += m.cwiseProduct(kq);
      // d kappa_q / d d = kappa_q * ((q - d)/sigma^2 - phi)
      gd_.array() += m.array() * w_.array() * kq.array() *
                     ((static_cast<S>(q) - d_.array()) * inv_var - phi.array());
      gx.topRows(span * batch).noalias() +=
          gy.bottomRows(span * batch) * w_.cwiseProduct(kq);
    }
    return gx;
  }

  void collect_params(std::vector<ParamView<S>>& out) override {
    out.push_back({name_ + ".weight", ParamGroup::Weights, w_.data(), gw_.data(),
                   w_.size()});
    out.push_back({name_ + ".delay", ParamGroup::Delays, d_.data(), gd_.data(),
                   d_.size()});
  }
  void zero_grads() override {
    gw_.setZero();
    gd_.setZero();
  }
  const std::string& name() const override { return name_; }

  Mat<S>& weights() { return w_; }
  Mat<S>& delays() { return d_; }
  int t_d() const { return t_d_; }
  int proj_slot_ = -1;

 private:
  struct Cache {
    Mat<S> x;
    Eigen::Index batch = 0, steps = 0;
    bool eval_only = false;
  };

  void clamp_delays() {
    const S hi = static_cast<S>(t_d_);
    bool clamped = (d_.array() < S(0)).any() || (d_.array() > hi).any();
    if (clamped && !warned_) {
      std::cerr << "warning: " << name_ << " delays clamped to [0, " << t_d_ << "]\n";
      warned_ = true;
    }
    d_ = d_.cwiseMax(S(0)).cwiseMin(hi);
  }

  // kernel matrix at one lag value for every synapse
  Mat<S> kernel_at(S lag) const {
    const S inv = static_cast<S>(1.0 / (2.0 * sigma_ * sigma_));
    Mat<S> z = Mat<S>::Zero(out_, in_);
    for (int r = -1; r < t_d_; ++r)
      z.array() += (-(static_cast<S>(r) - d_.array()).square() * inv).exp();
    return ((-(lag - d_.array()).square() * inv).exp() / z.array()).matrix();
  }

  std::vector<Mat<S>> lag_kernels() const {
    const S inv = static_cast<S>(1.0 / (2.0 * sigma_ * sigma_));
    Mat<S> z = Mat<S>::Zero(out_, in_);
    for (int r = -1; r < t_d_; ++r)
      z.array() += (-(static_cast<S>(r) - d_.array()).square() * inv).exp();
    std::vector<Mat<S>> ks;
    ks.reserve(static_cast<std::size_t>(t_d_));
    for (int q = 0; q < t_d_; ++q)
      ks.push_back(((-(static_cast<S>(q) - d_.array()).square() * inv).exp() /
                    z.array())
                       .matrix());
    return ks;
  }

  std::string name_;
  Eigen::Index in_, out_;
  int t_d_;
  double sigma_;
  Mat<S> w_, d_, gw_, gd_;
  bool warned_ = false;
};

}  // namespace silif
