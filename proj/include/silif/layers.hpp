#pragma once

#include <cmath>
#include <iostream>
#include <vector>

#include "silif/rng.hpp"
#include "silif/tape.hpp"

namespace silif {

template <typename S>
inline std::uint64_t count_nonzeros(const Mat<S>& m) {
  return static_cast<std::uint64_t>((m.array() != S(0)).count());
}

// records activity entering a weight-bearing hop; slots are assigned once at
// network build so repeated forwards accumulate into the same entries
inline void record_projection(RunTrace* trace, int slot, std::uint64_t nonzeros,
                              std::uint64_t total) {
  if (trace == nullptr || slot < 0) return;
  auto& p = trace->projections[static_cast<std::size_t>(slot)];
  p.in_nonzeros += nonzeros;
  p.in_total += total;
}

inline void record_spikes(RunTrace* trace, int slot, std::uint64_t spikes) {
  if (trace == nullptr || slot < 0) return;
  trace->spiking[static_cast<std::size_t>(slot)].spikes += spikes;
}

// ---------------------------------------------------------------------------

template <typename S>
class DenseLayer : public Module<S> {
 public:
  DenseLayer(std::string name, Eigen::Index in, Eigen::Index out, Rng& rng)
      : name_(std::move(name)), w_(out, in), gw_(Mat<S>::Zero(out, in)) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (Eigen::Index r = 0; r < out; ++r)
      for (Eigen::Index c = 0; c < in; ++c)
        w_(r, c) = static_cast<S>(rng.uniform(-bound, bound));
  }

  Mat<S> forward(const Mat<S>& x, Pass<S>& pass) override {
    if (x.cols() != w_.cols())
      throw ShapeError(name_ + ": input has " + std::to_string(x.cols()) +
                       " channels, expected " + std::to_string(w_.cols()));
    record_projection(pass.trace, proj_slot_, count_nonzeros(x),
                      static_cast<std::uint64_t>(x.size()));
    if (pass.tape != nullptr) pass.tape->template push<Cache>(this).x = x;
    return x * w_.transpose();
  }

  Mat<S> backward(void* cache, const Mat<S>& gy) override {
    const Mat<S>& x = static_cast<Cache*>(cache)->x;
    gw_.noalias() += gy.transpose() * x;
    return gy * w_;
  }

  void collect_params(std::vector<ParamView<S>>& out) override {
    out.push_back({name_ + ".w", ParamGroup::Weights, w_.data(), gw_.data(), w_.size()});
  }
  void zero_grads() override { gw_.setZero(); }
  const std::string& name() const override { return name_; }

  Mat<S>& weights() { return w_; }
  int proj_slot_ = -1;

 private:
  struct Cache {
    Mat<S> x;
  };
  std::string name_;
  Mat<S> w_, gw_;
};

// ---------------------------------------------------------------------------
// batch normalization over the flattened batch*time axis, per feature.
// running stats follow the usual convention: biased variance normalizes the
// batch, unbiased variance feeds the running buffer, momentum 0.1.

template <typename S>
class BatchNormLayer : public Module<S> {
 public:
  BatchNormLayer(std::string name, Eigen::Index n)
      : name_(std::move(name)),
        gamma_(Arr<S>::Ones(n)),
        beta_(Arr<S>::Zero(n)),
        g_gamma_(Arr<S>::Zero(n)),
        g_beta_(Arr<S>::Zero(n)),
        running_mean_(Arr<S>::Zero(n)),
        running_var_(Arr<S>::Ones(n)) {}

  Mat<S> forward(const Mat<S>& x, Pass<S>& pass) override {
    if (x.cols() != gamma_.size()) throw ShapeError(name_ + ": feature count mismatch");
    const auto n_rows = static_cast<S>(x.rows());
    if (pass.mode == Mode::Train) {
      if (x.rows() < 2)
        throw ShapeError(name_ + ": training statistics need at least 2 rows");
      Arr<S> mean = x.colwise().mean().transpose().array();
      Arr<S> var = ((x.rowwise() - mean.matrix().transpose()).array().square())
                       .colwise()
                       .mean()
                       .transpose();
      Arr<S> inv_std = (var + static_cast<S>(kEps)).sqrt().inverse();
      Mat<S> xhat =
          ((x.rowwise() - mean.matrix().transpose()).array().rowwise() *
           inv_std.transpose())
              .matrix();
      running_mean_ = (S(1) - static_cast<S>(kMomentum)) * running_mean_ +
                      static_cast<S>(kMomentum) * mean;
      const S unbias = x.rows() > 1 ? n_rows / (n_rows - S(1)) : S(1);
      running_var_ = (S(1) - static_cast<S>(kMomentum)) * running_var_ +
                     static_cast<S>(kMomentum) * var * unbias;
      if (pass.tape != nullptr) {
        auto& c = pass.tape->template push<Cache>(this);
        c.xhat = xhat;
        c.inv_std = inv_std;
      }
      return ((xhat.array().rowwise() * gamma_.transpose()).rowwise() +
              beta_.transpose())
          .matrix();
    }
    Arr<S> inv_std = (running_var_ + static_cast<S>(kEps)).sqrt().inverse();
    return (((x.rowwise() - running_mean_.matrix().transpose()).array().rowwise() *
             (gamma_ * inv_std).transpose())
                .rowwise() +
            beta_.transpose())
        .matrix();
  }

  Mat<S> backward(void* cache, const Mat<S>& gy) override {
    auto* c = static_cast<Cache*>(cache);
    const auto n = static_cast<S>(gy.rows());
    Arr<S> sum_gy = gy.colwise().sum().transpose().array();
    Arr<S> sum_gy_xhat =
        (gy.array() * c->xhat.array()).colwise().sum().transpose();
    g_gamma_ += sum_gy_xhat;
    g_beta_ += sum_gy;
    // gx_i = gamma*inv_std * (gy_i - mean(gy) - xhat_i * mean(gy .* xhat))
    Arr<S> k = gamma_ * c->inv_std;
    return ((gy.array().rowwise() * k.transpose() -
             c->xhat.array().rowwise() * (k * sum_gy_xhat / n).transpose())
                .rowwise() -
            (k * sum_gy / n).transpose())
        .matrix();
  }

  void collect_params(std::vector<ParamView<S>>& out) override {
    out.push_back({name_ + ".gamma", ParamGroup::Weights, gamma_.data(),
                   g_gamma_.data(), gamma_.size()});
    out.push_back({name_ + ".beta", ParamGroup::Weights, beta_.data(),
                   g_beta_.data(), beta_.size()});
  }
  void zero_grads() override {
    g_gamma_.setZero();
    g_beta_.setZero();
  }
  const std::string& name() const override { return name_; }

  Arr<S>& running_mean() { return running_mean_; }
  Arr<S>& running_var() { return running_var_; }

  static constexpr double kEps = 1e-5;
  static constexpr double kMomentum = 0.1;

 private:
  struct Cache {
    Mat<S> xhat;
    Arr<S> inv_std;
  };
  std::string name_;
  Arr<S> gamma_, beta_, g_gamma_, g_beta_;
  Arr<S> running_mean_, running_var_;
};

// ---------------------------------------------------------------------------
// inverted dropout with one mask per (sample, feature), held constant across
// the time axis; eval mode is the identity

template <typename S>
class DropoutLayer : public Module<S> {
 public:
  DropoutLayer(std::string name, double p, Rng rng)
      : name_(std::move(name)), p_(p), rng_(rng) {
    if (p < 0.0 || p >= 1.0) throw ParameterRangeError(name_ + ": p must be in [0, 1)");
  }

  Mat<S> forward(const Mat<S>& x, Pass<S>& pass) override {
    if (pass.mode == Mode::Eval) return x;
    Mat<S> mask(pass.batch, x.cols());
    if (p_ == 0.0) {
      mask.setOnes();
    } else {
      const S keep = static_cast<S>(1.0 / (1.0 - p_));
      for (Eigen::Index b = 0; b < pass.batch; ++b)
        for (Eigen::Index c = 0; c < x.cols(); ++c)
          mask(b, c) = rng_.bernoulli(p_) ? S(0) : keep;
    }
    Mat<S> y(x.rows(), x.cols());
    for (Eigen::Index t = 0; t < pass.steps; ++t)
      y.middleRows(t * pass.batch, pass.batch) =
          x.middleRows(t * pass.batch, pass.batch).cwiseProduct(mask);
    if (pass.tape != nullptr) {
      auto& c = pass.tape->template push<Cache>(this);
      c.mask = std::move(mask);
      c.batch = pass.batch;
    }
    return y;
  }

  Mat<S> backward(void* cache, const Mat<S>& gy) override {
    auto* c = static_cast<Cache*>(cache);
    Mat<S> gx(gy.rows(), gy.cols());
    const Eigen::Index steps = gy.rows() / c->batch;
    for (Eigen::Index t = 0; t < steps; ++t)
      gx.middleRows(t * c->batch, c->batch) =
          gy.middleRows(t * c->batch, c->batch).cwiseProduct(c->mask);
    return gx;
  }

  const std::string& name() const override { return name_; }
  Rng& rng() { return rng_; }

 private:
  struct Cache {
    Mat<S> mask;
    Eigen::Index batch = 0;
  };
  std::string name_;
  double p_;
  Rng rng_;
};

// ---------------------------------------------------------------------------
// leaky-integrator readout: a dense projection followed by per-class leaky
// accumulation u_t = alpha*u_{t-1} + (1-alpha)*i_t, alpha through the same
// log reparametrization as the spiking decays. emits the membrane at every
// step; no spikes, no reset.

template <typename S>
class LiReadoutLayer : public Module<S> {
 public:
  LiReadoutLayer(std::string name, Eigen::Index in, Eigen::Index classes, Rng& rng)
      : name_(std::move(name)),
        w_(classes, in),
        gw_(Mat<S>::Zero(classes, in)),
        lambda_log_(classes),
        g_lambda_log_(Arr<S>::Zero(classes)) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (Eigen::Index r = 0; r < classes; ++r)
      for (Eigen::Index c = 0; c < in; ++c)
        w_(r, c) = static_cast<S>(rng.uniform(-bound, bound));
    // decays spread over the same window as the spiking layers at dt = 1
    for (Eigen::Index r = 0; r < classes; ++r)
      lambda_log_(r) = static_cast<S>(std::log(rng.uniform(1.0 / 25.0, 1.0 / 5.0)));
  }

  Mat<S> forward(const Mat<S>& x, Pass<S>& pass) override {
    if (x.cols() != w_.cols()) throw ShapeError(name_ + ": feature count mismatch");
    record_projection(pass.trace, proj_slot_, count_nonzeros(x),
                      static_cast<std::uint64_t>(x.size()));
    Arr<S> alpha = (-lambda_log_.exp()).exp();
    Mat<S> cur = x * w_.transpose();
    Mat<S> y(cur.rows(), cur.cols());
    Mat<S> u = Mat<S>::Zero(pass.batch, cur.cols());
    Cache* c = nullptr;
    if (pass.tape != nullptr) {
      c = &pass.tape->template push<Cache>(this);
      c->x = x;
      c->cur = cur;
      c->u.reserve(static_cast<std::size_t>(pass.steps) + 1);
      c->u.push_back(u);
      c->alpha = alpha;
      c->batch = pass.batch;
    }
    for (Eigen::Index t = 0; t < pass.steps; ++t) {
      auto cur_t = cur.middleRows(t * pass.batch, pass.batch);
      u = (u.array().rowwise() * alpha.transpose() +
           cur_t.array().rowwise() * (S(1) - alpha).transpose())
              .matrix();
      y.middleRows(t * pass.batch, pass.batch) = u;
      if (c != nullptr) c->u.push_back(u);
    }
    return y;
  }

  Mat<S> backward(void* cache, const Mat<S>& gy) override {
    auto* c = static_cast<Cache*>(cache);
    const Eigen::Index batch = c->batch;
    const Eigen::Index steps = gy.rows() / batch;
    const Arr<S>& alpha = c->alpha;
    Mat<S> gcur(gy.rows(), gy.cols());
    Mat<S> a_u = Mat<S>::Zero(batch, gy.cols());
    Arr<S> g_alpha = Arr<S>::Zero(alpha.size());
    for (Eigen::Index t = steps - 1; t >= 0; --t) {
      a_u = (gy.middleRows(t * batch, batch).array() +
             a_u.array().rowwise() * alpha.transpose())
                .matrix();
      // d u_t / d alpha = u_{t-1} - i_t
      g_alpha += (a_u.array() * (c->u[static_cast<std::size_t>(t)].array() -
                                 c->cur.middleRows(t * batch, batch).array()))
                     .colwise()
                     .sum()
                     .transpose();
      gcur.middleRows(t * batch, batch) =
          (a_u.array().rowwise() * (S(1) - alpha).transpose()).matrix();
    }
    // alpha = exp(-exp(lambda_log)) so d alpha / d lambda_log = alpha*ln(alpha),
    // with the saturated limit alpha -> 0 mapped to 0
    Arr<S> dalpha = alpha.unaryExpr([](S v) { return v > S(0) ? v * std::log(v) : S(0); });
    g_lambda_log_ += g_alpha * dalpha;
    gw_.noalias() += gcur.transpose() * c->x;
    return gcur * w_;
  }

  void collect_params(std::vector<ParamView<S>>& out) override {
    out.push_back({name_ + ".w", ParamGroup::Weights, w_.data(), gw_.data(), w_.size()});
    out.push_back({name_ + ".lambda_log", ParamGroup::Neuron, lambda_log_.data(),
                   g_lambda_log_.data(), lambda_log_.size()});
  }
  void zero_grads() override {
    gw_.setZero();
    g_lambda_log_.setZero();
  }
  const std::string& name() const override { return name_; }

  Mat<S>& weights() { return w_; }
  Arr<S>& lambda_log() { return lambda_log_; }
  int proj_slot_ = -1;

 private:
  struct Cache {
    Mat<S> x, cur;
    std::vector<Mat<S>> u;
    Arr<S> alpha;
    Eigen::Index batch = 0;
  };
  std::string name_;
  Mat<S> w_, gw_;
  Arr<S> lambda_log_, g_lambda_log_;
};

}  // namespace silif
