#pragma once

#include <cmath>
#include <vector>

#include "silif/neurons.hpp"
#include "silif/tape.hpp"

// batched spiking layers. each forward performs the same arithmetic as the
// scalar step functions in neurons.hpp, vectorized over (batch, neuron), and
// each backward is the exact adjoint of that loop including the recurrence
// through membrane, adaptation and (unless detached) the reset path.

namespace silif {

// spike nonlinearity shared by the spiking layers. `v` is whatever the model
// compares against theta (u, or 2*Re(u) for the complex model).
template <typename S>
struct SpikeFn {
  SpikeMode mode = SpikeMode::Binary;
  SurrogateSpec surr;

  Mat<S> fire(const Mat<S>& v) const {
    switch (mode) {
      case SpikeMode::Binary:
        return (v.array() >= static_cast<S>(kTheta)).template cast<S>();
      case SpikeMode::Relaxed: {
        const S lo = static_cast<S>(kTheta - surr.width);
        const S inv = static_cast<S>(1.0 / (2.0 * surr.width));
        return ((v.array() - lo) * inv).cwiseMax(S(0)).cwiseMin(S(1)).matrix();
      }
      case SpikeMode::Linear:
        return Mat<S>::Zero(v.rows(), v.cols());
    }
    return {};
  }

  // d spike / d v; the backward factor the spike path routes through
  Mat<S> slope(const Mat<S>& v) const {
    switch (mode) {
      case SpikeMode::Binary:
        return ((v.array() - static_cast<S>(kTheta)).abs() <=
                static_cast<S>(surr.width))
                   .template cast<S>() *
               static_cast<S>(surr.scale);
      case SpikeMode::Relaxed:
        return ((v.array() - static_cast<S>(kTheta)).abs() <=
                static_cast<S>(surr.width))
                   .template cast<S>() *
               static_cast<S>(1.0 / (2.0 * surr.width));
      case SpikeMode::Linear:
        return Mat<S>::Zero(v.rows(), v.cols());
    }
    return {};
  }
};

template <typename S>
inline Mat<S> random_state(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Mat<S> m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = static_cast<S>(rng.next_double());
  return m;
}

// d alpha / d lambda_log for alpha = exp(-exp(lambda_log + ...)): alpha*ln(alpha),
// continued with 0 at the saturated endpoints
template <typename S>
inline Arr<S> decay_log_slope(const Arr<S>& alpha) {
  return alpha.unaryExpr([](S v) { return v > S(0) ? v * std::log(v) : S(0); });
}

struct NeuronLayerOpts {
  SpikeMode spike_mode = SpikeMode::Binary;
  SurrogateSpec surrogate;
  bool detach_reset = false;
  StateInit state_init = StateInit::Zero;
};

// ---------------------------------------------------------------------------

template <typename S>
class SiLifLayer : public Module<S> {
 public:
  SiLifLayer(std::string name, const std::vector<SiLifParams>& init,
             const NeuronLayerOpts& opts, Rng state_rng)
      : name_(std::move(name)),
        opts_(opts),
        state_rng_(state_rng),
        n_(static_cast<Eigen::Index>(init.size())) {
    la_log_.resize(n_), lb_log_.resize(n_), dt_log_.resize(n_), a_.resize(n_), b_.resize(n_);
    for (Eigen::Index i = 0; i < n_; ++i) {
      const auto& p = init[static_cast<std::size_t>(i)];
      la_log_(i) = static_cast<S>(p.lambda_alpha_log);
      lb_log_(i) = static_cast<S>(p.lambda_beta_log);
      dt_log_(i) = static_cast<S>(p.dt_log);
      a_(i) = static_cast<S>(p.a);
      b_(i) = static_cast<S>(p.b);
    }
    if (!init.empty()) {
      a_min_ = init[0].a_min, a_max_ = init[0].a_max;
      b_min_ = init[0].b_min, b_max_ = init[0].b_max;
    }
    g_la_log_ = g_lb_log_ = g_dt_log_ = g_a_ = g_b_ = Arr<S>::Zero(n_);
  }

  Mat<S> forward(const Mat<S>& x, Pass<S>& pass) override {
    if (x.cols() != n_) throw ShapeError(name_ + ": feature count mismatch");
    a_ = a_.cwiseMax(static_cast<S>(a_min_)).cwiseMin(static_cast<S>(a_max_));
    b_ = b_.cwiseMax(static_cast<S>(b_min_)).cwiseMin(static_cast<S>(b_max_));
    Arr<S> alpha = (-(la_log_ + dt_log_).exp()).exp();
    Arr<S> beta = (-(lb_log_ + dt_log_).exp()).exp();

    const Eigen::Index batch = pass.batch, steps = pass.steps;
    Mat<S> u, w, s;
    if (pass.mode == Mode::Train && opts_.state_init == StateInit::RandomTrain) {
      u = random_state<S>(state_rng_, batch, n_);
      w = random_state<S>(state_rng_, batch, n_);
      s = random_state<S>(state_rng_, batch, n_);
    } else {
      u = w = s = Mat<S>::Zero(batch, n_);
    }

    Cache* c = nullptr;
    if (pass.tape != nullptr) {
      c = &pass.tape->template push<Cache>(this);
      c->in = x;
      c->alpha = alpha;
      c->beta = beta;
      c->batch = batch;
      c->u.reserve(static_cast<std::size_t>(steps) + 1);
      c->w.reserve(static_cast<std::size_t>(steps) + 1);
      c->s.reserve(static_cast<std::size_t>(steps) + 1);
      c->u.push_back(u), c->w.push_back(w), c->s.push_back(s);
    }

    SpikeFn<S> fn{opts_.spike_mode, opts_.surrogate};
    Mat<S> out(x.rows(), n_);
    for (Eigen::Index t = 0; t < steps; ++t) {
      auto x_t = x.middleRows(t * batch, batch);
      w = (w.array().rowwise() * beta.transpose() +
           u.array().rowwise() * a_.transpose() +
           s.array().rowwise() * b_.transpose())
              .matrix();
      u = ((u - s).array().rowwise() * alpha.transpose() +
           (x_t - w).array().rowwise() * (S(1) - alpha).transpose())
              .matrix();
      s = fn.fire(u);
      out.middleRows(t * batch, batch) = opts_.spike_mode == SpikeMode::Linear ? u : s;
      if (c != nullptr) c->u.push_back(u), c->w.push_back(w), c->s.push_back(s);
    }
    record_spikes(pass.trace, spike_slot_, count_nonzeros(out));
    return out;
  }

  Mat<S> backward(void* cache, const Mat<S>& gy) override {
    auto* c = static_cast<Cache*>(cache);
    const Eigen::Index batch = c->batch;
    const Eigen::Index steps = gy.rows() / batch;
    const Arr<S>&alpha = c->alpha, &beta = c->beta;
    const bool spike_out = opts_.spike_mode != SpikeMode::Linear;
    SpikeFn<S> fn{opts_.spike_mode, opts_.surrogate};

    Mat<S> au = Mat<S>::Zero(batch, n_);  // adjoint of u_{t+1}
    Mat<S> aw = Mat<S>::Zero(batch, n_);  // adjoint of w_{t+1}
    Arr<S> g_alpha = Arr<S>::Zero(n_), g_beta = Arr<S>::Zero(n_);
    Mat<S> gx(gy.rows(), n_);

    for (Eigen::Index t = steps - 1; t >= 0; --t) {
      auto gy_t = gy.middleRows(t * batch, batch);
      auto x_t = c->in.middleRows(t * batch, batch);
      const Mat<S>&u_t = c->u[static_cast<std::size_t>(t + 1)],
            &u_p = c->u[static_cast<std::size_t>(t)];
      const Mat<S>&w_t = c->w[static_cast<std::size_t>(t + 1)],
            &w_p = c->w[static_cast<std::size_t>(t)];
      const Mat<S>& s_p = c->s[static_cast<std::size_t>(t)];

      // every use of s_t: layer output, adaptation jump, and (detachable) reset
      Mat<S> as = spike_out ? Mat<S>(gy_t) : Mat<S>(Mat<S>::Zero(batch, n_));
      if (t < steps - 1) {
        as.array() += aw.array().rowwise() * b_.transpose();
        if (!opts_.detach_reset) as.array() -= au.array().rowwise() * alpha.transpose();
      }
      Mat<S> au_t = (fn.slope(u_t).array() * as.array() +
                     au.array().rowwise() * alpha.transpose() +
                     aw.array().rowwise() * a_.transpose())
                        .matrix();
      if (!spike_out) au_t += gy_t;
      Mat<S> aw_t = (aw.array().rowwise() * beta.transpose() -
                     au_t.array().rowwise() * (S(1) - alpha).transpose())
                        .matrix();

      g_alpha += (au_t.array() * ((u_p - s_p).array() - (x_t - w_t).array()))
                     .colwise()
                     .sum()
                     .transpose();
      g_beta += (aw_t.array() * w_p.array()).colwise().sum().transpose();
      g_a_ += (aw_t.array() * u_p.array()).colwise().sum().transpose();
      g_b_ += (aw_t.array() * s_p.array()).colwise().sum().transpose();
      gx.middleRows(t * batch, batch) =
          (au_t.array().rowwise() * (S(1) - alpha).transpose()).matrix();
      au = std::move(au_t);
      aw = std::move(aw_t);
    }
    Arr<S> da = decay_log_slope(alpha), db = decay_log_slope(beta);
    g_la_log_ += g_alpha * da;
    g_lb_log_ += g_beta * db;
    g_dt_log_ += g_alpha * da + g_beta * db;
    return gx;
  }

  void collect_params(std::vector<ParamView<S>>& out) override {
    out.push_back({name_ + ".lambda_alpha_log", ParamGroup::Neuron, la_log_.data(),
                   g_la_log_.data(), n_});
    out.push_back({name_ + ".lambda_beta_log", ParamGroup::Neuron, lb_log_.data(),
                   g_lb_log_.data(), n_});
    out.push_back({name_ + ".dt_log", ParamGroup::Neuron, dt_log_.data(),
                   g_dt_log_.data(), n_});
    out.push_back({name_ + ".a", ParamGroup::Neuron, a_.data(), g_a_.data(), n_});
    out.push_back({name_ + ".b", ParamGroup::Neuron, b_.data(), g_b_.data(), n_});
  }
  void zero_grads() override {
    g_la_log_.setZero(), g_lb_log_.setZero(), g_dt_log_.setZero();
    g_a_.setZero(), g_b_.setZero();
  }
  const std::string& name() const override { return name_; }

  std::pair<Arr<S>, Arr<S>> decays() const {
    return {(-(la_log_ + dt_log_).exp()).exp(), (-(lb_log_ + dt_log_).exp()).exp()};
  }
  const Arr<S>& coupling_a() const { return a_; }
  Rng& state_rng() { return state_rng_; }
  int spike_slot_ = -1;

 private:
  struct Cache {
    Mat<S> in;
    std::vector<Mat<S>> u, w, s;  // index 0 holds the initial state
    Arr<S> alpha, beta;
    Eigen::Index batch = 0;
  };
  std::string name_;
  NeuronLayerOpts opts_;
  Rng state_rng_;
  Eigen::Index n_;
  Arr<S> la_log_, lb_log_, dt_log_, a_, b_;
  Arr<S> g_la_log_, g_lb_log_, g_dt_log_, g_a_, g_b_;
  double a_min_ = 0.0, a_max_ = 1.0, b_min_ = 0.0, b_max_ = 2.0;
};

// ---------------------------------------------------------------------------

template <typename S>
class CSiLifLayer : public Module<S> {
 public:
  CSiLifLayer(std::string name, const std::vector<CSiLifParams>& init,
              const NeuronLayerOpts& opts, Rng state_rng)
      : name_(std::move(name)),
        opts_(opts),
        state_rng_(state_rng),
        n_(static_cast<Eigen::Index>(init.size())) {
    lr_log_.resize(n_), li_.resize(n_), dt_log_.resize(n_), b_.resize(n_);
    for (Eigen::Index i = 0; i < n_; ++i) {
      const auto& p = init[static_cast<std::size_t>(i)];
      lr_log_(i) = static_cast<S>(p.lambda_real_log);
      li_(i) = static_cast<S>(p.lambda_img);
      dt_log_(i) = static_cast<S>(p.dt_log);
      b_(i) = static_cast<S>(p.b);
    }
    g_lr_log_ = g_li_ = g_dt_log_ = g_b_ = Arr<S>::Zero(n_);
  }

  Mat<S> forward(const Mat<S>& x, Pass<S>& pass) override {
    if (x.cols() != n_) throw ShapeError(name_ + ": feature count mismatch");
    Arr<S> dt = dt_log_.exp();
    Arr<S> mag = ((-lr_log_.exp()) * dt).exp();  // |alpha| = exp(-exp(lr_log)*dt)
    Arr<S> are = mag * (li_ * dt).cos();
    Arr<S> aim = mag * (li_ * dt).sin();

    const Eigen::Index batch = pass.batch, steps = pass.steps;
    Mat<S> ure, uim, s;
    if (pass.mode == Mode::Train && opts_.state_init == StateInit::RandomTrain) {
      ure = random_state<S>(state_rng_, batch, n_);
      uim = random_state<S>(state_rng_, batch, n_);
      s = random_state<S>(state_rng_, batch, n_);
    } else {
      ure = uim = s = Mat<S>::Zero(batch, n_);
    }

    Cache* c = nullptr;
    if (pass.tape != nullptr) {
      c = &pass.tape->template push<Cache>(this);
      c->in = x;
      c->are = are;
      c->aim = aim;
      c->batch = batch;
      c->ure.push_back(ure), c->uim.push_back(uim), c->s.push_back(s);
    }

    SpikeFn<S> fn{opts_.spike_mode, opts_.surrogate};
    const S gain = static_cast<S>(kCsilifReadoutGain);
    Mat<S> out(x.rows(), n_);
    for (Eigen::Index t = 0; t < steps; ++t) {
      auto x_t = x.middleRows(t * batch, batch);
      Mat<S> vre = ure - S(0.5) * s;
      Mat<S> ure_n = (vre.array().rowwise() * are.transpose() -
                      uim.array().rowwise() * aim.transpose() +
                      x_t.array().rowwise() * b_.transpose())
                         .matrix();
      uim = (vre.array().rowwise() * aim.transpose() +
             uim.array().rowwise() * are.transpose())
                .matrix();
      ure = std::move(ure_n);
      Mat<S> m = gain * ure;
      s = fn.fire(m);
      out.middleRows(t * batch, batch) = opts_.spike_mode == SpikeMode::Linear ? m : s;
      if (c != nullptr) c->ure.push_back(ure), c->uim.push_back(uim), c->s.push_back(s);
    }
    record_spikes(pass.trace, spike_slot_, count_nonzeros(out));
    return out;
  }

  Mat<S> backward(void* cache, const Mat<S>& gy) override {
    auto* c = static_cast<Cache*>(cache);
    const Eigen::Index batch = c->batch;
    const Eigen::Index steps = gy.rows() / batch;
    const Arr<S>&are = c->are, &aim = c->aim;
    const bool spike_out = opts_.spike_mode != SpikeMode::Linear;
    SpikeFn<S> fn{opts_.spike_mode, opts_.surrogate};
    const S gain = static_cast<S>(kCsilifReadoutGain);

    Mat<S> a_re = Mat<S>::Zero(batch, n_), a_im = Mat<S>::Zero(batch, n_);
    Arr<S> g_are = Arr<S>::Zero(n_), g_aim = Arr<S>::Zero(n_);
    Mat<S> gx(gy.rows(), n_);

    for (Eigen::Index t = steps - 1; t >= 0; --t) {
      auto gy_t = gy.middleRows(t * batch, batch);
      auto x_t = c->in.middleRows(t * batch, batch);
      const Mat<S>& ure_t = c->ure[static_cast<std::size_t>(t + 1)];
      Mat<S> vre = c->ure[static_cast<std::size_t>(t)] -
                   S(0.5) * c->s[static_cast<std::size_t>(t)];
      const Mat<S>&vim = c->uim[static_cast<std::size_t>(t)];

      Mat<S> as = spike_out ? Mat<S>(gy_t) : Mat<S>(Mat<S>::Zero(batch, n_));
      if (t < steps - 1 && !opts_.detach_reset)
        as.array() -= S(0.5) * (a_re.array().rowwise() * are.transpose() +
                                a_im.array().rowwise() * aim.transpose());
      Mat<S> slope = fn.slope(gain * ure_t);  // d s / d (gain*ure)
      Mat<S> are_t = (gain * slope.array() * as.array() +
                      a_re.array().rowwise() * are.transpose() +
                      a_im.array().rowwise() * aim.transpose())
                         .matrix();
      if (!spike_out) are_t += gain * gy_t;
      Mat<S> aim_t = (a_im.array().rowwise() * are.transpose() -
                      a_re.array().rowwise() * aim.transpose())
                         .matrix();

      g_are += (are_t.array() * vre.array() + aim_t.array() * vim.array())
                   .colwise()
                   .sum()
                   .transpose();
      g_aim += (aim_t.array() * vre.array() - are_t.array() * vim.array())
                   .colwise()
                   .sum()
                   .transpose();
      g_b_ += (are_t.array() * x_t.array()).colwise().sum().transpose();
      gx.middleRows(t * batch, batch) =
          (are_t.array().rowwise() * b_.transpose()).matrix();
      a_re = std::move(are_t);
      a_im = std::move(aim_t);
    }

    // alpha = exp((-exp(lr_log) + i*li)*dt) with dt = exp(dt_log)
    Arr<S> dt = dt_log_.exp();
    Arr<S> c1 = (-lr_log_.exp()) * dt;
    g_lr_log_ += (g_are * are + g_aim * aim) * c1;
    g_li_ += (g_aim * are - g_are * aim) * dt;
    g_dt_log_ += g_are * (are * c1 - aim * li_ * dt) + g_aim * (aim * c1 + are * li_ * dt);
    return gx;
  }

  void collect_params(std::vector<ParamView<S>>& out) override {
    out.push_back({name_ + ".lambda_real_log", ParamGroup::Neuron, lr_log_.data(),
                   g_lr_log_.data(), n_});
    out.push_back({name_ + ".lambda_img", ParamGroup::Neuron, li_.data(), g_li_.data(), n_});
    out.push_back({name_ + ".dt_log", ParamGroup::Neuron, dt_log_.data(),
                   g_dt_log_.data(), n_});
    out.push_back({name_ + ".b", ParamGroup::Neuron, b_.data(), g_b_.data(), n_});
  }
  void zero_grads() override {
    g_lr_log_.setZero(), g_li_.setZero(), g_dt_log_.setZero(), g_b_.setZero();
  }
  const std::string& name() const override { return name_; }

  // per-neuron complex transition values
  std::pair<Arr<S>, Arr<S>> transition() const {
    Arr<S> dt = dt_log_.exp();
    Arr<S> mag = ((-lr_log_.exp()) * dt).exp();
    return {mag * (li_ * dt).cos(), mag * (li_ * dt).sin()};
  }
  Rng& state_rng() { return state_rng_; }
  int spike_slot_ = -1;

 private:
  struct Cache {
    Mat<S> in;
    std::vector<Mat<S>> ure, uim, s;
    Arr<S> are, aim;
    Eigen::Index batch = 0;
  };
  std::string name_;
  NeuronLayerOpts opts_;
  Rng state_rng_;
  Eigen::Index n_;
  Arr<S> lr_log_, li_, dt_log_, b_;
  Arr<S> g_lr_log_, g_li_, g_dt_log_, g_b_;
};

// ---------------------------------------------------------------------------

template <typename S>
class AdLifLayer : public Module<S> {
 public:
  AdLifLayer(std::string name, const std::vector<AdLifParams>& init,
             const NeuronLayerOpts& opts, Rng state_rng)
      : name_(std::move(name)),
        opts_(opts),
        state_rng_(state_rng),
        n_(static_cast<Eigen::Index>(init.size())) {
    alpha_.resize(n_), beta_.resize(n_), a_.resize(n_), b_.resize(n_);
    for (Eigen::Index i = 0; i < n_; ++i) {
      const auto& p = init[static_cast<std::size_t>(i)];
      alpha_(i) = static_cast<S>(p.alpha);
      beta_(i) = static_cast<S>(p.beta);
      a_(i) = static_cast<S>(p.a);
      b_(i) = static_cast<S>(p.b);
    }
    if (!init.empty()) bounds_ = init[0];
    g_alpha_ = g_beta_ = g_a_ = g_b_ = Arr<S>::Zero(n_);
  }

  Mat<S> forward(const Mat<S>& x, Pass<S>& pass) override {
    if (x.cols() != n_) throw ShapeError(name_ + ": feature count mismatch");
    alpha_ = alpha_.cwiseMax(static_cast<S>(bounds_.alpha_min))
                 .cwiseMin(static_cast<S>(bounds_.alpha_max));
    beta_ = beta_.cwiseMax(static_cast<S>(bounds_.beta_min))
                .cwiseMin(static_cast<S>(bounds_.beta_max));
    a_ = a_.cwiseMax(static_cast<S>(bounds_.a_min)).cwiseMin(static_cast<S>(bounds_.a_max));
    b_ = b_.cwiseMax(static_cast<S>(bounds_.b_min)).cwiseMin(static_cast<S>(bounds_.b_max));

    const Eigen::Index batch = pass.batch, steps = pass.steps;
    const S theta_reset =
        opts_.spike_mode == SpikeMode::Linear ? S(0) : static_cast<S>(kTheta);
    Mat<S> u, w, s;
    if (pass.mode == Mode::Train && opts_.state_init == StateInit::RandomTrain) {
      u = random_state<S>(state_rng_, batch, n_);
      w = random_state<S>(state_rng_, batch, n_);
      s = random_state<S>(state_rng_, batch, n_);
    } else {
      u = w = s = Mat<S>::Zero(batch, n_);
    }

    Cache* c = nullptr;
    if (pass.tape != nullptr) {
      c = &pass.tape->template push<Cache>(this);
      c->in = x;
      c->batch = batch;
      c->u.push_back(u), c->w.push_back(w), c->s.push_back(s);
    }

    SpikeFn<S> fn{opts_.spike_mode, opts_.surrogate};
    Mat<S> out(x.rows(), n_);
    for (Eigen::Index t = 0; t < steps; ++t) {
      auto x_t = x.middleRows(t * batch, batch);
      // u and w both read the previous step's state
      Mat<S> u_n = (u.array().rowwise() * alpha_.transpose() +
                    (x_t - w).array().rowwise() * (S(1) - alpha_).transpose() -
                    theta_reset * s.array())
                       .matrix();
      w = (w.array().rowwise() * beta_.transpose() +
           u.array().rowwise() * a_.transpose() +
           s.array().rowwise() * b_.transpose())
              .matrix();
      u = std::move(u_n);
      s = fn.fire(u);
      out.middleRows(t * batch, batch) = opts_.spike_mode == SpikeMode::Linear ? u : s;
      if (c != nullptr) c->u.push_back(u), c->w.push_back(w), c->s.push_back(s);
    }
    record_spikes(pass.trace, spike_slot_, count_nonzeros(out));
    return out;
  }

  Mat<S> backward(void* cache, const Mat<S>& gy) override {
    auto* c = static_cast<Cache*>(cache);
    const Eigen::Index batch = c->batch;
    const Eigen::Index steps = gy.rows() / batch;
    const bool spike_out = opts_.spike_mode != SpikeMode::Linear;
    const S theta_reset = spike_out ? static_cast<S>(kTheta) : S(0);
    SpikeFn<S> fn{opts_.spike_mode, opts_.surrogate};

    Mat<S> au = Mat<S>::Zero(batch, n_), aw = Mat<S>::Zero(batch, n_);
    Mat<S> gx(gy.rows(), n_);

    for (Eigen::Index t = steps - 1; t >= 0; --t) {
      auto gy_t = gy.middleRows(t * batch, batch);
      auto x_t = c->in.middleRows(t * batch, batch);
      const Mat<S>&u_t = c->u[static_cast<std::size_t>(t + 1)],
            &u_p = c->u[static_cast<std::size_t>(t)];
      const Mat<S>& w_p = c->w[static_cast<std::size_t>(t)];
      const Mat<S>& s_p = c->s[static_cast<std::size_t>(t)];

      Mat<S> as = spike_out ? Mat<S>(gy_t) : Mat<S>(Mat<S>::Zero(batch, n_));
      if (t < steps - 1) {
        as.array() += aw.array().rowwise() * b_.transpose();
        if (!opts_.detach_reset) as.array() -= theta_reset * au.array();
      }
      Mat<S> au_t = (fn.slope(u_t).array() * as.array() +
                     au.array().rowwise() * alpha_.transpose() +
                     aw.array().rowwise() * a_.transpose())
                        .matrix();
      if (!spike_out) au_t += gy_t;
      // w_t feeds only the next step: u_{t+1} with -(1-alpha) and w_{t+1} with beta
      Mat<S> aw_t = (aw.array().rowwise() * beta_.transpose() -
                     au.array().rowwise() * (S(1) - alpha_).transpose())
                        .matrix();

      g_alpha_ += (au_t.array() * (u_p.array() - (x_t - w_p).array()))
                      .colwise()
                      .sum()
                      .transpose();
      g_beta_ += (aw_t.array() * w_p.array()).colwise().sum().transpose();
      g_a_ += (aw_t.array() * u_p.array()).colwise().sum().transpose();
      g_b_ += (aw_t.array() * s_p.array()).colwise().sum().transpose();
      gx.middleRows(t * batch, batch) =
          (au_t.array().rowwise() * (S(1) - alpha_).transpose()).matrix();
      au = std::move(au_t);
      aw = std::move(aw_t);
    }
    return gx;
  }

  void collect_params(std::vector<ParamView<S>>& out) override {
    out.push_back({name_ + ".alpha", ParamGroup::Neuron, alpha_.data(),
                   g_alpha_.data(), n_});
    out.push_back({name_ + ".beta", ParamGroup::Neuron, beta_.data(), g_beta_.data(), n_});
    out.push_back({name_ + ".a", ParamGroup::Neuron, a_.data(), g_a_.data(), n_});
    out.push_back({name_ + ".b", ParamGroup::Neuron, b_.data(), g_b_.data(), n_});
  }
  void zero_grads() override {
    g_alpha_.setZero(), g_beta_.setZero(), g_a_.setZero(), g_b_.setZero();
  }
  const std::string& name() const override { return name_; }

  const Arr<S>& alpha() const { return alpha_; }
  const Arr<S>& beta() const { return beta_; }
  const Arr<S>& coupling_a() const { return a_; }
  Rng& state_rng() { return state_rng_; }
  int spike_slot_ = -1;

 private:
  struct Cache {
    Mat<S> in;
    std::vector<Mat<S>> u, w, s;
    Eigen::Index batch = 0;
  };
  std::string name_;
  NeuronLayerOpts opts_;
  Rng state_rng_;
  Eigen::Index n_;
  Arr<S> alpha_, beta_, a_, b_;
  Arr<S> g_alpha_, g_beta_, g_a_, g_b_;
  AdLifParams bounds_;
};

// ---------------------------------------------------------------------------

template <typename S>
class RfLayer : public Module<S> {
 public:
  RfLayer(std::string name, const std::vector<RfParams>& init,
          const NeuronLayerOpts& opts, Rng state_rng)
      : name_(std::move(name)),
        opts_(opts),
        state_rng_(state_rng),
        n_(static_cast<Eigen::Index>(init.size())) {
    are_.resize(n_), aim_.resize(n_);
    for (Eigen::Index i = 0; i < n_; ++i) {
      are_(i) = static_cast<S>(init[static_cast<std::size_t>(i)].alpha_real);
      aim_(i) = static_cast<S>(init[static_cast<std::size_t>(i)].alpha_img);
    }
    dt_ = init.empty() ? 0.04 : init[0].dt;
    g_are_ = g_aim_ = Arr<S>::Zero(n_);
  }

  Mat<S> forward(const Mat<S>& x, Pass<S>& pass) override {
    if (x.cols() != n_) throw ShapeError(name_ + ": feature count mismatch");
    const Eigen::Index batch = pass.batch, steps = pass.steps;
    const S dt = static_cast<S>(dt_);
    const S theta_reset =
        opts_.spike_mode == SpikeMode::Linear ? S(0) : static_cast<S>(kTheta);
    Mat<S> ure, uim, s;
    if (pass.mode == Mode::Train && opts_.state_init == StateInit::RandomTrain) {
      ure = random_state<S>(state_rng_, batch, n_);
      uim = random_state<S>(state_rng_, batch, n_);
      s = random_state<S>(state_rng_, batch, n_);
    } else {
      ure = uim = s = Mat<S>::Zero(batch, n_);
    }

    Cache* c = nullptr;
    if (pass.tape != nullptr) {
      c = &pass.tape->template push<Cache>(this);
      c->in = x;
      c->batch = batch;
      c->ure.push_back(ure), c->uim.push_back(uim), c->s.push_back(s);
    }

    SpikeFn<S> fn{opts_.spike_mode, opts_.surrogate};
    Mat<S> out(x.rows(), n_);
    for (Eigen::Index t = 0; t < steps; ++t) {
      auto x_t = x.middleRows(t * batch, batch);
      Mat<S> ure_n = (ure.array() +
                      dt * (ure.array().rowwise() * are_.transpose() -
                            uim.array().rowwise() * aim_.transpose() + x_t.array()) -
                      theta_reset * s.array())
                         .matrix();
      uim = (uim.array() + dt * (ure.array().rowwise() * aim_.transpose() +
                                 uim.array().rowwise() * are_.transpose()))
                .matrix();
      ure = std::move(ure_n);
      s = fn.fire(ure);
      out.middleRows(t * batch, batch) = opts_.spike_mode == SpikeMode::Linear ? ure : s;
      if (c != nullptr) c->ure.push_back(ure), c->uim.push_back(uim), c->s.push_back(s);
    }
    record_spikes(pass.trace, spike_slot_, count_nonzeros(out));
    return out;
  }

  Mat<S> backward(void* cache, const Mat<S>& gy) override {
    auto* c = static_cast<Cache*>(cache);
    const Eigen::Index batch = c->batch;
    const Eigen::Index steps = gy.rows() / batch;
    const bool spike_out = opts_.spike_mode != SpikeMode::Linear;
    const S dt = static_cast<S>(dt_);
    const S theta_reset = spike_out ? static_cast<S>(kTheta) : S(0);
    SpikeFn<S> fn{opts_.spike_mode, opts_.surrogate};

    Mat<S> a_re = Mat<S>::Zero(batch, n_), a_im = Mat<S>::Zero(batch, n_);
    Mat<S> gx(gy.rows(), n_);

    for (Eigen::Index t = steps - 1; t >= 0; --t) {
      auto gy_t = gy.middleRows(t * batch, batch);
      const Mat<S>& ure_t = c->ure[static_cast<std::size_t>(t + 1)];
      const Mat<S>& ure_p = c->ure[static_cast<std::size_t>(t)];
      const Mat<S>& uim_p = c->uim[static_cast<std::size_t>(t)];

      Mat<S> as = spike_out ? Mat<S>(gy_t) : Mat<S>(Mat<S>::Zero(batch, n_));
      if (t < steps - 1 && !opts_.detach_reset) as.array() -= theta_reset * a_re.array();
      Mat<S> are_t = (fn.slope(ure_t).array() * as.array() +
                      a_re.array().rowwise() * (S(1) + dt * are_).transpose() +
                      dt * (a_im.array().rowwise() * aim_.transpose()))
                         .matrix();
      if (!spike_out) are_t += gy_t;
      Mat<S> aim_t = (a_im.array().rowwise() * (S(1) + dt * are_).transpose() -
                      dt * (a_re.array().rowwise() * aim_.transpose()))
                         .matrix();

      g_are_ += dt * (are_t.array() * ure_p.array() + aim_t.array() * uim_p.array())
                         .colwise()
                         .sum()
                         .transpose();
      g_aim_ += dt * (aim_t.array() * ure_p.array() - are_t.array() * uim_p.array())
                         .colwise()
                         .sum()
                         .transpose();
      gx.middleRows(t * batch, batch) = dt * are_t;
      a_re = std::move(are_t);
      a_im = std::move(aim_t);
    }
    return gx;
  }

  void collect_params(std::vector<ParamView<S>>& out) override {
    out.push_back({name_ + ".alpha_real", ParamGroup::Neuron, are_.data(),
                   g_are_.data(), n_});
    out.push_back({name_ + ".alpha_img", ParamGroup::Neuron, aim_.data(),
                   g_aim_.data(), n_});
  }
  void zero_grads() override { g_are_.setZero(), g_aim_.setZero(); }
  const std::string& name() const override { return name_; }

  std::pair<Arr<S>, Arr<S>> transition() const {
    return {S(1) + static_cast<S>(dt_) * are_, static_cast<S>(dt_) * aim_};
  }
  double dt() const { return dt_; }
  Rng& state_rng() { return state_rng_; }
  int spike_slot_ = -1;

 private:
  struct Cache {
    Mat<S> in;
    std::vector<Mat<S>> ure, uim, s;
    Eigen::Index batch = 0;
  };
  std::string name_;
  NeuronLayerOpts opts_;
  Rng state_rng_;
  Eigen::Index n_;
  Arr<S> are_, aim_;
  Arr<S> g_are_, g_aim_;
  double dt_ = 0.04;
};

}  // namespace silif
