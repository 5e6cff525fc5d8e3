#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "silif/tape.hpp"

namespace silif {

struct GroupLrs {
  double weights = 1e-3;
  double neuron = 1e-3;
  double delays = 1e-1;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// bias-corrected Adam over ParamViews, one learning rate per parameter group
template <typename S>
class Adam {
 public:
  explicit Adam(std::vector<ParamView<S>> params, AdamConfig cfg = {})
      : params_(std::move(params)), cfg_(cfg) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
      m_.push_back(Arr<S>::Zero(p.size));
      v_.push_back(Arr<S>::Zero(p.size));
    }
  }

  void step(const GroupLrs& lrs) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    const S b1 = static_cast<S>(cfg_.beta1), b2 = static_cast<S>(cfg_.beta2);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& p = params_[i];
      double lr = lrs.weights;
      if (p.group == ParamGroup::Neuron) lr = lrs.neuron;
      if (p.group == ParamGroup::Delays) lr = lrs.delays;
      const S scale = static_cast<S>(lr / bc1);
      Arr<S>& m = m_[i];
      Arr<S>& v = v_[i];
      for (Eigen::Index j = 0; j < p.size; ++j) {
        const S g = p.grad[j];
        if (!std::isfinite(static_cast<double>(g)))
          throw NumericError("adam: non-finite gradient in " + p.name);
        m(j) = b1 * m(j) + (S(1) - b1) * g;
        v(j) = b2 * v(j) + (S(1) - b2) * g * g;
        const S denom = std::sqrt(v(j) / static_cast<S>(bc2)) + static_cast<S>(cfg_.eps);
        p.value[j] -= scale * m(j) / denom;
      }
    }
  }

  const std::vector<ParamView<S>>& params() const { return params_; }
  std::vector<Arr<S>>& moment1() { return m_; }
  std::vector<Arr<S>>& moment2() { return v_; }
  std::uint64_t& step_count() { return t_; }

 private:
  std::vector<ParamView<S>> params_;
  AdamConfig cfg_;
  std::vector<Arr<S>> m_, v_;
  std::uint64_t t_ = 0;
};

enum class SchedulerKind { None, Plateau, OneCycle, Cosine };

inline const char* scheduler_name(SchedulerKind k) {
  switch (k) {
    case SchedulerKind::None: return "none";
    case SchedulerKind::Plateau: return "plateau";
    case SchedulerKind::OneCycle: return "one_cycle";
    case SchedulerKind::Cosine: return "cosine";
  }
  return "?";
}

// per-epoch learning-rate schedule. plateau watches a maximized validation
// metric and cuts the rate after `patience` consecutive epochs without
// strict improvement; the cosine and one-cycle shapes are closed forms of
// the epoch index.
class LrSchedule {
 public:
  LrSchedule(SchedulerKind kind, double base_lr, int total_epochs, int patience,
             double factor)
      : kind_(kind),
        base_(base_lr),
        total_(total_epochs),
        patience_(patience),
        factor_(factor),
        current_(base_lr) {
    if (!(base_lr > 0.0)) throw ParameterRangeError("schedule: base lr must be > 0");
    if (kind == SchedulerKind::Plateau && !(factor > 0.0 && factor < 1.0))
      throw ParameterRangeError("schedule: plateau factor must be in (0,1)");
  }

  double lr_for_epoch(int epoch) const {
    switch (kind_) {
      case SchedulerKind::None:
      case SchedulerKind::Plateau:
        return current_;
      case SchedulerKind::Cosine: {
        if (total_ <= 0) return base_;
        const double x = static_cast<double>(epoch) / static_cast<double>(total_);
        return 0.5 * base_ * (1.0 + std::cos(kPi * x));
      }
      case SchedulerKind::OneCycle: {
        // max = 5*base per the delay-training recipe; warmup and final floor
        // follow the usual one-cycle constants
        const double max_lr = 5.0 * base_;
        const double initial = max_lr / 25.0;
        const double final_lr = initial / 1e4;
        if (total_ <= 0) return initial;
        const double up = kPctStart * static_cast<double>(total_);
        const double e = static_cast<double>(epoch);
        if (e < up)
          return initial + (max_lr - initial) * 0.5 * (1.0 - std::cos(kPi * e / up));
        const double q = (e - up) / (static_cast<double>(total_) - up);
        return final_lr + (max_lr - final_lr) * 0.5 * (1.0 + std::cos(kPi * q));
      }
    }
    return current_;
  }

  // feed the epoch's validation metric (higher is better); only plateau reacts
  void observe(double metric) {
    if (kind_ != SchedulerKind::Plateau) return;
    if (!has_best_ || metric > best_) {
      best_ = metric;
      has_best_ = true;
      num_bad_ = 0;
      return;
    }
    if (++num_bad_ > patience_) {
      current_ *= factor_;
      num_bad_ = 0;
    }
  }

  SchedulerKind kind() const { return kind_; }
  double current() const { return current_; }
  double best() const { return best_; }
  bool has_best() const { return has_best_; }
  std::uint64_t num_bad() const { return num_bad_; }
  void restore(double current, double best, bool has_best, std::uint64_t num_bad) {
    current_ = current;
    best_ = best;
    has_best_ = has_best;
    num_bad_ = num_bad;
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;
  static constexpr double kPctStart = 0.3;
  SchedulerKind kind_;
  double base_;
  int total_;
  int patience_;
  double factor_;
  double current_;
  double best_ = 0.0;
  bool has_best_ = false;
  std::uint64_t num_bad_ = 0;
};

}  // namespace silif
