#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "silif/network.hpp"

// central finite-difference oracle for the reverse-mode gradients. only the
// two differentiable regimes qualify: Linear (threshold at +inf, membrane
// readout) and Relaxed (clamped-ramp spikes). dropout masks and random state
// draws are frozen by rewinding every stochastic stream before each forward,
// so the loss is a pure function of the parameters.

namespace silif {

struct FdProbe {
  std::string param;
  Eigen::Index index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_err = 0.0;
};

struct FdReport {
  std::vector<FdProbe> probes;
  double max_rel_err = 0.0;
};

namespace detail {

template <typename S>
class RngFreeze {
 public:
  explicit RngFreeze(Network<S>& net) {
    for (auto* d : net.dropout_layers()) save(d->rng());
    for (auto* l : net.silif_layers()) save(l->state_rng());
    for (auto* l : net.csilif_layers()) save(l->state_rng());
    for (auto* l : net.adlif_layers()) save(l->state_rng());
    for (auto* l : net.rf_layers()) save(l->state_rng());
  }
  void rewind() {
    for (auto& s : saved_) s.rng->restore(s.state, s.gamma);
  }

 private:
  struct Saved {
    Rng* rng;
    std::uint64_t state, gamma;
  };
  void save(Rng& r) { saved_.push_back({&r, r.state(), r.gamma()}); }
  std::vector<Saved> saved_;
};

}  // namespace detail

template <typename S>
FdReport finite_difference_check(Network<S>& net, const SeqBatch<S>& in,
                                 const std::vector<std::uint32_t>& labels,
                                 LossKind loss_kind,
                                 const std::vector<std::string>& selector,
                                 double h, int per_tensor = 2) {
  if (!(h > 0.0)) throw ArgumentError("finite_difference_check: h must be > 0");
  const SpikeMode mode = net.config().neuron.spike_mode;
  if (mode == SpikeMode::Binary)
    throw ArgumentError(
        "finite_difference_check: hard-threshold spikes are not differentiable; "
        "use the linear or relaxed regime");
  for (const auto& sel : selector)
    if (sel == "theta")
      throw ArgumentError(
          "finite_difference_check: theta is a fixed constant, not a trainable "
          "parameter");
  if (per_tensor < 1)
    throw ArgumentError("finite_difference_check: per_tensor must be >= 1");

  auto params = net.params();
  std::vector<ParamView<S>> chosen;
  for (auto& p : params) {
    if (selector.empty()) {
      chosen.push_back(p);
      continue;
    }
    for (const auto& sel : selector)
      if (p.name.find(sel) != std::string::npos) {
        chosen.push_back(p);
        break;
      }
  }
  if (chosen.empty())
    throw ArgumentError("finite_difference_check: selector matched no parameters");

  detail::RngFreeze<S> freeze(net);
  auto loss_at = [&]() -> double {
    freeze.rewind();
    auto res = net.run(in, labels, Mode::Train, loss_kind, nullptr, nullptr);
    if (!std::isfinite(static_cast<double>(res.loss)))
      throw NumericError("finite_difference_check: non-finite loss");
    return static_cast<double>(res.loss);
  };

  net.zero_grads();
  freeze.rewind();
  Tape<S> tape;
  auto res = net.run(in, labels, Mode::Train, loss_kind, &tape, nullptr);
  net.backward(tape, res.dlogits);

  FdReport report;
  for (auto& p : chosen) {
    for (int j = 0; j < per_tensor; ++j) {
      const Eigen::Index idx =
          per_tensor == 1 ? 0
                          : (p.size - 1) * static_cast<Eigen::Index>(j) /
                                static_cast<Eigen::Index>(per_tensor - 1);
      bool dup = false;
      for (const auto& q : report.probes)
        if (q.param == p.name && q.index == idx) dup = true;
      if (dup) continue;

      FdProbe probe;
      probe.param = p.name;
      probe.index = idx;
      probe.analytic = static_cast<double>(p.grad[idx]);
      const S v0 = p.value[idx];
      p.value[idx] = v0 + static_cast<S>(h);
      const double up = loss_at();
      p.value[idx] = v0 - static_cast<S>(h);
      const double down = loss_at();
      p.value[idx] = v0;
      probe.numeric = (up - down) / (2.0 * h);
      const double scale =
          std::max({std::fabs(probe.analytic), std::fabs(probe.numeric), 1e-10});
      probe.rel_err = std::fabs(probe.analytic - probe.numeric) / scale;
      report.max_rel_err = std::max(report.max_rel_err, probe.rel_err);
      report.probes.push_back(std::move(probe));
    }
  }
  return report;
}

}  // namespace silif
