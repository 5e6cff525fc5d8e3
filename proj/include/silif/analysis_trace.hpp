#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "silif/errors.hpp"

namespace silif {

// activity bookkeeping filled by every forward pass. a projection is a
// weight-bearing hop (dense, delay-conv, readout); its synaptic-operation
// contribution is (nonzero inputs) * fan_out. spiking entries feed the
// sparsity metric.
struct ProjectionTrace {
  std::string name;
  std::uint64_t in_nonzeros = 0;
  std::uint64_t in_total = 0;  // all input entries, used by the dense-mac option
  std::uint64_t fan_out = 0;
  bool dense_input = false;  // true for the hop fed by raw (possibly non-spike) input
};

struct SpikingTrace {
  std::string name;
  std::uint64_t spikes = 0;
  std::uint64_t neurons = 0;
};

struct RunTrace {
  std::uint64_t samples = 0;
  std::uint64_t steps = 0;
  std::vector<ProjectionTrace> projections;
  std::vector<SpikingTrace> spiking;
  bool delays = false;
  bool count_dense_macs = false;
};

// synaptic operations per sample. delay mode doubles the count: each spike
// charges both the weight multiply and the kernel tap.
inline double count_sops(const RunTrace& trace, bool delay_enabled) {
  if (trace.samples == 0) throw ShapeError("count_sops: trace has no samples");
  double total = 0.0;
  for (const auto& p : trace.projections) {
    const std::uint64_t activity =
        (trace.count_dense_macs && p.dense_input) ? p.in_total : p.in_nonzeros;
    total += static_cast<double>(activity) * static_cast<double>(p.fan_out);
  }
  total /= static_cast<double>(trace.samples);
  return delay_enabled ? 2.0 * total : total;
}

// 1 - firing fraction, averaged over spiking layers
inline double sparsity(const RunTrace& trace) {
  if (trace.samples == 0 || trace.steps == 0)
    throw ShapeError("sparsity: trace has no samples or steps");
  if (trace.spiking.empty()) throw ShapeError("sparsity: no spiking layers recorded");
  double acc = 0.0;
  for (const auto& s : trace.spiking) {
    const double slots = static_cast<double>(s.neurons) *
                         static_cast<double>(trace.steps) *
                         static_cast<double>(trace.samples);
    acc += 1.0 - static_cast<double>(s.spikes) / slots;
  }
  return acc / static_cast<double>(trace.spiking.size());
}

inline double layer_sparsity(const RunTrace& trace, const SpikingTrace& s) {
  const double slots = static_cast<double>(s.neurons) *
                       static_cast<double>(trace.steps) *
                       static_cast<double>(trace.samples);
  return 1.0 - static_cast<double>(s.spikes) / slots;
}

}  // namespace silif
