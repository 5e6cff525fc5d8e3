#include "silif/analysis.hpp"

#include <cstdio>
#include <ostream>

namespace silif {

std::uint64_t eventssm_sops(std::uint64_t state_size, std::uint64_t events_block1,
                            std::uint64_t events_block2,
                            std::uint64_t ssm_count_block2,
                            std::uint64_t dense_count_block2) {
  if (state_size == 0)
    throw ParameterRangeError("eventssm_sops: state size must be positive");
  const std::uint64_t s2 = state_size * state_size;
  const std::uint64_t block1 = events_block1 * 2 * s2;
  const std::uint64_t block2 =
      events_block2 * (dense_count_block2 + 2 * ssm_count_block2) * s2;
  return block1 + block2;
}

std::string format_sops_m(double sops) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1fM", sops / 1e6);
  return buf;
}

void write_spectrum_text(const SpectrumReport& r, std::ostream& out) {
  std::uint64_t total = r.complex_count + r.real_count;
  out << "model=" << r.model << " layers=" << r.layers.size()
      << " neurons=" << total << " complex=" << r.complex_count
      << " real=" << r.real_count << "\n";
  for (std::size_t b = 0; b < r.magnitude_hist.size(); ++b) {
    char line[96];
    std::snprintf(line, sizeof line, "hist lo=%.1f count=%llu",
                  0.1 * static_cast<double>(b),
                  static_cast<unsigned long long>(r.magnitude_hist[b]));
    out << line << "\n";
  }
  for (const auto& ls : r.layers) {
    for (std::size_t i = 0; i < ls.eigenvalues.size(); ++i) {
      const auto& ev = ls.eigenvalues[i];
      char line[160];
      std::snprintf(line, sizeof line,
                    "eig layer=%d index=%zu re=%.17g im=%.17g regime=%s",
                    ls.layer, i, ev.real(), ev.imag(),
                    ev.imag() != 0.0 ? "resonator" : "integrator");
      out << line << "\n";
    }
  }
}

void write_spectrum_points(const SpectrumReport& r, std::ostream& out) {
  for (const auto& ls : r.layers)
    for (const auto& ev : ls.eigenvalues) {
      char line[96];
      std::snprintf(line, sizeof line, "%.17g %.17g", ev.real(), ev.imag());
      out << line << "\n";
    }
}

void write_profile(const RunTrace& trace, std::ostream& out) {
  out << "samples=" << trace.samples << " steps=" << trace.steps
      << " delay_factor=" << (trace.delays ? 2 : 1) << "\n";
  for (const auto& p : trace.projections) {
    const std::uint64_t activity =
        (trace.count_dense_macs && p.dense_input) ? p.in_total : p.in_nonzeros;
    const double per_sample = trace.samples == 0
                                  ? 0.0
                                  : static_cast<double>(activity) *
                                        static_cast<double>(p.fan_out) *
                                        (trace.delays ? 2.0 : 1.0) /
                                        static_cast<double>(trace.samples);
    char line[192];
    std::snprintf(line, sizeof line,
                  "projection name=%s activity=%llu fan_out=%llu sops_per_sample=%.1f",
                  p.name.c_str(), static_cast<unsigned long long>(activity),
                  static_cast<unsigned long long>(p.fan_out), per_sample);
    out << line << "\n";
  }
  for (const auto& s : trace.spiking) {
    char line[192];
    std::snprintf(line, sizeof line,
                  "spiking name=%s spikes=%llu neurons=%llu sparsity=%.6f",
                  s.name.c_str(), static_cast<unsigned long long>(s.spikes),
                  static_cast<unsigned long long>(s.neurons),
                  layer_sparsity(trace, s));
    out << line << "\n";
  }
  char totals[128];
  std::snprintf(totals, sizeof totals, "total sops_per_sample=%.1f sparsity=%.6f",
                count_sops(trace, trace.delays), sparsity(trace));
  out << totals << "\n";
}

}  // namespace silif
