#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "silif/network.hpp"
#include "silif/numerics.hpp"

namespace silif {

enum class Regime { Resonator, Integrator };

inline const char* regime_name(Regime r) {
  return r == Regime::Resonator ? "resonator" : "integrator";
}

// resonator iff the coupled two-state transition has complex eigenvalues,
// i.e. (alpha-beta)^2 + 4a(alpha-1) < 0
inline Regime classify_regime(double alpha, double beta, double a) {
  if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(a))
    throw NumericError("classify_regime: non-finite parameter");
  const double disc = (alpha - beta) * (alpha - beta) + 4.0 * a * (alpha - 1.0);
  return disc < 0.0 ? Regime::Resonator : Regime::Integrator;
}

struct SpectrumReport {
  std::string model;
  struct LayerSpectrum {
    int layer = 0;
    std::vector<Complex64> eigenvalues;  // 2 per neuron, or 1 when conjugate implied
    int per_neuron = 2;
  };
  std::vector<LayerSpectrum> layers;
  std::uint64_t complex_count = 0;  // neurons with a complex pair
  std::uint64_t real_count = 0;
  std::array<std::uint64_t, 13> magnitude_hist{};  // 0.1-wide bins, last catches >= 1.2
};

// closed-form synaptic-operation count for the two-block event-driven SSM
// reference architecture: the first block charges 2*state^2 per event, the
// second charges (dense_count + 2*ssm_count)*state^2 per event
std::uint64_t eventssm_sops(std::uint64_t state_size, std::uint64_t events_block1,
                            std::uint64_t events_block2, std::uint64_t ssm_count_block2,
                            std::uint64_t dense_count_block2);

// millions with one decimal, e.g. 98304000 -> "98.3M"
std::string format_sops_m(double sops);

void write_spectrum_text(const SpectrumReport& r, std::ostream& out);
void write_spectrum_points(const SpectrumReport& r, std::ostream& out);
void write_profile(const RunTrace& trace, std::ostream& out);

namespace detail {
inline void tally(SpectrumReport& r, const Complex64& ev, bool pair_is_complex) {
  if (pair_is_complex) ++r.complex_count;
  else ++r.real_count;
  const double mag = std::abs(ev);
  auto bin = static_cast<std::size_t>(mag / 0.1);
  if (bin >= r.magnitude_hist.size()) bin = r.magnitude_hist.size() - 1;
  ++r.magnitude_hist[bin];
}
}  // namespace detail

// eigenvalues of every neuron's transition, per layer. two-state models use
// the coupled 2x2 form; complex-state models report alpha itself with the
// conjugate implied.
template <typename S>
SpectrumReport spectrum(Network<S>& net) {
  SpectrumReport r;
  const auto& cfg = net.config();
  r.model = model_name(cfg.model);
  int layer = 1;
  auto two_state = [&](const Arr<S>& alpha, const Arr<S>& beta, const Arr<S>& a) {
    SpectrumReport::LayerSpectrum ls;
    ls.layer = layer++;
    ls.per_neuron = 2;
    for (Eigen::Index i = 0; i < alpha.size(); ++i) {
      const auto evs = eig_2x2(coupled_transition(static_cast<double>(alpha(i)),
                                                  static_cast<double>(beta(i)),
                                                  static_cast<double>(a(i))));
      const bool complex_pair = evs[0].imag() != 0.0;
      detail::tally(r, evs[0], complex_pair);
      ls.eigenvalues.push_back(evs[0]);
      ls.eigenvalues.push_back(evs[1]);
    }
    r.layers.push_back(std::move(ls));
  };
  auto one_state = [&](const Arr<S>& re, const Arr<S>& im) {
    SpectrumReport::LayerSpectrum ls;
    ls.layer = layer++;
    ls.per_neuron = 1;
    for (Eigen::Index i = 0; i < re.size(); ++i) {
      const Complex64 ev(static_cast<double>(re(i)), static_cast<double>(im(i)));
      detail::tally(r, ev, ev.imag() != 0.0);
      ls.eigenvalues.push_back(ev);
    }
    r.layers.push_back(std::move(ls));
  };
  for (auto* l : net.silif_layers()) {
    auto [alpha, beta] = l->decays();
    two_state(alpha, beta, l->coupling_a());
  }
  for (auto* l : net.adlif_layers()) two_state(l->alpha(), l->beta(), l->coupling_a());
  for (auto* l : net.csilif_layers()) {
    auto [re, im] = l->transition();
    one_state(re, im);
  }
  for (auto* l : net.rf_layers()) {
    auto [re, im] = l->transition();
    one_state(re, im);
  }
  return r;
}

}  // namespace silif
