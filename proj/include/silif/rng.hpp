#pragma once

#include <cmath>
#include <cstdint>
#include <bit>

#include "silif/errors.hpp"

namespace silif {

// splittable counter-based generator (SplitMix64 lineage, Steele/Lea/Flood
// constants). a stream is (seed, stream_id); the id selects the additive
// gamma so distinct streams walk genuinely different sequences. all state
// is two u64 words, so sequences are bit-identical across platforms.
class Rng {
 public:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

  Rng() : Rng(0, 0) {}
  Rng(std::uint64_t seed, std::uint64_t stream_id)
      : state_(mix64(seed + kGolden)), gamma_(mix_gamma(stream_id)) {}

  std::uint64_t next_u64() {
    state_ += gamma_;
    return mix64(state_);
  }

  // uniform in [0, 1) with 53 random bits
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) {
    if (!(lo <= hi)) throw ParameterRangeError("uniform: lo > hi");
    return lo + next_double() * (hi - lo);
  }

  // uniform integer in [0, n)
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n == 0) throw ParameterRangeError("uniform_int: n = 0");
    // rejection-free 128-bit scaling; bias < 2^-64, identical on all hosts
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  bool bernoulli(double p) { return next_double() < p; }

  // log-uniform over [lo, hi]; median of draws sits at sqrt(lo*hi)
  double log_uniform(double lo, double hi) {
    if (!(lo > 0.0)) throw ParameterRangeError("log_uniform: lo must be > 0");
    if (!(lo <= hi)) throw ParameterRangeError("log_uniform: lo > hi");
    if (lo == hi) return lo;
    double v = std::exp(uniform(std::log(lo), std::log(hi)));
    return v < lo ? lo : (v > hi ? hi : v);
  }

  std::uint64_t state() const { return state_; }
  std::uint64_t gamma() const { return gamma_; }
  void restore(std::uint64_t state, std::uint64_t gamma) {
    state_ = state;
    gamma_ = gamma;
  }

  // finalizer from SplitMix64 (variant 13)
  static std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

 private:
  // gammas must be odd and bit-rich; sparse ones are xored with alternating
  // bits, as in SplittableRandom
  static std::uint64_t mix_gamma(std::uint64_t id) {
    std::uint64_t z = (id + kGolden) * 0xFF51AFD7ED558CCDull;
    z = (z ^ (z >> 33)) * 0xC4CEB9FE1A85EC53ull;
    z = (z ^ (z >> 33)) | 1ull;
    if (std::popcount(z ^ (z >> 1)) < 24) z ^= 0xAAAAAAAAAAAAAAAAull;
    return z;
  }

  std::uint64_t state_;
  std::uint64_t gamma_;
};

// stream id registry; layer index is added to the base so every module draws
// from its own stream regardless of construction order
namespace stream {
constexpr std::uint64_t kWeights = 1000;
constexpr std::uint64_t kNeuron = 2000;
constexpr std::uint64_t kDropout = 3000;
constexpr std::uint64_t kDelays = 4000;
constexpr std::uint64_t kStateInit = 5000;
constexpr std::uint64_t kShuffle = 6000;
constexpr std::uint64_t kSynthesis = 7000;
}  // namespace stream

}  // namespace silif
