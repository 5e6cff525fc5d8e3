#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <utility>
#include <vector>

#include "silif/errors.hpp"

namespace silif {

// batch x time x channel activity block. binary tensors hold {0, 1} and are
// written as one byte per entry; dense feature tensors are written as f32.
// values live in memory as f32 either way and are widened on ingestion.
struct SpikeTensor {
  Eigen::Index batch = 0;
  Eigen::Index steps = 0;
  Eigen::Index channels = 0;
  std::vector<float> values;  // row-major (b, t, c)
  std::vector<std::uint32_t> labels;
  bool binary = true;
  std::string meta;  // utf-8 blob, conventionally json

  float& at(Eigen::Index b, Eigen::Index t, Eigen::Index c) {
    return values[static_cast<std::size_t>((b * steps + t) * channels + c)];
  }
  float at(Eigen::Index b, Eigen::Index t, Eigen::Index c) const {
    return values[static_cast<std::size_t>((b * steps + t) * channels + c)];
  }
  std::size_t size() const { return values.size(); }
};

void save_spkt(const SpikeTensor& t, const std::filesystem::path& path);
SpikeTensor load_spkt(const std::filesystem::path& path);

// one recorded sample: (timestamp_us, channel) pairs with nondecreasing time
struct EventStream {
  std::vector<std::pair<std::uint64_t, std::uint32_t>> events;
};

// text corpus: "t_us,channel" lines, samples separated by blank lines.
// the sidecar label file holds one integer class id per sample line.
std::vector<EventStream> parse_event_text(std::istream& in,
                                          std::uint32_t declared_channels);
std::vector<std::uint32_t> parse_labels_text(std::istream& in);

// fixed-width binning with block-OR pooling of `pool_factor` adjacent
// channels. the time axis is the max over samples; shorter samples are
// zero-padded on the right and their true bin counts recorded in the meta.
SpikeTensor bin_events(const std::vector<EventStream>& samples,
                       const std::vector<std::uint32_t>& labels, double bin_ms,
                       int pool_factor, std::uint32_t raw_channels);

// synthetic spatiotemporal classification task: one fixed random spike
// template per class; samples are the template with per-spike drops and
// integer time jitter. deterministic in (spec, seed).
struct SynthTaskSpec {
  int classes = 10;
  int channels = 64;
  int timesteps = 100;
  double template_rate = 0.05;
  int jitter = 2;
  double drop_prob = 0.2;
  int per_class = 200;
};

struct SynthData {
  SpikeTensor train, val, test;
  SpikeTensor templates;  // one sample per class, labels = class ids
};

SynthData gen_synthetic(const SynthTaskSpec& spec, std::uint64_t seed);

}  // namespace silif
