#include <algorithm>

#include "json.hpp"
#include "silif/rng.hpp"
#include "silif/spikes.hpp"

namespace silif {

namespace {

SpikeTensor empty_like(const SynthTaskSpec& spec, Eigen::Index batch,
                       std::string meta) {
  SpikeTensor t;
  t.batch = batch;
  t.steps = spec.timesteps;
  t.channels = spec.channels;
  t.values.assign(static_cast<std::size_t>(batch * t.steps * t.channels), 0.0f);
  t.labels.reserve(static_cast<std::size_t>(batch));
  t.binary = true;
  t.meta = std::move(meta);
  return t;
}

}  // namespace

SynthData gen_synthetic(const SynthTaskSpec& spec, std::uint64_t seed) {
  if (spec.classes < 1 || spec.channels < 1 || spec.timesteps < 1 || spec.per_class < 1)
    throw ParameterRangeError("gen_synthetic: classes/channels/timesteps/per_class must be >= 1");
  if (spec.template_rate < 0.0 || spec.template_rate > 1.0 || spec.drop_prob < 0.0 ||
      spec.drop_prob > 1.0 || spec.jitter < 0)
    throw ParameterRangeError("gen_synthetic: rate/drop in [0,1], jitter >= 0");

  nlohmann::json meta;
  meta["task"] = "synthetic";
  meta["classes"] = spec.classes;
  meta["channels"] = spec.channels;
  meta["timesteps"] = spec.timesteps;
  meta["template_rate"] = spec.template_rate;
  meta["jitter"] = spec.jitter;
  meta["drop_prob"] = spec.drop_prob;
  meta["per_class"] = spec.per_class;
  meta["seed"] = seed;
  const std::string meta_str = meta.dump();

  // per-class split sizes: 70/15/15 by integer truncation, remainder to test
  const int n_tr = spec.per_class * 70 / 100;
  const int n_val = spec.per_class * 15 / 100;
  const int n_te = spec.per_class - n_tr - n_val;

  SynthData d;
  d.templates = empty_like(spec, spec.classes, meta_str);
  d.train = empty_like(spec, static_cast<Eigen::Index>(spec.classes) * n_tr, meta_str);
  d.val = empty_like(spec, static_cast<Eigen::Index>(spec.classes) * n_val, meta_str);
  d.test = empty_like(spec, static_cast<Eigen::Index>(spec.classes) * n_te, meta_str);

  Rng template_rng(seed, stream::kSynthesis);
  Rng sample_rng(seed, stream::kSynthesis + 1);

  for (int cls = 0; cls < spec.classes; ++cls) {
    d.templates.labels.push_back(static_cast<std::uint32_t>(cls));
    for (Eigen::Index t = 0; t < spec.timesteps; ++t)
      for (Eigen::Index c = 0; c < spec.channels; ++c)
        if (template_rng.bernoulli(spec.template_rate))
          d.templates.at(cls, t, c) = 1.0f;
  }

  // samples are generated class-major then split head/middle/tail, so the
  // corpus is reproducible sample by sample from (spec, seed) alone
  for (int cls = 0; cls < spec.classes; ++cls) {
    for (int k = 0; k < spec.per_class; ++k) {
      SpikeTensor* dst;
      Eigen::Index row;
      if (k < n_tr) {
        dst = &d.train;
        row = static_cast<Eigen::Index>(cls) * n_tr + k;
      } else if (k < n_tr + n_val) {
        dst = &d.val;
        row = static_cast<Eigen::Index>(cls) * n_val + (k - n_tr);
      } else {
        dst = &d.test;
        row = static_cast<Eigen::Index>(cls) * n_te + (k - n_tr - n_val);
      }
      for (Eigen::Index t = 0; t < spec.timesteps; ++t) {
        for (Eigen::Index c = 0; c < spec.channels; ++c) {
          if (d.templates.at(cls, t, c) == 0.0f) continue;
          if (sample_rng.bernoulli(spec.drop_prob)) continue;
          const auto delta = static_cast<Eigen::Index>(sample_rng.uniform_int(
                                 static_cast<std::uint64_t>(2 * spec.jitter + 1))) -
                             spec.jitter;
          const Eigen::Index tj =
              std::clamp<Eigen::Index>(t + delta, 0, spec.timesteps - 1);
          dst->at(row, tj, c) = 1.0f;  // collisions OR into the bin
        }
      }
    }
    for (int k = 0; k < n_tr; ++k)
      d.train.labels.push_back(static_cast<std::uint32_t>(cls));
    for (int k = 0; k < n_val; ++k)
      d.val.labels.push_back(static_cast<std::uint32_t>(cls));
    for (int k = 0; k < n_te; ++k)
      d.test.labels.push_back(static_cast<std::uint32_t>(cls));
  }
  return d;
}

}  // namespace silif
