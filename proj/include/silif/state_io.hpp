#pragma once

#include <map>
#include <string>
#include <vector>

#include "silif/checkpoint.hpp"
#include "silif/network.hpp"
#include "silif/optimizer.hpp"

// full training-state snapshot: parameters, batch-norm buffers, Adam moments,
// scheduler state, every random stream, epoch counter and best metric. the
// restore side matches names, dtypes and sizes strictly so a checkpoint can
// never half-apply.

namespace silif {

template <typename S>
std::vector<TensorEntry> snapshot_state(Network<S>& net, Adam<S>& adam,
                                        const LrSchedule& sched_w,
                                        const LrSchedule& sched_d, Rng& shuffle_rng,
                                        std::uint64_t epoch, double best_val) {
  std::vector<TensorEntry> out;
  const auto& cfg = net.config();
  const std::uint64_t arch[6] = {static_cast<std::uint64_t>(cfg.model),
                                 static_cast<std::uint64_t>(cfg.layers),
                                 static_cast<std::uint64_t>(cfg.hidden),
                                 static_cast<std::uint64_t>(cfg.inputs),
                                 static_cast<std::uint64_t>(cfg.classes),
                                 cfg.delays ? 1ull : 0ull};
  out.push_back(make_entry("meta.arch", arch, 6));
  out.push_back(make_scalar<std::uint64_t>("epoch", epoch));
  out.push_back(make_scalar<double>("best_val", best_val));

  for (const auto& p : adam.params())
    out.push_back(make_entry(p.name, p.value, static_cast<std::uint64_t>(p.size)));
  for (auto* bn : net.bn_layers()) {
    out.push_back(make_entry(bn->name() + ".running_mean", bn->running_mean().data(),
                             static_cast<std::uint64_t>(bn->running_mean().size())));
    out.push_back(make_entry(bn->name() + ".running_var", bn->running_var().data(),
                             static_cast<std::uint64_t>(bn->running_var().size())));
  }
  const auto& params = adam.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    out.push_back(make_entry("adam.m." + params[i].name, adam.moment1()[i].data(),
                             static_cast<std::uint64_t>(params[i].size)));
    out.push_back(make_entry("adam.v." + params[i].name, adam.moment2()[i].data(),
                             static_cast<std::uint64_t>(params[i].size)));
  }
  out.push_back(make_scalar<std::uint64_t>("adam.t", adam.step_count()));

  auto sched_entry = [](const std::string& name, const LrSchedule& s) {
    const double vals[4] = {s.current(), s.best(), s.has_best() ? 1.0 : 0.0,
                            static_cast<double>(s.num_bad())};
    return make_entry(name, vals, 4);
  };
  out.push_back(sched_entry("sched.weights", sched_w));
  out.push_back(sched_entry("sched.delays", sched_d));

  auto rng_entry = [&out](const std::string& name, const Rng& r) {
    const std::uint64_t vals[2] = {r.state(), r.gamma()};
    out.push_back(make_entry("rng." + name, vals, 2));
  };
  for (auto* d : net.dropout_layers()) rng_entry(d->name(), d->rng());
  for (auto* l : net.silif_layers()) rng_entry(l->name(), l->state_rng());
  for (auto* l : net.csilif_layers()) rng_entry(l->name(), l->state_rng());
  for (auto* l : net.adlif_layers()) rng_entry(l->name(), l->state_rng());
  for (auto* l : net.rf_layers()) rng_entry(l->name(), l->state_rng());
  rng_entry("shuffle", shuffle_rng);
  return out;
}

template <typename S>
void restore_state(const std::vector<TensorEntry>& entries, Network<S>& net,
                   Adam<S>& adam, LrSchedule& sched_w, LrSchedule& sched_d,
                   Rng& shuffle_rng, std::uint64_t& epoch, double& best_val) {
  std::map<std::string, const TensorEntry*> by_name;
  for (const auto& e : entries) {
    if (!by_name.emplace(e.name, &e).second)
      throw FormatError("checkpoint has duplicate entry " + e.name);
  }
  std::size_t used = 0;
  auto take = [&](const std::string& name) -> const TensorEntry& {
    auto it = by_name.find(name);
    if (it == by_name.end())
      throw FormatError("checkpoint is missing entry " + name);
    ++used;
    return *it->second;
  };

  const auto& cfg = net.config();
  std::uint64_t arch[6];
  read_entry(take("meta.arch"), arch, 6);
  const std::uint64_t expect[6] = {static_cast<std::uint64_t>(cfg.model),
                                   static_cast<std::uint64_t>(cfg.layers),
                                   static_cast<std::uint64_t>(cfg.hidden),
                                   static_cast<std::uint64_t>(cfg.inputs),
                                   static_cast<std::uint64_t>(cfg.classes),
                                   cfg.delays ? 1ull : 0ull};
  for (int i = 0; i < 6; ++i)
    if (arch[i] != expect[i])
      throw ConfigError("checkpoint architecture does not match the configuration");

  read_entry(take("epoch"), &epoch, 1);
  read_entry(take("best_val"), &best_val, 1);

  for (const auto& p : adam.params())
    read_entry(take(p.name), p.value, static_cast<std::uint64_t>(p.size));
  for (auto* bn : net.bn_layers()) {
    read_entry(take(bn->name() + ".running_mean"), bn->running_mean().data(),
               static_cast<std::uint64_t>(bn->running_mean().size()));
    read_entry(take(bn->name() + ".running_var"), bn->running_var().data(),
               static_cast<std::uint64_t>(bn->running_var().size()));
  }
  const auto& params = adam.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    read_entry(take("adam.m." + params[i].name), adam.moment1()[i].data(),
               static_cast<std::uint64_t>(params[i].size));
    read_entry(take("adam.v." + params[i].name), adam.moment2()[i].data(),
               static_cast<std::uint64_t>(params[i].size));
  }
  read_entry(take("adam.t"), &adam.step_count(), 1);

  auto restore_sched = [&](const std::string& name, LrSchedule& s) {
    double vals[4];
    read_entry(take(name), vals, 4);
    s.restore(vals[0], vals[1], vals[2] != 0.0,
              static_cast<std::uint64_t>(vals[3]));
  };
  restore_sched("sched.weights", sched_w);
  restore_sched("sched.delays", sched_d);

  auto restore_rng = [&](const std::string& name, Rng& r) {
    std::uint64_t vals[2];
    read_entry(take("rng." + name), vals, 2);
    r.restore(vals[0], vals[1]);
  };
  for (auto* d : net.dropout_layers()) restore_rng(d->name(), d->rng());
  for (auto* l : net.silif_layers()) restore_rng(l->name(), l->state_rng());
  for (auto* l : net.csilif_layers()) restore_rng(l->name(), l->state_rng());
  for (auto* l : net.adlif_layers()) restore_rng(l->name(), l->state_rng());
  for (auto* l : net.rf_layers()) restore_rng(l->name(), l->state_rng());
  restore_rng("shuffle", shuffle_rng);

  if (used != by_name.size())
    throw FormatError("checkpoint holds entries this configuration does not use");
}

}  // namespace silif
