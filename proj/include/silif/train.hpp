#pragma once

#include <cstdio>
#include <filesystem>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "silif/config.hpp"
#include "silif/state_io.hpp"

namespace silif {

struct SplitMetrics {
  double loss = 0.0;
  double accuracy = 0.0;
  double sparsity = 0.0;
  double sops = 0.0;
};

// fixed-width numeric rendering keeps the log byte-stable for the
// determinism check
inline std::string format_log_line(std::uint64_t epoch, const std::string& split,
                                   const SplitMetrics& m, double lr_w, double lr_d) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "epoch=%llu split=%s loss=%.6f accuracy=%.6f sparsity=%.6f "
                "sops=%.1f lr_weights=%.10g lr_delays=%.10g",
                static_cast<unsigned long long>(epoch), split.c_str(), m.loss,
                m.accuracy, m.sparsity, m.sops, lr_w, lr_d);
  return buf;
}

template <typename S>
SplitMetrics evaluate(Network<S>& net, const SpikeTensor& data, int batch_size,
                      RunTrace* trace_out = nullptr) {
  RunTrace trace = net.make_trace();
  double loss_sum = 0.0;
  std::uint64_t correct = 0;
  const auto n = static_cast<Eigen::Index>(data.batch);
  for (Eigen::Index at = 0; at < n; at += batch_size) {
    const Eigen::Index b = std::min<Eigen::Index>(batch_size, n - at);
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(b));
    std::iota(idx.begin(), idx.end(), at);
    SeqBatch<S> sb = to_seq_batch<S>(data, idx);
    std::vector<std::uint32_t> labels(data.labels.begin() + at,
                                      data.labels.begin() + at + b);
    auto res = net.run(sb, labels, Mode::Eval, LossKind::CrossEntropy, nullptr,
                       &trace);
    loss_sum += static_cast<double>(res.loss) * static_cast<double>(b);
    correct += static_cast<std::uint64_t>(res.correct);
  }
  SplitMetrics m;
  m.loss = loss_sum / static_cast<double>(n);
  m.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  m.sparsity = sparsity(trace);
  m.sops = count_sops(trace, net.config().delays);
  if (trace_out != nullptr) *trace_out = std::move(trace);
  return m;
}

struct TrainResult {
  std::vector<std::string> log_lines;
  std::string checkpoint_path;  // empty when no checkpoint was written
  double best_val_accuracy = 0.0;
  std::uint64_t best_epoch = 0;
  SplitMetrics test;
  bool test_evaluated = false;
};

template <typename S>
TrainResult train_loop(const RunConfig& cfg, const SpikeTensor& train,
                       const SpikeTensor& val, const SpikeTensor& test,
                       std::ostream* echo) {
  if (train.channels != val.channels || train.channels != test.channels)
    throw ConfigError("train/val/test channel counts differ");
  for (const auto* split : {&train, &val, &test})
    if (static_cast<Eigen::Index>(split->labels.size()) != split->batch)
      throw ConfigError("every sample needs a label");
  std::uint32_t max_label = 0;
  for (const auto* split : {&train, &val, &test})
    for (auto l : split->labels) max_label = std::max(max_label, l);
  const auto classes = static_cast<Eigen::Index>(max_label) + 1;
  if (classes < 2) throw ConfigError("need at least two classes");

  Network<S> net(network_config(cfg, static_cast<Eigen::Index>(train.channels),
                                classes));
  Adam<S> adam(net.params());
  LrSchedule sched_w(cfg.scheduler_weights, cfg.lr_weights, cfg.epochs,
                     cfg.plateau_patience, cfg.plateau_factor);
  LrSchedule sched_d(cfg.scheduler_delays, cfg.lr_delays, cfg.epochs,
                     cfg.plateau_patience, cfg.plateau_factor);
  Rng shuffle_rng(cfg.seed, stream::kShuffle);

  TrainResult result;
  auto emit = [&](const std::string& line) {
    result.log_lines.push_back(line);
    if (echo != nullptr) *echo << line << "\n";
  };

  const double lr_w0 = sched_w.lr_for_epoch(0);
  const double lr_d0 = sched_d.lr_for_epoch(0);
  emit(format_log_line(0, "init", evaluate(net, val, cfg.batch), lr_w0, lr_d0));

  const std::string ckpt_path =
      (std::filesystem::path(cfg.out_dir) / "best.ckpt").string();
  double best_val = -1.0;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(train.batch));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  for (int e = 0; e < cfg.epochs; ++e) {
    if (cfg.delays) net.set_sigma(sigma_schedule(e, cfg.epochs, cfg.t_d));
    const double lr_w = sched_w.lr_for_epoch(e);
    const double lr_d = sched_d.lr_for_epoch(e);
    GroupLrs lrs{lr_w, lr_w * cfg.neuron_lr_mult, lr_d};

    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(shuffle_rng.uniform_int(i));
      std::swap(order[i - 1], order[j]);
    }

    RunTrace trace = net.make_trace();
    double loss_sum = 0.0;
    std::uint64_t correct = 0;
    const auto n = static_cast<Eigen::Index>(train.batch);
    for (Eigen::Index at = 0; at < n; at += cfg.batch) {
      const Eigen::Index b = std::min<Eigen::Index>(cfg.batch, n - at);
      std::vector<Eigen::Index> idx(order.begin() + at, order.begin() + at + b);
      SeqBatch<S> sb = to_seq_batch<S>(train, idx);
      std::vector<std::uint32_t> labels(static_cast<std::size_t>(b));
      for (Eigen::Index k = 0; k < b; ++k)
        labels[static_cast<std::size_t>(k)] =
            train.labels[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])];
      net.zero_grads();
      Tape<S> tape;
      auto res = net.run(sb, labels, Mode::Train, LossKind::CrossEntropy, &tape,
                         &trace);
      net.backward(tape, res.dlogits);
      adam.step(lrs);
      loss_sum += static_cast<double>(res.loss) * static_cast<double>(b);
      correct += static_cast<std::uint64_t>(res.correct);
    }
    SplitMetrics tm;
    tm.loss = loss_sum / static_cast<double>(n);
    tm.accuracy = static_cast<double>(correct) / static_cast<double>(n);
    tm.sparsity = sparsity(trace);
    tm.sops = count_sops(trace, cfg.delays);
    emit(format_log_line(static_cast<std::uint64_t>(e) + 1, "train", tm, lr_w, lr_d));

    SplitMetrics vm = evaluate(net, val, cfg.batch);
    emit(format_log_line(static_cast<std::uint64_t>(e) + 1, "val", vm, lr_w, lr_d));

    sched_w.observe(vm.accuracy);
    sched_d.observe(vm.accuracy);

    if (vm.accuracy > best_val) {
      best_val = vm.accuracy;
      result.best_val_accuracy = best_val;
      result.best_epoch = static_cast<std::uint64_t>(e) + 1;
      save_slck(ckpt_path,
                snapshot_state(net, adam, sched_w, sched_d, shuffle_rng,
                               result.best_epoch, best_val));
      result.checkpoint_path = ckpt_path;
    }
  }

  if (cfg.epochs > 0 && !result.checkpoint_path.empty()) {
    std::uint64_t epoch = 0;
    double best = 0.0;
    restore_state(load_slck(result.checkpoint_path), net, adam, sched_w, sched_d,
                  shuffle_rng, epoch, best);
    result.test = evaluate(net, test, cfg.batch);
    result.test_evaluated = true;
    emit(format_log_line(epoch, "test", result.test, sched_w.current(),
                         sched_d.current()));
  }
  return result;
}

}  // namespace silif
