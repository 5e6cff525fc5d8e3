#include "silif/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <type_traits>

#include "CLI11.hpp"
#include "silif/analysis.hpp"
#include "silif/gradcheck.hpp"
#include "silif/train.hpp"

namespace silif {

namespace {

constexpr const char* kUsage =
    "usage: silif <subcommand> [options]\n"
    "subcommands:\n"
    "  train             train a network per a run configuration\n"
    "  eval              evaluate a checkpoint (accuracy, sparsity, sops)\n"
    "  analyze-eigen     transition-matrix spectrum of a model\n"
    "  profile-sops      per-layer synaptic-operation and sparsity profile\n"
    "  sop-calc-eventssm closed-form event-driven SSM sop calculator\n"
    "  gen-synthetic     emit the synthetic task as spkt files\n"
    "  convert-events    bin an event-text corpus into an spkt file\n"
    "  gradcheck         finite-difference gradient verification\n"
    "run '<subcommand> --help' for flags; 'train --print-defaults' documents\n"
    "the configuration grammar\n";

// CLI11 consumes the argument vector back to front
int parse_app(CLI::App& app, std::vector<std::string> rest, std::ostream& out,
              std::ostream& err, int& code) {
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(std::move(rest));
    return 0;
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    code = 0;
    return 1;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    code = 2;
    return 1;
  }
}

struct LoadedData {
  SpikeTensor train, val, test;
};

LoadedData load_or_synthesize(const RunConfig& cfg) {
  const bool any = !cfg.data_train.empty() || !cfg.data_val.empty() ||
                   !cfg.data_test.empty();
  if (any) {
    if (cfg.data_train.empty() || cfg.data_val.empty() || cfg.data_test.empty())
      throw ConfigError("set all of [data] train/val/test or none");
    LoadedData d;
    d.train = load_spkt(cfg.data_train);
    d.val = load_spkt(cfg.data_val);
    d.test = load_spkt(cfg.data_test);
    return d;
  }
  auto s = gen_synthetic(cfg.synth, cfg.seed);
  return {std::move(s.train), std::move(s.val), std::move(s.test)};
}

Eigen::Index derive_classes(const LoadedData& d) {
  std::uint32_t mx = 0;
  for (const auto* t : {&d.train, &d.val, &d.test})
    for (auto l : t->labels) mx = std::max(mx, l);
  return static_cast<Eigen::Index>(mx) + 1;
}

const SpikeTensor& pick_split(const LoadedData& d, const std::string& split) {
  if (split == "train") return d.train;
  if (split == "val") return d.val;
  if (split == "test") return d.test;
  throw ArgumentError("unknown split '" + split + "'");
}

template <typename F>
int with_precision(Precision p, F&& f) {
  if (p == Precision::F32) return f(std::type_identity<float>{});
  return f(std::type_identity<double>{});
}

// network plus everything a checkpoint restores
template <typename S>
struct Session {
  Network<S> net;
  Adam<S> adam;
  LrSchedule sched_w, sched_d;
  Rng shuffle_rng;
  std::uint64_t epoch = 0;
  double best_val = 0.0;

  Session(const RunConfig& cfg, Eigen::Index inputs, Eigen::Index classes)
      : net(network_config(cfg, inputs, classes)),
        adam(net.params()),
        sched_w(cfg.scheduler_weights, cfg.lr_weights, cfg.epochs,
                cfg.plateau_patience, cfg.plateau_factor),
        sched_d(cfg.scheduler_delays, cfg.lr_delays, cfg.epochs,
                cfg.plateau_patience, cfg.plateau_factor),
        shuffle_rng(cfg.seed, stream::kShuffle) {}

  void restore(const std::string& path) {
    restore_state(load_slck(path), net, adam, sched_w, sched_d, shuffle_rng,
                  epoch, best_val);
  }
};

int cmd_train(const std::vector<std::string>& rest, std::ostream& out,
              std::ostream& err) {
  CLI::App app{"train a network", "train"};
  std::string config_path, out_dir;
  bool print_defaults_flag = false;
  app.add_option("--config", config_path, "run configuration file");
  app.add_option("--out", out_dir, "output directory (overrides out_dir)");
  app.add_flag("--print-defaults", print_defaults_flag,
               "print the default configuration and exit");
  int code = 0;
  if (parse_app(app, rest, out, err, code)) return code;
  if (print_defaults_flag) {
    print_defaults(out);
    return 0;
  }
  RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  std::filesystem::create_directories(cfg.out_dir);
  LoadedData data = load_or_synthesize(cfg);
  return with_precision(cfg.precision, [&](auto tag) {
    using S = typename decltype(tag)::type;
    TrainResult res = train_loop<S>(cfg, data.train, data.val, data.test, &out);
    std::ofstream log(std::filesystem::path(cfg.out_dir) / "train.log",
                      std::ios::binary | std::ios::trunc);
    if (!log) throw DataError("cannot write train.log in " + cfg.out_dir);
    for (const auto& line : res.log_lines) log << line << "\n";
    out << "best_val_accuracy=" << res.best_val_accuracy
        << " best_epoch=" << res.best_epoch;
    if (!res.checkpoint_path.empty()) out << " checkpoint=" << res.checkpoint_path;
    out << "\n";
    return 0;
  });
}

int cmd_eval(const std::vector<std::string>& rest, std::ostream& out,
             std::ostream& err) {
  CLI::App app{"evaluate a checkpoint", "eval"};
  std::string config_path, ckpt, split = "test";
  app.add_option("--config", config_path, "run configuration file")->required();
  app.add_option("--checkpoint", ckpt, "slck checkpoint path")->required();
  app.add_option("--split", split, "train|val|test (default test)");
  int code = 0;
  if (parse_app(app, rest, out, err, code)) return code;
  RunConfig cfg = load_config(config_path);
  LoadedData data = load_or_synthesize(cfg);
  return with_precision(cfg.precision, [&](auto tag) {
    using S = typename decltype(tag)::type;
    Session<S> s(cfg, data.train.channels, derive_classes(data));
    s.restore(ckpt);
    SplitMetrics m = evaluate(s.net, pick_split(data, split), cfg.batch);
    out << format_log_line(s.epoch, split, m, s.sched_w.current(),
                           s.sched_d.current())
        << "\n";
    return 0;
  });
}

int cmd_analyze_eigen(const std::vector<std::string>& rest, std::ostream& out,
                      std::ostream& err) {
  CLI::App app{"transition-matrix spectrum", "analyze-eigen"};
  std::string config_path, ckpt, points_path, report_path;
  app.add_option("--config", config_path, "run configuration file")->required();
  app.add_option("--checkpoint", ckpt, "optional checkpoint to analyze");
  app.add_option("--points", points_path, "write 're im' rows to this file");
  app.add_option("--report", report_path, "write the report here instead of stdout");
  int code = 0;
  if (parse_app(app, rest, out, err, code)) return code;
  RunConfig cfg = load_config(config_path);
  LoadedData data = load_or_synthesize(cfg);
  return with_precision(cfg.precision, [&](auto tag) {
    using S = typename decltype(tag)::type;
    Session<S> s(cfg, data.train.channels, derive_classes(data));
    if (!ckpt.empty()) s.restore(ckpt);
    SpectrumReport rep = spectrum(s.net);
    if (report_path.empty()) {
      write_spectrum_text(rep, out);
    } else {
      std::ofstream f(report_path, std::ios::binary | std::ios::trunc);
      if (!f) throw DataError("cannot write " + report_path);
      write_spectrum_text(rep, f);
    }
    if (!points_path.empty()) {
      std::ofstream f(points_path, std::ios::binary | std::ios::trunc);
      if (!f) throw DataError("cannot write " + points_path);
      write_spectrum_points(rep, f);
    }
    return 0;
  });
}

int cmd_profile_sops(const std::vector<std::string>& rest, std::ostream& out,
                     std::ostream& err) {
  CLI::App app{"synaptic-operation and sparsity profile", "profile-sops"};
  std::string config_path, ckpt, split = "test";
  app.add_option("--config", config_path, "run configuration file")->required();
  app.add_option("--checkpoint", ckpt, "optional checkpoint to profile");
  app.add_option("--split", split, "train|val|test (default test)");
  int code = 0;
  if (parse_app(app, rest, out, err, code)) return code;
  RunConfig cfg = load_config(config_path);
  LoadedData data = load_or_synthesize(cfg);
  return with_precision(cfg.precision, [&](auto tag) {
    using S = typename decltype(tag)::type;
    Session<S> s(cfg, data.train.channels, derive_classes(data));
    if (!ckpt.empty()) s.restore(ckpt);
    RunTrace trace;
    SplitMetrics m = evaluate(s.net, pick_split(data, split), cfg.batch, &trace);
    write_profile(trace, out);
    char point[64];
    std::snprintf(point, sizeof point, "%.1f %.6f", m.sops, m.accuracy);
    out << point << "\n";
    return 0;
  });
}

int cmd_sop_calc(const std::vector<std::string>& rest, std::ostream& out,
                 std::ostream& err) {
  CLI::App app{"event-driven SSM sop calculator", "sop-calc-eventssm"};
  std::uint64_t state = 0, events1 = 0, events2 = 0, ssm = 3, dense = 2;
  app.add_option("--state", state, "state size per block")->required();
  app.add_option("--events", events1, "events into the first block")->required();
  app.add_option("--events2", events2, "events into the second block")->required();
  app.add_option("--ssm", ssm, "ssm modules in the second block (default 3)");
  app.add_option("--dense", dense, "dense matrices in the second block (default 2)");
  int code = 0;
  if (parse_app(app, rest, out, err, code)) return code;
  const std::uint64_t s2 = state * state;
  const std::uint64_t block1 = events1 * 2 * s2;
  const std::uint64_t block2 = events2 * (dense + 2 * ssm) * s2;
  const std::uint64_t total = eventssm_sops(state, events1, events2, ssm, dense);
  out << "block1=" << format_sops_m(static_cast<double>(block1))
      << " block2=" << format_sops_m(static_cast<double>(block2))
      << " total=" << format_sops_m(static_cast<double>(total)) << " exact=" << total
      << "\n";
  return 0;
}

int cmd_gen_synthetic(const std::vector<std::string>& rest, std::ostream& out,
                      std::ostream& err) {
  CLI::App app{"emit the synthetic task", "gen-synthetic"};
  SynthTaskSpec spec;
  std::uint64_t seed = 0;
  std::string out_path = "synthetic.spkt";
  app.add_option("--seed", seed, "master seed (default 0)");
  app.add_option("--out", out_path, "output basename, '.spkt' optional");
  app.add_option("--classes", spec.classes, "class count");
  app.add_option("--channels", spec.channels, "channel count");
  app.add_option("--timesteps", spec.timesteps, "steps per sample");
  app.add_option("--rate", spec.template_rate, "template spike probability");
  app.add_option("--jitter", spec.jitter, "max per-spike temporal jitter");
  app.add_option("--drop", spec.drop_prob, "per-spike drop probability");
  app.add_option("--per-class", spec.per_class, "samples per class");
  int code = 0;
  if (parse_app(app, rest, out, err, code)) return code;
  SynthData d = gen_synthetic(spec, seed);
  std::string base = out_path;
  const std::string ext = ".spkt";
  if (base.size() > ext.size() &&
      base.compare(base.size() - ext.size(), ext.size(), ext) == 0)
    base.resize(base.size() - ext.size());
  for (const auto& [tensor, tag] :
       {std::pair<const SpikeTensor&, const char*>{d.train, "train"},
        {d.val, "val"},
        {d.test, "test"}}) {
    const std::string path = base + "." + tag + ext;
    save_spkt(tensor, path);
    out << tag << "=" << path << " samples=" << tensor.batch
        << " steps=" << tensor.steps << " channels=" << tensor.channels << "\n";
  }
  return 0;
}

int cmd_convert_events(const std::vector<std::string>& rest, std::ostream& out,
                       std::ostream& err) {
  CLI::App app{"bin an event corpus into spkt", "convert-events"};
  std::string events_path, labels_path, out_path;
  std::uint32_t channels = 0;
  double bin_ms = 4.0;
  int pool = 1;
  app.add_option("--events", events_path, "event text file")->required();
  app.add_option("--labels", labels_path, "label text file")->required();
  app.add_option("--out", out_path, "output spkt path")->required();
  app.add_option("--channels", channels, "declared raw channel count")->required();
  app.add_option("--bin-ms", bin_ms, "bin width in milliseconds (default 4)");
  app.add_option("--pool", pool, "adjacent channels pooled by OR (default 1)");
  int code = 0;
  if (parse_app(app, rest, out, err, code)) return code;
  std::ifstream ev(events_path, std::ios::binary);
  if (!ev) throw DataError("cannot open " + events_path);
  std::ifstream lb(labels_path, std::ios::binary);
  if (!lb) throw DataError("cannot open " + labels_path);
  auto streams = parse_event_text(ev, channels);
  auto labels = parse_labels_text(lb);
  SpikeTensor t = bin_events(streams, labels, bin_ms, pool, channels);
  save_spkt(t, out_path);
  out << "out=" << out_path << " samples=" << t.batch << " steps=" << t.steps
      << " channels=" << t.channels << "\n";
  return 0;
}

int cmd_gradcheck(const std::vector<std::string>& rest, std::ostream& out,
                  std::ostream& err) {
  CLI::App app{"finite-difference gradient verification", "gradcheck"};
  // the default help flag claims -h, which shadows the step option below
  app.set_help_flag("--help", "print this help message and exit");
  std::string config_path, loss = "quadratic";
  double h = 1e-6;
  int samples = 8, per_tensor = 2;
  std::vector<std::string> selector;
  app.add_option("--config", config_path, "run configuration file")->required();
  app.add_option("--h", h, "finite-difference step (default 1e-6)");
  app.add_option("--loss", loss, "quadratic|ce (default quadratic)");
  app.add_option("--samples", samples, "probe batch size cap (default 8)");
  app.add_option("--per-tensor", per_tensor, "probes per parameter tensor");
  app.add_option("--param", selector, "substring filter, repeatable");
  int code = 0;
  if (parse_app(app, rest, out, err, code)) return code;
  RunConfig cfg = load_config(config_path);
  LoadedData data = load_or_synthesize(cfg);
  LossKind lk = LossKind::Quadratic;
  if (loss == "ce") lk = LossKind::CrossEntropy;
  else if (loss != "quadratic") throw ArgumentError("unknown loss '" + loss + "'");

  // the oracle always runs in float64
  Network<double> net(network_config(cfg, data.train.channels, derive_classes(data)));
  const auto n = std::min<Eigen::Index>(samples, data.train.batch);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  SeqBatch<double> sb = to_seq_batch<double>(data.train, idx);
  std::vector<std::uint32_t> labels(data.train.labels.begin(),
                                    data.train.labels.begin() + n);
  FdReport rep = finite_difference_check(net, sb, labels, lk, selector, h,
                                         per_tensor);
  for (const auto& p : rep.probes) {
    char line[224];
    std::snprintf(line, sizeof line,
                  "probe param=%s index=%lld analytic=%.10e numeric=%.10e "
                  "rel_err=%.3e",
                  p.param.c_str(), static_cast<long long>(p.index), p.analytic,
                  p.numeric, p.rel_err);
    out << line << "\n";
  }
  constexpr double kTol = 1e-5;
  char summary[96];
  std::snprintf(summary, sizeof summary, "max_rel_err=%.3e probes=%zu tol=%.0e",
                rep.max_rel_err, rep.probes.size(), kTol);
  out << summary << "\n";
  return rep.max_rel_err < kTol ? 0 : 1;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
  if (const char* threads = std::getenv("SILIF_THREADS")) {
    const int n = std::atoi(threads);
    if (n >= 1) Eigen::setNbThreads(n);
  }
  if (args.empty()) {
    err << kUsage;
    return 2;
  }
  const std::string cmd = args.front();
  const std::vector<std::string> rest(args.begin() + 1, args.end());
  try {
    if (cmd == "train") return cmd_train(rest, out, err);
    if (cmd == "eval") return cmd_eval(rest, out, err);
    if (cmd == "analyze-eigen") return cmd_analyze_eigen(rest, out, err);
    if (cmd == "profile-sops") return cmd_profile_sops(rest, out, err);
    if (cmd == "sop-calc-eventssm") return cmd_sop_calc(rest, out, err);
    if (cmd == "gen-synthetic") return cmd_gen_synthetic(rest, out, err);
    if (cmd == "convert-events") return cmd_convert_events(rest, out, err);
    if (cmd == "gradcheck") return cmd_gradcheck(rest, out, err);
    if (cmd == "help" || cmd == "--help" || cmd == "-h") {
      out << kUsage;
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << "unknown subcommand '" << cmd << "'\n" << kUsage;
  return 2;
}

}  // namespace silif
