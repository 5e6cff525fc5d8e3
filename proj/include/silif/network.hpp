#pragma once

#include <memory>
#include <string>
#include <vector>

#include "silif/dcls.hpp"
#include "silif/layers.hpp"
#include "silif/loss.hpp"
#include "silif/neuron_layers.hpp"

namespace silif {

enum class ModelKind { SiLif, CSiLif, AdLif, CAdLif, Rf };
enum class LossKind { CrossEntropy, Quadratic };

inline const char* model_name(ModelKind m) {
  switch (m) {
    case ModelKind::SiLif: return "silif";
    case ModelKind::CSiLif: return "csilif";
    case ModelKind::AdLif: return "adlif";
    case ModelKind::CAdLif: return "cadlif";
    case ModelKind::Rf: return "rf";
  }
  return "?";
}

struct NetworkConfig {
  ModelKind model = ModelKind::SiLif;
  Eigen::Index inputs = 0;
  Eigen::Index classes = 0;
  Eigen::Index hidden = 512;
  int layers = 2;
  double dropout = 0.1;
  bool delays = false;
  int t_d = 11;
  NeuronLayerOpts neuron;
  double dt_min = 0.01, dt_max = 0.5;  // csilif time-constant draw range
  double rf_dt = 0.04;
  bool count_dense_macs = false;
  std::uint64_t seed = 0;
};

template <typename S>
struct RunResult {
  S loss = S(0);
  Mat<S> scores;         // batch x classes, summed per-step softmax
  Mat<S> dlogits;        // d loss / d readout output, filled when taping
  Eigen::Index correct = 0;
};

// the full pipeline: per hidden block a projection (dense or delay-conv),
// batch norm, a spiking layer and dropout; then the leaky-integrator readout.
// forward consumes time-flattened (steps*batch) x channels blocks.
template <typename S>
class Network {
 public:
  explicit Network(const NetworkConfig& cfg) : cfg_(cfg) {
    if (cfg.inputs < 1 || cfg.classes < 1)
      throw ParameterRangeError("network: inputs and classes must be positive");
    if (cfg.hidden < 1 || cfg.layers < 1)
      throw ParameterRangeError("network: hidden and layers must be positive");
    int proj_slot = 0, spike_slot = 0;
    for (int li = 0; li < cfg.layers; ++li) {
      const Eigen::Index in = li == 0 ? cfg.inputs : cfg.hidden;
      const std::string tag = std::to_string(li + 1);
      Rng wrng(cfg.seed, stream::kWeights + static_cast<std::uint64_t>(li));
      if (cfg.delays) {
        Rng drng(cfg.seed, stream::kDelays + static_cast<std::uint64_t>(li));
        auto dcls = std::make_unique<DclsLayer<S>>("dcls" + tag, in, cfg.hidden,
                                                   cfg.t_d, wrng, drng);
        dcls->proj_slot_ = proj_slot++;
        dcls_.push_back(dcls.get());
        modules_.push_back(std::move(dcls));
      } else {
        auto dense =
            std::make_unique<DenseLayer<S>>("dense" + tag, in, cfg.hidden, wrng);
        dense->proj_slot_ = proj_slot++;
        modules_.push_back(std::move(dense));
      }
      auto bn = std::make_unique<BatchNormLayer<S>>("bn" + tag, cfg.hidden);
      bns_.push_back(bn.get());
      modules_.push_back(std::move(bn));

      Rng nrng(cfg.seed, stream::kNeuron + static_cast<std::uint64_t>(li));
      Rng srng(cfg.seed, stream::kStateInit + static_cast<std::uint64_t>(li));
      const int n = static_cast<int>(cfg.hidden);
      switch (cfg.model) {
        case ModelKind::SiLif: {
          auto m = std::make_unique<SiLifLayer<S>>(
              "silif" + tag, init_silif(nrng, n), cfg.neuron, srng);
          m->spike_slot_ = spike_slot++;
          silif_.push_back(m.get());
          modules_.push_back(std::move(m));
          break;
        }
        case ModelKind::CSiLif: {
          auto m = std::make_unique<CSiLifLayer<S>>(
              "csilif" + tag, init_csilif(nrng, n, cfg.dt_min, cfg.dt_max),
              cfg.neuron, srng);
          m->spike_slot_ = spike_slot++;
          csilif_.push_back(m.get());
          modules_.push_back(std::move(m));
          break;
        }
        case ModelKind::AdLif:
        case ModelKind::CAdLif: {
          auto m = std::make_unique<AdLifLayer<S>>(
              "adlif" + tag, init_adlif(nrng, n, cfg.model == ModelKind::CAdLif),
              cfg.neuron, srng);
          m->spike_slot_ = spike_slot++;
          adlif_.push_back(m.get());
          modules_.push_back(std::move(m));
          break;
        }
        case ModelKind::Rf: {
          auto m = std::make_unique<RfLayer<S>>("rf" + tag,
                                                init_rf(nrng, n, cfg.rf_dt),
                                                cfg.neuron, srng);
          m->spike_slot_ = spike_slot++;
          rf_.push_back(m.get());
          modules_.push_back(std::move(m));
          break;
        }
      }
      Rng prng(cfg.seed, stream::kDropout + static_cast<std::uint64_t>(li));
      auto drop = std::make_unique<DropoutLayer<S>>("drop" + tag, cfg.dropout, prng);
      drops_.push_back(drop.get());
      modules_.push_back(std::move(drop));
    }
    Rng rrng(cfg.seed,
             stream::kWeights + static_cast<std::uint64_t>(cfg.layers));
    auto ro = std::make_unique<LiReadoutLayer<S>>("readout", cfg.hidden,
                                                  cfg.classes, rrng);
    ro->proj_slot_ = proj_slot++;
    readout_ = ro.get();
    modules_.push_back(std::move(ro));
  }

  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  // fresh accumulation trace matching this network's wiring
  RunTrace make_trace() const {
    RunTrace tr;
    tr.delays = cfg_.delays;
    tr.count_dense_macs = cfg_.count_dense_macs;
    for (int li = 0; li < cfg_.layers; ++li) {
      ProjectionTrace p;
      p.name = cfg_.delays ? "dcls" + std::to_string(li + 1)
                           : "dense" + std::to_string(li + 1);
      p.fan_out = static_cast<std::uint64_t>(cfg_.hidden);
      p.dense_input = li == 0;
      tr.projections.push_back(p);
      SpikingTrace sp;
      sp.name = std::string(model_name(cfg_.model)) + std::to_string(li + 1);
      sp.neurons = static_cast<std::uint64_t>(cfg_.hidden);
      tr.spiking.push_back(sp);
    }
    ProjectionTrace ro;
    ro.name = "readout";
    ro.fan_out = static_cast<std::uint64_t>(cfg_.classes);
    tr.projections.push_back(ro);
    return tr;
  }

  RunResult<S> run(const SeqBatch<S>& in, const std::vector<std::uint32_t>& labels,
                   Mode mode, LossKind loss_kind, Tape<S>* tape, RunTrace* trace) {
    if (in.m.cols() != cfg_.inputs)
      throw ShapeError("network: batch has " + std::to_string(in.m.cols()) +
                       " channels, expected " + std::to_string(cfg_.inputs));
    Pass<S> pass;
    pass.mode = mode;
    pass.tape = tape;
    pass.trace = trace;
    pass.batch = in.batch;
    pass.steps = in.steps;
    if (tape != nullptr) {
      tape->batch = in.batch;
      tape->steps = in.steps;
    }
    if (trace != nullptr) {
      trace->samples += static_cast<std::uint64_t>(in.batch);
      trace->steps = static_cast<std::uint64_t>(in.steps);
    }
    Mat<S> x = in.m;
    for (auto& m : modules_) x = m->forward(x, pass);

    RunResult<S> res;
    if (loss_kind == LossKind::Quadratic) {
      auto [loss, dlogits] = quadratic_loss(x, in.batch);
      res.loss = loss;
      if (tape != nullptr) res.dlogits = std::move(dlogits);
      res.scores = sum_over_time(softmax_rows(x), in.batch, in.steps);
    } else {
      Mat<S> probs = softmax_rows(x);
      res.scores = sum_over_time(probs, in.batch, in.steps);
      auto [loss, dscores] = cross_entropy_scores(res.scores, labels);
      res.loss = loss;
      if (tape != nullptr)
        res.dlogits = softmax_sum_backward(probs, dscores, in.batch, in.steps);
    }
    if (!labels.empty()) {
      for (Eigen::Index b = 0; b < res.scores.rows(); ++b) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < res.scores.cols(); ++c)
          if (res.scores(b, c) > res.scores(b, best)) best = c;
        if (best == static_cast<Eigen::Index>(labels[static_cast<std::size_t>(b)]))
          ++res.correct;
      }
    }
    return res;
  }

  void backward(Tape<S>& tape, const Mat<S>& dlogits) {
    if (tape.consumed) throw ReuseError("network: tape already walked");
    tape.consumed = true;
    Mat<S> g = dlogits;
    for (auto it = tape.nodes.rbegin(); it != tape.nodes.rend(); ++it)
      g = it->module->backward(it->cache.get(), g);
  }

  std::vector<ParamView<S>> params() {
    std::vector<ParamView<S>> out;
    for (auto& m : modules_) m->collect_params(out);
    return out;
  }
  void zero_grads() {
    for (auto& m : modules_) m->zero_grads();
  }

  void set_sigma(double sigma) {
    for (auto* d : dcls_) d->set_sigma(sigma);
  }

  const NetworkConfig& config() const { return cfg_; }
  const std::vector<SiLifLayer<S>*>& silif_layers() const { return silif_; }
  const std::vector<CSiLifLayer<S>*>& csilif_layers() const { return csilif_; }
  const std::vector<AdLifLayer<S>*>& adlif_layers() const { return adlif_; }
  const std::vector<RfLayer<S>*>& rf_layers() const { return rf_; }
  const std::vector<DclsLayer<S>*>& dcls_layers() const { return dcls_; }
  const std::vector<BatchNormLayer<S>*>& bn_layers() const { return bns_; }
  const std::vector<DropoutLayer<S>*>& dropout_layers() const { return drops_; }
  LiReadoutLayer<S>* readout() { return readout_; }

 private:
  NetworkConfig cfg_;
  std::vector<std::unique_ptr<Module<S>>> modules_;
  std::vector<SiLifLayer<S>*> silif_;
  std::vector<CSiLifLayer<S>*> csilif_;
  std::vector<AdLifLayer<S>*> adlif_;
  std::vector<RfLayer<S>*> rf_;
  std::vector<DclsLayer<S>*> dcls_;
  std::vector<BatchNormLayer<S>*> bns_;
  std::vector<DropoutLayer<S>*> drops_;
  LiReadoutLayer<S>* readout_ = nullptr;
};

}  // namespace silif
