#pragma once

#include <memory>
#include <string>
#include <vector>

#include "silif/analysis_trace.hpp"
#include "silif/batch.hpp"

namespace silif {

enum class Mode { Train, Eval };

// Binary fires hard threshold spikes and backpropagates the boxcar
// surrogate. Relaxed substitutes the clamped ramp in the forward as well,
// making the whole network differentiable for finite-difference checks.
// Linear never spikes (threshold at +inf) and emits the membrane readout.
enum class SpikeMode { Binary, Relaxed, Linear };

// state at sequence start: zeros, or uniform draws during training only
enum class StateInit { Zero, RandomTrain };

enum class ParamGroup { Weights, Neuron, Delays };

// flat view over one trainable tensor and its gradient buffer. optimizers
// and the finite-difference harness address parameters only through these.
template <typename S>
struct ParamView {
  std::string name;
  ParamGroup group = ParamGroup::Weights;
  S* value = nullptr;
  S* grad = nullptr;
  Eigen::Index size = 0;
};

template <typename S>
class Module;

// ordered record of one forward pass. each module pushes exactly one node
// holding the values its backward needs; reversal visits each node once.
template <typename S>
struct Tape {
  struct Node {
    Module<S>* module = nullptr;
    std::shared_ptr<void> cache;
  };
  std::vector<Node> nodes;
  Eigen::Index batch = 0;
  Eigen::Index steps = 0;
  bool consumed = false;

  template <typename C>
  C& push(Module<S>* m) {
    auto cache = std::make_shared<C>();
    C& ref = *cache;
    nodes.push_back(Node{m, std::move(cache)});
    return ref;
  }
};

// per-forward context threaded through the pipeline
template <typename S>
struct Pass {
  Mode mode = Mode::Eval;
  Tape<S>* tape = nullptr;   // non-null only in train mode
  RunTrace* trace = nullptr; // always populated when non-null
  std::size_t layer_cursor = 0;
  bool keep_activities = false;
  std::vector<Mat<S>>* activities = nullptr;
  Eigen::Index batch = 0;
  Eigen::Index steps = 0;
};

template <typename S>
class Module {
 public:
  virtual ~Module() = default;
  // x is a time-flattened (steps*batch) x channels block
  virtual Mat<S> forward(const Mat<S>& x, Pass<S>& pass) = 0;
  // cache is the node this module pushed during forward
  virtual Mat<S> backward(void* cache, const Mat<S>& grad_out) = 0;
  virtual void collect_params(std::vector<ParamView<S>>&) {}
  virtual void zero_grads() {}
  virtual const std::string& name() const = 0;
};

}  // namespace silif
