#pragma once

#include <Eigen/Dense>
#include <vector>

#include "silif/errors.hpp"
#include "silif/spikes.hpp"

namespace silif {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Arr = Eigen::Array<S, Eigen::Dynamic, 1>;

// time-major sequence batch: row t*batch + b holds sample b at step t, so
// one step is a contiguous block of `batch` rows and a time-flattened op
// (dense, batchnorm) is a single matrix expression.
template <typename S>
struct SeqBatch {
  Mat<S> m;  // (steps*batch) x channels
  Eigen::Index batch = 0;
  Eigen::Index steps = 0;

  SeqBatch() = default;
  SeqBatch(Eigen::Index b, Eigen::Index t, Eigen::Index c)
      : m(Mat<S>::Zero(t * b, c)), batch(b), steps(t) {}

  Eigen::Index channels() const { return m.cols(); }
  auto step(Eigen::Index t) { return m.middleRows(t * batch, batch); }
  auto step(Eigen::Index t) const { return m.middleRows(t * batch, batch); }
};

// gather the given samples of a tensor into a compute batch
template <typename S>
SeqBatch<S> to_seq_batch(const SpikeTensor& t, const std::vector<Eigen::Index>& idx) {
  SeqBatch<S> out(static_cast<Eigen::Index>(idx.size()), t.steps, t.channels);
  for (Eigen::Index i = 0; i < out.batch; ++i) {
    const Eigen::Index b = idx[static_cast<std::size_t>(i)];
    if (b < 0 || b >= t.batch) throw ShapeError("to_seq_batch: sample index out of range");
    for (Eigen::Index step = 0; step < t.steps; ++step)
      for (Eigen::Index c = 0; c < t.channels; ++c)
        out.m(step * out.batch + i, c) = static_cast<S>(t.at(b, step, c));
  }
  return out;
}

template <typename S>
SeqBatch<S> to_seq_batch(const SpikeTensor& t) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(t.batch));
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<Eigen::Index>(i);
  return to_seq_batch<S>(t, idx);
}

}  // namespace silif
