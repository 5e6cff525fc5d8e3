#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "silif/batch.hpp"
#include "silif/errors.hpp"

namespace silif {

// numerically stable softmax over each row
template <typename S>
Mat<S> softmax_rows(const Mat<S>& logits) {
  Arr<S> mx = logits.array().rowwise().maxCoeff();
  Mat<S> e = (logits.array().colwise() - mx).exp().matrix();
  Arr<S> z = e.array().rowwise().sum();
  return (e.array().colwise() / z).matrix();
}

// class scores: per-step probabilities summed over the sequence
template <typename S>
Mat<S> sum_over_time(const Mat<S>& probs, Eigen::Index batch, Eigen::Index steps) {
  if (probs.rows() != batch * steps) throw ShapeError("sum_over_time: row count mismatch");
  Mat<S> scores = Mat<S>::Zero(batch, probs.cols());
  for (Eigen::Index t = 0; t < steps; ++t) scores += probs.middleRows(t * batch, batch);
  return scores;
}

// mean over the batch of -log(score_y / sum(scores)); the explicit
// renormalization keeps the loss well defined even if scores drift from
// summing to the step count
template <typename S>
std::pair<S, Mat<S>> cross_entropy_scores(const Mat<S>& scores,
                                          const std::vector<std::uint32_t>& labels) {
  const Eigen::Index batch = scores.rows();
  if (static_cast<Eigen::Index>(labels.size()) != batch)
    throw ShapeError("cross_entropy_scores: one label per row required");
  Mat<S> dscores(batch, scores.cols());
  S loss = S(0);
  const S invb = S(1) / static_cast<S>(batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const auto y = static_cast<Eigen::Index>(labels[static_cast<std::size_t>(b)]);
    if (y >= scores.cols()) throw DataError("cross_entropy_scores: label out of range");
    const S total = scores.row(b).sum();
    const S sy = scores(b, y);
    if (!(sy > S(0)) || !(total > S(0)))
      throw NumericError("cross_entropy_scores: nonpositive score mass");
    loss += -std::log(sy / total);
    dscores.row(b).setConstant(invb / total);
    dscores(b, y) -= invb / sy;
  }
  return {loss * invb, dscores};
}

// adjoint of sum_over_time . softmax_rows given d loss / d scores
template <typename S>
Mat<S> softmax_sum_backward(const Mat<S>& probs, const Mat<S>& dscores,
                            Eigen::Index batch, Eigen::Index steps) {
  Mat<S> dlogits(probs.rows(), probs.cols());
  for (Eigen::Index t = 0; t < steps; ++t) {
    auto p = probs.middleRows(t * batch, batch);
    Mat<S> inner = p.cwiseProduct(dscores);
    Arr<S> dot = inner.array().rowwise().sum();
    dlogits.middleRows(t * batch, batch) =
        (inner.array() - p.array().colwise() * dot).matrix();
  }
  return dlogits;
}

// 0.5/B * sum of squared logits; a smooth stand-in loss for derivative checks
template <typename S>
std::pair<S, Mat<S>> quadratic_loss(const Mat<S>& logits, Eigen::Index batch) {
  const S invb = S(1) / static_cast<S>(batch);
  const S loss = S(0.5) * invb * logits.array().square().sum();
  return {loss, (logits * invb).eval()};
}

}  // namespace silif
