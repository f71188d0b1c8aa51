#pragma once

#include "graftnet/tensor.hpp"

#include <span>

namespace graftnet {

/// Row-wise softmax of [N, K] logits, max-subtracted.
Tensor softmax(const Tensor& logits);
/// Row-wise log-softmax of [N, K] logits.
Tensor log_softmax(const Tensor& logits);

struct LossResult {
  double loss = 0.0;
  Tensor grad;  // d loss / d logits
};

/// Mean over the batch of -log softmax(logits_i)[labels_i].
double cross_entropy_loss(const Tensor& logits, std::span<const int> labels);
/// Same loss together with its gradient with respect to the logits.
LossResult cross_entropy(const Tensor& logits, std::span<const int> labels);

/// Fraction of rows whose argmax equals the label (first maximum wins).
double accuracy(const Tensor& logits, std::span<const int> labels);

}  // namespace graftnet
