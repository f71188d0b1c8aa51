#include "graftnet/loss.hpp"

#include "graftnet/errors.hpp"

#include <cmath>

namespace graftnet {

namespace {
void check_logits(const Tensor& logits) {
  if (logits.rank() != 2) throw ArgumentError("logits must be [N, K], got " + shape_string(logits.shape()));
}

void check_labels(const Tensor& logits, std::span<const int> labels) {
  check_logits(logits);
  if (labels.empty()) throw ArgumentError("cross entropy over an empty batch");
  if (labels.size() != logits.dim(0)) throw ArgumentError("label count does not match batch size");
  const auto classes = static_cast<int>(logits.dim(1));
  for (int y : labels)
    if (y < 0 || y >= classes)
      throw ArgumentError("label " + std::to_string(y) + " outside [0, " + std::to_string(classes) + ")");
}
}  // namespace

Tensor log_softmax(const Tensor& logits) {
  check_logits(logits);
  Tensor out(logits.shape());
  auto y = out.matrix();
  const auto x = logits.matrix();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double m = x.row(i).maxCoeff();
    const double lse = m + std::log((x.row(i).array() - m).exp().sum());
    y.row(i) = x.row(i).array() - lse;
  }
  return out;
}

Tensor softmax(const Tensor& logits) {
  check_logits(logits);
  Tensor out(logits.shape());
  auto y = out.matrix();
  const auto x = logits.matrix();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double m = x.row(i).maxCoeff();
    y.row(i) = (x.row(i).array() - m).exp();
    y.row(i) /= y.row(i).sum();
  }
  return out;
}

double cross_entropy_loss(const Tensor& logits, std::span<const int> labels) {
  check_labels(logits, labels);
  const Tensor logp = log_softmax(logits);
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    total -= logp.at({i, static_cast<std::size_t>(labels[i])});
  return total / static_cast<double>(labels.size());
}

LossResult cross_entropy(const Tensor& logits, std::span<const int> labels) {
  LossResult r;
  r.loss = cross_entropy_loss(logits, labels);
  r.grad = softmax(logits);
  const double inv_n = 1.0 / static_cast<double>(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) r.grad.at({i, static_cast<std::size_t>(labels[i])}) -= 1.0;
  r.grad.data() *= inv_n;
  return r;
}

double accuracy(const Tensor& logits, std::span<const int> labels) {
  check_labels(logits, labels);
  const auto x = logits.matrix();
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::Index best = 0;
    x.row(i).maxCoeff(&best);
    if (best == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

}  // namespace graftnet
