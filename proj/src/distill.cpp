#include "graftnet/distill.hpp"

#include "graftnet/errors.hpp"

namespace graftnet {

void DistillConfig::validate() const {
  if (!(temperature > 0.0)) throw ConfigError("distillation temperature must be > 0");
  if (!(kd_weight >= 0.0)) throw ConfigError("kd_weight must be >= 0");
}

SoftTargets temperature_softmax(const Tensor& logits, double tau) {
  if (!(tau > 0.0)) throw ArgumentError("temperature must be > 0");
  Tensor scaled(logits.shape(), logits.data() / tau);
  return {softmax(scaled), tau};
}

Tensor teacher_average(std::span<const Tensor> teacher_probs) {
  if (teacher_probs.empty()) throw ArgumentError("teacher_average needs at least one teacher");
  Tensor avg(teacher_probs.front().shape());
  for (const auto& t : teacher_probs) {
    if (t.shape() != avg.shape()) throw ArgumentError("teacher probability shapes differ");
    avg.data() += t.data();
  }
  avg.data() /= static_cast<double>(teacher_probs.size());
  return avg;
}

LossResult kd_loss_with_grad(const Tensor& student_logits, const Tensor& teacher_avg, double tau) {
  if (!(tau > 0.0)) throw ArgumentError("temperature must be > 0");
  if (student_logits.shape() != teacher_avg.shape())
    throw ArgumentError("student logits " + shape_string(student_logits.shape()) + " vs teacher " +
                        shape_string(teacher_avg.shape()));
  const double n = static_cast<double>(student_logits.dim(0));
  Tensor scaled(student_logits.shape(), student_logits.data() / tau);
  const Tensor logq = log_softmax(scaled);
  const double cross = -teacher_avg.data().dot(logq.data());

  LossResult r;
  r.loss = tau * tau * cross / n;
  // d/dz of -tau^2 sum p log softmax(z/tau) = tau * (q * sum_k p - p)
  const Tensor q = softmax(scaled);
  r.grad = Tensor(student_logits.shape());
  auto g = r.grad.matrix();
  const auto qm = q.matrix();
  const auto pm = teacher_avg.matrix();
  for (Eigen::Index i = 0; i < g.rows(); ++i) g.row(i) = (tau / n) * (qm.row(i) * pm.row(i).sum() - pm.row(i));
  return r;
}

double kd_loss(const Tensor& student_logits, const Tensor& teacher_avg, double tau) {
  return kd_loss_with_grad(student_logits, teacher_avg, tau).loss;
}

StudentLoss student_total_loss(const Tensor& student_logits, std::span<const int> labels,
                               const Tensor& teacher_avg, const DistillConfig& cfg) {
  auto ce = cross_entropy(student_logits, labels);
  auto kd = kd_loss_with_grad(student_logits, teacher_avg, cfg.temperature);
  StudentLoss out;
  out.ce_part = ce.loss;
  out.kd_part = kd.loss;
  out.total = ce.loss + cfg.kd_weight * kd.loss;
  out.grad = Tensor(student_logits.shape(), ce.grad.data() + cfg.kd_weight * kd.grad.data());
  return out;
}

}  // namespace graftnet
