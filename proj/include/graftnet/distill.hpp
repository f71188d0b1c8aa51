#pragma once

#include "graftnet/loss.hpp"
#include "graftnet/tensor.hpp"

#include <span>
#include <vector>

namespace graftnet {

struct DistillConfig {
  double temperature = 2.0;
  double kd_weight = 1.0;

  void validate() const;
};

/// Row-normalised probabilities produced at a given temperature.
struct SoftTargets {
  Tensor probs;
  double temperature = 1.0;
};

SoftTargets temperature_softmax(const Tensor& logits, double tau);

/// Elementwise mean of M teacher probability tables.
Tensor teacher_average(std::span<const Tensor> teacher_probs);

/// -tau^2 * mean_i sum_k teacher(i,k) * log softmax(student/tau)(i,k), with
/// its gradient w.r.t. the student logits (teacher rows are constants).
LossResult kd_loss_with_grad(const Tensor& student_logits, const Tensor& teacher_avg, double tau);
double kd_loss(const Tensor& student_logits, const Tensor& teacher_avg, double tau);

struct StudentLoss {
  double total = 0.0;
  double ce_part = 0.0;
  double kd_part = 0.0;
  Tensor grad;  // d total / d student logits
};

/// cross_entropy + kd_weight * kd_loss.
StudentLoss student_total_loss(const Tensor& student_logits, std::span<const int> labels,
                               const Tensor& teacher_avg, const DistillConfig& cfg);

}  // namespace graftnet
