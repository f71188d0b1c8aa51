#pragma once

#include "graftnet/network.hpp"

#include <span>
#include <string>
#include <vector>

namespace graftnet {

enum class CheckLoss {
  CrossEntropy,   // mean softmax cross-entropy against labels
  HalfSquaredSum  // 0.5 * sum(logits^2), labels ignored
};

struct ParameterCheck {
  std::string name;
  double max_relative_error = 0.0;
  bool flagged = false;  // max_relative_error >= tolerance
};

struct GradientCheckReport {
  double tolerance = 0.0;
  double epsilon = 0.0;
  std::vector<ParameterCheck> parameters;

  double max_relative_error() const;
  bool passed() const;
};

/// Relative error floor: |a - n| / max(|a|, |n|, kGradientFloor). Keeps
/// near-zero gradients from turning round-off into large ratios.
inline constexpr double kGradientFloor = 1e-4;

/// Compares backward() against central differences over every parameter
/// entry. The network's parameters are restored before returning.
GradientCheckReport gradient_check(Network& net, const Tensor& batch, std::span<const int> labels,
                                   double tolerance, double epsilon = 1e-6,
                                   CheckLoss loss = CheckLoss::CrossEntropy);

}  // namespace graftnet
