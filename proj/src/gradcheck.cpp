#include "graftnet/gradcheck.hpp"

#include "graftnet/loss.hpp"

#include <algorithm>
#include <cmath>

namespace graftnet {

namespace {

LossResult evaluate(const Tensor& logits, std::span<const int> labels, CheckLoss loss) {
  if (loss == CheckLoss::CrossEntropy) return cross_entropy(logits, labels);
  return {0.5 * logits.data().squaredNorm(), logits};
}

}  // namespace

double GradientCheckReport::max_relative_error() const {
  double worst = 0.0;
  for (const auto& p : parameters) worst = std::max(worst, p.max_relative_error);
  return worst;
}

bool GradientCheckReport::passed() const {
  return std::none_of(parameters.begin(), parameters.end(), [](const auto& p) { return p.flagged; });
}

GradientCheckReport gradient_check(Network& net, const Tensor& batch, std::span<const int> labels,
                                   double tolerance, double epsilon, CheckLoss loss) {
  const Tensor logits = net.forward(batch);
  const ParameterSet analytic = net.backward(evaluate(logits, labels, loss).grad);

  GradientCheckReport report;
  report.tolerance = tolerance;
  report.epsilon = epsilon;
  auto& params = net.mutable_parameters();
  for (std::size_t p = 0; p < params.size(); ++p) {
    ParameterCheck check{params[p].name};
    for (std::size_t i = 0; i < params[p].value.size(); ++i) {
      const double saved = params[p].value[i];
      params[p].value[i] = saved + epsilon;
      const double plus = evaluate(net.predict(batch), labels, loss).loss;
      params[p].value[i] = saved - epsilon;
      const double minus = evaluate(net.predict(batch), labels, loss).loss;
      params[p].value[i] = saved;

      const double numeric = (plus - minus) / (2.0 * epsilon);
      const double exact = analytic[p].value[i];
      const double denom = std::max({std::abs(exact), std::abs(numeric), kGradientFloor});
      check.max_relative_error = std::max(check.max_relative_error, std::abs(exact - numeric) / denom);
    }
    check.flagged = !(check.max_relative_error < tolerance);
    report.parameters.push_back(std::move(check));
  }
  return report;
}

}  // namespace graftnet
