#include "graftnet/criteria.hpp"

#include "graftnet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

namespace graftnet {

double filter_l1(std::span<const double> filter) {
  double sum = 0.0;
  for (double v : filter) sum += std::abs(v);
  return sum;
}

std::vector<double> filter_l1_norms(const Tensor& conv_weight) {
  if (conv_weight.rank() != 4) throw ArgumentError("conv weight must be rank 4, got " + shape_string(conv_weight.shape()));
  std::vector<double> norms(conv_weight.dim(0));
  for (std::size_t j = 0; j < norms.size(); ++j) norms[j] = filter_l1(conv_weight.slice(j));
  return norms;
}

double layer_l1(const Tensor& conv_weight) {
  double total = 0.0;
  for (double n : filter_l1_norms(conv_weight)) total += n;
  return total;
}

EntropyResult tensor_entropy(std::span<const double> values, const HistogramSpec& spec) {
  if (spec.bin_count < 2) throw ArgumentError("histogram needs at least 2 bins");
  if (values.empty()) throw ArgumentError("entropy of an empty tensor");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  const auto bins = spec.bin_count;

  std::vector<std::size_t> counts(bins, 0);
  if (hi > lo) {
    const double range = hi - lo;
    for (double v : values) {
      const double t = (v - lo) / range * static_cast<double>(bins);
      counts[std::min(static_cast<std::size_t>(t), bins - 1)]++;
    }
  } else {
    counts[0] = values.size();
  }

  EntropyResult result;
  result.bin_probabilities.resize(bins);
  const double total = static_cast<double>(values.size());
  for (std::size_t k = 0; k < bins; ++k) {
    const double p = static_cast<double>(counts[k]) / total;
    result.bin_probabilities[k] = p;
    if (p > 0.0) result.value -= p * std::log(p);
  }
  return result;
}

double layer_entropy_sum(const Tensor& conv_weight, const HistogramSpec& spec) {
  if (conv_weight.rank() != 4) throw ArgumentError("conv weight must be rank 4");
  double total = 0.0;
  for (std::size_t j = 0; j < conv_weight.dim(0); ++j) total += tensor_entropy(conv_weight.slice(j), spec).value;
  return total;
}

double network_information(const ParameterSet& params, const HistogramSpec& spec) {
  double total = 0.0;
  for (const auto& p : params)
    if (is_conv_weight(p.name)) total += tensor_entropy(p.value, spec).value;
  return total;
}

JointEntropies joint_entropy_oracle(const Eigen::MatrixXd& joint, std::vector<long> x_support,
                                    std::vector<long> y_support) {
  const auto rows = static_cast<std::size_t>(joint.rows());
  const auto cols = static_cast<std::size_t>(joint.cols());
  if (rows == 0 || cols == 0) throw ArgumentError("joint distribution is empty");
  if (x_support.empty())
    for (std::size_t i = 0; i < rows; ++i) x_support.push_back(static_cast<long>(i));
  if (y_support.empty())
    for (std::size_t j = 0; j < cols; ++j) y_support.push_back(static_cast<long>(j));
  if (x_support.size() != rows || y_support.size() != cols)
    throw ArgumentError("support sizes do not match the joint table");
  if ((joint.array() < 0.0).any() || !joint.allFinite())
    throw ArgumentError("joint probabilities must be finite and non-negative");
  if (std::abs(joint.sum() - 1.0) > 1e-9) throw ArgumentError("joint probabilities do not sum to 1");
  auto distinct = [](std::vector<long> s) {
    std::sort(s.begin(), s.end());
    return std::adjacent_find(s.begin(), s.end()) == s.end();
  };
  if (!distinct(x_support) || !distinct(y_support)) throw ArgumentError("support values must be distinct");

  std::map<std::pair<long, long>, double> xy, xz, yz;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      const double p = joint(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      const long x = x_support[i], y = y_support[j], z = x + y;
      xy[{x, y}] += p;
      xz[{x, z}] += p;
      yz[{y, z}] += p;
    }
  auto entropy = [](const std::map<std::pair<long, long>, double>& table) {
    double h = 0.0;
    for (const auto& [key, p] : table)
      if (p > 0.0) h -= p * std::log(p);
    return h;
  };
  return {entropy(xy), entropy(xz), entropy(yz)};
}

}  // namespace graftnet
