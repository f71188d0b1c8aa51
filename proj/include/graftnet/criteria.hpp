#pragma once

#include "graftnet/network.hpp"
#include "graftnet/tensor.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace graftnet {

/// Equal-width histogram over [min, max] of the measured values; the maximum
/// falls in the last bin.
struct HistogramSpec {
  std::size_t bin_count = 256;
};

struct EntropyResult {
  double value = 0.0;  // nats
  std::vector<double> bin_probabilities;
};

/// Sum of absolute values of one filter W[j, :, :, :].
double filter_l1(std::span<const double> filter);

/// Per-filter l1 norms of a conv weight [N_out, N_in, K, K].
std::vector<double> filter_l1_norms(const Tensor& conv_weight);

/// Sum of the per-filter l1 norms; the layer-level l1 criterion.
double layer_l1(const Tensor& conv_weight);

/// Histogram entropy -sum p_k ln p_k of a set of values. A constant input
/// (min == max) has entropy 0 with all mass in the first bin.
EntropyResult tensor_entropy(std::span<const double> values, const HistogramSpec& spec = {});
inline EntropyResult tensor_entropy(const Tensor& t, const HistogramSpec& spec = {}) {
  return tensor_entropy(t.values(), spec);
}

/// Sum over filters of each filter's own histogram entropy.
double layer_entropy_sum(const Tensor& conv_weight, const HistogramSpec& spec = {});

/// Sum over conv layers of the whole-layer weight entropy.
double network_information(const ParameterSet& params, const HistogramSpec& spec = {});
inline double network_information(const Network& net, const HistogramSpec& spec = {}) {
  return network_information(net.parameters(), spec);
}

struct JointEntropies {
  double xy = 0.0;
  double xz = 0.0;
  double yz = 0.0;
};

/// Joint entropies of (X,Y), (X,Z) and (Y,Z) with Z = X + Y, by enumerating
/// the supports. joint(i, j) = P(X = x_support[i], Y = y_support[j]).
/// Empty supports default to 0..n-1.
JointEntropies joint_entropy_oracle(const Eigen::MatrixXd& joint, std::vector<long> x_support = {},
                                    std::vector<long> y_support = {});

}  // namespace graftnet
