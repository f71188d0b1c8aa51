#pragma once

#include "graftnet/layers.hpp"
#include "graftnet/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace graftnet {

/// One entry of an architecture description.
struct LayerSpec {
  enum class Kind { Conv, Dense, Relu, MaxPool, Flatten };
  Kind kind = Kind::Relu;
  std::size_t units = 0;   // conv: output channels, dense: output features
  std::size_t kernel = 0;  // conv / maxpool window
  std::size_t stride = 0;  // 0 = default (1 for conv, kernel for maxpool)
  std::size_t padding = 0;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Input sample shape [C, H, W] plus an ordered layer list.
struct Architecture {
  Shape input;
  std::vector<LayerSpec> layers;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// conv(c1)->relu->pool, conv(c2)->relu->pool, flatten, dense(classes).
Architecture small_convnet(Shape input, std::size_t c1, std::size_t c2, std::size_t classes);

/// Parameter kinds as they appear in names "layer{i}.{kind}".
inline constexpr const char* kConvWeight = "conv_weight";
inline constexpr const char* kConvBias = "conv_bias";
inline constexpr const char* kDenseWeight = "dense_weight";
inline constexpr const char* kDenseBias = "dense_bias";

bool is_conv_weight(const std::string& name);
bool is_conv_bias(const std::string& name);
/// "layer3.conv_weight" -> "layer3".
std::string layer_prefix(const std::string& name);

/// Ordered sequence of layers with a flat named-parameter view.
///
/// forward() caches activations that backward() consumes; predict() is the
/// cache-free path used for evaluation and teacher outputs.
class Network {
 public:
  /// He-style Gaussian init (std = sqrt(2 / fan_in)), zero biases.
  static Network build(const Architecture& arch, std::uint64_t seed);
  /// All parameters zero.
  static Network zeros(const Architecture& arch);

  Tensor forward(const Tensor& batch);
  Tensor predict(const Tensor& batch) const;
  /// Gradients w.r.t. every parameter, congruent with parameters().
  const ParameterSet& backward(const Tensor& logit_grads);

  const Architecture& architecture() const { return arch_; }
  const std::vector<Layer>& layers() const { return layers_; }
  const ParameterSet& parameters() const { return params_; }
  ParameterSet& mutable_parameters() { return params_; }
  const ParameterSet& gradients() const { return grads_; }
  void set_parameters(const ParameterSet& params);

  std::size_t num_classes() const { return output_shape_.at(0); }
  std::size_t parameter_count() const;

 private:
  explicit Network(const Architecture& arch);
  void check_input(const Tensor& batch) const;

  Architecture arch_;
  std::vector<Layer> layers_;
  std::vector<std::string> layer_names_;
  Shape output_shape_;
  ParameterSet params_;
  ParameterSet grads_;
  std::vector<LayerCache> caches_;
  bool has_cache_ = false;
};

}  // namespace graftnet
