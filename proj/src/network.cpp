#include "graftnet/network.hpp"

#include "graftnet/errors.hpp"

#include <cmath>
#include <random>

namespace graftnet {

Architecture small_convnet(Shape input, std::size_t c1, std::size_t c2, std::size_t classes) {
  using K = LayerSpec::Kind;
  return Architecture{std::move(input),
                      {{K::Conv, c1, 3, 1, 1},
                       {K::Relu},
                       {K::MaxPool, 0, 2},
                       {K::Conv, c2, 3, 1, 1},
                       {K::Relu},
                       {K::MaxPool, 0, 2},
                       {K::Flatten},
                       {K::Dense, classes}}};
}

namespace {
bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}
}  // namespace

bool is_conv_weight(const std::string& name) { return has_suffix(name, std::string(".") + kConvWeight); }
bool is_conv_bias(const std::string& name) { return has_suffix(name, std::string(".") + kConvBias); }

std::string layer_prefix(const std::string& name) { return name.substr(0, name.find('.')); }

Network::Network(const Architecture& arch) : arch_(arch) {
  if (arch.input.size() != 3) throw ConfigError("architecture input must be [C,H,W]");
  for (auto d : arch.input)
    if (d == 0) throw ConfigError("architecture input extents must be positive");
  if (arch.layers.empty()) throw ConfigError("architecture has no layers");

  Shape shape = arch.input;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const auto& spec = arch.layers[i];
    const std::string name = "layer" + std::to_string(i);
    auto add_param = [&](const char* kind, Shape s) {
      params_.push_back({name + "." + kind, Tensor(s)});
      grads_.push_back({name + "." + kind, Tensor(std::move(s))});
      return params_.size() - 1;
    };
    try {
      switch (spec.kind) {
        case LayerSpec::Kind::Conv: {
          if (spec.units == 0 || spec.kernel == 0)
            throw ConfigError("conv needs positive channels and kernel");
          Conv2d conv;
          conv.in_channels = shape.at(0);
          conv.out_channels = spec.units;
          conv.kernel = spec.kernel;
          conv.stride = spec.stride ? spec.stride : 1;
          conv.padding = spec.padding;
          shape = conv.output_shape(shape);
          conv.weight_index = add_param(kConvWeight, {conv.out_channels, conv.in_channels, conv.kernel, conv.kernel});
          conv.bias_index = add_param(kConvBias, {conv.out_channels});
          layers_.emplace_back(conv);
          break;
        }
        case LayerSpec::Kind::Dense: {
          if (spec.units == 0) throw ConfigError("dense needs positive output features");
          Dense dense;
          dense.in_features = shape.size() == 1 ? shape[0] : 0;
          dense.out_features = spec.units;
          shape = dense.output_shape(shape);
          dense.weight_index = add_param(kDenseWeight, {dense.out_features, dense.in_features});
          dense.bias_index = add_param(kDenseBias, {dense.out_features});
          layers_.emplace_back(dense);
          break;
        }
        case LayerSpec::Kind::Relu:
          layers_.emplace_back(Relu{});
          break;
        case LayerSpec::Kind::MaxPool: {
          MaxPool2d pool;
          pool.kernel = spec.kernel ? spec.kernel : 2;
          pool.stride = spec.stride ? spec.stride : pool.kernel;
          shape = pool.output_shape(shape);
          layers_.emplace_back(pool);
          break;
        }
        case LayerSpec::Kind::Flatten:
          shape = Flatten{}.output_shape(shape);
          layers_.emplace_back(Flatten{});
          break;
      }
    } catch (const ConfigError& e) {
      throw ConfigError(name + " (" + std::to_string(i) + "): " + e.what());
    }
    layer_names_.push_back(name);
  }
  if (shape.size() != 1) throw ConfigError("network output must be a flat logit vector, got " + shape_string(shape));
  output_shape_ = shape;
  caches_.resize(layers_.size());
}

Network Network::zeros(const Architecture& arch) { return Network(arch); }

Network Network::build(const Architecture& arch, std::uint64_t seed) {
  Network net(arch);
  std::mt19937_64 rng(seed);
  for (auto& p : net.params_) {
    const auto& shape = p.value.shape();
    if (shape.size() < 2) continue;  // biases start at zero
    const double fan_in = static_cast<double>(p.value.size() / shape[0]);
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in));
    for (auto& v : p.value.values()) v = normal(rng);
  }
  return net;
}

void Network::check_input(const Tensor& batch) const {
  if (batch.rank() != 4 || Shape(batch.shape().begin() + 1, batch.shape().end()) != arch_.input)
    throw ConfigError(layer_names_.front() + ": input batch " + shape_string(batch.shape()) +
                      " does not match declared input [N," + shape_string(arch_.input).substr(1));
}

Tensor Network::forward(const Tensor& batch) {
  check_input(batch);
  Tensor x = batch;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    try {
      x = std::visit([&](const auto& layer) { return layer.forward(params_, x, &caches_[i]); },
                     layers_[i]);
    } catch (const ConfigError& e) {
      throw ConfigError(layer_names_[i] + ": " + e.what());
    }
  }
  has_cache_ = true;
  return x;
}

Tensor Network::predict(const Tensor& batch) const {
  check_input(batch);
  Tensor x = batch;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    x = std::visit([&](const auto& layer) { return layer.forward(params_, x, nullptr); }, layers_[i]);
  }
  return x;
}

const ParameterSet& Network::backward(const Tensor& logit_grads) {
  if (!has_cache_) throw StateError("backward called without a preceding forward");
  const auto& last_input = caches_.back().input;
  const std::size_t n = last_input.dim(0);
  if (logit_grads.shape() != Shape{n, num_classes()})
    throw ArgumentError("logit gradient shape " + shape_string(logit_grads.shape()) +
                        " does not match forward output");
  for (auto& g : grads_) g.value.set_zero();
  Tensor grad = logit_grads;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    grad = std::visit(
        [&](const auto& layer) { return layer.backward(params_, grads_, caches_[i], grad); },
        layers_[i]);
  }
  has_cache_ = false;
  return grads_;
}

void Network::set_parameters(const ParameterSet& params) {
  require_congruent(params_, params, "set_parameters");
  params_ = params;
}

std::size_t Network::parameter_count() const {
  std::size_t total = 0;
  for (const auto& p : params_) total += p.value.size();
  return total;
}

}  // namespace graftnet
