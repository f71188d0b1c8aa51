#pragma once

#include "graftnet/tensor.hpp"

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

namespace graftnet {

/// Per-layer scratch captured by a training forward pass.
struct LayerCache {
  Tensor input;
  Tensor columns;                  // conv: im2col buffer [N, Cin*K*K, Hout*Wout]
  std::vector<std::size_t> argmax; // max-pool: flat input index of each output
};

/// 2-D convolution with square kernels. Weight [Cout, Cin, K, K], bias [Cout].
struct Conv2d {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t weight_index = 0;
  std::size_t bias_index = 0;

  Shape output_shape(const Shape& in) const;
  Tensor forward(const ParameterSet& params, const Tensor& in, LayerCache* cache) const;
  Tensor backward(const ParameterSet& params, ParameterSet& grads, const LayerCache& cache,
                  const Tensor& grad_out) const;
};

/// Fully connected layer on [N, in] inputs. Weight [out, in], bias [out].
struct Dense {
  std::size_t in_features = 0;
  std::size_t out_features = 0;
  std::size_t weight_index = 0;
  std::size_t bias_index = 0;

  Shape output_shape(const Shape& in) const;
  Tensor forward(const ParameterSet& params, const Tensor& in, LayerCache* cache) const;
  Tensor backward(const ParameterSet& params, ParameterSet& grads, const LayerCache& cache,
                  const Tensor& grad_out) const;
};

struct Relu {
  Shape output_shape(const Shape& in) const { return in; }
  Tensor forward(const ParameterSet& params, const Tensor& in, LayerCache* cache) const;
  Tensor backward(const ParameterSet& params, ParameterSet& grads, const LayerCache& cache,
                  const Tensor& grad_out) const;
};

/// Max pooling over non-overlapping or strided square windows, no padding.
struct MaxPool2d {
  std::size_t kernel = 2;
  std::size_t stride = 2;

  Shape output_shape(const Shape& in) const;
  Tensor forward(const ParameterSet& params, const Tensor& in, LayerCache* cache) const;
  Tensor backward(const ParameterSet& params, ParameterSet& grads, const LayerCache& cache,
                  const Tensor& grad_out) const;
};

struct Flatten {
  Shape output_shape(const Shape& in) const;
  Tensor forward(const ParameterSet& params, const Tensor& in, LayerCache* cache) const;
  Tensor backward(const ParameterSet& params, ParameterSet& grads, const LayerCache& cache,
                  const Tensor& grad_out) const;
};

using Layer = std::variant<Conv2d, Dense, Relu, MaxPool2d, Flatten>;

std::string layer_kind(const Layer& layer);

}  // namespace graftnet
