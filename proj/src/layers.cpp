#include "graftnet/layers.hpp"

#include "graftnet/errors.hpp"

#include <limits>

namespace graftnet {

namespace {

Shape with_batch(std::size_t n, const Shape& sample) {
  Shape s{n};
  s.insert(s.end(), sample.begin(), sample.end());
  return s;
}

Shape sample_shape(const Tensor& t) { return Shape(t.shape().begin() + 1, t.shape().end()); }

std::size_t conv_extent(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t pad) {
  if (in + 2 * pad < kernel) return 0;
  return (in + 2 * pad - kernel) / stride + 1;
}

}  // namespace

// ---------------------------------------------------------------- Conv2d

Shape Conv2d::output_shape(const Shape& in) const {
  if (in.size() != 3 || in[0] != in_channels)
    throw ConfigError("conv expects [" + std::to_string(in_channels) + ",H,W] input, got " +
                      shape_string(in));
  const auto h = conv_extent(in[1], kernel, stride, padding);
  const auto w = conv_extent(in[2], kernel, stride, padding);
  if (h == 0 || w == 0) throw ConfigError("conv kernel larger than padded input " + shape_string(in));
  return {out_channels, h, w};
}

Tensor Conv2d::forward(const ParameterSet& params, const Tensor& in, LayerCache* cache) const {
  const Shape out_sample = output_shape(sample_shape(in));
  const std::size_t n = in.dim(0), height = in.dim(2), width = in.dim(3);
  const std::size_t out_h = out_sample[1], out_w = out_sample[2];
  const std::size_t patch = in_channels * kernel * kernel;
  const std::size_t positions = out_h * out_w;

  const auto weight = params[weight_index].value.matrix(out_channels, patch);
  const auto& bias = params[bias_index].value.data();

  Tensor columns({n, patch, positions});
  Tensor out(with_batch(n, out_sample));
  for (std::size_t s = 0; s < n; ++s) {
    auto cols = columns.matrix(n * patch, positions).middleRows(static_cast<Eigen::Index>(s * patch),
                                                                 static_cast<Eigen::Index>(patch));
    const double* src = in.data().data() + s * in_channels * height * width;
    for (std::size_t c = 0; c < in_channels; ++c)
      for (std::size_t ky = 0; ky < kernel; ++ky)
        for (std::size_t kx = 0; kx < kernel; ++kx) {
          const auto row = static_cast<Eigen::Index>((c * kernel + ky) * kernel + kx);
          for (std::size_t oy = 0; oy < out_h; ++oy) {
            const long iy = static_cast<long>(oy * stride + ky) - static_cast<long>(padding);
            for (std::size_t ox = 0; ox < out_w; ++ox) {
              const long ix = static_cast<long>(ox * stride + kx) - static_cast<long>(padding);
              const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<long>(height) &&
                                  ix < static_cast<long>(width);
              cols(row, static_cast<Eigen::Index>(oy * out_w + ox)) =
                  inside ? src[(c * height + static_cast<std::size_t>(iy)) * width +
                               static_cast<std::size_t>(ix)]
                         : 0.0;
            }
          }
        }
    auto dst = out.matrix(n * out_channels, positions)
                   .middleRows(static_cast<Eigen::Index>(s * out_channels),
                               static_cast<Eigen::Index>(out_channels));
    dst.noalias() = weight * cols;
    dst.colwise() += bias;
  }
  if (cache) {
    cache->input = in;
    cache->columns = std::move(columns);
  }
  return out;
}

Tensor Conv2d::backward(const ParameterSet& params, ParameterSet& grads, const LayerCache& cache,
                        const Tensor& grad_out) const {
  const Tensor& in = cache.input;
  const std::size_t n = in.dim(0), height = in.dim(2), width = in.dim(3);
  const std::size_t out_h = grad_out.dim(2), out_w = grad_out.dim(3);
  const std::size_t patch = in_channels * kernel * kernel;
  const std::size_t positions = out_h * out_w;

  const auto weight = params[weight_index].value.matrix(out_channels, patch);
  auto grad_weight = grads[weight_index].value.matrix(out_channels, patch);
  auto& grad_bias = grads[bias_index].value.data();

  Tensor grad_in(in.shape());
  RowMatrix grad_cols(static_cast<Eigen::Index>(patch), static_cast<Eigen::Index>(positions));
  for (std::size_t s = 0; s < n; ++s) {
    const auto cols = cache.columns.matrix(n * patch, positions)
                          .middleRows(static_cast<Eigen::Index>(s * patch),
                                      static_cast<Eigen::Index>(patch));
    const auto dy = grad_out.matrix(n * out_channels, positions)
                        .middleRows(static_cast<Eigen::Index>(s * out_channels),
                                    static_cast<Eigen::Index>(out_channels));
    grad_weight.noalias() += dy * cols.transpose();
    grad_bias += dy.rowwise().sum();
    grad_cols.noalias() = weight.transpose() * dy;

    double* dst = grad_in.data().data() + s * in_channels * height * width;
    for (std::size_t c = 0; c < in_channels; ++c)
      for (std::size_t ky = 0; ky < kernel; ++ky)
        for (std::size_t kx = 0; kx < kernel; ++kx) {
          const auto row = static_cast<Eigen::Index>((c * kernel + ky) * kernel + kx);
          for (std::size_t oy = 0; oy < out_h; ++oy) {
            const long iy = static_cast<long>(oy * stride + ky) - static_cast<long>(padding);
            if (iy < 0 || iy >= static_cast<long>(height)) continue;
            for (std::size_t ox = 0; ox < out_w; ++ox) {
              const long ix = static_cast<long>(ox * stride + kx) - static_cast<long>(padding);
              if (ix < 0 || ix >= static_cast<long>(width)) continue;
              dst[(c * height + static_cast<std::size_t>(iy)) * width + static_cast<std::size_t>(ix)] +=
                  grad_cols(row, static_cast<Eigen::Index>(oy * out_w + ox));
            }
          }
        }
  }
  return grad_in;
}

// ---------------------------------------------------------------- Dense

Shape Dense::output_shape(const Shape& in) const {
  if (in.size() != 1 || in[0] != in_features)
    throw ConfigError("dense expects [" + std::to_string(in_features) + "] input, got " +
                      shape_string(in));
  return {out_features};
}

Tensor Dense::forward(const ParameterSet& params, const Tensor& in, LayerCache* cache) const {
  output_shape(sample_shape(in));
  const std::size_t n = in.dim(0);
  const auto weight = params[weight_index].value.matrix(out_features, in_features);
  const auto& bias = params[bias_index].value.data();
  Tensor out({n, out_features});
  auto y = out.matrix();
  y.noalias() = in.matrix() * weight.transpose();
  y.rowwise() += bias.transpose();
  if (cache) cache->input = in;
  return out;
}

Tensor Dense::backward(const ParameterSet& params, ParameterSet& grads, const LayerCache& cache,
                       const Tensor& grad_out) const {
  const auto weight = params[weight_index].value.matrix(out_features, in_features);
  const auto dy = grad_out.matrix();
  grads[weight_index].value.matrix(out_features, in_features).noalias() +=
      dy.transpose() * cache.input.matrix();
  grads[bias_index].value.data() += dy.colwise().sum().transpose();
  Tensor grad_in(cache.input.shape());
  grad_in.matrix().noalias() = dy * weight;
  return grad_in;
}

// ---------------------------------------------------------------- Relu

Tensor Relu::forward(const ParameterSet&, const Tensor& in, LayerCache* cache) const {
  Tensor out(in.shape(), in.data().cwiseMax(0.0));
  if (cache) cache->input = in;
  return out;
}

Tensor Relu::backward(const ParameterSet&, ParameterSet&, const LayerCache& cache,
                      const Tensor& grad_out) const {
  Eigen::VectorXd g = (cache.input.data().array() > 0.0).select(grad_out.data(), 0.0);
  return Tensor(grad_out.shape(), std::move(g));
}

// ---------------------------------------------------------------- MaxPool2d

Shape MaxPool2d::output_shape(const Shape& in) const {
  if (in.size() != 3) throw ConfigError("maxpool expects [C,H,W] input, got " + shape_string(in));
  const auto h = conv_extent(in[1], kernel, stride, 0);
  const auto w = conv_extent(in[2], kernel, stride, 0);
  if (h == 0 || w == 0) throw ConfigError("maxpool window larger than input " + shape_string(in));
  return {in[0], h, w};
}

Tensor MaxPool2d::forward(const ParameterSet&, const Tensor& in, LayerCache* cache) const {
  const Shape out_sample = output_shape(sample_shape(in));
  const std::size_t n = in.dim(0), channels = in.dim(1), height = in.dim(2), width = in.dim(3);
  const std::size_t out_h = out_sample[1], out_w = out_sample[2];
  Tensor out(with_batch(n, out_sample));
  std::vector<std::size_t> argmax(out.size());
  std::size_t o = 0;
  for (std::size_t plane = 0; plane < n * channels; ++plane) {
    const std::size_t base = plane * height * width;
    for (std::size_t oy = 0; oy < out_h; ++oy)
      for (std::size_t ox = 0; ox < out_w; ++ox, ++o) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_index = base;
        for (std::size_t ky = 0; ky < kernel; ++ky)
          for (std::size_t kx = 0; kx < kernel; ++kx) {
            const std::size_t idx = base + (oy * stride + ky) * width + ox * stride + kx;
            if (in[idx] > best) {
              best = in[idx];
              best_index = idx;
            }
          }
        out[o] = best;
        argmax[o] = best_index;
      }
  }
  if (cache) {
    cache->input = in;
    cache->argmax = std::move(argmax);
  }
  return out;
}

Tensor MaxPool2d::backward(const ParameterSet&, ParameterSet&, const LayerCache& cache,
                           const Tensor& grad_out) const {
  Tensor grad_in(cache.input.shape());
  for (std::size_t o = 0; o < grad_out.size(); ++o) grad_in[cache.argmax[o]] += grad_out[o];
  return grad_in;
}

// ---------------------------------------------------------------- Flatten

Shape Flatten::output_shape(const Shape& in) const { return {shape_numel(in)}; }

Tensor Flatten::forward(const ParameterSet&, const Tensor& in, LayerCache* cache) const {
  if (cache) cache->input = Tensor(in.shape());  // only the shape is needed
  return in.reshaped({in.dim(0), in.slice_size()});
}

Tensor Flatten::backward(const ParameterSet&, ParameterSet&, const LayerCache& cache,
                         const Tensor& grad_out) const {
  return grad_out.reshaped(cache.input.shape());
}

std::string layer_kind(const Layer& layer) {
  struct Visitor {
    std::string operator()(const Conv2d&) const { return "conv"; }
    std::string operator()(const Dense&) const { return "dense"; }
    std::string operator()(const Relu&) const { return "relu"; }
    std::string operator()(const MaxPool2d&) const { return "maxpool"; }
    std::string operator()(const Flatten&) const { return "flatten"; }
  };
  return std::visit(Visitor{}, layer);
}

}  // namespace graftnet
