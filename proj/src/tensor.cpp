#include "graftnet/tensor.hpp"

#include "graftnet/errors.hpp"

#include <numeric>
#include <sstream>

namespace graftnet {

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)),
      data_(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(shape_numel(shape_)), fill)) {
  for (auto d : shape_)
    if (d == 0) throw ArgumentError("tensor extents must be positive, got " + shape_string(shape_));
}

Tensor::Tensor(Shape shape, Eigen::VectorXd data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_numel(shape_) != size())
    throw ArgumentError("shape " + shape_string(shape_) + " does not match " +
                        std::to_string(size()) + " values");
}

Tensor Tensor::from_values(Shape shape, std::initializer_list<double> values) {
  Eigen::VectorXd data(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) data[i++] = v;
  return Tensor(std::move(shape), std::move(data));
}

namespace {
std::size_t flat_index(const Shape& shape, std::initializer_list<std::size_t> index) {
  if (index.size() != shape.size()) throw ArgumentError("index rank does not match tensor rank");
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (auto i : index) {
    if (i >= shape[axis]) throw ArgumentError("index out of range on axis " + std::to_string(axis));
    flat = flat * shape[axis] + i;
    ++axis;
  }
  return flat;
}
}  // namespace

double& Tensor::at(std::initializer_list<std::size_t> index) {
  return (*this)[flat_index(shape_, index)];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
  return (*this)[flat_index(shape_, index)];
}

std::size_t Tensor::slice_size() const { return shape_.empty() ? 0 : size() / shape_[0]; }

RowMatrixMap Tensor::matrix() {
  return matrix(shape_.empty() ? 0 : shape_[0], slice_size());
}

ConstRowMatrixMap Tensor::matrix() const {
  return matrix(shape_.empty() ? 0 : shape_[0], slice_size());
}

RowMatrixMap Tensor::matrix(std::size_t rows, std::size_t cols) {
  if (rows * cols != size()) throw ArgumentError("matrix view does not cover tensor");
  return RowMatrixMap(data_.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

ConstRowMatrixMap Tensor::matrix(std::size_t rows, std::size_t cols) const {
  if (rows * cols != size()) throw ArgumentError("matrix view does not cover tensor");
  return ConstRowMatrixMap(data_.data(), static_cast<Eigen::Index>(rows),
                           static_cast<Eigen::Index>(cols));
}

std::span<double> Tensor::slice(std::size_t index) {
  if (shape_.empty() || index >= shape_[0]) throw ArgumentError("slice index out of range");
  const auto n = slice_size();
  return {data_.data() + index * n, n};
}

std::span<const double> Tensor::slice(std::size_t index) const {
  if (shape_.empty() || index >= shape_[0]) throw ArgumentError("slice index out of range");
  const auto n = slice_size();
  return {data_.data() + index * n, n};
}

Tensor Tensor::reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

bool congruent(const ParameterSet& a, const ParameterSet& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].name != b[i].name || a[i].value.shape() != b[i].value.shape()) return false;
  return true;
}

void require_congruent(const ParameterSet& a, const ParameterSet& b, const std::string& context) {
  if (a.size() != b.size())
    throw ConfigError(context + ": parameter counts differ (" + std::to_string(a.size()) + " vs " +
                      std::to_string(b.size()) + ")");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name)
      throw ConfigError(context + ": parameter " + std::to_string(i) + " is '" + a[i].name +
                        "' vs '" + b[i].name + "'");
    if (a[i].value.shape() != b[i].value.shape())
      throw ConfigError(context + ": shape of '" + a[i].name + "' is " +
                        shape_string(a[i].value.shape()) + " vs " +
                        shape_string(b[i].value.shape()));
  }
}

const NamedTensor* find_parameter(const ParameterSet& params, const std::string& name) {
  for (const auto& p : params)
    if (p.name == name) return &p;
  return nullptr;
}

}  // namespace graftnet
