#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace graftnet {

using Shape = std::vector<std::size_t>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixMap = Eigen::Map<RowMatrix>;
using ConstRowMatrixMap = Eigen::Map<const RowMatrix>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense n-dimensional array of doubles stored row-major in an Eigen vector.
///
/// product(shape) == data.size() holds for every constructed tensor; all
/// mutating helpers preserve it.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, Eigen::VectorXd data);

  static Tensor from_values(Shape shape, std::initializer_list<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return static_cast<std::size_t>(data_.size()); }
  bool empty() const { return data_.size() == 0; }

  Eigen::VectorXd& data() { return data_; }
  const Eigen::VectorXd& data() const { return data_; }
  std::span<double> values() { return {data_.data(), size()}; }
  std::span<const double> values() const { return {data_.data(), size()}; }

  double& operator[](std::size_t i) { return data_[static_cast<Eigen::Index>(i)]; }
  double operator[](std::size_t i) const { return data_[static_cast<Eigen::Index>(i)]; }

  double& at(std::initializer_list<std::size_t> index);
  double at(std::initializer_list<std::size_t> index) const;

  /// View as a (dim0) x (rest) row-major matrix.
  RowMatrixMap matrix();
  ConstRowMatrixMap matrix() const;
  /// View as rows x cols; rows * cols must equal size().
  RowMatrixMap matrix(std::size_t rows, std::size_t cols);
  ConstRowMatrixMap matrix(std::size_t rows, std::size_t cols) const;

  /// Contiguous slice along axis 0, e.g. one filter of a conv weight.
  std::span<double> slice(std::size_t index);
  std::span<const double> slice(std::size_t index) const;
  std::size_t slice_size() const;

  Tensor reshaped(Shape shape) const;
  void set_zero() { data_.setZero(); }
  bool all_finite() const { return data_.allFinite(); }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  Eigen::VectorXd data_;
};

/// Named tensor, the element of a parameter view.
struct NamedTensor {
  std::string name;
  Tensor value;
  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

/// Ordered named-tensor view. Order is part of the identity: two views are
/// congruent when names and shapes agree position by position.
using ParameterSet = std::vector<NamedTensor>;

bool congruent(const ParameterSet& a, const ParameterSet& b);
void require_congruent(const ParameterSet& a, const ParameterSet& b, const std::string& context);
const NamedTensor* find_parameter(const ParameterSet& params, const std::string& name);

}  // namespace graftnet
