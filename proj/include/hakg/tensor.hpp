#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace hakg::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

// Rank-1 or rank-2 row-major float64 tensor. A rank-1 tensor of length n is
// stored as a 1 x n matrix.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);  // zero-filled
  Tensor(Shape shape, Matrix data);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return static_cast<std::size_t>(data_.size()); }

  Matrix& matrix() { return data_; }
  const Matrix& matrix() const { return data_; }
  std::span<double> values() { return {data_.data(), size()}; }
  std::span<const double> values() const { return {data_.data(), size()}; }

  bool operator==(const Tensor& other) const { return shape_ == other.shape_ && data_ == other.data_; }

 private:
  Shape shape_;
  Matrix data_;
};

// Throws NumericError naming `what` if any entry is NaN or infinite.
void check_finite(const Matrix& m, const char* what);

}  // namespace hakg::nn
