#include "hakg/tensor.hpp"

#include <numeric>

#include "hakg/error.hpp"

namespace hakg::nn {

std::string shape_string(const Shape& shape) {
  std::string s = "(";
  for (std::size_t k = 0; k < shape.size(); ++k) {
    if (k) s += ", ";
    s += std::to_string(shape[k]);
  }
  return s + ")";
}

namespace {

std::pair<Eigen::Index, Eigen::Index> matrix_dims(const Shape& shape) {
  if (shape.size() == 1) return {1, static_cast<Eigen::Index>(shape[0])};
  if (shape.size() == 2) return {static_cast<Eigen::Index>(shape[0]), static_cast<Eigen::Index>(shape[1])};
  throw ShapeError("tensor rank must be 1 or 2, got shape " + shape_string(shape));
}

}  // namespace

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  auto [r, c] = matrix_dims(shape_);
  data_ = Matrix::Zero(r, c);
}

Tensor::Tensor(Shape shape, Matrix data) : shape_(std::move(shape)), data_(std::move(data)) {
  auto [r, c] = matrix_dims(shape_);
  if (data_.rows() != r || data_.cols() != c) {
    throw ShapeError("tensor data " + std::to_string(data_.rows()) + "x" + std::to_string(data_.cols()) +
                     " does not match shape " + shape_string(shape_));
  }
}

void check_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw NumericError(std::string("non-finite value produced by ") + what);
}

}  // namespace hakg::nn
