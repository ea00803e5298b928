#include "sandkit/matrix.hpp"

#include <cmath>
#include <string>

#include "sandkit/error.hpp"

namespace sandkit {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ValidationError("matrix payload has " + std::to_string(data_.size()) +
                          " values, shape " + std::to_string(rows_) + "x" +
                          std::to_string(cols_) + " requires " + std::to_string(rows_ * cols_));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw ValidationError("non-finite matrix entry at index " + std::to_string(i));
    }
  }
}

Matrix Matrix::zeros(std::size_t rows, std::size_t cols) {
  return Matrix(rows, cols, std::vector<double>(rows * cols, 0.0));
}

Matrix Matrix::identity(std::size_t n) {
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) d[i * n + i] = 1.0;
  return Matrix(n, n, std::move(d));
}

Matrix Matrix::from_eigen(const RowMajorMatrix& m) {
  return Matrix(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()),
                std::vector<double>(m.data(), m.data() + m.size()));
}

Matrix Matrix::from_eigen(const Eigen::MatrixXd& m) { return from_eigen(RowMajorMatrix(m)); }

Matrix Matrix::from_columns(const std::vector<Vector>& columns) {
  if (columns.empty()) return Matrix();
  const std::size_t rows = columns.front().size();
  const std::size_t cols = columns.size();
  std::vector<double> d(rows * cols);
  for (std::size_t j = 0; j < cols; ++j) {
    if (columns[j].size() != rows) {
      throw DimensionError("column " + std::to_string(j) + " has length " +
                           std::to_string(columns[j].size()) + ", expected " + std::to_string(rows));
    }
    for (std::size_t i = 0; i < rows; ++i) d[i * cols + j] = columns[j][i];
  }
  return Matrix(rows, cols, std::move(d));
}

std::span<const double> Matrix::row(std::size_t r) const {
  return std::span<const double>(data_).subspan(r * cols_, cols_);
}

Vector Matrix::column(std::size_t c) const {
  Vector v(rows_);
  for (std::size_t i = 0; i < rows_; ++i) v[i] = data_[i * cols_ + c];
  return v;
}

ConstMatrixMap Matrix::view() const noexcept {
  return ConstMatrixMap(data_.data(), static_cast<Eigen::Index>(rows_),
                        static_cast<Eigen::Index>(cols_));
}

double euclidean_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("dot: lengths " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()) + " differ");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace sandkit
