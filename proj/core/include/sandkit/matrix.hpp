#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace sandkit {

using Vector = std::vector<double>;

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMajorMatrix>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

/// Dense row-major matrix of finite doubles.
///
/// Immutable after construction. Every constructor rejects NaN/Inf entries and
/// a payload whose length differs from rows * cols (throws ValidationError).
/// Zero extents are representable so that empty sets can be reported as data.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix zeros(std::size_t rows, std::size_t cols);
  static Matrix identity(std::size_t n);
  static Matrix from_eigen(const Eigen::MatrixXd& m);
  static Matrix from_eigen(const RowMajorMatrix& m);
  // Builds a rows x columns.size() matrix whose j-th column is columns[j].
  static Matrix from_columns(const std::vector<Vector>& columns);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<const double> row(std::size_t r) const;
  Vector column(std::size_t c) const;

  ConstMatrixMap view() const noexcept;
  Eigen::MatrixXd to_eigen() const { return view(); }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline ConstVectorMap as_eigen(std::span<const double> v) {
  return ConstVectorMap(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline Vector to_vector(const Eigen::VectorXd& v) { return Vector(v.data(), v.data() + v.size()); }

double euclidean_norm(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);

}  // namespace sandkit
