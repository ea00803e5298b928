#include "sandkit/geometry.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "sandkit/error.hpp"
#include "sandkit/log.hpp"

namespace sandkit {

WhiteningContext WhiteningContext::from_matrix(Matrix centered) {
  const std::size_t d = centered.cols();
  return WhiteningContext(std::move(centered), Vector(d, 0.0));
}

bool WhiteningContext::is_centered(double tol) const {
  const auto sums = c_.view().colwise().sum();
  const double bound = tol * static_cast<double>(std::max<std::size_t>(n_v(), 1));
  return (sums.array().abs() <= bound).all();
}

bool WhiteningContext::is_zero() const {
  return std::all_of(c_.data().begin(), c_.data().end(), [](double x) { return x == 0.0; });
}

WhiteningContext center_embeddings(const EmbeddingTable& e) {
  const Matrix& table = e.table;
  if (table.rows() < 2) {
    throw ValidationError("embedding table needs at least 2 rows, got " + std::to_string(table.rows()));
  }
  if (table.cols() == 0) throw ValidationError("embedding table has no columns");

  if (e.centered) {
    WhiteningContext ctx(table, Vector(table.cols(), 0.0));
    if (!ctx.is_centered()) {
      throw ValidationError("embedding table is flagged centered but its column means are not 0");
    }
    return ctx;
  }

  const auto view = table.view();
  const double n = static_cast<double>(table.rows());
  Eigen::RowVectorXd mean = view.colwise().sum() / n;
  RowMajorMatrix c = view.rowwise() - mean;
  // Second pass removes the rounding residue of the first mean.
  const Eigen::RowVectorXd residue = c.colwise().sum() / n;
  c.rowwise() -= residue;
  mean += residue;

  WhiteningContext ctx(Matrix::from_eigen(c), Vector(mean.data(), mean.data() + mean.size()));
  if (ctx.is_zero()) {
    log::warn("centered embedding matrix is identically zero (all rows equal); whitened norms vanish");
  }
  return ctx;
}

Matrix covariance(const WhiteningContext& ctx) {
  const auto c = ctx.centered().view();
  Eigen::MatrixXd cov = (c.transpose() * c) / static_cast<double>(ctx.n_v());
  // Exact symmetry.
  cov = 0.5 * (cov + cov.transpose()).eval();
  return Matrix::from_eigen(cov);
}

double whitened_norm(const WhiteningContext& ctx, std::span<const double> v) {
  if (v.size() != ctx.dim()) {
    throw DimensionError("whitened_norm: vector has dimension " + std::to_string(v.size()) +
                         ", context has " + std::to_string(ctx.dim()));
  }
  const Eigen::VectorXd cv = ctx.centered().view() * as_eigen(v);
  return cv.norm() / std::sqrt(static_cast<double>(ctx.n_v()));
}

Matrix matrix_sqrt(const Matrix& s) {
  if (s.rows() != s.cols()) {
    throw DimensionError("matrix_sqrt: matrix is " + std::to_string(s.rows()) + "x" +
                         std::to_string(s.cols()) + ", not square");
  }
  const Eigen::MatrixXd m = s.to_eigen();
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw ValidationError("matrix_sqrt: input is not symmetric within 1e-9");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
  if (eig.info() != Eigen::Success) throw DegenerateError("matrix_sqrt: eigendecomposition failed");
  Eigen::VectorXd lambda = eig.eigenvalues();
  if (lambda.size() > 0 && lambda.minCoeff() < -1e-9 * scale) {
    throw ValidationError("matrix_sqrt: input is indefinite (eigenvalue " +
                          std::to_string(lambda.minCoeff()) + ")");
  }
  lambda = lambda.cwiseMax(0.0).cwiseSqrt();
  const auto& q = eig.eigenvectors();
  Eigen::MatrixXd root = q * lambda.asDiagonal() * q.transpose();
  root = 0.5 * (root + root.transpose()).eval();
  return Matrix::from_eigen(root);
}

}  // namespace sandkit
