#include "sandkit/directions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

#include "sandkit/error.hpp"
#include "sandkit/summation.hpp"

namespace sandkit {
namespace {

// Columns sorted lexicographically by value. Identical columns are
// interchangeable, so the result depends only on the multiset of columns.
struct Canonical {
  Matrix m;
  std::vector<std::size_t> order;  // order[j] = original index of canonical column j
};

Canonical canonical_column_order(const Matrix& m) {
  std::vector<std::size_t> order(m.cols());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
      if (m(i, a) != m(i, b)) return m(i, a) < m(i, b);
    }
    return false;
  });
  std::vector<double> d(m.size());
  for (std::size_t j = 0; j < order.size(); ++j) {
    for (std::size_t i = 0; i < m.rows(); ++i) d[i * m.cols() + j] = m(i, order[j]);
  }
  return {Matrix(m.rows(), m.cols(), std::move(d)), std::move(order)};
}

std::size_t original_index(const std::vector<std::size_t>* order, std::size_t j) {
  return order ? (*order)[j] : j;
}

void require_nonzero(const Vector& norms, const std::vector<std::size_t>* order = nullptr) {
  for (std::size_t j = 0; j < norms.size(); ++j) {
    if (!(norms[j] >= kZeroNormFloor)) {
      const std::size_t col = original_index(order, j);
      throw ValidationError("column " + std::to_string(col) + " has Euclidean norm " +
                            std::to_string(norms[j]) + " (< 1e-12): zero-column@" +
                            std::to_string(col));
    }
  }
}

void require_whitened_nonzero(const Vector& n2, double scale,
                              const std::vector<std::size_t>* order = nullptr) {
  for (std::size_t j = 0; j < n2.size(); ++j) {
    if (!(n2[j] * scale >= kZeroNormFloor)) {
      const std::size_t col = original_index(order, j);
      throw DegenerateError("whitened-degenerate column " + std::to_string(col) +
                            ": whitened norm " + std::to_string(n2[j] * scale) +
                            " (< 1e-12); the difference lies in the null space of C");
    }
  }
}

// Lambda (1 ./ norms), dividing each entry so that lambda_ij / |lambda_j| is
// correctly rounded; the sum over j is exact.
Vector reciprocal_weighted_sum(const Matrix& lambda, const Vector& norms) {
  const std::size_t d = lambda.rows();
  const std::size_t k = lambda.cols();
  Vector out(d);
  for (std::size_t i = 0; i < d; ++i) {
    ExactAccumulator acc;
    const auto row = lambda.row(i);
    for (std::size_t j = 0; j < k; ++j) acc.add(row[j] / norms[j]);
    out[i] = acc.result();
  }
  return out;
}

// Same operation order for every column, wherever it sits in the matrix.
Vector column_norms_of(const RowMajorMatrix& m) {
  Vector sq(static_cast<std::size_t>(m.cols()), 0.0);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) sq[static_cast<std::size_t>(j)] += m(i, j) * m(i, j);
  }
  for (double& x : sq) x = std::sqrt(x);
  return sq;
}

ConceptDirection finish(const Vector& raw, Method method, const ActivationDiffSet& s) {
  const double n = euclidean_norm(raw);
  if (!(n >= kZeroNormFloor)) {
    throw DegenerateError("vanishing resultant for " + std::string(to_string(method)) +
                          ": summed direction has norm " + std::to_string(n) + " (< 1e-12)");
  }
  return ConceptDirection::normalized(raw, method, s.meta.concept_name, s.meta.layer);
}

void require_columns(const ActivationDiffSet& s) {
  if (s.count() == 0) throw ValidationError("activation differences are empty (empty-set)");
}

}  // namespace

Vector column_norms(const Matrix& m) { return column_norms_of(m.view()); }

SandSums sand_algorithm(const Matrix& lambda, const Matrix& c) {
  if (c.cols() != lambda.rows()) {
    throw DimensionError("sand_algorithm: Lambda is " + std::to_string(lambda.rows()) + "x" +
                         std::to_string(lambda.cols()) + " but C is " + std::to_string(c.rows()) +
                         "x" + std::to_string(c.cols()));
  }
  if (lambda.cols() == 0) throw ValidationError("sand_algorithm: Lambda has no columns");

  const Vector n1 = column_norms(lambda);                        // step 1
  const RowMajorMatrix lambda_c = c.view() * lambda.view();      // step 2
  const Vector n2 = column_norms_of(lambda_c);                   // step 3
  require_nonzero(n1);
  require_whitened_nonzero(n2, 1.0);
  return {reciprocal_weighted_sum(lambda, n1), reciprocal_weighted_sum(lambda, n2)};  // step 4
}

Vector mean_difference_sum(const Matrix& lambda) {
  Vector out(lambda.rows());
  for (std::size_t i = 0; i < lambda.rows(); ++i) out[i] = exact_sum(lambda.row(i));
  return out;
}

ConceptDirection mean_difference(const ActivationDiffSet& s) {
  require_columns(s);
  return finish(mean_difference_sum(canonical_column_order(s.diffs).m), Method::md, s);
}

ConceptDirection sand_euclidean(const ActivationDiffSet& s) {
  require_columns(s);
  const auto [lambda, order] = canonical_column_order(s.diffs);
  const Vector n1 = column_norms(lambda);
  require_nonzero(n1, &order);
  return finish(reciprocal_weighted_sum(lambda, n1), Method::sand_e, s);
}

ConceptDirection sand_whitened(const ActivationDiffSet& s, const WhiteningContext& ctx) {
  require_columns(s);
  if (ctx.dim() != s.dim()) {
    throw DimensionError("sand_whitened: differences have dimension " + std::to_string(s.dim()) +
                         ", whitening context has " + std::to_string(ctx.dim()));
  }
  const auto [lambda, order] = canonical_column_order(s.diffs);
  require_nonzero(column_norms(lambda), &order);
  // One product per column: a blocked GEMM may round a column differently
  // depending on its position, which would break permutation invariance.
  const auto cv = ctx.centered().view();
  Vector n2(lambda.cols());
  for (std::size_t j = 0; j < lambda.cols(); ++j) {
    const Vector col = lambda.column(j);
    const Eigen::VectorXd w = cv * as_eigen(col);
    n2[j] = std::sqrt(w.squaredNorm());
  }
  // The floor applies to the whitened norm |C lambda| / sqrt(n_v).
  require_whitened_nonzero(n2, 1.0 / std::sqrt(static_cast<double>(ctx.n_v())), &order);
  return finish(reciprocal_weighted_sum(lambda, n2), Method::sand_w, s);
}

ConceptDirection pca_direction(const ActivationDiffSet& s, bool center) {
  require_columns(s);
  const Matrix canon = canonical_column_order(s.diffs).m;
  const std::size_t d = canon.rows();
  const std::size_t k = canon.cols();
  const Vector raw_sum = mean_difference_sum(canon);

  Eigen::MatrixXd x = canon.to_eigen();
  if (center) {
    Eigen::VectorXd mean(d);
    for (std::size_t i = 0; i < d; ++i) mean[i] = exact_sum(canon.row(i)) / static_cast<double>(k);
    x.colwise() -= mean;
  }
  const double frob = x.norm();
  if (!(frob >= kZeroNormFloor)) {
    throw DegenerateError(std::string("pca: difference matrix is zero") +
                          (center ? " after centering (all columns identical)" : ""));
  }

  // Eigen-decompose the smaller of the two scatter matrices.
  Eigen::VectorXd u;
  if (k < d) {
    const Eigen::MatrixXd gram = x.transpose() * x;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.info() != Eigen::Success) throw DegenerateError("pca: eigendecomposition failed");
    u = x * eig.eigenvectors().col(static_cast<Eigen::Index>(k) - 1);
  } else {
    const Eigen::MatrixXd scatter = x * x.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scatter);
    if (eig.info() != Eigen::Success) throw DegenerateError("pca: eigendecomposition failed");
    u = eig.eigenvectors().col(static_cast<Eigen::Index>(d) - 1);
  }
  const double un = u.norm();
  if (!(un >= kZeroNormFloor)) throw DegenerateError("pca: principal direction vanished");
  u /= un;

  const double agree = u.dot(as_eigen(raw_sum));
  const double tie_tol = 1e-12 * euclidean_norm(raw_sum);
  bool flip = agree < -tie_tol;
  if (std::fabs(agree) <= tie_tol) {
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      if (u[i] != 0.0) {
        flip = u[i] < 0.0;
        break;
      }
    }
  }
  if (flip) u = -u;
  return ConceptDirection::normalized(to_vector(u), Method::pca, s.meta.concept_name, s.meta.layer);
}

ConceptDirection extract(Method method, const ActivationDiffSet& s, const WhiteningContext* ctx,
                         bool pca_center) {
  switch (method) {
    case Method::md: return mean_difference(s);
    case Method::sand_e: return sand_euclidean(s);
    case Method::sand_w:
      if (ctx == nullptr) throw ValidationError("sand_w requires a whitening context (embeddings)");
      return sand_whitened(s, *ctx);
    case Method::pca: return pca_direction(s, pca_center);
  }
  throw ValidationError("unknown method");
}

FlopReport count_flops(std::uint64_t d, std::uint64_t k, std::uint64_t n_v) {
  if (d == 0 || k == 0 || n_v == 0) throw ValidationError("count_flops: d, k and n_v must be >= 1");
  auto mul = [](std::uint64_t a, std::uint64_t b) {
    std::uint64_t r = 0;
    if (__builtin_mul_overflow(a, b, &r)) throw ValidationError("count_flops: count overflows 64 bits");
    return r;
  };
  auto add = [](std::uint64_t a, std::uint64_t b) {
    std::uint64_t r = 0;
    if (__builtin_add_overflow(a, b, &r)) throw ValidationError("count_flops: count overflows 64 bits");
    return r;
  };
  FlopReport r;
  r.step1 = mul(2 * d, k);
  r.step2 = mul(mul(2 * d - 1, n_v), k);
  r.step3 = mul(2 * n_v, k);
  r.step4 = mul(4 * d, k);
  r.total = add(add(r.step1, r.step2), add(r.step3, r.step4));
  r.dominant_term = mul(mul(2 * n_v, d), k);
  r.ratio = static_cast<double>(r.total) / static_cast<double>(r.dominant_term);
  return r;
}

}  // namespace sandkit
