#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sandkit/matrix.hpp"
#include "sandkit/tensor_store.hpp"

namespace sandkit {

/// Whitening geometry derived from an embedding table: C is E with the
/// column-wise mean gamma_bar removed from every row, so that
/// Cov(gamma) = C^T C / n_v.
class WhiteningContext {
 public:
  // Adopts `centered` as C as-is with gamma_bar = 0. No centering check is
  // made; use is_centered() or center_embeddings() when that matters.
  static WhiteningContext from_matrix(Matrix centered);

  const Matrix& centered() const noexcept { return c_; }
  const Vector& gamma_bar() const noexcept { return gamma_bar_; }
  std::size_t n_v() const noexcept { return c_.rows(); }
  std::size_t dim() const noexcept { return c_.cols(); }

  // Every column of C sums to zero within tol * n_v.
  bool is_centered(double tol = 1e-9) const;
  // C is entirely zero (all embedding rows were equal).
  bool is_zero() const;

 private:
  friend WhiteningContext center_embeddings(const EmbeddingTable&);
  WhiteningContext(Matrix c, Vector gamma_bar) : c_(std::move(c)), gamma_bar_(std::move(gamma_bar)) {}

  Matrix c_;
  Vector gamma_bar_;
};

// Subtracts the uniform-weight column mean from every row. A table already
// flagged as centered is adopted after checking its column sums. Logs a
// warning (not an error) when the result is the zero matrix.
WhiteningContext center_embeddings(const EmbeddingTable& e);

// C^T C / n_v (d x d, symmetric PSD).
Matrix covariance(const WhiteningContext& ctx);

// |Cov(gamma)^(1/2) v| evaluated as |C v| / sqrt(n_v), without forming the root.
double whitened_norm(const WhiteningContext& ctx, std::span<const double> v);

// Symmetric PSD square root by eigendecomposition. Eigenvalues down to
// -1e-9 (relative to max(1, |S|)) are clamped to zero; asymmetry beyond 1e-9
// or a more negative eigenvalue raises ValidationError.
Matrix matrix_sqrt(const Matrix& s);

}  // namespace sandkit
