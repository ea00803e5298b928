#pragma once

#include <cstdint>
#include <optional>

#include "sandkit/geometry.hpp"
#include "sandkit/matrix.hpp"
#include "sandkit/tensor_store.hpp"

namespace sandkit {

/// Raw (un-normalized) outputs of the SAND procedure:
///   s1 = sum_i lambda_i / |lambda_i|      (identity geometry)
///   s2 = sum_i lambda_i / |C lambda_i|    (whitening geometry, n_v^-1/2 dropped)
struct SandSums {
  Vector s1;
  Vector s2;
};

// Vectorized four-step evaluation over Lambda (d x k) and C (n_v x d):
// column norms N1, the product C Lambda, its column norms N2, then
// Lambda (1 / N1) and Lambda (1 / N2). Throws ValidationError naming the
// column when an N1 or N2 entry is below 1e-12.
SandSums sand_algorithm(const Matrix& lambda, const Matrix& c);

// Column-wise Euclidean norms.
Vector column_norms(const Matrix& m);

// sum_i lambda_i, the unnormalized mean-difference direction.
Vector mean_difference_sum(const Matrix& lambda);

// Extractors. Columns are put in a canonical order first, so every result is
// bit-identical under column permutation. Zero columns raise ValidationError;
// a vanishing sum raises DegenerateError.
ConceptDirection mean_difference(const ActivationDiffSet& s);
ConceptDirection sand_euclidean(const ActivationDiffSet& s);
ConceptDirection sand_whitened(const ActivationDiffSet& s, const WhiteningContext& ctx);
// Top principal direction of the (optionally column-centered) differences,
// signed to agree with the raw column sum.
ConceptDirection pca_direction(const ActivationDiffSet& s, bool center = true);

// Dispatch by method; ctx is required for sand_w only.
ConceptDirection extract(Method method, const ActivationDiffSet& s, const WhiteningContext* ctx,
                         bool pca_center = true);

/// Exact floating-point operation count of the SAND procedure.
struct FlopReport {
  std::uint64_t step1 = 0;  // column norms of Lambda: 2dk
  std::uint64_t step2 = 0;  // C Lambda: (2d - 1) n_v k
  std::uint64_t step3 = 0;  // column norms of C Lambda: 2 n_v k
  std::uint64_t step4 = 0;  // 2k divisions + two (2d - 1)k mat-vecs: 4dk
  std::uint64_t total = 0;
  std::uint64_t dominant_term = 0;  // 2 n_v d k
  double ratio = 0.0;               // total / dominant_term
};

FlopReport count_flops(std::uint64_t d, std::uint64_t k, std::uint64_t n_v);

}  // namespace sandkit
