#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "sandkit/matrix.hpp"

namespace sandkit::vmf {

/// Mean direction and concentration of a von Mises-Fisher distribution on the
/// unit sphere of R^d. The constructor enforces |mu| = 1 (1e-12), d >= 2 and
/// finite kappa >= 0.
class VmfParams {
 public:
  VmfParams(Vector mu, double kappa);

  const Vector& mu() const noexcept { return mu_; }
  double kappa() const noexcept { return kappa_; }
  std::size_t dim() const noexcept { return mu_.size(); }

 private:
  Vector mu_;
  double kappa_;
};

// log c_d(kappa) with c_d(kappa) = kappa^(d/2-1) / ((2 pi)^(d/2) I_(d/2-1)(kappa)).
// At kappa = 0 this is minus the log surface area of the unit sphere in R^d.
double log_normalizer(std::size_t d, double kappa);

// log c_d(kappa) + kappa mu^T x. Requires |x| = 1 within 1e-9.
double log_density(std::span<const double> x, const VmfParams& p);

// n unit columns drawn with Wood's rejection sampler; deterministic in seed.
Matrix sample(const VmfParams& p, std::size_t n, std::uint64_t seed);

// Resultant direction of unit columns. DegenerateError when the resultant
// norm is below 1e-12. Column sums are correctly rounded, so the output does
// not depend on column order or on duplicating the column set.
Vector mle_mean(const Matrix& units);

// Mean resultant length |sum| / k.
double resultant_length(const Matrix& units);

// Banerjee et al. approximation rbar (d - rbar^2) / (1 - rbar^2); 0 when
// rbar <= 1/sqrt(k); DegenerateError when rbar >= 1 - 1e-12.
double estimate_kappa(const Matrix& units);

}  // namespace sandkit::vmf
