#include "sandkit/vmf.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "sandkit/bessel.hpp"
#include "sandkit/error.hpp"
#include "sandkit/summation.hpp"
#include "sandkit/tensor_store.hpp"

namespace sandkit::vmf {
namespace {

void require_unit_columns(const Matrix& units, double tol) {
  for (std::size_t j = 0; j < units.cols(); ++j) {
    double sq = 0.0;
    for (std::size_t i = 0; i < units.rows(); ++i) sq += units(i, j) * units(i, j);
    if (std::fabs(std::sqrt(sq) - 1.0) > tol) {
      throw ValidationError("column " + std::to_string(j) + " is not unit norm (norm " +
                            std::to_string(std::sqrt(sq)) + ")");
    }
  }
}

Vector exact_column_sum(const Matrix& m) {
  Vector out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) out[i] = exact_sum(m.row(i));
  return out;
}

}  // namespace

VmfParams::VmfParams(Vector mu, double kappa) : mu_(std::move(mu)), kappa_(kappa) {
  if (mu_.size() < 2) throw ValidationError("vMF mean direction needs dimension >= 2");
  if (!std::isfinite(kappa_) || kappa_ < 0.0) {
    throw ValidationError("vMF concentration must be finite and >= 0");
  }
  for (double x : mu_) {
    if (!std::isfinite(x)) throw ValidationError("vMF mean direction has a non-finite entry");
  }
  if (std::fabs(euclidean_norm(mu_) - 1.0) > 1e-12) {
    throw ValidationError("vMF mean direction must have unit norm");
  }
}

double log_normalizer(std::size_t d, double kappa) {
  const double half_d = 0.5 * static_cast<double>(d);
  if (kappa == 0.0) {
    // surface area 2 pi^(d/2) / Gamma(d/2)
    return std::lgamma(half_d) - std::numbers::ln2 - half_d * std::log(std::numbers::pi);
  }
  const double nu = half_d - 1.0;
  return nu * std::log(kappa) - half_d * std::log(2.0 * std::numbers::pi) - log_bessel_i(nu, kappa);
}

double log_density(std::span<const double> x, const VmfParams& p) {
  if (x.size() != p.dim()) {
    throw DimensionError("log_density: x has dimension " + std::to_string(x.size()) +
                         ", mean direction has " + std::to_string(p.dim()));
  }
  if (std::fabs(euclidean_norm(x) - 1.0) > 1e-9) {
    throw ValidationError("log_density: x must be a unit vector");
  }
  return log_normalizer(p.dim(), p.kappa()) + p.kappa() * dot(p.mu(), x);
}

Matrix sample(const VmfParams& p, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ValidationError("sample: n must be >= 1");
  const std::size_t d = p.dim();
  const double kappa = p.kappa();
  const double dm1 = static_cast<double>(d - 1);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::gamma_distribution<double> gamma(0.5 * dm1, 1.0);

  // Wood (1994). b is written in the cancellation-free form.
  const double b = dm1 / (2.0 * kappa + std::sqrt(4.0 * kappa * kappa + dm1 * dm1));
  const double x0 = (1.0 - b) / (1.0 + b);
  // 1 - x0^2 = 4b / (1+b)^2
  const double c = kappa * x0 + dm1 * (std::log(4.0 * b) - 2.0 * std::log1p(b));

  const auto& mu = p.mu();
  std::vector<double> data(d * n);
  Vector tangent(d);
  for (std::size_t j = 0; j < n; ++j) {
    double w = 0.0;
    for (;;) {
      const double g1 = gamma(rng);
      const double g2 = gamma(rng);
      const double z = g1 / (g1 + g2);  // Beta((d-1)/2, (d-1)/2)
      w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
      const double u = uniform(rng);
      if (kappa * w + dm1 * std::log(1.0 - x0 * w) - c >= std::log(u)) break;
    }

    // Uniform direction orthogonal to mu.
    double tnorm = 0.0;
    do {
      for (double& t : tangent) t = normal(rng);
      const double along = dot(tangent, mu);
      for (std::size_t i = 0; i < d; ++i) tangent[i] -= along * mu[i];
      tnorm = euclidean_norm(tangent);
    } while (tnorm < 1e-12);

    const double s = std::sqrt(std::max(0.0, 1.0 - w * w));
    double sq = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double v = w * mu[i] + s * tangent[i] / tnorm;
      data[i * n + j] = v;
      sq += v * v;
    }
    const double norm = std::sqrt(sq);
    for (std::size_t i = 0; i < d; ++i) data[i * n + j] /= norm;
  }
  return Matrix(d, n, std::move(data));
}

Vector mle_mean(const Matrix& units) {
  if (units.cols() == 0) throw ValidationError("mle_mean: no columns");
  require_unit_columns(units, 1e-9);
  Vector sum = exact_column_sum(units);
  const double norm = euclidean_norm(sum);
  if (!(norm >= kZeroNormFloor)) {
    throw DegenerateError("vanishing resultant: column sum has norm " + std::to_string(norm) +
                          " (< 1e-12); mean direction is undefined");
  }
  for (double& x : sum) x /= norm;
  return sum;
}

double resultant_length(const Matrix& units) {
  if (units.cols() == 0) throw ValidationError("resultant_length: no columns");
  return euclidean_norm(exact_column_sum(units)) / static_cast<double>(units.cols());
}

double estimate_kappa(const Matrix& units) {
  if (units.cols() < 2) throw ValidationError("estimate_kappa: need at least 2 columns");
  require_unit_columns(units, 1e-9);
  const double rbar = resultant_length(units);
  if (rbar >= 1.0 - 1e-12) {
    throw DegenerateError("degenerate concentration: mean resultant length " +
                          std::to_string(rbar) + " is 1 (all columns coincide)");
  }
  if (rbar <= 1.0 / std::sqrt(static_cast<double>(units.cols()))) return 0.0;
  const double d = static_cast<double>(units.rows());
  return rbar * (d - rbar * rbar) / (1.0 - rbar * rbar);
}

}  // namespace sandkit::vmf
