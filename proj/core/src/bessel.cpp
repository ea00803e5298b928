#include "sandkit/bessel.hpp"

#include <cmath>
#include <limits>

#include "sandkit/error.hpp"

namespace sandkit {
namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

// Power series sum_m (x/2)^(2m+nu) / (m! Gamma(m+nu+1)), accumulated with a
// running log-sum-exp. The largest term sits near m* = (sqrt(nu^2+x^2)-nu)/2.
double log_series(double nu, double x) {
  const double log_half_x = std::log(0.5 * x);
  const double peak = 0.5 * (std::sqrt(nu * nu + x * x) - nu);
  double log_max = -std::numeric_limits<double>::infinity();
  double scaled = 0.0;  // sum of exp(term - log_max)
  for (long m = 0;; ++m) {
    const double md = static_cast<double>(m);
    const double term = (2.0 * md + nu) * log_half_x - std::lgamma(md + 1.0) - std::lgamma(md + nu + 1.0);
    if (term > log_max) {
      scaled = scaled * std::exp(log_max - term) + 1.0;
      log_max = term;
    } else {
      scaled += std::exp(term - log_max);
    }
    if (md > peak && term < log_max - 40.0) break;
  }
  return log_max + std::log(scaled);
}

// Large-argument (Hankel) expansion, accurate when x >> nu^2.
double log_hankel(double nu, double x) {
  const double mu = 4.0 * nu * nu;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 40; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = -term * (mu - odd * odd) / (k * 8.0 * x);
    if (std::fabs(next) >= std::fabs(term)) break;  // asymptotic series started diverging
    term = next;
    sum += term;
    if (std::fabs(term) < 1e-17 * std::fabs(sum)) break;
  }
  return x - 0.5 * (kLogTwoPi + std::log(x)) + std::log(sum);
}

// Debye uniform asymptotic expansion in 1/nu, uniformly valid in x/nu.
double log_debye(double nu, double x) {
  const double z = x / nu;
  const double root = std::sqrt(1.0 + z * z);
  const double t = 1.0 / root;
  const double eta = root + std::log(z / (1.0 + root));
  const double t2 = t * t;
  const double u1 = t * (3.0 - 5.0 * t2) / 24.0;
  const double u2 = t2 * (81.0 + t2 * (-462.0 + t2 * 385.0)) / 1152.0;
  const double u3 = t * t2 * (30375.0 + t2 * (-369603.0 + t2 * (765765.0 - t2 * 425425.0))) / 414720.0;
  const double u4 = t2 * t2 *
                    (4465125.0 +
                     t2 * (-94121676.0 + t2 * (349922430.0 + t2 * (-446185740.0 + t2 * 185910725.0)))) /
                    39813120.0;
  const double inv = 1.0 / nu;
  const double series = 1.0 + inv * (u1 + inv * (u2 + inv * (u3 + inv * u4)));
  return nu * eta - 0.5 * (kLogTwoPi + std::log(nu)) - 0.5 * std::log(root) + std::log(series);
}

}  // namespace

double log_bessel_i(double nu, double x) {
  if (!(nu >= 0.0) || !(x >= 0.0) || !std::isfinite(nu) || !std::isfinite(x)) {
    throw ValidationError("log_bessel_i requires finite nu >= 0 and x >= 0");
  }
  if (x == 0.0) return nu == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  if (nu >= 50.0) return log_debye(nu, x);
  if (x > 2.0e4) return log_hankel(nu, x);
  return log_series(nu, x);
}

}  // namespace sandkit
