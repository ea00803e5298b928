#pragma once

#include <span>
#include <vector>

namespace sandkit {

/// Correctly rounded floating-point accumulator (Shewchuk's non-overlapping
/// partials, the algorithm behind Python's math.fsum). The rounded result is
/// independent of the order in which terms are added.
class ExactAccumulator {
 public:
  void add(double x);
  double result() const;

 private:
  std::vector<double> partials_;
};

double exact_sum(std::span<const double> terms);

}  // namespace sandkit
