#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sandkit/matrix.hpp"
#include "sandkit/tensor_store.hpp"

namespace sandkit {

// Default strength for activation addition.
inline constexpr double kDefaultAlpha = 10.0;

/// n_v x d output unembedding table (row y is gamma(y)) with unique labels.
class UnembeddingTable {
 public:
  UnembeddingTable(Matrix table, std::vector<std::string> token_labels);

  const Matrix& table() const noexcept { return table_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::size_t dim() const noexcept { return table_.cols(); }
  // Row index of `label`; ValidationError when absent.
  std::size_t index_of(const std::string& label) const;
  std::span<const double> gamma(const std::string& label) const { return table_.row(index_of(label)); }

 private:
  Matrix table_;
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> index_;
};

// lambda + alpha * u.
Vector apply_intervention(std::span<const double> lambda, const ConceptDirection& direction, double alpha);

// Change in log(Pr[y1] / Pr[y2]) caused by adding alpha * u under
// Pr[y | lambda] proportional to exp(lambda^T gamma(y)): alpha * u^T (gamma(y1) - gamma(y2)).
// The base activation never enters.
double log_odds_shift(const UnembeddingTable& gamma, const ConceptDirection& direction, double alpha,
                      const std::string& y1, const std::string& y2);

using TokenAxis = std::pair<std::string, std::string>;

struct ArrowRecord {
  std::string input_id;
  double dx = 0.0;
  double dy = 0.0;
};

struct ArrowMap {
  std::vector<ArrowRecord> records;
  std::pair<double, double> mean_arrow;
  double alpha = 0.0;
  TokenAxis axis1;
  TokenAxis axis2;
};

// One arrow per activation column; input ids default to "0", "1", ...
ArrowMap arrow_map(const Matrix& activations, const UnembeddingTable& gamma,
                   const ConceptDirection& direction, double alpha, const TokenAxis& axis1,
                   const TokenAxis& axis2, const std::vector<std::string>& input_ids = {});

}  // namespace sandkit
