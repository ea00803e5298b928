#include "sandkit/intervene.hpp"

#include <cmath>

#include "sandkit/error.hpp"

namespace sandkit {

UnembeddingTable::UnembeddingTable(Matrix table, std::vector<std::string> token_labels)
    : table_(std::move(table)), labels_(std::move(token_labels)) {
  if (labels_.size() != table_.rows()) {
    throw ValidationError("unembedding table has " + std::to_string(table_.rows()) + " rows but " +
                          std::to_string(labels_.size()) + " labels");
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!index_.emplace(labels_[i], i).second) {
      throw ValidationError("duplicate token label '" + labels_[i] + "'");
    }
  }
}

std::size_t UnembeddingTable::index_of(const std::string& label) const {
  const auto it = index_.find(label);
  if (it == index_.end()) throw ValidationError("unknown token label '" + label + "'");
  return it->second;
}

Vector apply_intervention(std::span<const double> lambda, const ConceptDirection& direction, double alpha) {
  if (lambda.size() != direction.dim()) {
    throw DimensionError("apply_intervention: activation has d = " + std::to_string(lambda.size()) +
                         ", direction has d = " + std::to_string(direction.dim()));
  }
  Vector out(lambda.begin(), lambda.end());
  const auto& u = direction.vector();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += alpha * u[i];
  return out;
}

double log_odds_shift(const UnembeddingTable& gamma, const ConceptDirection& direction, double alpha,
                      const std::string& y1, const std::string& y2) {
  if (gamma.dim() != direction.dim()) {
    throw DimensionError("log_odds_shift: unembedding has d = " + std::to_string(gamma.dim()) +
                         ", direction has d = " + std::to_string(direction.dim()));
  }
  const auto g1 = gamma.gamma(y1);
  const auto g2 = gamma.gamma(y2);
  const auto& u = direction.vector();
  double proj = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) proj += u[i] * (g1[i] - g2[i]);
  return alpha * proj;
}

ArrowMap arrow_map(const Matrix& activations, const UnembeddingTable& gamma,
                   const ConceptDirection& direction, double alpha, const TokenAxis& axis1,
                   const TokenAxis& axis2, const std::vector<std::string>& input_ids) {
  if (activations.cols() == 0) throw ValidationError("arrow_map: empty activation set");
  if (activations.rows() != direction.dim()) {
    throw DimensionError("arrow_map: activations have d = " + std::to_string(activations.rows()) +
                         ", direction has d = " + std::to_string(direction.dim()));
  }
  if (!input_ids.empty() && input_ids.size() != activations.cols()) {
    throw ValidationError("arrow_map: " + std::to_string(input_ids.size()) + " input ids for " +
                          std::to_string(activations.cols()) + " activations");
  }
  ArrowMap map;
  map.alpha = alpha;
  map.axis1 = axis1;
  map.axis2 = axis2;
  // Under the softmax model the shift is the same for every input.
  const double dx = log_odds_shift(gamma, direction, alpha, axis1.first, axis1.second);
  const double dy = log_odds_shift(gamma, direction, alpha, axis2.first, axis2.second);
  // Running mean; exact when all arrows coincide.
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t j = 0; j < activations.cols(); ++j) {
    map.records.push_back({input_ids.empty() ? std::to_string(j) : input_ids[j], dx, dy});
    const double n = static_cast<double>(j + 1);
    mx += (dx - mx) / n;
    my += (dy - my) / n;
  }
  map.mean_arrow = {mx, my};
  return map;
}

}  // namespace sandkit
