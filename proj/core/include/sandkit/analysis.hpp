#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sandkit/directions.hpp"
#include "sandkit/geometry.hpp"
#include "sandkit/matrix.hpp"
#include "sandkit/tensor_store.hpp"

namespace sandkit {

// u^T v / (|u| |v|), clamped to [-1, 1]. ValidationError on a zero vector.
double cosine(std::span<const double> u, std::span<const double> v);

// --- cross-method agreement ------------------------------------------------

/// A method that could not be extracted at some layer.
struct AgreementGap {
  std::int64_t layer = 0;
  std::optional<Method> method;  // empty when the whole layer was unusable
  std::string reason;
};

/// Pairwise cosine similarity between extractors, one matrix per layer.
/// Entries touching a failed extraction are empty; the diagonal of every
/// successful method is exactly 1.
struct AgreementReport {
  using CosMatrix = std::vector<std::vector<std::optional<double>>>;

  std::vector<std::int64_t> layers;
  std::vector<Method> methods;
  std::vector<CosMatrix> cos_per_layer;
  std::vector<AgreementGap> gaps;

  std::optional<double> cos(std::size_t layer_index, Method a, Method b) const;
};

/// One layer's input to method_agreement. `diffs` is empty when the layer's
/// data could not be loaded; `load_error` then says why.
struct LayerInput {
  std::int64_t layer = 0;
  std::optional<ActivationDiffSet> diffs;
  std::string load_error;
};

// ctx may be null when sand_w is not requested. Per-layer extraction
// failures become gaps; an empty layer list or an inconsistent d raises.
AgreementReport method_agreement(const std::vector<LayerInput>& layers, const WhiteningContext* ctx,
                                 const std::vector<Method>& methods, bool pca_center = true);
AgreementReport method_agreement(const std::vector<ActivationDiffSet>& diffsets,
                                 const WhiteningContext* ctx, const std::vector<Method>& methods,
                                 bool pca_center = true);

// --- spectrum of C ---------------------------------------------------------

enum class EnergyConvention { squared, linear };  // sigma^2 (default) or sigma

struct Histogram {
  std::vector<double> edges;  // bins + 1 entries
  std::vector<std::size_t> counts;
};

struct SpectrumReport {
  std::vector<double> singular_values;  // descending
  double q01 = 0.0;
  double q99 = 0.0;
  Histogram clipped_histogram;  // over [q01, q99]
  std::vector<double> cumulative_energy;
  EnergyConvention energy = EnergyConvention::squared;
  double condition_number = 0.0;  // +inf when sigma_min is numerically zero
  bool rank_deficient = false;
};

// Linear interpolation between order statistics of ascending `sorted`
// (position p * (n - 1)).
double quantile(std::span<const double> sorted, double p);

// Equal-width histogram of the values inside [lo, hi]; the last bin is
// closed. A zero-width range is widened to [lo - 0.5, hi + 0.5].
Histogram histogram(std::span<const double> values, double lo, double hi, std::size_t bins);

// Singular values of C with their diagnostics. sigma_min counts as zero when
// it is at most sigma_max * max(n_v, d) * machine epsilon. DegenerateError
// when C is the zero matrix.
SpectrumReport spectrum(const WhiteningContext& ctx, std::size_t bins,
                        EnergyConvention energy = EnergyConvention::squared);

// --- projection monitoring -------------------------------------------------

struct MonitorResult {
  std::vector<double> per_candidate_scores;
  std::size_t chosen_index = 0;
  std::int64_t layer_used = 0;
};

// score_j = direction^T candidate_j; argmax with ties to the lowest index.
MonitorResult monitor_scores(const ConceptDirection& direction, const Matrix& candidate_activations);
// Same scoring for an arbitrary (not necessarily unit) direction vector.
MonitorResult monitor_scores(std::span<const double> direction, const Matrix& candidate_activations,
                             std::int64_t layer = 0);

// Index of the highest validation accuracy, lowest index on ties.
std::size_t select_layer(std::span<const double> per_layer_validation_accuracy);

}  // namespace sandkit
