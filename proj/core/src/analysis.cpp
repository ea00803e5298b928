#include "sandkit/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <Eigen/SVD>

#include "sandkit/error.hpp"
#include "sandkit/log.hpp"

namespace sandkit {

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw DimensionError("cosine: lengths " + std::to_string(u.size()) + " and " +
                         std::to_string(v.size()) + " differ");
  }
  const double nu = euclidean_norm(u);
  const double nv = euclidean_norm(v);
  if (nu == 0.0 || nv == 0.0) throw ValidationError("cosine: zero vector");
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

// --- agreement -------------------------------------------------------------

std::optional<double> AgreementReport::cos(std::size_t layer_index, Method a, Method b) const {
  const auto ia = std::find(methods.begin(), methods.end(), a);
  const auto ib = std::find(methods.begin(), methods.end(), b);
  if (ia == methods.end() || ib == methods.end() || layer_index >= cos_per_layer.size()) {
    return std::nullopt;
  }
  return cos_per_layer[layer_index][static_cast<std::size_t>(ia - methods.begin())]
                      [static_cast<std::size_t>(ib - methods.begin())];
}

AgreementReport method_agreement(const std::vector<LayerInput>& layers, const WhiteningContext* ctx,
                                 const std::vector<Method>& methods, bool pca_center) {
  if (layers.empty()) throw ValidationError("method_agreement: empty layer list");
  if (methods.empty()) throw ValidationError("method_agreement: no methods requested");
  for (std::size_t a = 0; a < methods.size(); ++a) {
    for (std::size_t b = a + 1; b < methods.size(); ++b) {
      if (methods[a] == methods[b]) {
        throw ValidationError("method_agreement: method '" + std::string(to_string(methods[a])) +
                              "' listed twice");
      }
    }
  }
  const bool wants_whitened = std::find(methods.begin(), methods.end(), Method::sand_w) != methods.end();
  if (wants_whitened && ctx == nullptr) {
    throw ValidationError("method_agreement: sand_w requested without a whitening context");
  }

  std::optional<std::size_t> dim;
  for (const auto& l : layers) {
    if (!l.diffs) continue;
    if (dim && *dim != l.diffs->dim()) {
      throw DimensionError("method_agreement: layers disagree on d (" + std::to_string(*dim) +
                           " vs " + std::to_string(l.diffs->dim()) + ")");
    }
    dim = l.diffs->dim();
  }
  if (wants_whitened && dim && ctx->dim() != *dim) {
    throw DimensionError("method_agreement: whitening context has d = " + std::to_string(ctx->dim()) +
                         ", differences have d = " + std::to_string(*dim));
  }

  AgreementReport report;
  report.methods = methods;
  const std::size_t m = methods.size();
  for (const auto& l : layers) {
    report.layers.push_back(l.layer);
    AgreementReport::CosMatrix cos(m, std::vector<std::optional<double>>(m));

    if (!l.diffs) {
      report.gaps.push_back({l.layer, std::nullopt, l.load_error});
      log::warn("layer " + std::to_string(l.layer) + " skipped: " + l.load_error);
      report.cos_per_layer.push_back(std::move(cos));
      continue;
    }

    std::vector<std::optional<ConceptDirection>> dirs(m);
    const auto violations = validate_diffset(*l.diffs);
    for (std::size_t a = 0; a < m; ++a) {
      try {
        if (!violations.empty()) require_valid(*l.diffs);
        dirs[a] = extract(methods[a], *l.diffs, ctx, pca_center);
      } catch (const Error& e) {
        report.gaps.push_back({l.layer, methods[a], e.what()});
        log::warn("layer " + std::to_string(l.layer) + ", method " +
                  std::string(to_string(methods[a])) + ": " + e.what());
      }
    }
    for (std::size_t a = 0; a < m; ++a) {
      if (!dirs[a]) continue;
      cos[a][a] = 1.0;
      for (std::size_t b = a + 1; b < m; ++b) {
        if (!dirs[b]) continue;
        const double c = cosine(dirs[a]->vector(), dirs[b]->vector());
        cos[a][b] = c;
        cos[b][a] = c;
      }
    }
    report.cos_per_layer.push_back(std::move(cos));
  }
  return report;
}

AgreementReport method_agreement(const std::vector<ActivationDiffSet>& diffsets,
                                 const WhiteningContext* ctx, const std::vector<Method>& methods,
                                 bool pca_center) {
  std::vector<LayerInput> layers;
  layers.reserve(diffsets.size());
  for (const auto& s : diffsets) layers.push_back({s.meta.layer, s, {}});
  return method_agreement(layers, ctx, methods, pca_center);
}

// --- spectrum --------------------------------------------------------------

double quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw ValidationError("quantile of an empty sequence");
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("quantile level must lie in [0, 1]");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Histogram histogram(std::span<const double> values, double lo, double hi, std::size_t bins) {
  if (bins == 0) throw ValidationError("histogram needs at least one bin");
  if (hi < lo) throw ValidationError("histogram range is inverted");
  const double a = (hi == lo) ? lo - 0.5 : lo;
  const double b = (hi == lo) ? hi + 0.5 : hi;
  Histogram h;
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    h.edges[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(bins);
  }
  h.edges.back() = b;
  h.counts.assign(bins, 0);
  for (double v : values) {
    if (v < a || v > b) continue;
    auto idx = static_cast<std::size_t>((v - a) / (b - a) * static_cast<double>(bins));
    idx = std::min(idx, bins - 1);
    ++h.counts[idx];
  }
  return h;
}

SpectrumReport spectrum(const WhiteningContext& ctx, std::size_t bins, EnergyConvention energy) {
  if (ctx.is_zero() || ctx.centered().empty()) {
    throw DegenerateError("spectrum: centered embedding matrix is zero");
  }
  if (bins == 0) throw ValidationError("spectrum: bins must be >= 1");
  const Eigen::MatrixXd c = ctx.centered().to_eigen();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(c);
  const Eigen::VectorXd sv = svd.singularValues();

  SpectrumReport r;
  r.energy = energy;
  r.singular_values.assign(sv.data(), sv.data() + sv.size());
  std::sort(r.singular_values.begin(), r.singular_values.end(), std::greater<>());
  for (double& s : r.singular_values) s = std::max(s, 0.0);

  std::vector<double> ascending(r.singular_values.rbegin(), r.singular_values.rend());
  r.q01 = quantile(ascending, 0.01);
  r.q99 = quantile(ascending, 0.99);
  r.clipped_histogram = histogram(ascending, r.q01, r.q99, bins);

  std::vector<double> weights(r.singular_values.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double s = r.singular_values[i];
    weights[i] = (energy == EnergyConvention::squared) ? s * s : s;
  }
  double total = 0.0;
  for (double w : weights) total += w;
  r.cumulative_energy.resize(weights.size());
  double running = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    running += weights[i];
    r.cumulative_energy[i] = std::min(running / total, 1.0);
  }
  if (!r.cumulative_energy.empty()) r.cumulative_energy.back() = 1.0;

  const double smax = r.singular_values.front();
  const double smin = r.singular_values.back();
  const double tol = smax * static_cast<double>(std::max(ctx.n_v(), ctx.dim())) *
                     std::numeric_limits<double>::epsilon();
  if (smin <= tol) {
    r.rank_deficient = true;
    r.condition_number = std::numeric_limits<double>::infinity();
  } else {
    r.condition_number = smax / smin;
  }
  return r;
}

// --- monitoring ------------------------------------------------------------

MonitorResult monitor_scores(const ConceptDirection& direction, const Matrix& candidates) {
  return monitor_scores(direction.vector(), candidates, direction.layer());
}

MonitorResult monitor_scores(std::span<const double> u, const Matrix& candidates, std::int64_t layer) {
  if (candidates.cols() == 0) throw ValidationError("monitor_scores: no candidates");
  if (candidates.rows() != u.size()) {
    throw DimensionError("monitor_scores: candidates have d = " + std::to_string(candidates.rows()) +
                         ", direction has d = " + std::to_string(u.size()));
  }
  MonitorResult r;
  r.layer_used = layer;
  r.per_candidate_scores.resize(candidates.cols());
  for (std::size_t j = 0; j < candidates.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * candidates(i, j);
    r.per_candidate_scores[j] = s;
  }
  r.chosen_index = static_cast<std::size_t>(
      std::max_element(r.per_candidate_scores.begin(), r.per_candidate_scores.end()) -
      r.per_candidate_scores.begin());
  return r;
}

std::size_t select_layer(std::span<const double> acc) {
  if (acc.empty()) throw ValidationError("select_layer: empty accuracy list");
  return static_cast<std::size_t>(std::max_element(acc.begin(), acc.end()) - acc.begin());
}

}  // namespace sandkit
