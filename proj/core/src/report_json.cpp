#include "sandkit/report_json.hpp"

#include <cmath>

namespace sandkit {

nlohmann::json to_json(const FlopReport& r) {
  return {{"step1", r.step1}, {"step2", r.step2}, {"step3", r.step3},
          {"step4", r.step4}, {"total", r.total}, {"dominant_term", r.dominant_term},
          {"ratio", r.ratio}};
}

nlohmann::json to_json(const SpectrumReport& r) {
  nlohmann::json j;
  j["singular_values"] = r.singular_values;
  j["q01"] = r.q01;
  j["q99"] = r.q99;
  j["hist"] = {{"edges", r.clipped_histogram.edges}, {"counts", r.clipped_histogram.counts}};
  j["cum_energy"] = r.cumulative_energy;
  j["energy"] = r.energy == EnergyConvention::squared ? "sigma2" : "sigma";
  if (std::isinf(r.condition_number)) {
    j["cond"] = "inf";
  } else {
    j["cond"] = r.condition_number;
  }
  j["rank_deficient"] = r.rank_deficient;
  return j;
}

nlohmann::json to_json(const AgreementReport& r) {
  nlohmann::json j;
  j["layers"] = r.layers;
  nlohmann::json methods = nlohmann::json::array();
  for (Method m : r.methods) methods.push_back(std::string(to_string(m)));
  j["methods"] = methods;
  nlohmann::json cos = nlohmann::json::array();
  for (const auto& layer : r.cos_per_layer) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : layer) {
      nlohmann::json cells = nlohmann::json::array();
      for (const auto& c : row) cells.push_back(c ? nlohmann::json(*c) : nlohmann::json());
      rows.push_back(cells);
    }
    cos.push_back(rows);
  }
  j["cos"] = cos;
  nlohmann::json gaps = nlohmann::json::array();
  for (const auto& g : r.gaps) {
    gaps.push_back({{"layer", g.layer},
                    {"method", g.method ? nlohmann::json(std::string(to_string(*g.method))) : nlohmann::json()},
                    {"reason", g.reason}});
  }
  j["gaps"] = gaps;
  return j;
}

nlohmann::json to_json(const ArrowMap& m) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : m.records) records.push_back({{"input_id", r.input_id}, {"dx", r.dx}, {"dy", r.dy}});
  return {{"records", records},
          {"mean", {m.mean_arrow.first, m.mean_arrow.second}},
          {"alpha", m.alpha},
          {"axis1", {m.axis1.first, m.axis1.second}},
          {"axis2", {m.axis2.first, m.axis2.second}}};
}

nlohmann::json to_json(const MonitorResult& r) {
  return {{"scores", r.per_candidate_scores}, {"chosen_index", r.chosen_index}, {"layer_used", r.layer_used}};
}

}  // namespace sandkit
