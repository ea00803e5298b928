#pragma once

#include <cstdint>

#include <nlohmann/json.hpp>

#include "sandkit/analysis.hpp"
#include "sandkit/directions.hpp"
#include "sandkit/intervene.hpp"

namespace sandkit {

// {"step1","step2","step3","step4","total","dominant_term","ratio"}
nlohmann::json to_json(const FlopReport& r);

// {"singular_values","q01","q99","hist":{"edges","counts"},"cum_energy","cond"}
// with "cond" set to the string "inf" for rank-deficient C.
nlohmann::json to_json(const SpectrumReport& r);

// {"layers","methods","cos"} plus "gaps"; failed entries are null.
nlohmann::json to_json(const AgreementReport& r);

// {"records":[{"input_id","dx","dy"}],"mean":[dx,dy],"alpha","axis1","axis2"}
nlohmann::json to_json(const ArrowMap& m);

nlohmann::json to_json(const MonitorResult& r);

}  // namespace sandkit
