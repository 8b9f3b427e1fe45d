#pragma once

// JSON forms of the configuration types, trained models and reports.
// Doubles round-trip exactly; NaN is written as null and read back as NaN.

#include <span>
#include <string>

#include <json.hpp>

#include "plantmf/init_dist.hpp"
#include "plantmf/meanfield.hpp"
#include "plantmf/metrics.hpp"
#include "plantmf/population.hpp"

namespace plantmf {

using Json = nlohmann::ordered_json;

Json to_json(const ModelParams& p);
Json to_json(const SurfaceParams& s);
Json to_json(const Mu0Config& c);
Json to_json(const TrainConfig& c);
Json to_json(const PotentialStage& s);
Json to_json(const MeanFieldModel& m);
Json to_json(const SnapshotDiagnostics& d);
Json to_json(const DistanceReport& r);

// Parsers throw ConfigError on missing fields, wrong types or an unknown
// format version.
ModelParams model_params_from_json(const Json& j);
SurfaceParams surface_from_json(const Json& j);
Mu0Config mu0_from_json(const Json& j);
TrainConfig train_config_from_json(const Json& j);
PotentialStage stage_from_json(const Json& j);
MeanFieldModel model_from_json(const Json& j);

std::string dump(const Json& j);
MeanFieldModel parse_model(const std::string& text);

}  // namespace plantmf
