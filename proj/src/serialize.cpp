#include "plantmf/serialize.hpp"

#include <cmath>
#include <limits>

#include "plantmf/error.hpp"

namespace plantmf {

namespace {

Json number(double v) { return std::isnan(v) ? Json(nullptr) : Json(v); }

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw ConfigError(std::string("json: missing field '") + key + "'");
  }
  return j.at(key);
}

double get_double(const Json& j, const char* key) {
  const auto& v = field(j, key);
  if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!v.is_number()) throw ConfigError(std::string("json: field '") + key + "' is not a number");
  return v.get<double>();
}

std::uint64_t get_uint(const Json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_number_unsigned()) {
    throw ConfigError(std::string("json: field '") + key + "' is not an unsigned integer");
  }
  return v.get<std::uint64_t>();
}

Vec2 get_vec2(const Json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_array() || v.size() != 2) throw ConfigError(std::string("json: '") + key + "' needs 2 numbers");
  return {v[0].get<double>(), v[1].get<double>()};
}

Mat2 get_mat2(const Json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_array() || v.size() != 4) throw ConfigError(std::string("json: '") + key + "' needs 4 numbers");
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>(), v[3].get<double>()};
}

}  // namespace

Json to_json(const ModelParams& p) {
  return {{"s_m", p.s_m}, {"R_M", p.R_M}, {"sigma_x", p.sigma_x}, {"sigma_r", p.sigma_r}};
}

Json to_json(const SurfaceParams& s) {
  return {{"offset", s.offset},
          {"peak_value", s.peak_value},
          {"trough_value", s.trough_value},
          {"peak_center", {s.peak_center[0], s.peak_center[1]}},
          {"trough_center", {s.trough_center[0], s.trough_center[1]}},
          {"H_peak", {s.H_peak[0], s.H_peak[1], s.H_peak[2], s.H_peak[3]}},
          {"H_trough", {s.H_trough[0], s.H_trough[1], s.H_trough[2], s.H_trough[3]}}};
}

Json to_json(const Mu0Config& c) {
  Json s0;
  if (c.s0_law.kind == S0Law::Kind::point) {
    s0 = {{"kind", "point"}, {"value", c.s0_law.value}};
  } else {
    s0 = {{"kind", "uniform"}, {"min", c.s0_law.min}, {"max", c.s0_law.max}};
  }
  return {{"s0", s0},
          {"L", c.L},
          {"S_surface", to_json(c.S_surface)},
          {"gamma_surface", to_json(c.gamma_surface)},
          {"deltaS", c.deltaS},
          {"deltaGamma", c.deltaGamma},
          {"params", to_json(c.params)},
          {"seed", c.seed}};
}

Json to_json(const TrainConfig& c) {
  return {{"dt", c.dt},
          {"T", c.T},
          {"cloud_size", c.cloud_size},
          {"train_size", c.train_size},
          {"degree_initial", c.degree_initial},
          {"degree_later", c.degree_later},
          {"seed", c.seed}};
}

Json to_json(const PotentialStage& s) {
  return {{"index", s.index},
          {"arity", s.spec.arity},
          {"degree", s.spec.degree},
          {"center", {s.spec.center[0], s.spec.center[1]}},
          {"length", {s.spec.length[0], s.spec.length[1]}},
          {"dt", s.spec.dt},
          {"r2_train", number(s.r2_train)},
          {"r2_test", number(s.r2_test)},
          {"beta", s.beta}};
}

Json to_json(const MeanFieldModel& m) {
  Json stages = Json::array();
  for (const auto& s : m.stages) stages.push_back(to_json(s));
  return {{"format_version", MeanFieldModel::kFormatVersion},
          {"dt", m.dt},
          {"T", m.T},
          {"mu0", to_json(m.mu0)},
          {"train", to_json(m.train)},
          {"stages", stages}};
}

Json to_json(const SnapshotDiagnostics& d) {
  return {{"min_size", d.min_size},
          {"max_size", d.max_size},
          {"min_index", d.min_index},
          {"max_index", d.max_index},
          {"min_lower_margin", d.min_lower_margin},
          {"min_upper_margin", d.min_upper_margin}};
}

Json to_json(const DistanceReport& r) {
  auto finite = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
  return {{"N", r.N},
          {"t", r.t},
          {"w1_size", finite(r.w1_size)},
          {"w1_full", finite(r.w1_full)},
          {"flow_gap", finite(r.flow_gap)},
          {"bound_value", finite(r.bound_value)}};
}

ModelParams model_params_from_json(const Json& j) {
  ModelParams p{get_double(j, "s_m"), get_double(j, "R_M"), get_double(j, "sigma_x"),
                get_double(j, "sigma_r")};
  p.validate();
  return p;
}

SurfaceParams surface_from_json(const Json& j) {
  SurfaceParams s;
  s.offset = get_double(j, "offset");
  s.peak_value = get_double(j, "peak_value");
  s.trough_value = get_double(j, "trough_value");
  s.peak_center = get_vec2(j, "peak_center");
  s.trough_center = get_vec2(j, "trough_center");
  s.H_peak = get_mat2(j, "H_peak");
  s.H_trough = get_mat2(j, "H_trough");
  s.validate();
  return s;
}

Mu0Config mu0_from_json(const Json& j) {
  Mu0Config c;
  const auto& s0 = field(j, "s0");
  const auto kind = field(s0, "kind").get<std::string>();
  if (kind == "point") {
    c.s0_law = S0Law::point(get_double(s0, "value"));
  } else if (kind == "uniform") {
    c.s0_law = S0Law::uniform(get_double(s0, "min"), get_double(s0, "max"));
  } else {
    throw ConfigError("json: unknown s0 law '" + kind + "'");
  }
  c.L = get_double(j, "L");
  c.S_surface = surface_from_json(field(j, "S_surface"));
  c.gamma_surface = surface_from_json(field(j, "gamma_surface"));
  c.deltaS = get_double(j, "deltaS");
  c.deltaGamma = get_double(j, "deltaGamma");
  c.params = model_params_from_json(field(j, "params"));
  c.seed = get_uint(j, "seed");
  c.validate();
  return c;
}

TrainConfig train_config_from_json(const Json& j) {
  TrainConfig c;
  c.dt = get_double(j, "dt");
  c.T = get_double(j, "T");
  c.cloud_size = get_uint(j, "cloud_size");
  c.train_size = get_uint(j, "train_size");
  c.degree_initial = get_uint(j, "degree_initial");
  c.degree_later = get_uint(j, "degree_later");
  c.seed = get_uint(j, "seed");
  c.validate();
  return c;
}

PotentialStage stage_from_json(const Json& j) {
  PotentialStage s;
  s.index = get_uint(j, "index");
  s.spec.arity = get_uint(j, "arity");
  s.spec.degree = get_uint(j, "degree");
  s.spec.center = get_vec2(j, "center");
  s.spec.length = get_vec2(j, "length");
  s.spec.dt = get_double(j, "dt");
  s.r2_train = get_double(j, "r2_train");
  s.r2_test = get_double(j, "r2_test");
  const auto& beta = field(j, "beta");
  if (!beta.is_array()) throw ConfigError("json: 'beta' must be an array");
  for (const auto& b : beta) {
    if (!b.is_number()) throw ConfigError("json: non-numeric coefficient");
    s.beta.push_back(b.get<double>());
  }
  return s;
}

MeanFieldModel model_from_json(const Json& j) {
  if (get_uint(j, "format_version") != static_cast<std::uint64_t>(MeanFieldModel::kFormatVersion)) {
    throw ConfigError("json: unsupported model format version");
  }
  MeanFieldModel m;
  m.dt = get_double(j, "dt");
  m.T = get_double(j, "T");
  m.mu0 = mu0_from_json(field(j, "mu0"));
  m.train = train_config_from_json(field(j, "train"));
  const auto& stages = field(j, "stages");
  if (!stages.is_array()) throw ConfigError("json: 'stages' must be an array");
  for (const auto& sj : stages) {
    auto s = stage_from_json(sj);
    s.spec.params = m.mu0.params;
    s.spec.validate();
    if (s.beta.size() != s.spec.dimension()) {
      throw ConfigError("json: coefficient count does not match the stage feature spec");
    }
    m.stages.push_back(std::move(s));
  }
  const double span = static_cast<double>(m.stages.size()) * m.dt;
  if (m.stages.empty() || std::abs(span - m.T) > 1e-9 * m.T) {
    throw ConfigError("json: stage count does not cover [0, T]");
  }
  return m;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

MeanFieldModel parse_model(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    return model_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model file is malformed: ") + e.what());
  }
}

}  // namespace plantmf
