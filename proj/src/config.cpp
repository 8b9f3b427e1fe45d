#include "plantmf/config.hpp"

#include <charconv>
#include <functional>
#include <sstream>

#include "plantmf/error.hpp"
#include "plantmf/io.hpp"

namespace plantmf {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ConfigError("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: '" + key + "' expects true or false, got '" + v + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(s);
  while (std::getline(ss, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

Mat2 to_mat2(const std::string& key, const std::string& v) {
  const auto parts = split(v, ',');
  if (parts.size() == 1) return scaled_identity(to_double(key, parts[0]));
  if (parts.size() == 3) {
    const double b = to_double(key, parts[1]);
    return {to_double(key, parts[0]), b, b, to_double(key, parts[2])};
  }
  throw ConfigError("config: '" + key + "' expects a scalar or 'a,b,d'");
}

std::string mat2_text(const Mat2& m) {
  return format_double(m[0]) + "," + format_double(m[1]) + "," + format_double(m[3]);
}

// Reference surfaces and spatial scale for a position spread L.
void apply_length_scale(ExperimentConfig& c, double L) {
  const auto seed = c.mu0.seed;
  c.mu0 = Mu0Config::reference(seed);
  const double h = 1.0 / (L * L);
  c.mu0.L = L;
  c.mu0.S_surface.peak_center = {-L, 0.0};
  c.mu0.S_surface.trough_center = {L, 0.0};
  c.mu0.gamma_surface.peak_center = {0.0, L};
  c.mu0.gamma_surface.trough_center = {0.0, -L};
  for (auto* s : {&c.mu0.S_surface, &c.mu0.gamma_surface}) {
    s->H_peak = scaled_identity(h);
    s->H_trough = scaled_identity(h);
  }
  c.params.sigma_x = L / 2.0;
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& v)>;

void surface_setters(std::map<std::string, Setter>& m, const std::string& prefix,
                     SurfaceParams Mu0Config::*surface) {
  auto num = [surface](double SurfaceParams::*f) {
    return [surface, f](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.mu0.*surface.*f = to_double(k, v);
    };
  };
  auto coord = [surface](Vec2 SurfaceParams::*f, int i) {
    return [surface, f, i](ExperimentConfig& c, const std::string& k, const std::string& v) {
      (c.mu0.*surface.*f)[i] = to_double(k, v);
    };
  };
  auto mat = [surface](Mat2 SurfaceParams::*f) {
    return [surface, f](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.mu0.*surface.*f = to_mat2(k, v);
    };
  };
  m[prefix + "offset"] = num(&SurfaceParams::offset);
  m[prefix + "peak"] = num(&SurfaceParams::peak_value);
  m[prefix + "trough"] = num(&SurfaceParams::trough_value);
  m[prefix + "peak_x1"] = coord(&SurfaceParams::peak_center, 0);
  m[prefix + "peak_x2"] = coord(&SurfaceParams::peak_center, 1);
  m[prefix + "trough_x1"] = coord(&SurfaceParams::trough_center, 0);
  m[prefix + "trough_x2"] = coord(&SurfaceParams::trough_center, 1);
  m[prefix + "H_peak"] = mat(&SurfaceParams::H_peak);
  m[prefix + "H_trough"] = mat(&SurfaceParams::H_trough);
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> m;
    m["seed"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.seed = to_uint(k, v);
    };
    m["model.s_m"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.params.s_m = to_double(k, v);
    };
    m["model.R_M"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.params.R_M = to_double(k, v);
    };
    m["model.sigma_x"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.params.sigma_x = to_double(k, v);
    };
    m["model.sigma_r"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.params.sigma_r = to_double(k, v);
    };
    m["mu0.L"] = [](ExperimentConfig&, const std::string&, const std::string&) {
      // applied before all other keys
    };
    m["mu0.s0"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.mu0.s0_law = S0Law::point(to_double(k, v));
    };
    m["mu0.deltaS"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.mu0.deltaS = to_double(k, v);
    };
    m["mu0.deltaGamma"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.mu0.deltaGamma = to_double(k, v);
    };
    surface_setters(m, "mu0.S.", &Mu0Config::S_surface);
    surface_setters(m, "mu0.gamma.", &Mu0Config::gamma_surface);
    m["solver.method"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      if (v == "rk45") {
        c.solver.method = OdeMethod::rk45_adaptive;
      } else if (v == "rk4") {
        c.solver.method = OdeMethod::rk4_fixed;
      } else {
        throw ConfigError("config: '" + k + "' must be rk45 or rk4");
      }
    };
    m["solver.dt"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.solver.dt_init = to_double(k, v);
    };
    m["solver.rtol"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.solver.rel_tol = to_double(k, v);
    };
    m["solver.atol"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.solver.abs_tol = to_double(k, v);
    };
    m["solver.t_end"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.solver.t_end = to_double(k, v);
    };
    m["solver.snapshots"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.solver.snapshot_times.assign(to_uint(k, v), 0.0);  // resolved after t_end is known
    };
    m["solver.workers"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      const auto w = to_uint(k, v);
      if (w == 0 || w > 256) throw ConfigError("config: solver.workers must be in [1, 256]");
      c.solver.workers = static_cast<unsigned>(w);
    };
    m["meanfield.dt"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.train.dt = to_double(k, v);
    };
    m["meanfield.T"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.train.T = to_double(k, v);
    };
    m["meanfield.N"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.train.cloud_size = to_uint(k, v);
    };
    m["meanfield.K"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.train.train_size = to_uint(k, v);
    };
    m["meanfield.d3"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.train.degree_initial = to_uint(k, v);
    };
    m["meanfield.d5"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.train.degree_later = to_uint(k, v);
    };
    m["meanfield.s0_min"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.train_s0 = S0Law::uniform(to_double(k, v), c.train_s0.max);
    };
    m["meanfield.s0_max"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.train_s0 = S0Law::uniform(c.train_s0.min, to_double(k, v));
    };
    m["metric.ell"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.metric_ell = to_double(k, v);
    };
    m["metric.tau_r"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.metric_tau_r = to_double(k, v);
    };
    m["converge.t_grid"] = [](ExperimentConfig& c, const std::string&, const std::string& v) {
      c.t_grid = parse_double_list(v);
    };
    m["converge.probes"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.probe_count = to_uint(k, v);
    };
    m["converge.matching_cap"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.matching_cap = to_uint(k, v);
    };
    m["converge.self_compare"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.self_compare = to_bool(k, v);
    };
    m["simulate.n"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.simulate_n = to_uint(k, v);
    };
    return m;
  }();
  return table;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& part : split(text, ',')) {
    if (part.empty()) throw ConfigError("config: empty entry in list '" + text + "'");
    out.push_back(to_double("list", part));
  }
  if (out.empty()) throw ConfigError("config: empty list");
  return out;
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& part : split(text, ',')) {
    if (part.empty()) throw ConfigError("config: empty entry in list '" + text + "'");
    out.push_back(to_uint("list", part));
  }
  if (out.empty()) throw ConfigError("config: empty list");
  return out;
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream ss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
    }
    if (!kv.emplace(key, value).second) {
      throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
  }
  return kv;
}

ExperimentConfig config_from_key_values(const std::map<std::string, std::string>& kv) {
  ExperimentConfig c;
  const auto it_L = kv.find("mu0.L");
  apply_length_scale(c, it_L == kv.end() ? 1.0 : to_double("mu0.L", it_L->second));
  if (!(c.mu0.L > 0.0)) throw ConfigError("config: mu0.L must be positive");

  const auto& table = setters();
  for (const auto& [key, value] : kv) {
    const auto s = table.find(key);
    if (s == table.end()) throw ConfigError("config: unknown key '" + key + "'");
    s->second(c, key, value);
  }
  if (kv.count("solver.snapshots") || kv.count("solver.t_end")) {
    const std::size_t n = kv.count("solver.snapshots") ? c.solver.snapshot_times.size() : 101;
    if (n < 2) throw ConfigError("config: solver.snapshots must be at least 2");
    c.solver.snapshot_times = SolverConfig::uniform_grid(c.solver.t_end, n);
  }
  c.mu0.params = c.params;
  if (c.seed) c.mu0.seed = *c.seed;
  c.validate();
  return c;
}

ExperimentConfig parse_config(const std::string& text) {
  return config_from_key_values(parse_key_values(text));
}

void ExperimentConfig::validate() const {
  params.validate();
  mu0.validate();
  solver.validate();
  train.validate();
  (void)training_mu0();
  if (metric_ell && !(*metric_ell > 0.0)) throw ConfigError("config: metric.ell must be positive");
  if (metric_tau_r && !(*metric_tau_r > 0.0)) {
    throw ConfigError("config: metric.tau_r must be positive");
  }
  if (simulate_n < 2) throw ConfigError("config: simulate.n must be at least 2");
}

std::uint64_t ExperimentConfig::require_seed() const {
  if (!seed) throw ConfigError("a seed is required (config key 'seed' or --seed)");
  return *seed;
}

Mu0Config ExperimentConfig::training_mu0() const {
  Mu0Config m = mu0;
  m.s0_law = train_s0;
  m.params = params;
  m.validate();
  return m;
}

ConvergenceOptions ExperimentConfig::convergence_options(const Mu0Config& m) const {
  ConvergenceOptions o;
  o.t_grid = t_grid;
  o.weights = ZMetricWeights::defaults(m);
  if (metric_ell) o.weights.ell = *metric_ell;
  if (metric_tau_r) o.weights.tau_r = *metric_tau_r;
  o.solver = solver;
  o.probe_count = probe_count;
  o.matching_cap = matching_cap;
  o.self_compare = self_compare;
  return o;
}

std::string ExperimentConfig::canonical() const {
  std::map<std::string, std::string> kv;
  auto d = [](double v) { return format_double(v); };
  kv["seed"] = seed ? std::to_string(*seed) : "none";
  kv["model.s_m"] = d(params.s_m);
  kv["model.R_M"] = d(params.R_M);
  kv["model.sigma_x"] = d(params.sigma_x);
  kv["model.sigma_r"] = d(params.sigma_r);
  kv["mu0.L"] = d(mu0.L);
  kv["mu0.s0"] = mu0.s0_law.kind == S0Law::Kind::point
                     ? d(mu0.s0_law.value)
                     : "uniform(" + d(mu0.s0_law.min) + "," + d(mu0.s0_law.max) + ")";
  kv["mu0.deltaS"] = d(mu0.deltaS);
  kv["mu0.deltaGamma"] = d(mu0.deltaGamma);
  for (const auto& [prefix, s] :
       {std::pair<std::string, const SurfaceParams*>{"mu0.S.", &mu0.S_surface},
        std::pair<std::string, const SurfaceParams*>{"mu0.gamma.", &mu0.gamma_surface}}) {
    kv[prefix + "offset"] = d(s->offset);
    kv[prefix + "peak"] = d(s->peak_value);
    kv[prefix + "trough"] = d(s->trough_value);
    kv[prefix + "peak_x1"] = d(s->peak_center[0]);
    kv[prefix + "peak_x2"] = d(s->peak_center[1]);
    kv[prefix + "trough_x1"] = d(s->trough_center[0]);
    kv[prefix + "trough_x2"] = d(s->trough_center[1]);
    kv[prefix + "H_peak"] = mat2_text(s->H_peak);
    kv[prefix + "H_trough"] = mat2_text(s->H_trough);
  }
  kv["solver.method"] = solver.method == OdeMethod::rk45_adaptive ? "rk45" : "rk4";
  kv["solver.dt"] = d(solver.dt_init);
  kv["solver.rtol"] = d(solver.rel_tol);
  kv["solver.atol"] = d(solver.abs_tol);
  kv["solver.t_end"] = d(solver.t_end);
  kv["solver.snapshots"] = std::to_string(solver.snapshot_times.size());
  kv["solver.workers"] = std::to_string(solver.workers);
  kv["meanfield.dt"] = d(train.dt);
  kv["meanfield.T"] = d(train.T);
  kv["meanfield.N"] = std::to_string(train.cloud_size);
  kv["meanfield.K"] = std::to_string(train.train_size);
  kv["meanfield.d3"] = std::to_string(train.degree_initial);
  kv["meanfield.d5"] = std::to_string(train.degree_later);
  kv["meanfield.s0_min"] = d(train_s0.min);
  kv["meanfield.s0_max"] = d(train_s0.max);
  kv["metric.ell"] = metric_ell ? d(*metric_ell) : "default";
  kv["metric.tau_r"] = metric_tau_r ? d(*metric_tau_r) : "default";
  std::string grid;
  for (std::size_t k = 0; k < t_grid.size(); ++k) grid += (k ? "," : "") + d(t_grid[k]);
  kv["converge.t_grid"] = grid;
  kv["converge.probes"] = std::to_string(probe_count);
  kv["converge.matching_cap"] = std::to_string(matching_cap);
  kv["converge.self_compare"] = self_compare ? "true" : "false";
  kv["simulate.n"] = std::to_string(simulate_n);
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a64(canonical()); }

}  // namespace plantmf
