#pragma once

// Experiment configuration: a flat text file of dotted `key = value` lines
// ('#' starts a comment). Every key is optional except the seed, which may
// instead come from the command line. Defaults reproduce the reference
// experiment (growth constants, initial law and scheme settings).
//
//   seed                    unsigned integer
//   model.s_m|R_M|sigma_x|sigma_r
//   mu0.L                   also rescales the default surfaces and sigma_x
//   mu0.s0                  point-mass initial size
//   mu0.deltaS|deltaGamma
//   mu0.S.<f>, mu0.gamma.<f>  f in offset, peak, trough, peak_x1, peak_x2,
//                           trough_x1, trough_x2, H_peak, H_trough; H is a
//                           scalar (times identity) or "a,b,d"
//   solver.method           rk45 | rk4
//   solver.dt|rtol|atol|t_end|snapshots|workers
//   meanfield.dt|T|N|K|d3|d5|s0_min|s0_max
//   metric.ell|tau_r
//   converge.t_grid|probes|matching_cap|self_compare
//   simulate.n

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "plantmf/init_dist.hpp"
#include "plantmf/meanfield.hpp"
#include "plantmf/metrics.hpp"
#include "plantmf/population.hpp"

namespace plantmf {

struct ExperimentConfig {
  ModelParams params;
  Mu0Config mu0;            // simulation initial law (point-mass s0)
  S0Law train_s0 = S0Law::uniform(0.1, 0.3);
  SolverConfig solver;
  TrainConfig train;
  std::optional<double> metric_ell;
  std::optional<double> metric_tau_r;
  std::vector<double> t_grid{0.0, 2.0, 4.0, 6.0, 8.0, 10.0};
  std::size_t probe_count = 200;
  std::size_t matching_cap = kDefaultMatchingCap;
  bool self_compare = false;
  std::size_t simulate_n = 50;
  std::optional<std::uint64_t> seed;

  // Effective key/value pairs, sorted by key, one "key = value" per line.
  std::string canonical() const;
  // FNV-1a 64 of canonical(); equal effective configurations hash equally.
  std::uint64_t hash() const;

  // Throws ConfigError when the seed is absent.
  std::uint64_t require_seed() const;

  // mu0 with the training s0 law (the law the mean-field model is fitted on).
  Mu0Config training_mu0() const;
  ConvergenceOptions convergence_options(const Mu0Config& mu0) const;

  void validate() const;
};

// Raw key/value pairs; throws ConfigError on syntax errors or duplicates.
std::map<std::string, std::string> parse_key_values(const std::string& text);

// Applies the pairs over the defaults. Throws ConfigError for unknown keys
// or unparsable values.
ExperimentConfig config_from_key_values(const std::map<std::string, std::string>& kv);
ExperimentConfig parse_config(const std::string& text);

std::uint64_t fnv1a64(const std::string& data);

std::vector<double> parse_double_list(const std::string& text);
std::vector<std::size_t> parse_size_list(const std::string& text);

}  // namespace plantmf
