#pragma once

// Finite-population dynamics: the coupled N-plant growth system, its
// empirical measure, and the empirical flow of a probe plant grown against a
// frozen population trajectory.

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "plantmf/init_dist.hpp"
#include "plantmf/model.hpp"
#include "plantmf/ode.hpp"

namespace plantmf {

struct PopulationState {
  std::vector<PlantTraits> traits;
  std::vector<double> sizes;
  double t = 0.0;

  std::size_t size() const { return sizes.size(); }

  static PopulationState from_samples(std::span<const Sample> samples);
};

struct SolverConfig {
  OdeMethod method = OdeMethod::rk45_adaptive;
  double dt_init = 0.0;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double t_end = 10.0;
  std::vector<double> snapshot_times = uniform_grid(10.0, 101);
  unsigned workers = 1;  // threads used for the pairwise sums

  void validate() const;
  OdeOptions ode_options() const;

  // count equally spaced times covering [0, t_end] (count >= 2).
  static std::vector<double> uniform_grid(double t_end, std::size_t count);
};

struct SnapshotDiagnostics {
  double min_size = 0.0;
  double max_size = 0.0;
  double min_index = 0.0;
  double max_index = 0.0;
  double min_lower_margin = 0.0;  // min_i (s_i - s_m)
  double min_upper_margin = 0.0;  // min_i (S_i - s_i)
};

// Snapshots of an integrated population plus the dense log-size solution
// between them. Immutable once built.
class Trajectory {
 public:
  Trajectory(ModelParams params, std::vector<PopulationState> states,
             std::vector<SnapshotDiagnostics> diagnostics,
             std::shared_ptr<const DenseOutput> log_sizes);

  const ModelParams& params() const { return params_; }
  std::size_t size() const { return states_.size(); }
  std::size_t population() const { return states_.front().size(); }
  const std::vector<double>& times() const { return times_; }
  const std::vector<PopulationState>& states() const { return states_; }
  const std::vector<SnapshotDiagnostics>& diagnostics() const { return diagnostics_; }
  const std::vector<PlantTraits>& traits() const { return states_.front().traits; }
  const std::vector<double>& initial_sizes() const { return states_.front().sizes; }

  double t_end() const { return dense_->t_end(); }
  // Log-sizes r_i(t) = log(s_i(t)/s_m) of all individuals from the dense output.
  void log_sizes_at(double t, std::span<double> out) const { dense_->eval(t, out); }
  double size_at(double t, std::size_t i) const;

 private:
  ModelParams params_;
  std::vector<double> times_;
  std::vector<PopulationState> states_;
  std::vector<SnapshotDiagnostics> diagnostics_;
  std::shared_ptr<const DenseOutput> dense_;
};

// Average potential exerted on individual i by all others. Throws
// ConfigError when N < 2 and DomainError for an out-of-range index.
double competition_index(const ModelParams& p, const PopulationState& state, std::size_t i);

// All competition indices, each summed in fixed index order.
std::vector<double> competition_indices(const ModelParams& p, const PopulationState& state,
                                        unsigned workers = 1);

// ds_i/dt of the coupled system at the given state.
std::vector<double> system_rhs(const ModelParams& p, const PopulationState& state);

// Integrates the coupled system on log-sizes. Throws ConfigError for an
// inadmissible initial state, IntegrationDiverged when a monitored bound
// (s_m < s_i < S_i, 0 <= C_i <= 1) is breached by more than the roundoff slack,
// StepUnderflow when the adaptive step collapses.
Trajectory integrate(const ModelParams& p, const PopulationState& initial,
                     const SolverConfig& cfg);

struct ProbeTrajectory {
  std::vector<double> times;
  std::vector<double> sizes;
};

// sizes[k][p] for probe p at times[k].
struct ProbeBatch {
  std::vector<double> times;
  std::vector<std::vector<double>> sizes;
};

// Grows probe plants against the frozen background empirical measure,
// including the self-exclusion correction -C(s,s,0)/(N-1). Throws
// DomainError when cfg.t_end exceeds the background's range or a probe is not
// admissible.
ProbeTrajectory empirical_flow(const ModelParams& p, const Trajectory& background, double probe_s0,
                               const PlantTraits& probe_traits, const SolverConfig& cfg);
ProbeBatch empirical_flow_batch(const ModelParams& p, const Trajectory& background,
                                std::span<const Sample> probes, const SolverConfig& cfg);

struct WeightedAtom {
  double weight = 0.0;
  double s = 0.0;
  PlantTraits traits;
};

std::vector<WeightedAtom> snapshot_measure(const PopulationState& state);

}  // namespace plantmf
