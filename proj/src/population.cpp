#include "plantmf/population.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "plantmf/error.hpp"
#include "plantmf/numeric.hpp"

namespace plantmf {

namespace {

// Roundoff slack on monitored bounds; smaller breaches are clamped.
constexpr double kSlack = 1e-9;
constexpr double kInset = 1e-12;

template <class Fn>
void parallel_ranges(std::size_t n, unsigned workers, Fn&& fn) {
  if (workers <= 1 || n < 64) {
    fn(std::size_t{0}, n);
    return;
  }
  const std::size_t w = std::min<std::size_t>(workers, n);
  std::vector<std::thread> pool;
  pool.reserve(w - 1);
  const std::size_t chunk = (n + w - 1) / w;
  for (std::size_t k = 1; k < w; ++k) {
    const std::size_t b = k * chunk;
    const std::size_t e = std::min(n, b + chunk);
    if (b < e) pool.emplace_back([&fn, b, e] { fn(b, e); });
  }
  fn(std::size_t{0}, std::min(n, chunk));
  for (auto& th : pool) th.join();
}

// Competition indices from log-sizes; each sum runs j = 0..N-1 in order.
void log_indices(const ModelParams& p, std::span<const PlantTraits> traits,
                 std::span<const double> r, std::span<double> out, unsigned workers) {
  const std::size_t n = traits.size();
  const double inv = 1.0 / static_cast<double>(n - 1);
  parallel_ranges(n, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& xi = traits[i].x;
      CompensatedSum acc;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double dx = xi[0] - traits[j].x[0];
        const double dy = xi[1] - traits[j].x[1];
        acc.add(log_potential_weighted(p, r[i], r[j], spatial_factor(p, dx * dx + dy * dy)));
      }
      out[i] = acc.value() * inv;
    }
  });
}

std::vector<double> log_asymptotes(const ModelParams& p, std::span<const PlantTraits> traits) {
  std::vector<double> out(traits.size());
  for (std::size_t i = 0; i < traits.size(); ++i) out[i] = p.log_size(traits[i].S);
  return out;
}

// Enforces lo < r < hi, clamping breaches up to kSlack.
void monitor_bounds(double& r, double lo, double hi, std::size_t step, std::size_t i) {
  if (r <= lo) {
    if (lo - r > kSlack || !std::isfinite(r)) {
      throw IntegrationDiverged(step, i, "size fell below its lower bound");
    }
    r = lo + kInset;
  } else if (r >= hi) {
    if (r - hi > kSlack || !std::isfinite(r)) {
      throw IntegrationDiverged(step, i, "size exceeded its upper bound");
    }
    r = hi - kInset;
  }
}

}  // namespace

PopulationState PopulationState::from_samples(std::span<const Sample> samples) {
  PopulationState st;
  st.traits.reserve(samples.size());
  st.sizes.reserve(samples.size());
  for (const auto& s : samples) {
    st.traits.push_back(s.traits);
    st.sizes.push_back(s.s0);
  }
  return st;
}

void SolverConfig::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw ConfigError("solver: tolerances must be positive");
  if (!(t_end > 0.0)) throw ConfigError("solver: t_end must be positive");
  if (method == OdeMethod::rk4_fixed && !(dt_init > 0.0)) {
    throw ConfigError("solver: rk4-fixed requires dt_init > 0");
  }
  if (snapshot_times.empty()) throw ConfigError("solver: at least one snapshot time is required");
  for (std::size_t k = 0; k < snapshot_times.size(); ++k) {
    const double t = snapshot_times[k];
    if (!(t >= 0.0 && t <= t_end)) throw ConfigError("solver: snapshot time outside [0, t_end]");
    if (k > 0 && !(t > snapshot_times[k - 1])) {
      throw ConfigError("solver: snapshot times must be strictly increasing");
    }
  }
}

OdeOptions SolverConfig::ode_options() const {
  OdeOptions o;
  o.method = method;
  o.dt_init = dt_init;
  o.rel_tol = rel_tol;
  o.abs_tol = abs_tol;
  return o;
}

std::vector<double> SolverConfig::uniform_grid(double t_end, std::size_t count) {
  if (count < 2) throw ConfigError("uniform_grid: count must be at least 2");
  std::vector<double> g(count);
  for (std::size_t k = 0; k < count; ++k) {
    g[k] = t_end * static_cast<double>(k) / static_cast<double>(count - 1);
  }
  g.back() = t_end;
  return g;
}

Trajectory::Trajectory(ModelParams params, std::vector<PopulationState> states,
                       std::vector<SnapshotDiagnostics> diagnostics,
                       std::shared_ptr<const DenseOutput> log_sizes)
    : params_(params),
      states_(std::move(states)),
      diagnostics_(std::move(diagnostics)),
      dense_(std::move(log_sizes)) {
  times_.reserve(states_.size());
  for (const auto& s : states_) times_.push_back(s.t);
}

double Trajectory::size_at(double t, std::size_t i) const {
  return params_.size_from_log(dense_->eval(t, i));
}

double competition_index(const ModelParams& p, const PopulationState& state, std::size_t i) {
  const std::size_t n = state.size();
  if (n < 2) throw ConfigError("competition_index: at least two individuals are required");
  if (i >= n) throw DomainError("competition_index: individual index out of range");
  CompensatedSum acc;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    acc.add(competition_potential(p, state.sizes[i], state.sizes[j],
                                  distance(state.traits[i].x, state.traits[j].x)));
  }
  return acc.value() / static_cast<double>(n - 1);
}

std::vector<double> competition_indices(const ModelParams& p, const PopulationState& state,
                                        unsigned workers) {
  const std::size_t n = state.size();
  if (n < 2) throw ConfigError("competition_indices: at least two individuals are required");
  std::vector<double> r(n), c(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(state.sizes[i] > 0.0)) throw DomainError("competition_indices: sizes must be positive");
    r[i] = p.log_size(state.sizes[i]);
  }
  log_indices(p, state.traits, r, c, workers);
  return c;
}

std::vector<double> system_rhs(const ModelParams& p, const PopulationState& state) {
  const auto c = competition_indices(p, state);
  std::vector<double> out(state.size());
  for (std::size_t i = 0; i < state.size(); ++i) {
    const auto& th = state.traits[i];
    const double s = state.sizes[i];
    out[i] = th.gamma * s * (p.log_size(th.S) * (1.0 - c[i]) - p.log_size(s));
  }
  return out;
}

Trajectory integrate(const ModelParams& p, const PopulationState& initial,
                     const SolverConfig& cfg) {
  p.validate();
  cfg.validate();
  const auto verdict = validate_initial_config(p, initial.traits, initial.sizes);
  if (!verdict) throw ConfigError("integrate: inadmissible initial state: " + verdict.reason);

  const std::size_t n = initial.size();
  const std::span<const PlantTraits> traits(initial.traits);
  const auto log_S = log_asymptotes(p, traits);
  std::vector<double> r0(n);
  for (std::size_t i = 0; i < n; ++i) r0[i] = p.log_size(initial.sizes[i]);

  std::vector<double> scratch(n);
  const OdeRhs rhs = [&](double, std::span<const double> r, std::span<double> dr) {
    log_indices(p, traits, r, scratch, cfg.workers);
    for (std::size_t i = 0; i < n; ++i) {
      dr[i] = traits[i].gamma * (log_S[i] * (1.0 - scratch[i]) - r[i]);
    }
  };
  const StepObserver monitor = [&](std::size_t step, double, std::span<double> r) {
    for (std::size_t i = 0; i < n; ++i) monitor_bounds(r[i], 0.0, log_S[i], step, i);
  };

  auto ode = integrate_ode(rhs, initial.t, initial.t + cfg.t_end, r0, cfg.ode_options(), monitor);
  auto dense = std::make_shared<const DenseOutput>(std::move(ode.dense));

  std::vector<PopulationState> states;
  std::vector<SnapshotDiagnostics> diags;
  states.reserve(cfg.snapshot_times.size());
  diags.reserve(cfg.snapshot_times.size());
  std::vector<double> r(n), c(n);
  for (std::size_t k = 0; k < cfg.snapshot_times.size(); ++k) {
    const double t = initial.t + cfg.snapshot_times[k];
    PopulationState st;
    st.t = t;
    st.traits = initial.traits;
    if (cfg.snapshot_times[k] == 0.0) {
      r = r0;
      st.sizes = initial.sizes;
    } else {
      dense->eval(t, r);
      st.sizes.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        monitor_bounds(r[i], 0.0, log_S[i], k, i);
        st.sizes[i] = p.size_from_log(r[i]);
      }
    }
    log_indices(p, traits, r, c, cfg.workers);
    SnapshotDiagnostics d;
    d.min_size = d.min_lower_margin = d.min_upper_margin = std::numeric_limits<double>::infinity();
    d.min_index = std::numeric_limits<double>::infinity();
    d.max_size = d.max_index = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (c[i] < -kSlack || c[i] > 1.0 + kSlack) {
        throw IntegrationDiverged(k, i, "competition index left [0,1]");
      }
      const double s = st.sizes[i];
      d.min_size = std::min(d.min_size, s);
      d.max_size = std::max(d.max_size, s);
      d.min_index = std::min(d.min_index, c[i]);
      d.max_index = std::max(d.max_index, c[i]);
      d.min_lower_margin = std::min(d.min_lower_margin, s - p.s_m);
      d.min_upper_margin = std::min(d.min_upper_margin, traits[i].S - s);
    }
    states.push_back(std::move(st));
    diags.push_back(d);
  }
  return Trajectory(p, std::move(states), std::move(diags), std::move(dense));
}

ProbeBatch empirical_flow_batch(const ModelParams& p, const Trajectory& background,
                                std::span<const Sample> probes, const SolverConfig& cfg) {
  cfg.validate();
  const double t0 = background.times().front();
  if (t0 + cfg.t_end > background.t_end() * (1.0 + 1e-12) + 1e-12) {
    throw DomainError("empirical_flow: probe horizon exceeds the background trajectory");
  }
  const std::size_t n = background.population();
  if (n < 2) throw ConfigError("empirical_flow: background needs at least two individuals");
  for (const auto& pr : probes) {
    if (!(p.s_m < pr.s0 && pr.s0 < pr.traits.S && pr.traits.S < p.max_size()) ||
        !(pr.traits.gamma >= 0.0)) {
      throw DomainError("empirical_flow: probe is not admissible");
    }
  }

  const std::size_t np = probes.size();
  const auto& bg = background.traits();
  std::vector<double> weights(np * n);
  std::vector<double> log_S(np), r0(np);
  for (std::size_t q = 0; q < np; ++q) {
    const auto& x = probes[q].traits.x;
    for (std::size_t j = 0; j < n; ++j) {
      const double dx = x[0] - bg[j].x[0];
      const double dy = x[1] - bg[j].x[1];
      weights[q * n + j] = spatial_factor(p, dx * dx + dy * dy);
    }
    log_S[q] = p.log_size(probes[q].traits.S);
    r0[q] = p.log_size(probes[q].s0);
  }

  const double inv = 1.0 / static_cast<double>(n - 1);
  const double self = 1.0 / (2.0 * p.R_M);  // C(s,s,0) = r / (2 R_M)
  std::vector<double> rb(n);
  const OdeRhs rhs = [&](double t, std::span<const double> r, std::span<double> dr) {
    background.log_sizes_at(t, rb);
    for (std::size_t q = 0; q < np; ++q) {
      const double* w = weights.data() + q * n;
      CompensatedSum acc;
      for (std::size_t j = 0; j < n; ++j) acc.add(log_potential_weighted(p, r[q], rb[j], w[j]));
      const double c_hat = (acc.value() - self * r[q]) * inv;
      dr[q] = probes[q].traits.gamma * (log_S[q] * (1.0 - c_hat) - r[q]);
    }
  };
  // Bounds on any probe against an N-population.
  const double denom = 2.0 * static_cast<double>(n) - 3.0;
  const double r_lo = -2.0 * p.R_M / denom;
  const double r_hi = (6.0 * static_cast<double>(n) - 5.0) * p.R_M / denom;
  const StepObserver monitor = [&](std::size_t step, double, std::span<double> r) {
    for (std::size_t q = 0; q < np; ++q) monitor_bounds(r[q], r_lo, r_hi, step, q);
  };

  ProbeBatch out;
  out.times.reserve(cfg.snapshot_times.size());
  for (double t : cfg.snapshot_times) out.times.push_back(t0 + t);
  if (np == 0) {
    out.sizes.assign(out.times.size(), {});
    return out;
  }
  const auto ode = integrate_ode(rhs, t0, t0 + cfg.t_end, r0, cfg.ode_options(), monitor);
  std::vector<double> r(np);
  for (double t : cfg.snapshot_times) {
    std::vector<double> row(np);
    if (t == 0.0) {
      for (std::size_t q = 0; q < np; ++q) row[q] = probes[q].s0;
    } else {
      ode.dense.eval(t0 + t, r);
      for (std::size_t q = 0; q < np; ++q) row[q] = p.size_from_log(r[q]);
    }
    out.sizes.push_back(std::move(row));
  }
  return out;
}

ProbeTrajectory empirical_flow(const ModelParams& p, const Trajectory& background, double probe_s0,
                               const PlantTraits& probe_traits, const SolverConfig& cfg) {
  const Sample probe{probe_s0, probe_traits};
  auto batch = empirical_flow_batch(p, background, std::span<const Sample>(&probe, 1), cfg);
  ProbeTrajectory out;
  out.times = std::move(batch.times);
  out.sizes.reserve(batch.sizes.size());
  for (const auto& row : batch.sizes) out.sizes.push_back(row.front());
  return out;
}

std::vector<WeightedAtom> snapshot_measure(const PopulationState& state) {
  std::vector<WeightedAtom> atoms;
  atoms.reserve(state.size());
  const double w = 1.0 / static_cast<double>(state.size());
  for (std::size_t i = 0; i < state.size(); ++i) {
    atoms.push_back({w, state.sizes[i], state.traits[i]});
  }
  return atoms;
}

}  // namespace plantmf
