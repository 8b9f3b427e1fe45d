#include "plantmf/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include "plantmf/error.hpp"
#include "plantmf/numeric.hpp"

namespace plantmf {

void ZMetricWeights::validate() const {
  for (double v : {s_m, ell, tau_r}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("metric weights must be positive");
  }
}

ZMetricWeights ZMetricWeights::defaults(const Mu0Config& mu0) {
  return {mu0.params.s_m, mu0.L, 1.0 / mu0.gamma_upper()};
}

double z_distance(const ZAtom& a, const ZAtom& b, const ZMetricWeights& w) {
  return std::abs(a.s - b.s) / w.s_m + std::abs(a.traits.S - b.traits.S) / w.s_m +
         distance(a.traits.x, b.traits.x) / w.ell +
         w.tau_r * std::abs(a.traits.gamma - b.traits.gamma);
}

double w1_sorted_1d(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DomainError("w1_sorted_1d: lengths differ");
  if (a.empty()) throw DomainError("w1_sorted_1d: empty input");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  CompensatedSum acc;
  for (std::size_t i = 0; i < sa.size(); ++i) acc.add(std::abs(sa[i] - sb[i]));
  return acc.value() / static_cast<double>(sa.size());
}

Assignment solve_assignment(std::span<const double> cost, std::size_t n) {
  if (cost.size() != n * n) throw DomainError("solve_assignment: cost matrix is not n x n");
  Assignment out;
  if (n == 0) return out;
  const double inf = std::numeric_limits<double>::infinity();
  // Potentials u (rows), v (columns); column 0 is a virtual source.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      if (j1 == 0) throw NumericalError("solve_assignment: non-finite costs");
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  out.row_to_col.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) out.row_to_col[match[j] - 1] = j - 1;
  CompensatedSum acc;
  for (std::size_t i = 0; i < n; ++i) acc.add(cost[i * n + out.row_to_col[i]]);
  out.cost = acc.value();
  return out;
}

double w1_matching(std::span<const ZAtom> a, std::span<const ZAtom> b, const ZMetricWeights& w,
                   std::size_t cap) {
  w.validate();
  if (a.size() != b.size()) throw DomainError("w1_matching: sizes differ");
  if (a.empty()) throw DomainError("w1_matching: empty input");
  const std::size_t n = a.size();
  if (n > cap) throw ConfigError("w1_matching: n exceeds the matching cap");
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = z_distance(a[i], b[j], w);
  }
  return solve_assignment(cost, n).cost / static_cast<double>(n);
}

namespace {

std::vector<double> probe_flows(const ModelParams& p, const Trajectory& background,
                                std::span<const Sample> probes, std::span<const double> times,
                                const SolverConfig& solver) {
  // Returns sizes[k * np + q]; t = 0 rows are the initial sizes.
  const std::size_t np = probes.size();
  std::vector<double> out(times.size() * np);
  std::vector<double> positive;
  for (double t : times) {
    if (t > 0.0) positive.push_back(t);
  }
  ProbeBatch batch;
  if (!positive.empty() && np > 0) {
    SolverConfig cfg = solver;
    cfg.t_end = positive.back();
    cfg.snapshot_times = positive;
    batch = empirical_flow_batch(p, background, probes, cfg);
  }
  std::size_t kp = 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    for (std::size_t q = 0; q < np; ++q) {
      out[k * np + q] = times[k] > 0.0 ? batch.sizes[kp][q] : probes[q].s0;
    }
    if (times[k] > 0.0) ++kp;
  }
  return out;
}

double mean_abs_gap(std::span<const double> a, std::span<const double> b) {
  if (a.empty()) return 0.0;
  CompensatedSum acc;
  for (std::size_t i = 0; i < a.size(); ++i) acc.add(std::abs(a[i] - b[i]));
  return acc.value() / static_cast<double>(a.size());
}

}  // namespace

double flow_gap(const ModelParams& p, const Trajectory& background, const MeanFieldModel& model,
                std::span<const Sample> probes, double t, const SolverConfig& solver) {
  if (!(t >= 0.0)) throw DomainError("flow_gap: negative time");
  if (t == 0.0 || probes.empty()) return 0.0;
  const double times[] = {t};
  const auto emp = probe_flows(p, background, probes, times, solver);
  std::vector<double> mf(probes.size());
  for (std::size_t q = 0; q < probes.size(); ++q) {
    mf[q] = flow_eval(model, t, probes[q].s0, probes[q].traits);
  }
  return mean_abs_gap(emp, mf);
}

PositionMoments PositionMoments::of(std::span<const Vec2> xs) {
  if (xs.empty()) throw ConfigError("position moments: empty sample");
  CompensatedSum a, q, m0, m1;
  for (const auto& x : xs) {
    const double sq = x[0] * x[0] + x[1] * x[1];
    a.add(std::sqrt(sq));
    q.add(sq);
    m0.add(x[0]);
    m1.add(x[1]);
  }
  const double n = static_cast<double>(xs.size());
  return {a.value() / n, q.value() / n, {m0.value() / n, m1.value() / n}};
}

PositionMoments PositionMoments::gaussian(double L) {
  // |x| is Rayleigh distributed with scale L.
  return {L * std::sqrt(std::numbers::pi / 2.0), 2.0 * L * L, {0.0, 0.0}};
}

double lower_size_bound(const ModelParams& p, std::size_t N) {
  if (N < 2) throw ConfigError("bound coefficients need N >= 2");
  return p.s_m * std::exp(-2.0 * p.R_M / (2.0 * static_cast<double>(N) - 3.0));
}

MonteCarloEstimate A_functional(const ModelParams& p, std::span<const Sample> cloud,
                                double s0_max) {
  if (cloud.empty()) throw ConfigError("A functional: empty cloud");
  const double k = s0_max * std::exp(p.R_M) * p.R_M;
  CompensatedSum sum, sum_sq;
  for (const auto& a : cloud) {
    const double g = a.traits.gamma;
    const double v = (g * a.traits.S * a.s0 / p.s_m * p.log_size(a.s0) +
                      k * g * p.log_size(a.traits.S)) /
                     (2.0 * p.R_M);
    sum.add(v);
    sum_sq.add(v * v);
  }
  const double n = static_cast<double>(cloud.size());
  const double mean = sum.value() / n;
  const double var = n > 1.0 ? std::max(0.0, (sum_sq.value() - n * mean * mean) / (n - 1.0)) : 0.0;
  return {mean, std::sqrt(var / n)};
}

double B_functional(const ModelParams& p, std::span<const Vec2> mu1, const PositionMoments& mu2,
                    double s0_max, double gamma_M, std::size_t* clamped) {
  const auto m1 = PositionMoments::of(mu1);
  const double second = 2.0 * m1.mean_sq + 2.0 * mu2.mean_sq;
  const Vec2 mix{m1.mean[0] + mu2.mean[0], m1.mean[1] + mu2.mean[1]};
  std::size_t negative = 0;
  CompensatedSum inner;
  for (const auto& x : mu1) {
    double rad = second - 4.0 * (x[0] * mix[0] + x[1] * mix[1]);
    if (rad < 0.0) {
      ++negative;
      rad = 0.0;
    }
    inner.add(std::sqrt(rad));
  }
  if (clamped) *clamped = negative;
  const double k = s0_max * std::exp(p.R_M) * p.R_M * gamma_M / (p.sigma_x * p.sigma_x);
  return k * (2.0 * mu2.mean_abs + std::sqrt(second) +
              inner.value() / static_cast<double>(mu1.size()));
}

BoundCoefficients bound_coefficients(const ModelParams& p, std::span<const Sample> cloud,
                                     const PositionMoments& reference, std::size_t N,
                                     double s0_max, double S_m_lower, double gamma_M) {
  p.validate();
  if (cloud.empty()) throw ConfigError("bound coefficients: empty cloud");
  if (!(s0_max > 0.0) || !(S_m_lower > 0.0) || !(gamma_M > 0.0)) {
    throw ConfigError("bound coefficients: s0_max, S_m and gamma_M must be positive");
  }
  BoundCoefficients c;
  c.N = N;
  c.s0_max = s0_max;
  c.S_m_lower = S_m_lower;
  c.gamma_M = gamma_M;
  c.s_m_N = lower_size_bound(p, N);
  const double eR = std::exp(p.R_M);
  c.alpha_S = s0_max / S_m_lower;
  c.alpha_gamma = s0_max * std::log(s0_max / p.s_m) * eR + s0_max * eR * p.R_M;
  c.beta_N = s0_max * eR * p.R_M * gamma_M / (c.s_m_N * p.sigma_r) *
             (1.0 + p.sigma_r / p.R_M + 0.5);
  const auto A = A_functional(p, cloud, s0_max);
  c.A_mu = A.mean;
  c.A_std_error = A.std_error;
  std::vector<Vec2> xs(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) xs[i] = cloud[i].traits.x;
  c.B_mu = B_functional(p, xs, reference, s0_max, gamma_M, &c.B_clamped);
  return c;
}

double bound_value(const BoundCoefficients& c, const ModelParams& p, double t) {
  if (!(t >= 0.0)) throw DomainError("bound_value: negative time");
  if (c.N < 2) throw ConfigError("bound_value: N < 2");
  const double n1 = static_cast<double>(c.N - 1);
  const double growth = std::exp(c.beta_N * t);
  const double ramp = std::expm1(c.beta_N * t) / c.beta_N;
  const double v = c.A_mu / n1 * ramp + c.s0_max * std::exp(p.R_M) * p.R_M * growth / n1;
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

void ConvergenceOptions::validate() const {
  if (N_list.empty()) throw ConfigError("converge: N list is empty");
  for (std::size_t k = 0; k < N_list.size(); ++k) {
    if (N_list[k] < 2) throw ConfigError("converge: every N must be at least 2");
    if (k > 0 && N_list[k] <= N_list[k - 1]) {
      throw ConfigError("converge: N list must be strictly increasing");
    }
  }
  if (t_grid.empty()) throw ConfigError("converge: time grid is empty");
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    if (!(t_grid[k] >= 0.0) || (k > 0 && !(t_grid[k] > t_grid[k - 1]))) {
      throw ConfigError("converge: time grid must be non-negative and strictly increasing");
    }
  }
  weights.validate();
}

std::vector<DistanceReport> convergence_experiment(const Mu0Config& mu0_in, const ModelParams& p,
                                                   const MeanFieldModel* model,
                                                   const ConvergenceOptions& opts) {
  opts.validate();
  Mu0Config mu0 = mu0_in;
  mu0.params = p;
  mu0.validate();
  if (!opts.self_compare && model == nullptr) {
    throw ConfigError("converge: a mean-field model is required unless self-comparing");
  }
  const double horizon = opts.t_grid.back();
  if (model != nullptr && !opts.self_compare && horizon > model->T * (1.0 + 1e-12)) {
    throw ConfigError("converge: time grid exceeds the model horizon");
  }

  const auto probes = sample_mu0(mu0, opts.probe_count, SampleStream::probes);
  const auto reference = PositionMoments::gaussian(mu0.L);
  const std::size_t nt = opts.t_grid.size();
  const std::size_t np = probes.size();

  std::vector<DistanceReport> reports;
  for (std::size_t N : opts.N_list) {
    const auto start = std::chrono::steady_clock::now();
    const auto samples = sample_mu0(mu0, N, SampleStream::population);

    SolverConfig solver = opts.solver;
    solver.t_end = horizon > 0.0 ? horizon : 1.0;
    solver.snapshot_times = opts.t_grid;
    const auto traj = integrate(p, PopulationState::from_samples(samples), solver);
    const auto emp_probe = probe_flows(p, traj, probes, opts.t_grid, opts.solver);

    const auto coeffs = bound_coefficients(p, samples, reference, N, mu0.s0_law.upper(),
                                           mu0.S_lower(), mu0.gamma_upper());

    std::vector<DistanceReport> rows(nt);
    std::vector<ZAtom> pop(N), mf(N);
    std::vector<double> pop_s(N), mf_s(N), mf_probe(np);
    for (std::size_t k = 0; k < nt; ++k) {
      const double t = opts.t_grid[k];
      const auto& state = traj.states()[k];
      for (std::size_t i = 0; i < N; ++i) {
        pop_s[i] = state.sizes[i];
        mf_s[i] = opts.self_compare ? pop_s[i]
                                    : flow_eval(*model, t, samples[i].s0, samples[i].traits);
        pop[i] = {pop_s[i], samples[i].traits};
        mf[i] = {mf_s[i], samples[i].traits};
      }
      const std::span<const double> emp_k(emp_probe.data() + k * np, np);
      for (std::size_t q = 0; q < np; ++q) {
        mf_probe[q] = opts.self_compare ? emp_k[q]
                                        : flow_eval(*model, t, probes[q].s0, probes[q].traits);
      }
      auto& row = rows[k];
      row.N = N;
      row.t = t;
      row.w1_size = w1_sorted_1d(pop_s, mf_s);
      row.w1_full = N <= opts.matching_cap
                        ? w1_matching(pop, mf, opts.weights, opts.matching_cap)
                        : std::numeric_limits<double>::quiet_NaN();
      row.flow_gap = t == 0.0 ? 0.0 : mean_abs_gap(emp_k, mf_probe);
      row.bound_value = bound_value(coeffs, p, t);
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (auto& r : rows) {
      r.runtime_seconds = elapsed;
      reports.push_back(r);
    }
  }
  return reports;
}

}  // namespace plantmf
