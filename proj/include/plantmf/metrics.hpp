#pragma once

// Distances between empirical measures on Z = (size, position, S, gamma),
// flow-gap diagnostics and the coefficients of the convergence certificate.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "plantmf/init_dist.hpp"
#include "plantmf/meanfield.hpp"
#include "plantmf/model.hpp"
#include "plantmf/population.hpp"

namespace plantmf {

struct ZMetricWeights {
  double s_m = 0.05;
  double ell = 1.0;    // position scale
  double tau_r = 0.5;  // rate scale

  void validate() const;
  // ell = L, tau_r = 1 / gamma_M with gamma_M the upper gamma truncation.
  static ZMetricWeights defaults(const Mu0Config& mu0);
};

// A point of Z: a current size together with the plant's traits.
struct ZAtom {
  double s = 0.0;
  PlantTraits traits;
};

// |s1-s2|/s_m + |S1-S2|/s_m + |x1-x2|/ell + tau_r |gamma1-gamma2|
double z_distance(const ZAtom& a, const ZAtom& b, const ZMetricWeights& w);

// Exact W1 between two equal-weight empirical measures on the line.
// Throws DomainError on length mismatch or empty input.
double w1_sorted_1d(std::span<const double> a, std::span<const double> b);

struct Assignment {
  double cost = 0.0;
  std::vector<std::size_t> row_to_col;
};

// Minimum-cost perfect matching of an n x n row-major cost matrix by
// shortest augmenting paths, O(n^3).
Assignment solve_assignment(std::span<const double> cost, std::size_t n);

inline constexpr std::size_t kDefaultMatchingCap = 512;

// Exact W1 under m_Z between equal-size atom clouds. Throws DomainError on
// length mismatch, ConfigError when n exceeds the cap.
double w1_matching(std::span<const ZAtom> a, std::span<const ZAtom> b, const ZMetricWeights& w,
                   std::size_t cap = kDefaultMatchingCap);

// Mean |empirical flow - mean-field flow| over the probes at time t. The
// empirical flow is grown against the background with the given solver
// settings (only method and tolerances are used).
double flow_gap(const ModelParams& p, const Trajectory& background, const MeanFieldModel& model,
                std::span<const Sample> probes, double t, const SolverConfig& solver);

struct BoundCoefficients {
  double alpha_S = 0.0;
  double alpha_gamma = 0.0;
  double beta_N = 0.0;
  double A_mu = 0.0;
  double A_std_error = 0.0;
  double B_mu = 0.0;
  std::size_t B_clamped = 0;  // negative radicands clamped to zero
  double s0_max = 0.0;
  double S_m_lower = 0.0;
  double s_m_N = 0.0;
  double gamma_M = 0.0;
  std::size_t N = 0;
};

// First and second moments of a position law.
struct PositionMoments {
  double mean_abs = 0.0;  // E|x|
  double mean_sq = 0.0;   // E|x|^2
  Vec2 mean{0.0, 0.0};    // E x

  static PositionMoments of(std::span<const Vec2> xs);
  // Centered isotropic Gaussian with per-axis standard deviation L.
  static PositionMoments gaussian(double L);
};

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

// s_m e^{-2 R_M / (2N - 3)}. Throws ConfigError for N < 2.
double lower_size_bound(const ModelParams& p, std::size_t N);

// (1/(2R_M)) E[gamma S s/s_m log(s/s_m) + s0_max e^{R_M} R_M gamma log(S/s_m)]
MonteCarloEstimate A_functional(const ModelParams& p, std::span<const Sample> cloud, double s0_max);

// s0_max e^{R_M} R_M gamma_M / sigma_x^2 times
//   2 E2|x| + sqrt(2 E2|x|^2 + 2 E1|x|^2)
//   + E1 sqrt(2 E1|x|^2 + 2 E2|x|^2 - 4 x'.(E1 x + E2 x)),
// the outer expectation taken over the atoms of mu1.
double B_functional(const ModelParams& p, std::span<const Vec2> mu1, const PositionMoments& mu2,
                    double s0_max, double gamma_M, std::size_t* clamped = nullptr);

// Coefficients from the empirical initial cloud (A, mu1) and the reference
// position law mu2. Throws ConfigError for N < 2 or an empty cloud.
BoundCoefficients bound_coefficients(const ModelParams& p, std::span<const Sample> cloud,
                                     const PositionMoments& reference, std::size_t N,
                                     double s0_max, double S_m_lower, double gamma_M);

// Certificate on the diagonal-coupling flow gap:
//   (A/(N-1)) (e^{beta t} - 1)/beta + s0_max e^{R_M} R_M e^{beta t}/(N-1).
// Returns +infinity once the exponential overflows.
double bound_value(const BoundCoefficients& c, const ModelParams& p, double t);

struct DistanceReport {
  std::size_t N = 0;
  double t = 0.0;
  double w1_size = 0.0;
  double w1_full = 0.0;  // NaN when N exceeds the matching cap
  double flow_gap = 0.0;
  double bound_value = 0.0;
  double runtime_seconds = 0.0;  // wall time of the whole N row group
};

struct ConvergenceOptions {
  std::vector<std::size_t> N_list{50, 100, 200, 400};
  std::vector<double> t_grid{0.0, 2.0, 4.0, 6.0, 8.0, 10.0};
  ZMetricWeights weights;
  SolverConfig solver;  // method and tolerances; horizon follows t_grid
  std::size_t probe_count = 200;
  std::size_t matching_cap = kDefaultMatchingCap;
  // Compare each population with itself instead of the mean-field model.
  bool self_compare = false;

  void validate() const;
};

// For each N: draws a nested population from mu0 (seeded by mu0.seed),
// integrates it, and compares it at each t with the mean-field surrogate
// evaluated on the same initial data. model may be null in self-compare mode.
std::vector<DistanceReport> convergence_experiment(const Mu0Config& mu0, const ModelParams& p,
                                                   const MeanFieldModel* model,
                                                   const ConvergenceOptions& opts);

}  // namespace plantmf
