#pragma once

// Growth-and-competition model: constants, pairwise competition potential,
// the uncompeted Gompertz solution and the linear differential-inequality
// envelope used to bound sizes.

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>

namespace plantmf {

using Vec2 = std::array<double, 2>;

inline double distance(const Vec2& a, const Vec2& b) {
  return std::hypot(a[0] - b[0], a[1] - b[1]);
}

struct ModelParams {
  double s_m = 0.05;      // minimal size
  double R_M = 3.0;       // log-size normalizer
  double sigma_x = 0.5;   // spatial decay scale
  double sigma_r = 1.32;  // relative-size scale

  // Throws ConfigError unless every field is strictly positive and finite.
  void validate() const;

  // Hard upper size bound s_m * e^{R_M}.
  double max_size() const { return s_m * std::exp(R_M); }
  double log_size(double s) const { return std::log(s / s_m); }
  double size_from_log(double r) const { return s_m * std::exp(r); }
};

// One individual's fixed traits (position, asymptotic size, growth rate).
struct PlantTraits {
  Vec2 x{0.0, 0.0};
  double S = 1.0;
  double gamma = 1.0;

  bool operator==(const PlantTraits&) const = default;
};

// Pairwise potential exerted on a plant of size `s` by a neighbour of size
// `s_prime` at Euclidean distance `dist`. Throws DomainError for non-positive
// sizes or negative distance.
double competition_potential(const ModelParams& p, double s, double s_prime, double dist);

// Same potential written on log-sizes r = log(s/s_m).
double log_potential(const ModelParams& p, double r, double r_prime, double dist);

// Log-space potential with the spatial factor 1/(1 + dist^2/sigma_x^2)
// already evaluated; the hot loop of the population solver.
inline double log_potential_weighted(const ModelParams& p, double r, double r_prime,
                                     double spatial) {
  return r_prime * spatial / (2.0 * p.R_M) * (1.0 + std::tanh((r_prime - r) / p.sigma_r));
}

inline double spatial_factor(const ModelParams& p, double dist_sq) {
  return 1.0 / (1.0 + dist_sq / (p.sigma_x * p.sigma_x));
}

// Exact solution of ds/dt = gamma s log(S/s) with s(0) = s0:
// S (s0/S)^{exp(-gamma t)}.
double gompertz_closed_form(const PlantTraits& traits, const ModelParams& p, double s0, double t);

// y' <= a - b y  (resp. >=)  implies  y(t) <= (resp. >=) a/b + (y0 - a/b) e^{-bt}.
struct GronwallEnvelope {
  double a = 0.0;
  double b = 1.0;
  double y0 = 0.0;
};

enum class BoundSide { upper, lower };

// The side only labels which inequality the value bounds; the envelope value
// is the same expression for both. Throws DomainError when b == 0 or t < 0.
double gronwall_bound(const GronwallEnvelope& env, double t, BoundSide side = BoundSide::upper);

// Lower and upper size envelopes of a competing plant:
// s_m (s0/s_m)^{e^{-gamma t}} <= s(t) <= S (s0/s_m)^{e^{-gamma t}}.
double size_lower_envelope(const ModelParams& p, const PlantTraits& traits, double s0, double t);
double size_upper_envelope(const ModelParams& p, const PlantTraits& traits, double s0, double t);

struct AdmissibilityVerdict {
  bool accepted = true;
  std::optional<std::size_t> first_violation;
  std::string reason;

  explicit operator bool() const { return accepted; }
};

// Checks s_m < s0_i < S_i < s_m e^{R_M} and gamma_i > 0 for every individual.
// Throws ConfigError on length mismatch or fewer than two individuals.
AdmissibilityVerdict validate_initial_config(const ModelParams& p,
                                             std::span<const PlantTraits> traits,
                                             std::span<const double> sizes0);

}  // namespace plantmf
