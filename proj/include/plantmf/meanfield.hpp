#pragma once

// Lagrangian approximation of the mean-field flow. The competition potential
// felt by a plant is frozen on each interval [t_k, t_k + dt) and learned as a
// clamped polynomial regression on bounded transforms of (s, x, S, gamma);
// the flow then follows in closed form.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "plantmf/init_dist.hpp"
#include "plantmf/model.hpp"

namespace plantmf {

// Number of monomials of k variables with total degree <= d: binom(k+d, k).
std::size_t feature_count(std::size_t k, std::size_t d);

// All monomials x_1^a_1 ... x_k^a_k with a_1 + ... + a_k <= d. Ordering nests
// by the last variable: its exponent is the outermost loop, so for k = 2,
// d = 2 the result is (1, x1, x1^2, x2, x1 x2, x2^2).
std::vector<double> polynomial_features(std::span<const double> x, std::size_t d);

struct FeatureSpec {
  std::size_t degree = 0;
  std::size_t arity = 3;   // 3: (s, x, y); 5: (s, x, y, S, gamma)
  Vec2 center{0.0, 0.0};   // (mu_x, mu_y)
  Vec2 length{1.0, 1.0};   // (L_x, L_y)
  double dt = 1.0;         // gamma enters as exp(-gamma dt)
  ModelParams params;

  std::size_t dimension() const { return feature_count(arity, degree); }
  void validate() const;
};

// q(log(s/s_m), atan((x-mu_x)/L_x), atan((y-mu_y)/L_y) [, log(S/s_m), e^{-gamma dt}])
// divided by 1 + |x - mu|^2 / sigma_x^2. Throws ConfigError when the presence
// of S and gamma does not match the arity.
std::vector<double> feature_map(const FeatureSpec& spec, double s, const Vec2& x,
                                std::optional<double> S = std::nullopt,
                                std::optional<double> gamma = std::nullopt);

struct CloudAtom {
  double s = 0.0;
  Vec2 x{0.0, 0.0};
};

// Monte-Carlo competition potential (1/N) sum_i C(s, s'_i, |x - x'_i|).
// Throws DomainError for an empty cloud.
double mc_potential(const ModelParams& p, double s, const Vec2& x,
                    std::span<const CloudAtom> cloud);

struct PotentialStage {
  std::size_t index = 0;
  FeatureSpec spec;
  std::vector<double> beta;
  double r2_train = 0.0;  // NaN when the targets are constant
  double r2_test = 0.0;
};

// One regression row: initial data of a plant and its Monte-Carlo target.
struct TrainingRow {
  double s = 0.0;
  PlantTraits theta;
  double target = 0.0;
};

std::vector<double> stage_features(const PotentialStage& stage, double s, const PlantTraits& theta);
// beta . features, before clamping.
double stage_linear_eval(const PotentialStage& stage, double s, const PlantTraits& theta);
// clamp(beta . features, 0, 1).
double stage_potential_eval(const PotentialStage& stage, double s, const PlantTraits& theta);

// Minimum-norm least-squares fit of beta on the training rows; R^2 of the
// clamped predictions on both sets. Throws ConfigError for empty training.
PotentialStage fit_stage(const FeatureSpec& spec, std::span<const TrainingRow> training,
                         std::span<const TrainingRow> testing);

struct TrainConfig {
  double dt = 1.0;
  double T = 10.0;
  std::size_t cloud_size = 1000;  // N
  std::size_t train_size = 1000;  // K, also the testing-set size
  std::size_t degree_initial = 5;
  std::size_t degree_later = 3;
  std::uint64_t seed = 0;

  std::size_t stage_count() const;  // throws ConfigError unless T/dt is integral
  void validate() const;
};

struct MeanFieldModel {
  static constexpr int kFormatVersion = 1;

  std::vector<PotentialStage> stages;
  double dt = 1.0;
  double T = 10.0;
  Mu0Config mu0;
  TrainConfig train;

  const ModelParams& params() const { return mu0.params; }
};

// Exponentially weighted time integral of the piecewise-constant potential,
//   sum_k C_k(s,theta) [1{t_k<=t<t_k+1}(1 - e^{gamma(t_k-t)})
//                      + 1{t_k+1<=t}(e^{gamma(t_k+1-t)} - e^{gamma(t_k-t)})].
// Zero when gamma = 0. Throws DomainError for t outside [0, T].
double reconstructed_potential_integral(const MeanFieldModel& model, double t, double s,
                                        const PlantTraits& theta);

// s_m (s0/s_m)^{e^{-gamma t}} (S/s_m)^{1 - e^{-gamma t} - Chat(t, s0, theta)}.
double flow_eval(const MeanFieldModel& model, double t, double s0, const PlantTraits& theta);

// Same two quantities for the leading stages of a model under construction;
// t may not exceed stages.size() * dt.
double partial_potential_integral(std::span<const PotentialStage> stages, double dt, double t,
                                  double s, const PlantTraits& theta);
double partial_flow_eval(const ModelParams& p, std::span<const PotentialStage> stages, double dt,
                         double t, double s0, const PlantTraits& theta);

// Learns the stages recursively: stage 0 on (s, x) at t = 0, stage k >= 1 on
// (s, x, S, gamma) with probe and cloud sizes flowed to t_k by stages < k.
// Cloud, training and testing sets come from disjoint sub-streams of seed.
MeanFieldModel train(const Mu0Config& mu0, const ModelParams& params, const TrainConfig& cfg);

}  // namespace plantmf
